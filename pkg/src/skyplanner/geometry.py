"""Scene sampling and planar geometry.

Cluster centers of both priority types and TBSs are homogeneous Poisson point
processes on a rectangular window around the S-D corridor. S sits at the
origin and D at (L, 0).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from skyplanner.errors import InvalidParameterError

# Stream ids are part of the reproducibility contract: never renumber.
STREAMS = {"tbs": 0, "clusters1": 1, "clusters2": 2, "devices": 3, "fading": 4}


class Point(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class SceneParams:
    """Intensities are per km^2, lengths in meters."""

    lambda_tbs: float = 1.0
    lambda_type1: float = 1.0
    lambda_type2: float = 5.0
    sd_distance: float = 5000.0
    window_margin: float = 2000.0
    cluster_radius: float = 50.0
    devices_per_cluster: int = 20

    def __post_init__(self):
        for name in ("lambda_tbs", "lambda_type1", "lambda_type2"):
            if not getattr(self, name) > 0:
                raise InvalidParameterError(f"{name} must be positive")
        if not self.sd_distance > 0:
            raise InvalidParameterError("sd_distance must be positive")
        if not self.cluster_radius > 0:
            raise InvalidParameterError("cluster_radius must be positive")
        if not self.window_margin >= 0:
            raise InvalidParameterError("window_margin must be non-negative")
        if self.devices_per_cluster < 1:
            raise InvalidParameterError("devices_per_cluster must be >= 1")

    @property
    def window(self) -> tuple[float, float, float, float]:
        """(xmin, xmax, ymin, ymax) of the sampling window."""
        m = self.window_margin
        return (-m, self.sd_distance + m, -m, m)

    @property
    def window_area_km2(self) -> float:
        xmin, xmax, ymin, ymax = self.window
        return (xmax - xmin) * (ymax - ymin) / 1e6


@dataclass(frozen=True)
class Scene:
    tbs: tuple[Point, ...]
    clusters1: tuple[Point, ...]
    clusters2: tuple[Point, ...]
    source: Point
    destination: Point
    seed: int

    def to_json(self) -> str:
        doc = {
            "seed": self.seed,
            "S": _round_pt(self.source),
            "D": _round_pt(self.destination),
            "tbs": [_round_pt(p) for p in self.tbs],
            "clusters1": [_round_pt(p) for p in self.clusters1],
            "clusters2": [_round_pt(p) for p in self.clusters2],
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> Scene:
        doc = json.loads(text)
        pts = lambda key: tuple(Point(float(x), float(y)) for x, y in doc[key])  # noqa: E731
        return cls(
            tbs=pts("tbs"),
            clusters1=pts("clusters1"),
            clusters2=pts("clusters2"),
            source=Point(*map(float, doc["S"])),
            destination=Point(*map(float, doc["D"])),
            seed=int(doc["seed"]),
        )


def _round_pt(p: Point) -> list[float]:
    return [round(float(p[0]), 6), round(float(p[1]), 6)]


def rng_stream(seed: int, name: str) -> np.random.Generator:
    """Independent generator for one named stream of a scene seed."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(STREAMS[name],)))


def _sample_ppp(rng: np.random.Generator, intensity_km2: float, window) -> tuple[Point, ...]:
    xmin, xmax, ymin, ymax = window
    area = (xmax - xmin) * (ymax - ymin) / 1e6
    n = rng.poisson(intensity_km2 * area)
    xs = rng.uniform(xmin, xmax, size=n)
    ys = rng.uniform(ymin, ymax, size=n)
    return tuple(Point(float(x), float(y)) for x, y in zip(xs, ys))


def sample_scene(params: SceneParams, seed: int) -> Scene:
    """Draw one realization of the three point processes.

    Args:
        params: densities and window geometry.
        seed: unsigned root seed; each process uses its own named stream.

    Returns:
        The scene with S=(0, 0) and D=(L, 0).
    """
    if seed < 0:
        raise InvalidParameterError("seed must be unsigned")
    if not params.window_area_km2 > 0:
        raise InvalidParameterError("window area must be positive")
    window = params.window
    return Scene(
        tbs=_sample_ppp(rng_stream(seed, "tbs"), params.lambda_tbs, window),
        clusters1=_sample_ppp(rng_stream(seed, "clusters1"), params.lambda_type1, window),
        clusters2=_sample_ppp(rng_stream(seed, "clusters2"), params.lambda_type2, window),
        source=Point(0.0, 0.0),
        destination=Point(float(params.sd_distance), 0.0),
        seed=int(seed),
    )


def sample_devices(center: Sequence[float], r_c: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform points in the disk of radius ``r_c`` around ``center``, shape (n, 2)."""
    if n < 1 or not r_c > 0:
        raise InvalidParameterError("need n >= 1 and r_c > 0")
    radius = r_c * np.sqrt(rng.random(n))
    angle = 2.0 * np.pi * rng.random(n)
    return np.column_stack((center[0] + radius * np.cos(angle), center[1] + radius * np.sin(angle)))


def distance(p: Sequence[float], q: Sequence[float]) -> float:
    return math.hypot(p[0] - q[0], p[1] - q[1])


def closest_point_on_segment(p, a, b) -> Point:
    abx, aby = b[0] - a[0], b[1] - a[1]
    ab2 = abx * abx + aby * aby
    if ab2 == 0.0:
        return Point(float(a[0]), float(a[1]))
    t = ((p[0] - a[0]) * abx + (p[1] - a[1]) * aby) / ab2
    t = min(1.0, max(0.0, t))
    return Point(a[0] + t * abx, a[1] + t * aby)


def point_to_segment_distance(p, a, b) -> float:
    """Euclidean distance from ``p`` to the closed segment ``ab`` (a == b allowed)."""
    q = closest_point_on_segment(p, a, b)
    return math.hypot(p[0] - q[0], p[1] - q[1])


def points_to_segments(points, seg_a, seg_b) -> np.ndarray:
    """Pairwise point-to-segment distances, shape (len(points), len(seg_a))."""
    p = np.asarray(points, dtype=float).reshape(-1, 1, 2)
    a = np.asarray(seg_a, dtype=float).reshape(1, -1, 2)
    b = np.asarray(seg_b, dtype=float).reshape(1, -1, 2)
    ab = b - a
    ab2 = np.sum(ab * ab, axis=-1)
    t = np.sum((p - a) * ab, axis=-1) / np.where(ab2 > 0, ab2, 1.0)
    t = np.clip(np.where(ab2 > 0, t, 0.0), 0.0, 1.0)
    foot = a + t[..., None] * ab
    return np.hypot(p[..., 0] - foot[..., 0], p[..., 1] - foot[..., 1])
