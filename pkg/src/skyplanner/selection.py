"""Priority-ordered greedy choice of the clusters to serve, and TBS association."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from skyplanner.errors import InvalidParameterError, NoRelayError
from skyplanner.geometry import Point, Scene, points_to_segments

TYPE1 = "cluster1"
TYPE2 = "cluster2"


@dataclass(frozen=True)
class ServingSet:
    """Selected centers in greedy order; ``w1`` outranks ``w2``."""

    w1: tuple[Point, ...]
    w2: tuple[Point, ...]
    m1: float = 2200.0
    m2: float = 600.0
    requested: tuple[int, int] = (0, 0)

    @property
    def shortfall(self) -> bool:
        return len(self.w1) < self.requested[0] or len(self.w2) < self.requested[1]

    @property
    def priorities(self) -> tuple[str, ...]:
        return (TYPE1,) * len(self.w1) + (TYPE2,) * len(self.w2)

    @property
    def demands(self) -> tuple[float, ...]:
        return (self.m1,) * len(self.w1) + (self.m2,) * len(self.w2)

    def entries(self) -> list[tuple[Point, str, float]]:
        """(center, role, demand) from highest to lowest priority."""
        return list(zip(self.w1 + self.w2, self.priorities, self.demands))

    def __len__(self):
        return len(self.w1) + len(self.w2)

    def without_lowest(self) -> ServingSet:
        """Drop the lowest-priority served cluster (last type-II, else last type-I)."""
        if self.w2:
            return ServingSet(self.w1, self.w2[:-1], self.m1, self.m2, self.requested)
        if self.w1:
            return ServingSet(self.w1[:-1], self.w2, self.m1, self.m2, self.requested)
        raise InvalidParameterError("serving set is already empty")

    def to_dict(self) -> dict:
        return {
            "w1": [list(p) for p in self.w1],
            "w2": [list(p) for p in self.w2],
            "demands": list(self.demands),
            "requested": list(self.requested),
            "shortfall": self.shortfall,
        }


def _anchor_segments(anchors: list[Point]):
    pairs = list(combinations(anchors, 2))
    return np.array([p for p, _ in pairs], dtype=float), np.array([q for _, q in pairs], dtype=float)


def _greedy(pool: Sequence[Point], n: int, anchors: list[Point]) -> list[Point]:
    remaining = np.asarray(pool, dtype=float).reshape(-1, 2)
    picked: list[Point] = []
    for _ in range(min(n, len(remaining))):
        a, b = _anchor_segments(anchors)
        dist = points_to_segments(remaining, a, b).min(axis=1)
        # nearest first; ties go to smaller x, then smaller y
        i = int(np.lexsort((remaining[:, 1], remaining[:, 0], dist))[0])
        p = Point(float(remaining[i, 0]), float(remaining[i, 1]))
        picked.append(p)
        anchors.append(p)
        remaining = np.delete(remaining, i, axis=0)
    return picked


def select_serving_clusters(scene: Scene, n1: int, n2: int, demands: tuple[float, float] = (2200.0, 600.0)) -> ServingSet:
    """Greedy priority selection of cluster centers.

    Each pick is the unselected center closest to the set of segments joining
    every pair of anchors (S, D and the centers already picked).  Type-I
    centers are all picked before any type-II center.  If the scene holds
    fewer centers than asked for, all of them are taken and ``shortfall``
    is set.
    """
    if n1 < 0 or n2 < 0:
        raise InvalidParameterError("cluster counts must be non-negative")
    anchors = [scene.source, scene.destination]
    w1 = _greedy(scene.clusters1, n1, anchors)
    w2 = _greedy(scene.clusters2, n2, anchors)
    return ServingSet(tuple(w1), tuple(w2), float(demands[0]), float(demands[1]), (n1, n2))


def nearest_tbs(tbs: Sequence[Point], a, b) -> Point:
    """TBS closest to segment ab (ties: smaller x, then smaller y)."""
    if len(tbs) == 0:
        raise NoRelayError("no TBS available to relay collected data")
    arr = np.asarray(tbs, dtype=float)
    d = points_to_segments(arr, [a], [b])[:, 0]
    i = int(np.lexsort((arr[:, 1], arr[:, 0], d))[0])
    return Point(float(arr[i, 0]), float(arr[i, 1]))


def nearest_tbs_per_segment(route, tbs: Sequence[Point]) -> list[Point]:
    """Nearest TBS for each leg r_k -> r_{k+1} of a route.

    ``route`` is a route candidate (anything with ``points``) or the list of
    waypoints after leaving S, ending with S.  The opening leg out of S
    carries no data and gets no TBS.
    """
    route_points = list(getattr(route, "points", route))
    if len(route_points) < 2:
        raise InvalidParameterError("route needs at least two waypoints")
    if len(tbs) == 0:
        raise NoRelayError("no TBS available to relay collected data")
    arr = np.asarray(tbs, dtype=float)
    a = np.asarray(route_points[:-1], dtype=float)
    b = np.asarray(route_points[1:], dtype=float)
    dist = points_to_segments(arr, a, b)
    out = []
    for k in range(dist.shape[1]):
        i = int(np.lexsort((arr[:, 1], arr[:, 0], dist[:, k]))[0])
        out.append(Point(float(arr[i, 0]), float(arr[i, 1])))
    return out
