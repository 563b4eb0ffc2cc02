"""Hover-point placement: single-target trade-off, coordinate descent, residual-energy data.

A hover point trades transmission distance for travel detour.  For a
target c between legs A -> h -> B, hovering at horizontal distance d from c
costs ``M * T(d)`` of airtime and a path of length ``l*(d)``, the shortest
A -> h -> B with ``|h - c| = d``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Mapping, Sequence

import numpy as np

from skyplanner.channel import CLUSTER_TO_UAV, UAV_TO_TBS
from skyplanner.energy import PowerProfile
from skyplanner.errors import InvalidParameterError
from skyplanner.geometry import Point, closest_point_on_segment, distance, point_to_segment_distance

EPSILON = 0.1
MAX_SWEEPS = 50
D_TOL = 1e-3

_SCAN = 48
_REFINE_LEVELS = 3
_REFINE_POINTS = 9

UnitTimes = Mapping[str, Callable]


@dataclass(frozen=True)
class HoverSubproblem:
    A: Point
    B: Point
    c: Point
    M_t: float
    p_s: float
    p_m: float
    v: float
    kind: str = CLUSTER_TO_UAV

    @property
    def d_max(self) -> float:
        return point_to_segment_distance(self.c, self.A, self.B)


@dataclass(frozen=True)
class HoverSolution:
    h: Point
    d: float
    l_star: float
    value: float


_SCAN_THETA = np.linspace(0.0, 2.0 * np.pi, _SCAN, endpoint=False)
_SCAN_COS, _SCAN_SIN = np.cos(_SCAN_THETA), np.sin(_SCAN_THETA)
_OFFSETS = np.linspace(-1.0, 1.0, _REFINE_POINTS)


def _detour_many(A, B, c, d):
    """Vectorized l*(d): returns (hx, hy, length) for each d (all d < d_max)."""
    d = np.asarray(d, dtype=float)[:, None]
    ax, ay, bx, by, cx, cy = A[0], A[1], B[0], B[1], c[0], c[1]

    def path_xy(cos_t, sin_t):
        hx = cx + d * cos_t
        hy = cy + d * sin_t
        return np.hypot(ax - hx, ay - hy) + np.hypot(bx - hx, by - hy)

    def path(theta):
        return path_xy(np.cos(theta), np.sin(theta))

    vals = path_xy(_SCAN_COS, _SCAN_SIN)
    rows = np.arange(d.shape[0])
    best = _SCAN_THETA[np.argmin(vals, axis=1)]
    step = 2.0 * np.pi / _SCAN
    for _ in range(_REFINE_LEVELS):
        theta = best[:, None] + step * _OFFSETS
        vals = path(theta)
        j = np.argmin(vals, axis=1)
        best = theta[rows, j]
        step /= 4.0
    # parabolic vertex through the best refined point and its neighbors
    j = np.minimum(np.maximum(j, 1), _REFINE_POINTS - 2)
    h = 4.0 * step
    f0, f1, f2 = vals[rows, j - 1], vals[rows, j], vals[rows, j + 1]
    denom = f0 - 2.0 * f1 + f2
    safe = np.where(denom > 0, denom, 1.0)
    shift = np.where(denom > 0, 0.5 * h * (f0 - f2) / safe, 0.0)
    cand = theta[rows, j] + np.minimum(np.maximum(shift, -h), h)
    both = path(np.column_stack((cand, best)))
    best = np.where(both[:, 0] < both[:, 1], cand, best)
    dd = d[:, 0]
    return cx + dd * np.cos(best), cy + dd * np.sin(best), both.min(axis=1)


def min_detour(A, B, c, d: float) -> tuple[Point, float]:
    """Shortest path A -> h -> B with h on the circle of radius d around c.

    For d at or beyond the distance from c to segment AB the circle reaches
    the segment, so h is the foot point and the path is straight.
    """
    if d < 0:
        raise InvalidParameterError("hover distance must be non-negative")
    d_max = point_to_segment_distance(c, A, B)
    if d >= d_max:
        return closest_point_on_segment(c, A, B), distance(A, B)
    if d == 0.0:
        return Point(float(c[0]), float(c[1])), distance(A, c) + distance(c, B)
    hx, hy, ln = _detour_many(A, B, c, [d])
    return Point(float(hx[0]), float(hy[0])), float(ln[0])


def _weights(sub: HoverSubproblem, objective: str) -> tuple[float, float]:
    """Cost per second of airtime and per meter of travel."""
    if objective == "energy":
        return sub.p_s, sub.p_m / sub.v
    if objective == "time":
        return 1.0, 1.0 / sub.v
    raise InvalidParameterError(f"unknown hover objective {objective!r}")


def hover_cost(sub: HoverSubproblem, h, objective: str, unit_time: Callable) -> float:
    """Objective of hovering exactly at h (no re-optimization)."""
    w_air, w_len = _weights(sub, objective)
    path = distance(sub.A, h) + distance(h, sub.B)
    return sub.M_t * float(unit_time(distance(h, sub.c))) * w_air + path * w_len


def solve_single_hover(sub: HoverSubproblem, objective: str, unit_time: Callable,
                       d_current: float | None = None) -> HoverSolution:
    """Best hover distance on [0, d_max] for one target.

    A 17-point scan brackets the minimum, then the bracket is refined by
    repeated 9-point zooms (each cuts it to a quarter) down to ``D_TOL``.
    The endpoints and ``d_current`` stay in the candidate set so the result
    never loses to them.
    """
    if sub.M_t < 0:
        raise InvalidParameterError("M_t must be non-negative")
    w_air, w_len = _weights(sub, objective)
    d_max = sub.d_max
    ab = distance(sub.A, sub.B)
    if d_max == 0.0:
        h = Point(float(sub.c[0]), float(sub.c[1]))
        return HoverSolution(h, 0.0, ab, sub.M_t * float(unit_time(0.0)) * w_air + ab * w_len)
    foot = closest_point_on_segment(sub.c, sub.A, sub.B)

    def evaluate(ds):
        ds = np.asarray(ds, dtype=float)
        hx = np.full(ds.shape, foot[0])
        hy = np.full(ds.shape, foot[1])
        length = np.full(ds.shape, ab)
        inner = ds < d_max
        if np.any(inner):
            hx[inner], hy[inner], length[inner] = _detour_many(sub.A, sub.B, sub.c, ds[inner])
        zero = ds == 0.0
        if np.any(zero):
            hx[zero], hy[zero] = sub.c[0], sub.c[1]
            length[zero] = distance(sub.A, sub.c) + distance(sub.c, sub.B)
        return sub.M_t * np.asarray(unit_time(ds)) * w_air + length * w_len, hx, hy, length

    ds = np.linspace(0.0, d_max, 17)
    vals, hx, hy, ln = evaluate(ds)
    pool = [(ds, vals, hx, hy, ln)]
    i = int(np.argmin(vals))
    while True:
        lo, hi = ds[max(i - 1, 0)], ds[min(i + 1, ds.size - 1)]
        if hi - lo < D_TOL:
            break
        ds = np.linspace(lo, hi, _REFINE_POINTS)
        vals, hx, hy, ln = evaluate(ds)
        pool.append((ds, vals, hx, hy, ln))
        i = int(np.argmin(vals))
    if d_current is not None and 0.0 <= d_current <= d_max:
        pool.append((np.array([d_current]), *evaluate([d_current])))
    ds, vals, hx, hy, ln = (np.concatenate(x) for x in zip(*pool))
    k = int(np.argmin(vals))
    return HoverSolution(Point(float(hx[k]), float(hy[k])), float(ds[k]), float(ln[k]), float(vals[k]))


# --------------------------------------------------------------------------
# multi-target trip
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Stop:
    """One waypoint of a trip after leaving S.

    ``kind`` is "cluster", "tbs" or "destination" (fixed point, nothing to
    transmit).  ``loaded`` is the package state while flying to and serving
    this stop.
    """

    kind: str
    target: Point
    data: float
    loaded: bool
    label: str = ""

    @property
    def link(self) -> str | None:
        return {"cluster": CLUSTER_TO_UAV, "tbs": UAV_TO_TBS}.get(self.kind)


@dataclass
class HoverResult:
    hover: list[Point]
    trace: list[float]
    sweeps: int
    converged: bool


def leg_states(stops: Sequence[Stop]) -> list[bool]:
    """Package state of each leg: into stop i for i < n, and the closing leg back to S."""
    return [s.loaded for s in stops] + [False]


def trip_cost(stops: Sequence[Stop], hover: Sequence[Point], start, end, profile: PowerProfile,
              unit_times: UnitTimes, objective: str) -> float:
    """Total energy (J) or time (s) of a trip with fixed hover points."""
    pts = [start, *hover, end]
    states = leg_states(stops)
    total = 0.0
    for i, loaded in enumerate(states):
        p_m, v = profile.motion(loaded)
        leg = distance(pts[i], pts[i + 1])
        total += leg / v * (p_m if objective == "energy" else 1.0)
    for s, h in zip(stops, hover):
        if s.link is None or s.data == 0.0:
            continue
        t = s.data * float(unit_times[s.link](distance(h, s.target)))
        total += t * (profile.serve(s.loaded) if objective == "energy" else 1.0)
    return total


def _subproblem(stops, hover, i, start, end, profile) -> HoverSubproblem:
    s = stops[i]
    A = hover[i - 1] if i > 0 else start
    B = hover[i + 1] if i + 1 < len(stops) else end
    p_m, v = profile.motion(s.loaded)
    return HoverSubproblem(A, B, s.target, s.data, profile.serve(s.loaded), p_m, v, s.link)


def optimize_hover_points(stops: Sequence[Stop], start, end, profile: PowerProfile, unit_times: UnitTimes,
                          objective: str, *, init: Sequence[Point] | None = None,
                          movable: Sequence[int] | None = None, eps: float = EPSILON,
                          max_sweeps: int = MAX_SWEEPS) -> HoverResult:
    """Cyclic coordinate descent over hover points.

    Each sweep re-solves every movable stop with its neighbors held fixed.
    A move is accepted only if it lowers that stop's cost, so the trip
    objective never increases.  Stops stop moving once every hover point
    shifts by less than ``eps`` in a sweep.

    Args:
        stops: trip waypoints after S, ending before the return to S.
        start, end: S (both ends of the round trip).
        objective: "energy" or "time".
        init: starting hover points; defaults to the targets themselves.
        movable: indices allowed to move; defaults to every transmitting stop.

    Returns:
        Final hover points, the objective after each sweep (first entry is
        the starting value), the number of sweeps and a convergence flag.
    """
    hover = [Point(float(s.target[0]), float(s.target[1])) for s in stops] if init is None else list(init)
    if movable is None:
        movable = [i for i, s in enumerate(stops) if s.link is not None]
    trace = [trip_cost(stops, hover, start, end, profile, unit_times, objective)]
    if not movable:
        return HoverResult(hover, trace, 0, True)
    for sweep in range(1, max_sweeps + 1):
        shift = 0.0
        for i in movable:
            sub = _subproblem(stops, hover, i, start, end, profile)
            table = unit_times[sub.kind]
            now = hover_cost(sub, hover[i], objective, table)
            sol = solve_single_hover(sub, objective, table, d_current=distance(hover[i], sub.c))
            if sol.value < now:
                shift = max(shift, distance(sol.h, hover[i]))
                hover[i] = sol.h
        trace.append(trip_cost(stops, hover, start, end, profile, unit_times, objective))
        # a lone movable stop has fixed neighbors, so one solve is final
        if shift < eps or len(movable) == 1:
            return HoverResult(hover, trace, sweep, True)
    return HoverResult(hover, trace, max_sweeps, False)


def marginal_energy(stops, hover, profile, unit_times, end_idx: int, tbs_idx: int) -> float:
    """Energy per extra bit/Hz taken from the end cluster and flushed at its TBS (J*Hz/bit)."""
    e, f = stops[end_idx], stops[tbs_idx]
    return (float(unit_times[CLUSTER_TO_UAV](distance(hover[end_idx], e.target))) * profile.serve(e.loaded)
            + float(unit_times[UAV_TO_TBS](distance(hover[tbs_idx], f.target))) * profile.serve(f.loaded))


def with_extra_data(stops: Sequence[Stop], end_idx: int, tbs_idx: int, delta: float) -> list[Stop]:
    out = list(stops)
    out[end_idx] = replace(out[end_idx], data=out[end_idx].data + delta)
    out[tbs_idx] = replace(out[tbs_idx], data=out[tbs_idx].data + delta)
    return out


@dataclass
class ResidualResult:
    delta: float
    hover: list[Point]
    iterations: int
    converged: bool
    history: list[float]


def maximize_residual_data(stops: Sequence[Stop], hover: Sequence[Point], start, end, profile: PowerProfile,
                           unit_times: UnitTimes, end_idx: int, tbs_idx: int, budget: float, *,
                           allow_deficit: bool = False, eps: float = EPSILON,
                           max_iter: int = MAX_SWEEPS) -> ResidualResult:
    """Spend the leftover battery on extra data from the end cluster.

    At fixed hover points the trip energy is affine in the extra amount, so
    each iteration closes the budget exactly, then re-places the end cluster
    and end TBS hover points for the enlarged load.  Other hover points are
    left alone.  The best closed iterate is returned.

    Args:
        end_idx: stop index of the lowest-priority served cluster.
        tbs_idx: stop index of the TBS that receives its data.
        budget: battery capacity in joules.
        allow_deficit: accept a trip that is already over budget, returning a
            negative amount (the cut needed to close the budget).
    """
    hover = list(hover)
    base = trip_cost(stops, hover, start, end, profile, unit_times, "energy")
    if base > budget and not allow_deficit:
        raise InvalidParameterError("trip already exceeds the battery budget")
    best: tuple[float, list[Point]] | None = None
    history = []
    for it in range(1, max_iter + 1):
        base = trip_cost(stops, hover, start, end, profile, unit_times, "energy")
        delta = (budget - base) / marginal_energy(stops, hover, profile, unit_times, end_idx, tbs_idx)
        history.append(delta)
        if best is None or delta > best[0]:
            best = (delta, list(hover))
        grown = with_extra_data(stops, end_idx, tbs_idx, delta)
        if grown[end_idx].data < 0:
            break
        res = optimize_hover_points(grown, start, end, profile, unit_times, "energy", init=hover,
                                    movable=sorted({end_idx, tbs_idx}), eps=eps, max_sweeps=max_iter)
        moved = max(distance(a, b) for a, b in zip(res.hover, hover))
        hover = res.hover
        if moved < eps:
            base = trip_cost(stops, hover, start, end, profile, unit_times, "energy")
            delta = (budget - base) / marginal_energy(stops, hover, profile, unit_times, end_idx, tbs_idx)
            history.append(delta)
            if delta > best[0]:
                best = (delta, list(hover))
            return ResidualResult(best[0], best[1], it, True, history)
    return ResidualResult(best[0], best[1], max_iter, False, history)


def pinned_residual_data(stops, start, end, profile, unit_times, end_idx, tbs_idx, budget) -> float:
    """Closed-form extra data with every hover point on its target."""
    hover = [Point(float(s.target[0]), float(s.target[1])) for s in stops]
    base = trip_cost(stops, hover, start, end, profile, unit_times, "energy")
    return (budget - base) / marginal_energy(stops, hover, profile, unit_times, end_idx, tbs_idx)

