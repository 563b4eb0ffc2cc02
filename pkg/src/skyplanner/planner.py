"""Route enumeration, TBS-visit dynamic program, trip ledgers and the two planners.

A route visits every selected cluster and D in some order and returns to S.
Stage k is the leg r_k -> r_{k+1}; data collected at r_k may be carried on
or flushed to the TBS nearest to that leg (a detour).  The dynamic program
chooses where to flush; hover optimization then refines the winning route.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from itertools import permutations
from typing import NamedTuple, Sequence

from skyplanner.channel import CLUSTER_TO_UAV, UAV_TO_TBS, ChannelParams, unit_time_table
from skyplanner.energy import PowerProfile
from skyplanner.errors import EnumerationCapError, InfeasibleTripError, InvalidParameterError, NoRelayError
from skyplanner.geometry import Point, Scene, SceneParams, distance
from skyplanner.hover import (
    EPSILON,
    MAX_SWEEPS,
    Stop,
    marginal_energy,
    maximize_residual_data,
    optimize_hover_points,
    trip_cost,
)
from skyplanner.selection import ServingSet, nearest_tbs, nearest_tbs_per_segment, select_serving_clusters

MIN_TIME = "min-time"
MAX_DATA = "max-data"
OBJECTIVES = (MIN_TIME, MAX_DATA)
ENUMERATION_CAP = 6

DESTINATION = "destination"
SOURCE = "source"


class Waypoint(NamedTuple):
    point: Point
    role: str  # cluster1, cluster2, destination or source
    demand: float = 0.0
    rank: int = -1  # position in the serving set, higher is lower priority


@dataclass(frozen=True)
class RouteCandidate:
    """Visiting order after leaving S; the last waypoint is S."""

    waypoints: tuple[Waypoint, ...]

    @property
    def points(self) -> list[Point]:
        return [w.point for w in self.waypoints]

    @property
    def stages(self) -> tuple[Waypoint, ...]:
        return self.waypoints[:-1]

    def key(self) -> tuple:
        return tuple((round(w.point[0], 6), round(w.point[1], 6), w.role) for w in self.waypoints)

    def loaded_after(self) -> list[bool]:
        """Package still aboard on leg k (i.e. D not among r_1..r_k)."""
        carrying = any(w.role == DESTINATION for w in self.stages)
        out, seen = [], False
        for w in self.stages:
            seen = seen or w.role == DESTINATION
            out.append(carrying and not seen)
        return out

    def to_dict(self) -> list[dict]:
        return [{"x": w.point[0], "y": w.point[1], "role": w.role, "demand": w.demand} for w in self.waypoints]


def enumerate_routes(serving: ServingSet, S, D, cap: int = ENUMERATION_CAP, include_package: bool = True) -> list[RouteCandidate]:
    """Every order of the selected clusters (and D), followed by the return to S."""
    if len(serving) > cap:
        raise EnumerationCapError(f"{len(serving)} clusters exceed the enumeration cap of {cap}")
    items = [Waypoint(p, role, dem, i) for i, (p, role, dem) in enumerate(serving.entries())]
    if include_package:
        items.append(Waypoint(Point(*map(float, D)), DESTINATION))
    home = Waypoint(Point(*map(float, S)), SOURCE)
    return [RouteCandidate(tuple(order) + (home,)) for order in permutations(items)]


# --------------------------------------------------------------------------
# TBS decisions
# --------------------------------------------------------------------------


def stage_costs(s: Sequence[int], demands: Sequence[float], detour: Sequence[float], fwd_power: Sequence[float],
                t_u2b0: float) -> tuple[list[float], list[float]]:
    """Forward replay of a decision vector: (stage costs c_k, forwarded amounts M''_k).

    Raises InvalidParameterError when data is still aboard after the last stage.
    """
    carried = 0.0
    costs, fwd = [], []
    for k, sk in enumerate(s):
        total = carried + demands[k]
        nxt = total if sk else 0.0
        m = total - nxt
        costs.append(m * t_u2b0 * fwd_power[k] + (0.0 if sk else detour[k]))
        fwd.append(m)
        carried = nxt
    if carried != 0.0:
        raise InvalidParameterError("decision vector leaves data undelivered")
    return costs, fwd


def decision_cost(s, demands, detour, fwd_power, t_u2b0) -> float:
    """Total stage cost of a decision vector; the single arithmetic path for c*."""
    total = 0.0
    for c in stage_costs(s, demands, detour, fwd_power, t_u2b0)[0]:
        total += c
    return total


class DPResult(NamedTuple):
    s: tuple[int, ...]
    cost: float
    time: float


def solve_stage_dp(demands: Sequence[float], detour: Sequence[float], fwd_power: Sequence[float], t_u2b0: float,
                   detour_power: Sequence[float] | None = None) -> DPResult:
    """Backward induction over stages; the state is the first stage whose data is still aboard.

    Args:
        demands: data picked up at each stage's start.
        detour: extra energy of the TBS detour of each stage.
        fwd_power: serving power while forwarding at each stage.
        t_u2b0: unit-data time to a TBS directly below.
        detour_power: motion power per stage, used to convert detour energy to time.

    Returns:
        Decisions (1 = fly on, 0 = visit TBS and flush), total cost and extra time.
    """
    K = len(demands)
    if K == 0:
        return DPResult((), 0.0, 0.0)
    # buf[j][k]: data aboard at stage k after pickup, when stages j..k are unflushed
    buf = [[0.0] * K for _ in range(K)]
    for j in range(K):
        acc = 0.0
        for k in range(j, K):
            acc = acc + demands[k]
            buf[j][k] = acc
    INF = math.inf
    f = [[INF] * (K + 1) for _ in range(K + 1)]
    choice = [[1] * (K + 1) for _ in range(K)]
    for k in range(K - 1, -1, -1):
        for j in range(k + 1):
            b = buf[j][k]
            if k == K - 1:
                keep = 0.0 if b == 0.0 else INF
                flush = b * t_u2b0 * fwd_power[k] + detour[k]
            else:
                keep = f[k + 1][j] if b != 0.0 else f[k + 1][k + 1]
                flush = b * t_u2b0 * fwd_power[k] + detour[k] + f[k + 1][k + 1]
            if flush < keep:
                f[k][j], choice[k][j] = flush, 0
            else:
                f[k][j], choice[k][j] = keep, 1
    if not math.isfinite(f[0][0]):
        raise NoRelayError("no decision vector delivers all data")
    s, j = [], 0
    for k in range(K):
        sk = choice[k][j]
        s.append(sk)
        if sk == 0 or buf[j][k] == 0.0:
            j = k + 1
    cost = decision_cost(s, demands, detour, fwd_power, t_u2b0)
    _, fwd = stage_costs(s, demands, detour, fwd_power, t_u2b0)
    pm = detour_power if detour_power is not None else [1.0] * K
    time = 0.0
    for k in range(K):
        time += fwd[k] * t_u2b0 + (0.0 if s[k] else detour[k] / pm[k])
    return DPResult(tuple(s), cost, time)


class StageInputs(NamedTuple):
    demands: list[float]
    detour: list[float]
    fwd_power: list[float]
    motion_power: list[float]
    loaded: list[bool]


def stage_inputs(route: RouteCandidate, tbs_assoc: Sequence[Point], profile: PowerProfile) -> StageInputs:
    pts = route.points
    loaded = route.loaded_after()
    demands, detour, fwd_power, motion_power = [], [], [], []
    for k, w in enumerate(route.stages):
        p_m, v = profile.motion(loaded[k])
        a, b, t = pts[k], pts[k + 1], tbs_assoc[k]
        demands.append(w.demand)
        detour.append(p_m / v * (distance(t, a) + distance(t, b) - distance(a, b)))
        fwd_power.append(profile.serve(loaded[k]))
        motion_power.append(p_m)
    return StageInputs(demands, detour, fwd_power, motion_power, loaded)


def tbs_decision_dp(route: RouteCandidate, tbs_assoc: Sequence[Point], profile: PowerProfile,
                    t_u2b0: float) -> DPResult:
    """Optimal TBS visits for a route with every hover point on its target."""
    si = stage_inputs(route, tbs_assoc, profile)
    return solve_stage_dp(si.demands, si.detour, si.fwd_power, t_u2b0, si.motion_power)


# --------------------------------------------------------------------------
# ledgers
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TripLedger:
    T_col: float
    T_del: float
    T_tra: float
    E_col: float
    E_del: float
    E_tra: float
    M_total: float
    M_delivered: float
    forwarded: tuple[float, ...]

    @property
    def T_total(self) -> float:
        return self.T_col + self.T_del + self.T_tra

    @property
    def E_total(self) -> float:
        return self.E_col + self.E_del + self.E_tra

    def to_dict(self) -> dict:
        return {
            "T_col": self.T_col, "T_del": self.T_del, "T_tra": self.T_tra, "T_total": self.T_total,
            "E_col": self.E_col, "E_del": self.E_del, "E_tra": self.E_tra, "E_total": self.E_total,
            "M_total": self.M_total, "M_delivered": self.M_delivered, "forwarded": list(self.forwarded),
        }


def trip_ledger(stops: Sequence[Stop], hover: Sequence[Point], start, end, profile: PowerProfile,
                unit_times) -> TripLedger:
    """Time, energy and data totals of a trip, replayed leg by leg and stop by stop."""
    pts = [start, *hover, end]
    states = [s.loaded for s in stops] + [False]
    T_tra = E_tra = 0.0
    for i, loaded in enumerate(states):
        p_m, v = profile.motion(loaded)
        t = distance(pts[i], pts[i + 1]) / v
        T_tra += t
        E_tra += t * p_m
    T_col = E_col = T_del = E_del = 0.0
    collected, delivered, forwarded = [], [], []
    pending: list[float] = []
    for s, h in zip(stops, hover):
        if s.kind == "cluster":
            t = s.data * float(unit_times[CLUSTER_TO_UAV](distance(h, s.target)))
            T_col += t
            E_col += t * profile.serve(s.loaded)
            collected.append(s.data)
            pending.append(s.data)
        elif s.kind == "tbs":
            t = s.data * float(unit_times[UAV_TO_TBS](distance(h, s.target)))
            T_del += t
            E_del += t * profile.serve(s.loaded)
            delivered.extend(pending)
            forwarded.append(s.data)
            pending = []
    if pending and any(pending):
        raise InvalidParameterError("trip ends with undelivered data")
    return TripLedger(T_col, T_del, T_tra, E_col, E_del, E_tra, math.fsum(collected), math.fsum(delivered),
                      tuple(forwarded))


# --------------------------------------------------------------------------
# planner
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PlannerConfig:
    scene: SceneParams = field(default_factory=SceneParams)
    channel: ChannelParams = field(default_factory=ChannelParams)
    power: PowerProfile = field(default_factory=PowerProfile)
    n1: int = 2
    n2: int = 2
    demands: tuple[float, float] = (2200.0, 600.0)
    enumeration_cap: int = ENUMERATION_CAP
    unit_time_mode: str = "fading"
    eps: float = EPSILON
    max_sweeps: int = MAX_SWEEPS

    def unit_times(self) -> dict:
        return {k: unit_time_table(self.channel, k, self.unit_time_mode) for k in (CLUSTER_TO_UAV, UAV_TO_TBS)}


@dataclass
class RouteEval:
    route: RouteCandidate
    tbs_assoc: list[Point]
    dp: DPResult
    E_prime: float
    T_prime: float
    end_stage: int  # stage index of the lowest-priority cluster, -1 if none
    flush_stage: int
    marginal: float  # energy per bit/Hz of end-cluster data at zero hover
    airtime: float  # seconds per bit/Hz of end-cluster data at zero hover
    end_demand: float

    def shortfall(self, budget: float) -> float:
        """Data that must be cut from the end cluster to fit the budget (may be negative: slack)."""
        if self.end_stage < 0:
            return 0.0 if self.E_prime <= budget else math.inf
        return (self.E_prime - budget) / self.marginal

    def feasible(self, budget: float) -> bool:
        return not apply_energy_shortfall(self, budget).drop

    def min_time_score(self, budget: float) -> float:
        return self.T_prime - max(0.0, self.shortfall(budget)) * self.airtime

    def max_data_score(self, budget: float) -> float:
        return -self.shortfall(budget)


def tbs_lookup(points: Sequence[Point], tbs: Sequence[Point]) -> dict:
    """Nearest TBS for every segment between two of ``points`` (both directions)."""
    out = {}
    for i, p in enumerate(points):
        for q in points[i + 1:]:
            t = nearest_tbs(tbs, p, q)
            out[(p, q)] = out[(q, p)] = t
    return out


class ShortfallResult(NamedTuple):
    end_data: float  # amount kept for the lowest-priority cluster
    changed: bool  # the full demand no longer fits
    drop: bool  # even zero data from it does not fit: drop that cluster and re-plan


def apply_energy_shortfall(ev: RouteEval, budget: float) -> ShortfallResult:
    """Cut the lowest-priority cluster's data until the zero-hover trip fits the battery.

    The cut is the energy excess divided by the energy per bit/Hz of that
    cluster's data (collection plus forwarding at zero distance).
    """
    if ev.end_stage < 0:
        return ShortfallResult(0.0, False, ev.E_prime > budget)
    if ev.E_prime <= budget:
        return ShortfallResult(ev.end_demand, False, False)
    d_prime = ev.end_demand - (ev.E_prime - budget) / ev.marginal
    return ShortfallResult(max(d_prime, 0.0), True, d_prime < 0.0)


def evaluate_route(route: RouteCandidate, tbs: Sequence[Point], profile: PowerProfile, t_c2u0: float,
                   t_u2b0: float, lookup: dict | None = None) -> RouteEval:
    """Zero-hover energy and time of a route with optimal TBS decisions.

    ``lookup`` optionally caches :func:`tbs_lookup` over the route's points.
    """
    pts = route.points
    start = pts[-1]
    loaded = route.loaded_after()
    has_data = any(w.demand > 0 for w in route.stages)
    if not has_data:
        tbs_assoc = []
    elif lookup is not None:
        tbs_assoc = [lookup[(pts[k], pts[k + 1])] for k in range(len(pts) - 1)]
    else:
        tbs_assoc = nearest_tbs_per_segment(pts, tbs)
    E_no = T_no = 0.0
    prev, prev_loaded = start, any(w.role == DESTINATION for w in route.stages)
    for k, w in enumerate(route.stages):
        p_m, v = profile.motion(prev_loaded)
        t = distance(prev, w.point) / v
        T_no += t
        E_no += t * p_m
        if w.demand > 0:
            t = w.demand * t_c2u0
            T_no += t
            E_no += t * profile.serve(loaded[k])
        prev, prev_loaded = w.point, loaded[k]
    p_m, v = profile.motion(False)
    t = distance(prev, start) / v
    T_no += t
    E_no += t * p_m

    if has_data:
        dp = tbs_decision_dp(route, tbs_assoc, profile, t_u2b0)
    else:
        dp = DPResult((1,) * len(route.stages), 0.0, 0.0)
    ranks = [w.rank for w in route.stages]
    end_stage, flush_stage, marginal, airtime, end_demand = -1, -1, math.nan, math.nan, 0.0
    if max(ranks, default=-1) >= 0:
        end_stage = ranks.index(max(ranks))
        flush_stage = next(k for k in range(end_stage, len(dp.s)) if dp.s[k] == 0)
        marginal = t_c2u0 * profile.serve(loaded[end_stage]) + t_u2b0 * profile.serve(loaded[flush_stage])
        airtime = t_c2u0 + t_u2b0
        end_demand = route.stages[end_stage].demand
    return RouteEval(route, tbs_assoc, dp, E_no + dp.cost, T_no + dp.time, end_stage, flush_stage, marginal,
                     airtime, end_demand)


@dataclass
class Candidate:
    """A fully specified, budget-feasible trip."""

    source: str
    eval: RouteEval
    stops: list[Stop]
    hover: list[Point]
    stage_to_stop: dict
    ledger: TripLedger
    hover_trace: list[float] = field(default_factory=list)
    sweeps: int = 0
    residual_iterations: int = 0


@dataclass
class TrajectoryPlan:
    objective: str
    route: RouteCandidate
    decisions: tuple[int, ...]
    tbs_points: list[Point]
    stops: list[Stop]
    hover_points: list[Point]
    stage_data: list[float]
    ledger: TripLedger
    serving: ServingSet
    dropped: int
    source: str
    hover_trace: list[float]
    sweeps: int
    budget: float

    @property
    def delivered_first(self) -> bool:
        st = self.route.stages
        return bool(st) and st[0].role == DESTINATION and len(st) > 1

    @property
    def tbs_visits(self) -> int:
        return len({(round(s.target[0], 6), round(s.target[1], 6)) for s in self.stops if s.kind == "tbs"})

    @property
    def served_counts(self) -> tuple[int, int]:
        roles = [s.label.split(":")[0] for s in self.stops if s.kind == "cluster"]
        return roles.count("cluster1"), roles.count("cluster2")

    def to_trace(self) -> dict:
        return {
            "objective": self.objective,
            "route": self.route.to_dict(),
            "s": list(self.decisions),
            "tbs_points": [list(p) for p in self.tbs_points],
            "stops": [{"kind": s.kind, "label": s.label, "target": list(s.target), "data": s.data,
                       "loaded": s.loaded, "hover": list(h)} for s, h in zip(self.stops, self.hover_points)],
            "hover_points": [list(h) for h in self.hover_points],
            "stage_data": self.stage_data,
            "ledger": self.ledger.to_dict(),
            "serving": self.serving.to_dict(),
            "dropped_clusters": self.dropped,
            "selected_from": self.source,
            "hover_objective_trace": self.hover_trace,
            "hover_sweeps": self.sweeps,
            "battery_j": self.budget,
        }


def build_stops(ev: RouteEval, end_data: float | None = None) -> tuple[list[Stop], dict, list[float]]:
    """Stops of a route with its TBS visits; optionally override the end cluster's data.

    Returns the stops, a map from stage index to (cluster stop, tbs stop)
    indices and the forwarded amount of each stage.
    """
    route, s = ev.route, ev.dp.s
    loaded = route.loaded_after()
    data = [w.demand for w in route.stages]
    if end_data is not None and ev.end_stage >= 0:
        data[ev.end_stage] = end_data
    stops: list[Stop] = []
    index: dict[int, list[int | None]] = {}
    carried = 0.0
    fwd = []
    for k, w in enumerate(route.stages):
        index[k] = [None, None]
        if w.role == DESTINATION:
            stops.append(Stop("destination", w.point, 0.0, True, "D"))
        else:
            index[k][0] = len(stops)
            stops.append(Stop("cluster", w.point, data[k], loaded[k], f"{w.role}:{w.rank}"))
        total = carried + data[k]
        if s[k] == 0:
            index[k][1] = len(stops)
            stops.append(Stop("tbs", ev.tbs_assoc[k], total, loaded[k], f"tbs:{k}"))
            fwd.append(total)
            carried = 0.0
        else:
            fwd.append(0.0)
            carried = total
    return stops, index, fwd


def _targets(stops):
    return [Point(float(s.target[0]), float(s.target[1])) for s in stops]


def _set_end_data(ev, value):
    """Rebuild stops with a new end-cluster amount; the stop layout is unchanged."""
    return build_stops(ev, value)[0]


def _nonnegative(amount: float, scale: float) -> float | None:
    """Clamp round-off below zero; None when the amount is genuinely negative."""
    if amount >= 0.0:
        return amount
    return 0.0 if amount > -1e-9 * max(scale, 1.0) else None


class _Context(NamedTuple):
    S: Point
    profile: PowerProfile
    unit_times: dict
    budget: float
    eps: float
    max_sweeps: int


def _finish(ctx: _Context, source, ev, stops, hover, index, **extra) -> Candidate:
    ledger = trip_ledger(stops, hover, ctx.S, ctx.S, ctx.profile, ctx.unit_times)
    return Candidate(source, ev, stops, list(hover), index, ledger, **extra)


def _end_indices(ev, index):
    return index[ev.end_stage][0], index[ev.flush_stage][1]


def _closed(ctx: _Context, ev: RouteEval, stops, hover, index, source, allow_grow=True, allow_cut=True, **extra):
    """Close the budget exactly by moving the end cluster's amount at fixed hover points."""
    if ev.end_stage < 0:
        return _finish(ctx, source, ev, stops, hover, index, **extra)
    e, f = _end_indices(ev, index)
    energy = trip_cost(stops, hover, ctx.S, ctx.S, ctx.profile, ctx.unit_times, "energy")
    delta = (ctx.budget - energy) / marginal_energy(stops, hover, ctx.profile, ctx.unit_times, e, f)
    if (delta > 0 and not allow_grow) or (delta < 0 and not allow_cut):
        delta = 0.0
    if delta == 0.0:
        return _finish(ctx, source, ev, stops, hover, index, **extra)
    new_end = _nonnegative(stops[e].data + delta, ev.end_demand)
    if new_end is None:
        return None
    return _finish(ctx, source, ev, _set_end_data(ev, new_end), hover, index, **extra)


def _pinned(ctx, ev, grow: bool, source: str):
    stops, index, _ = build_stops(ev)
    return _closed(ctx, ev, stops, _targets(stops), index, source, allow_grow=grow)


def _max_data_hovered(ctx, ev):
    stops, index, _ = build_stops(ev)
    res = optimize_hover_points(stops, ctx.S, ctx.S, ctx.profile, ctx.unit_times, "energy", eps=ctx.eps,
                                max_sweeps=ctx.max_sweeps)
    if ev.end_stage < 0:
        return _finish(ctx, "max-data/hover", ev, stops, res.hover, index, hover_trace=res.trace,
                       sweeps=res.sweeps)
    e, f = _end_indices(ev, index)
    rr = maximize_residual_data(stops, res.hover, ctx.S, ctx.S, ctx.profile, ctx.unit_times, e, f, ctx.budget,
                                allow_deficit=True, eps=ctx.eps, max_iter=ctx.max_sweeps)
    new_end = _nonnegative(stops[e].data + rr.delta, ev.end_demand)
    if new_end is None:
        return None
    grown = _set_end_data(ev, new_end)
    return _finish(ctx, "max-data/hover", ev, grown, rr.hover, index, hover_trace=res.trace,
                   sweeps=res.sweeps, residual_iterations=rr.iterations)


def _min_time_hovered(ctx, ev):
    stops, index, _ = build_stops(ev)
    res = optimize_hover_points(stops, ctx.S, ctx.S, ctx.profile, ctx.unit_times, "time", eps=ctx.eps,
                                max_sweeps=ctx.max_sweeps)
    return _closed(ctx, ev, stops, res.hover, index, "min-time/hover", allow_grow=False,
                   hover_trace=res.trace, sweeps=res.sweeps)


def _pick_route(evals: list[RouteEval], budget: float, objective: str) -> RouteEval:
    if objective == MIN_TIME:
        return min(evals, key=lambda e: (e.min_time_score(budget), e.route.key()))
    return min(evals, key=lambda e: (-e.max_data_score(budget), e.route.key()))


def _serving_for(scene: Scene, cfg: PlannerConfig, serving: ServingSet | None) -> ServingSet:
    return serving if serving is not None else select_serving_clusters(scene, cfg.n1, cfg.n2, cfg.demands)


def _feasible_routes(scene, cfg, serving, include_package, t_c2u0, t_u2b0):
    budget = cfg.power.battery_capacity
    dropped = 0
    while True:
        routes = enumerate_routes(serving, scene.source, scene.destination, cfg.enumeration_cap, include_package)
        lookup = tbs_lookup(routes[0].points, scene.tbs) if len(serving) and routes else None
        evals = [evaluate_route(r, scene.tbs, cfg.power, t_c2u0, t_u2b0, lookup) for r in routes]
        feasible = [e for e in evals if e.feasible(budget)]
        if feasible:
            return feasible, serving, dropped
        if len(serving) == 0:
            raise InfeasibleTripError("the bare delivery trip exceeds the battery")
        serving = serving.without_lowest()
        dropped += 1


def _to_plan(objective, cand: Candidate, serving, dropped, budget) -> TrajectoryPlan:
    ev = cand.eval
    stage_data = []
    for k in range(len(ev.route.stages)):
        t = cand.stage_to_stop[k][1]
        stage_data.append(cand.stops[t].data if t is not None else 0.0)
    return TrajectoryPlan(
        objective=objective,
        route=ev.route,
        decisions=ev.dp.s,
        tbs_points=list(ev.tbs_assoc),
        stops=cand.stops,
        hover_points=cand.hover,
        stage_data=stage_data,
        ledger=cand.ledger,
        serving=serving,
        dropped=dropped,
        source=cand.source,
        hover_trace=cand.hover_trace,
        sweeps=cand.sweeps,
        budget=budget,
    )


def plan_pair(scene: Scene, cfg: PlannerConfig, *, serving: ServingSet | None = None,
              include_package: bool = True) -> dict[str, TrajectoryPlan]:
    """Plan both objectives for one scene.

    Routes are ranked at zero hover: the time ranking uses the budget-truncated
    round trip, the data ranking the budget-closed data amount.  The winning
    route of each objective is then hover-optimized.  Each objective finally
    takes the best of the shared pool of budget-feasible trips (hovered and
    pinned variants of both winners), which makes the min-time trip never
    slower and the max-data trip never poorer than the other.

    Args:
        scene: one realization.
        cfg: planner configuration.
        serving: preselected clusters (default: greedy selection on the scene).
        include_package: False plans a data-only trip with no package aboard.

    Raises:
        InfeasibleTripError: not even the trip without clusters fits the battery.
    """
    unit_times = cfg.unit_times()
    t_c2u0 = unit_times[CLUSTER_TO_UAV].at_zero
    t_u2b0 = unit_times[UAV_TO_TBS].at_zero
    budget = cfg.power.battery_capacity
    serving = _serving_for(scene, cfg, serving)
    evals, serving, dropped = _feasible_routes(scene, cfg, serving, include_package, t_c2u0, t_u2b0)
    ctx = _Context(scene.source, cfg.power, unit_times, budget, cfg.eps, cfg.max_sweeps)

    ev_d = _pick_route(evals, budget, MAX_DATA)
    ev_t = _pick_route(evals, budget, MIN_TIME)
    pool_d = [_max_data_hovered(ctx, ev_d), _pinned(ctx, ev_d, True, "max-data/pinned")]
    pool_t = [_min_time_hovered(ctx, ev_t), _pinned(ctx, ev_t, False, "min-time/pinned")]
    pool_d = [c for c in pool_d if c is not None]
    pool_t = [c for c in pool_t if c is not None]

    # time pool: every candidate as is; data pool: time candidates grown to the budget
    time_pool = pool_t + pool_d
    data_pool = list(pool_d)
    for c in pool_t:
        grown = _closed(ctx, c.eval, c.stops, c.hover, c.stage_to_stop, c.source + "+grown", allow_cut=False,
                        hover_trace=c.hover_trace, sweeps=c.sweeps)
        if grown is not None:
            data_pool.append(grown)

    best_t = min(time_pool, key=lambda c: (c.ledger.T_total, -c.ledger.M_total, c.eval.route.key()))
    best_d = min(data_pool, key=lambda c: (-c.ledger.M_total, c.ledger.T_total, c.eval.route.key()))
    return {
        MIN_TIME: _to_plan(MIN_TIME, best_t, serving, dropped, budget),
        MAX_DATA: _to_plan(MAX_DATA, best_d, serving, dropped, budget),
    }


def plan_trajectory(scene: Scene, cfg: PlannerConfig, objective: str = MAX_DATA, **kw) -> TrajectoryPlan:
    """Plan one objective ("min-time" or "max-data") for a scene."""
    if objective not in OBJECTIVES:
        raise InvalidParameterError(f"unknown objective {objective!r}")
    return plan_pair(scene, cfg, **kw)[objective]


@dataclass(frozen=True)
class SinglePurposeTrip:
    """Two separate sorties: the package run and a data-only tour."""

    package_time: float
    package_energy: float
    data_plan: TrajectoryPlan | None

    @property
    def round_trip_s(self) -> float:
        return self.package_time + (self.data_plan.ledger.T_total if self.data_plan else 0.0)

    @property
    def energy_j(self) -> float:
        return self.package_energy + (self.data_plan.ledger.E_total if self.data_plan else 0.0)

    @property
    def data_bithz(self) -> float:
        return self.data_plan.ledger.M_total if self.data_plan else 0.0


def package_only_trip(scene: Scene, profile: PowerProfile) -> tuple[float, float]:
    """(time, energy) of the bare S -> D -> S flight."""
    L = distance(scene.source, scene.destination)
    p_l, v_l = profile.motion(True)
    p_e, v_e = profile.motion(False)
    return L / v_l + L / v_e, L / v_l * p_l + L / v_e * p_e


def plan_single_purpose(scene: Scene, cfg: PlannerConfig) -> dict[str, SinglePurposeTrip]:
    """Single-purpose baseline for both objectives, on the same selected clusters and a fresh battery per sortie."""
    t_pkg, e_pkg = package_only_trip(scene, cfg.power)
    if e_pkg > cfg.power.battery_capacity:
        raise InfeasibleTripError("the bare delivery trip exceeds the battery")
    serving = _serving_for(scene, cfg, None)
    if len(serving) == 0:
        return {obj: SinglePurposeTrip(t_pkg, e_pkg, None) for obj in OBJECTIVES}
    plans = plan_pair(scene, cfg, serving=serving, include_package=False)
    return {obj: SinglePurposeTrip(t_pkg, e_pkg, plans[obj]) for obj in OBJECTIVES}


def replace_battery(cfg: PlannerConfig, battery_wh: float) -> PlannerConfig:
    return replace(cfg, power=cfg.power.with_battery_wh(battery_wh))

