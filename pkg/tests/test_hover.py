import math

import numpy as np
import pytest

from skyplanner.channel import CLUSTER_TO_UAV, UAV_TO_TBS
from skyplanner.energy import PowerProfile
from skyplanner.errors import InvalidParameterError
from skyplanner.geometry import Point, distance
from skyplanner.hover import (
    HoverSubproblem,
    Stop,
    hover_cost,
    maximize_residual_data,
    min_detour,
    optimize_hover_points,
    pinned_residual_data,
    solve_single_hover,
    trip_cost,
)
from skyplanner.planner import PlannerConfig

PROFILE = PowerProfile()
UT = PlannerConfig().unit_times()
A, B = Point(0.0, 0.0), Point(1000.0, 0.0)


def _scan_detour(A, B, c, d, n=100_000):
    th = np.linspace(0, 2 * np.pi, n, endpoint=False)
    hx, hy = c[0] + d * np.cos(th), c[1] + d * np.sin(th)
    return float(np.min(np.hypot(A[0] - hx, A[1] - hy) + np.hypot(B[0] - hx, B[1] - hy)))


def test_detour_target_on_segment():
    h, ln = min_detour(A, B, Point(400.0, 0.0), 0.0)
    assert h == Point(400.0, 0.0) and ln == pytest.approx(1000.0)


def test_detour_circle_touches_segment():
    h, ln = min_detour(A, B, Point(500.0, 300.0), 300.0)
    assert h == pytest.approx((500.0, 0.0)) and ln == pytest.approx(1000.0)


@pytest.mark.parametrize("c,d", [((500.0, 300.0), 150.0), ((500.0, 300.0), 1.0), ((1300.0, 200.0), 100.0),
                                 ((-50.0, 900.0), 600.0), ((250.0, -40.0), 39.0)])
def test_detour_matches_dense_scan(c, d):
    h, ln = min_detour(A, B, Point(*c), d)
    assert ln == pytest.approx(_scan_detour(A, B, c, d), abs=1e-3)
    assert distance(h, c) == pytest.approx(d, abs=1e-9)
    assert ln == pytest.approx(distance(A, h) + distance(h, B), abs=1e-9)


def test_detour_non_increasing_in_d():
    c = Point(300.0, 450.0)
    lengths = [min_detour(A, B, c, d)[1] for d in np.linspace(0, 450, 91)]
    assert all(b <= a + 1e-9 for a, b in zip(lengths, lengths[1:]))
    assert lengths[-1] == pytest.approx(1000.0)
    with pytest.raises(InvalidParameterError):
        min_detour(A, B, c, -1.0)


def _sub(M, c=(500.0, 400.0), p_m=None, v=None, kind=CLUSTER_TO_UAV):
    pm, vv = PROFILE.motion(True)
    return HoverSubproblem(A, B, Point(*c), M, PROFILE.serve(True), pm if p_m is None else p_m,
                           vv if v is None else v, kind)


def test_no_data_stays_on_leg():
    sol = solve_single_hover(_sub(0.0), "energy", UT[CLUSTER_TO_UAV])
    assert sol.d == pytest.approx(400.0) and sol.l_star == pytest.approx(1000.0)


def test_free_travel_hovers_on_target():
    sol = solve_single_hover(_sub(600.0, p_m=1e-12), "energy", UT[CLUSTER_TO_UAV])
    assert sol.d == pytest.approx(0.0, abs=1e-3)
    sol = solve_single_hover(_sub(600.0, v=1e12), "time", UT[CLUSTER_TO_UAV])
    assert sol.d == pytest.approx(0.0, abs=1e-3)


@pytest.mark.parametrize("objective", ["energy", "time"])
def test_interior_optimum_matches_grid(objective):
    sub = _sub(600.0)
    sol = solve_single_hover(sub, objective, UT[CLUSTER_TO_UAV])
    assert 0.0 < sol.d < 400.0
    ds = np.linspace(0.0, 400.0, 1001)
    w_air, w_len = (sub.p_s, sub.p_m / sub.v) if objective == "energy" else (1.0, 1.0 / sub.v)
    ell = np.array([_scan_detour(A, B, sub.c, d, 20_000) for d in ds])
    cost = sub.M_t * UT[CLUSTER_TO_UAV](ds) * w_air + ell * w_len
    assert sol.d == pytest.approx(ds[np.argmin(cost)], abs=1.0)
    assert sol.value <= cost.min() + 1e-6 * cost.min()
    assert hover_cost(sub, sol.h, objective, UT[CLUSTER_TO_UAV]) == pytest.approx(sol.value, rel=1e-12)


def test_hover_stays_within_dmax():
    for M in (1.0, 100.0, 2200.0, 1e5):
        sol = solve_single_hover(_sub(M, c=(200.0, -150.0)), "energy", UT[CLUSTER_TO_UAV])
        assert 0.0 <= sol.d <= 150.0 + 1e-6


def test_unknown_objective_and_negative_data():
    with pytest.raises(InvalidParameterError):
        solve_single_hover(_sub(1.0), "distance", UT[CLUSTER_TO_UAV])
    with pytest.raises(InvalidParameterError):
        solve_single_hover(_sub(-1.0), "energy", UT[CLUSTER_TO_UAV])


def test_single_target_one_sweep():
    S = Point(0.0, 0.0)
    stops = [Stop("destination", Point(3000.0, 0.0), 0.0, True),
             Stop("cluster", Point(1500.0, 500.0), 2200.0, False)]
    res = optimize_hover_points(stops, S, S, PROFILE, UT, "energy")
    assert res.sweeps == 1 and res.converged
    sub = HoverSubproblem(stops[0].target, S, stops[1].target, 2200.0, PROFILE.serve(False),
                          *PROFILE.motion(False), CLUSTER_TO_UAV)
    assert res.hover[1] == solve_single_hover(sub, "energy", UT[CLUSTER_TO_UAV], d_current=0.0).h


def test_collinear_targets_fixed_point():
    S = Point(0.0, 0.0)
    stops = [Stop("cluster", Point(1000.0, 0.0), 600.0, True), Stop("cluster", Point(2000.0, 0.0), 600.0, True),
             Stop("destination", Point(3000.0, 0.0), 0.0, True)]
    res = optimize_hover_points(stops, S, S, PROFILE, UT, "time")
    assert res.converged and res.sweeps == 1
    assert res.hover == [s.target for s in stops]


def _random_trip(rng, n=4):
    S = Point(0.0, 0.0)
    D = Point(5000.0, 0.0)
    stops = [Stop("destination", D, 0.0, True)]
    for i in range(n):
        kind = "cluster" if i % 2 == 0 else "tbs"
        c = Point(*map(float, rng.uniform([0, -1500], [5000, 1500])))
        stops.append(Stop(kind, c, float(rng.choice([600.0, 2200.0])), False))
    return S, stops


@pytest.mark.parametrize("objective", ["energy", "time"])
def test_descent_monotone(objective):
    rng = np.random.default_rng(3)
    for _ in range(10):
        S, stops = _random_trip(rng)
        res = optimize_hover_points(stops, S, S, PROFILE, UT, objective)
        tr = res.trace
        assert all(b <= a * (1 + 1e-9) for a, b in zip(tr, tr[1:]))
        assert tr[-1] == pytest.approx(trip_cost(stops, res.hover, S, S, PROFILE, UT, objective), rel=1e-12)
        assert res.converged


def _residual_case():
    S = Point(0.0, 0.0)
    stops = [Stop("destination", Point(4000.0, 0.0), 0.0, True),
             Stop("cluster", Point(3000.0, 600.0), 600.0, False),
             Stop("tbs", Point(1000.0, -700.0), 600.0, False)]
    res = optimize_hover_points(stops, S, S, PROFILE, UT, "energy")
    return S, stops, res.hover


def test_residual_zero_slack():
    S, stops, hover = _residual_case()
    budget = trip_cost(stops, hover, S, S, PROFILE, UT, "energy")
    r = maximize_residual_data(stops, hover, S, S, PROFILE, UT, 1, 2, budget)
    assert r.delta == pytest.approx(0.0, abs=1e-9)
    assert all(distance(a, b) < 0.1 for a, b in zip(r.hover, hover))


def test_residual_pinned_formula():
    S, stops, _ = _residual_case()
    pinned = [s.target for s in stops]
    base = trip_cost(stops, pinned, S, S, PROFILE, UT, "energy")
    slack = 50_000.0
    expect = slack / (UT[UAV_TO_TBS].at_zero * PROFILE.serve(False) + UT[CLUSTER_TO_UAV].at_zero * PROFILE.serve(False))
    got = pinned_residual_data(stops, S, S, PROFILE, UT, 1, 2, base + slack)
    assert got == pytest.approx(expect, rel=1e-12)


def test_residual_beats_pinned_and_closes_budget():
    S, stops, hover = _residual_case()
    budget = 1.1 * trip_cost(stops, hover, S, S, PROFILE, UT, "energy")
    r = maximize_residual_data(stops, hover, S, S, PROFILE, UT, 1, 2, budget)
    assert r.converged and r.delta > 0
    assert r.delta >= pinned_residual_data(stops, S, S, PROFILE, UT, 1, 2, budget)
    grown = [s if i not in (1, 2) else Stop(s.kind, s.target, s.data + r.delta, s.loaded) for i, s in enumerate(stops)]
    e = trip_cost(grown, r.hover, S, S, PROFILE, UT, "energy")
    assert abs(e - budget) / budget < 1e-6


def test_residual_rejects_negative_slack():
    S, stops, hover = _residual_case()
    budget = 0.9 * trip_cost(stops, hover, S, S, PROFILE, UT, "energy")
    with pytest.raises(InvalidParameterError):
        maximize_residual_data(stops, hover, S, S, PROFILE, UT, 1, 2, budget)
    r = maximize_residual_data(stops, hover, S, S, PROFILE, UT, 1, 2, budget, allow_deficit=True)
    assert r.delta < 0 and math.isfinite(r.delta)
