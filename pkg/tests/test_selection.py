import math
import random

import pytest

from skyplanner.errors import InvalidParameterError, NoRelayError
from skyplanner.geometry import Point, Scene, SceneParams, sample_scene
from skyplanner.planner import enumerate_routes
from skyplanner.selection import (
    TYPE1,
    TYPE2,
    nearest_tbs,
    nearest_tbs_per_segment,
    select_serving_clusters,
)


def _seg_dist(p, a, b):
    # plain scalar geometry, kept apart from the vectorized library helpers
    ax, ay = a
    bx, by = b
    px, py = p
    dx, dy = bx - ax, by - ay
    L2 = dx * dx + dy * dy
    t = 0.0 if L2 == 0 else max(0.0, min(1.0, ((px - ax) * dx + (py - ay) * dy) / L2))
    return math.hypot(px - ax - t * dx, py - ay - t * dy)


def _oracle(scene, n1, n2):
    anchors = [scene.source, scene.destination]
    out = []
    for pool, n in ((list(scene.clusters1), n1), (list(scene.clusters2), n2)):
        picked = []
        for _ in range(min(n, len(pool))):
            def score(c):
                d = min(_seg_dist(c, anchors[i], anchors[j])
                        for i in range(len(anchors)) for j in range(i + 1, len(anchors)))
                return (d, c[0], c[1])
            best = min(pool, key=score)
            pool.remove(best)
            picked.append(best)
            anchors.append(best)
        out.append(tuple(picked))
    return out


def _scene(c1=(), c2=(), tbs=((0.0, 500.0),), L=1000.0):
    P = lambda seq: tuple(Point(*map(float, p)) for p in seq)  # noqa: E731
    return Scene(P(tbs), P(c1), P(c2), Point(0.0, 0.0), Point(L, 0.0), 0)


def test_crafted_nearest_to_sd():
    sc = _scene(c1=[(500, -200), (500, 100)])
    sel = select_serving_clusters(sc, 1, 0)
    assert sel.w1 == (Point(500.0, 100.0),)
    assert not sel.shortfall


def test_single_anchor_case():
    sc = _scene(c1=[(300, 40), (900, -30), (2000, 0)])
    assert select_serving_clusters(sc, 1, 0).w1 == (Point(900.0, -30.0),)


def test_second_pick_uses_new_segments():
    # (200, 420) is 420 m from S-D but 53 m from the segment S-(500, 800) added by the first pick
    sc = _scene(c1=[(500, 800)], c2=[(1200, 700), (200, 420)])
    sel = select_serving_clusters(sc, 1, 1)
    assert sel.w2 == (Point(200.0, 420.0),)
    assert sel.w2 == _oracle(sc, 1, 1)[1]


def test_matches_brute_force_on_random_scenes():
    params = SceneParams()
    for seed in range(100):
        sc = sample_scene(params, seed)
        sel = select_serving_clusters(sc, 2, 2)
        w1, w2 = _oracle(sc, 2, 2)
        assert (sel.w1, sel.w2) == (w1, w2), seed


def test_priority_partition_and_demands():
    sc = sample_scene(SceneParams(), 3)
    sel = select_serving_clusters(sc, 2, 2, demands=(2200.0, 600.0))
    assert set(sel.w1) <= set(sc.clusters1) and set(sel.w2) <= set(sc.clusters2)
    assert sel.priorities == (TYPE1, TYPE1, TYPE2, TYPE2)
    assert sel.demands == (2200.0, 2200.0, 600.0, 600.0)
    assert len(set(sel.w1 + sel.w2)) == 4


def test_greedy_prefix_property():
    for seed in range(30):
        sc = sample_scene(SceneParams(), seed)
        full = select_serving_clusters(sc, 3, 2)
        for i in range(len(full.w1) + 1):
            assert select_serving_clusters(sc, i, 0).w1 == full.w1[:i]


def test_shuffle_stability():
    rnd = random.Random(0)
    for seed in range(20):
        sc = sample_scene(SceneParams(), seed)
        c1, c2 = list(sc.clusters1), list(sc.clusters2)
        rnd.shuffle(c1)
        rnd.shuffle(c2)
        shuffled = Scene(sc.tbs, tuple(c1), tuple(c2), sc.source, sc.destination, sc.seed)
        assert select_serving_clusters(sc, 2, 2) == select_serving_clusters(shuffled, 2, 2)


def test_tie_break_smaller_x_then_y():
    sc = _scene(c1=[(600, 50), (400, 50), (400, -50)])
    assert select_serving_clusters(sc, 1, 0).w1 == (Point(400.0, -50.0),)


def test_shortfall_and_empty_scene():
    sel = select_serving_clusters(_scene(c1=[(10, 10)]), 2, 2)
    assert sel.shortfall and len(sel) == 1
    empty = select_serving_clusters(_scene(), 2, 2)
    assert len(empty) == 0 and empty.shortfall
    assert not select_serving_clusters(_scene(), 0, 0).shortfall
    with pytest.raises(InvalidParameterError):
        select_serving_clusters(_scene(), -1, 0)


def test_without_lowest_drops_type2_first():
    sel = select_serving_clusters(_scene(c1=[(10, 10)], c2=[(20, 5), (30, 9)]), 1, 2)
    a = sel.without_lowest()
    assert a.w1 == sel.w1 and a.w2 == sel.w2[:1]
    b = a.without_lowest().without_lowest()
    assert len(b) == 0
    with pytest.raises(InvalidParameterError):
        b.without_lowest()


def test_single_tbs_maps_every_segment():
    pts = [Point(100.0, 100.0), Point(1000.0, 0.0), Point(0.0, 0.0)]
    assert nearest_tbs_per_segment(pts, [Point(-5e3, 7e3)]) == [Point(-5e3, 7e3)] * 2


def test_tbs_on_segment_is_chosen():
    pts = [Point(0.0, 0.0), Point(1000.0, 0.0), Point(0.0, 0.0)]
    tbs = [Point(10.0, 10.0), Point(600.0, 0.0)]
    assert nearest_tbs_per_segment(pts, tbs)[0] == Point(600.0, 0.0)


def test_association_matches_linear_scan():
    for seed in range(20):
        sc = sample_scene(SceneParams(), seed)
        sel = select_serving_clusters(sc, 2, 2)
        route = enumerate_routes(sel, sc.source, sc.destination)[seed]
        got = nearest_tbs_per_segment(route, sc.tbs)
        pts = route.points
        assert len(got) == len(pts) - 1
        for k, t in enumerate(got):
            best = min(sc.tbs, key=lambda q: (_seg_dist(q, pts[k], pts[k + 1]), q[0], q[1]))
            assert t == best


def test_no_tbs_raises():
    with pytest.raises(NoRelayError):
        nearest_tbs_per_segment([Point(0.0, 0.0), Point(1.0, 0.0)], [])
    with pytest.raises(NoRelayError):
        nearest_tbs([], (0, 0), (1, 0))
    with pytest.raises(InvalidParameterError):
        nearest_tbs_per_segment([Point(0.0, 0.0)], [Point(0.0, 0.0)])
