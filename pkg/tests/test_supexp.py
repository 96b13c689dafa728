import math
from fractions import Fraction as F

import pytest

from rcmexp.checks import identity_range
from rcmexp.corpus import corpus
from rcmexp.graphcore import (FREE, WIRED, InvariantError, MarginError, PreconditionError,
                              edge_boundary, enumerate_connected_vertex_sets, regular_tree,
                              zd_box)
from rcmexp.oracle import ModelParams, census, finite_connectivity_exact, theta_exact
from rcmexp.subexp import series_log
from rcmexp.supexp import (SupContext, SupGas, activity_bound_check, counting_bound_check,
                           critical_delta, critical_p_sup, cutset_constant, enumerate_fences,
                           fence_crosses_rays, finite_connectivity_bound, is_fence, kp_certificate,
                           log_psi, minimal_fence_count, pressure_density, psi_packing,
                           root_condition, separates, sup_decay_bound, surrounds, theta_series,
                           truncated_phi_f, verify_cutset)


def E(g, a, b):
    return g.edge_between(g.vertex(a), g.vertex(b))


def test_single_vertex_fence_is_unique_of_size_four():
    g = zd_box([15, 15], 4)
    fs = enumerate_fences(g, g.center(), 6)
    assert [len(f.gamma) for f in fs] == [4, 6, 6, 6, 6]
    assert fs[0].interior == {g.center()}


def test_tree_fence():
    t = regular_tree(3, 6, 2)
    fs = enumerate_fences(t, t.vertex("r"), 4)
    assert [len(f.gamma) for f in fs] == [3, 4, 4, 4]


def test_fences_need_room():
    g = zd_box([7, 7], 2)
    with pytest.raises(MarginError):
        enumerate_fences(g, g.center(), 6)


def test_is_fence():
    g = zd_box([11, 11], 2)
    c = g.vertex("5,5")
    star = edge_boundary(g, [c])
    ok, f = is_fence(g, star)
    assert ok and f.interior == {c}
    extra = star | {E(g, "4,4", "4,5")}
    assert not is_fence(g, extra)[0]
    domino = edge_boundary(g, [c, g.vertex("5,6")])
    ok, f = is_fence(g, domino)
    assert ok and len(f.interior_edges) == 1
    # two disjoint stars enclose two finite components
    far = edge_boundary(g, [g.vertex("3,3")])
    assert not is_fence(g, star | far)[0]


def test_fence_blocks_rays_and_surrounds():
    g = zd_box([11, 11], 2)
    c = g.vertex("5,5")
    ok, f = is_fence(g, edge_boundary(g, [c, g.vertex("5,6")]))
    assert fence_crosses_rays(g, f, c)
    assert surrounds(f, [c, g.vertex("5,6")]) and not surrounds(f, [c, g.vertex("5,7")])
    assert separates(g, f, [c, g.vertex("5,7")]) and not separates(g, f, [c, g.vertex("5,6")])


def test_minimal_fence_counts():
    g = zd_box([9, 9], 1)
    star = edge_boundary(g, [g.vertex("3,3")])
    assert minimal_fence_count(g, star, WIRED) == 1
    assert minimal_fence_count(g, [E(g, "3,3", "3,4")], WIRED) == 0
    two = star | edge_boundary(g, [g.vertex("3,5")])
    # the two stars share no edge: two enclosed vertices
    assert minimal_fence_count(g, two, WIRED) == 2


def test_dual_animal_activities():
    g = zd_box([7, 7], 1)
    p, q = F(9, 10), F(3)
    lam = F(1, 9)
    gas = SupGas(g, SupContext.from_params(g, p, q, WIRED, R=1))
    star = frozenset(edge_boundary(g, [g.vertex("3,3")]))
    assert gas.part_activity(star) == lam ** 4 * q
    assert gas.part_activity(frozenset([E(g, "3,3", "3,4")])) == lam


def test_free_activity_near_boundary():
    # free: animals near the window boundary count components minus one
    g = zd_box([4, 4], 0)
    corner = frozenset([E(g, "0,0", "0,1"), E(g, "0,0", "1,0")])
    assert minimal_fence_count(g, corner, FREE, R=1) == 1
    assert minimal_fence_count(g, corner, WIRED, R=1) == 0


def test_root_condition_matches_fence_search():
    # X is rooted in P exactly when some fence made of edges of P surrounds X
    # without separating it; checked against a literal search over fences
    g = zd_box([6, 6], 1)
    ctx = SupContext.from_params(g, F(19, 20), F(2), WIRED, R=1)
    X = [g.vertex("2,2")]
    gas = SupGas(g, ctx, X, max_size=7)
    interiors = [I for I in enumerate_connected_vertex_sets(
        g, X[0], 1, 6, region=g.window_interior)]
    for P in gas.x_polymers:
        removed = frozenset().union(*P)
        literal = any(edge_boundary(g, I) & set(g.window_edges) <= removed
                      for I in interiors)
        assert root_condition(gas.win, P, X) == literal


def test_large_p_identity_on_corpus():
    pairs = [(F(9, 10), F(2)), (F(1, 3), F(3)), (F(3, 4), F(1, 2))]
    for nm, g in corpus():
        c = census(g)
        ne = len(g.window_edges)
        for bc in (FREE, WIRED):
            R = identity_range(g, bc)
            for p, q in pairs:
                ctx = SupContext.from_params(g, p, q, bc, R=R, allow_tree=True)
                z = c.weight_sum(p, q, bc)
                assert p ** ne * psi_packing(g, ctx) == (z if bc == WIRED else z / q), (nm, bc)


def test_log_psi_is_the_log_series():
    g = zd_box([2, 3], 0)
    ctx = SupContext.from_params(g, F(9, 10), F(1, 3), WIRED, R=1)
    K = 6
    expect = series_log(psi_packing(g, ctx, graded=True), K + 1)
    res = log_psi(g, ctx, K)
    got = {s: v for s, v, _ in res.by_size}
    for s in range(1, K + 1):
        assert got.get(s, 0) == expect[s] * ctx.lam ** s


def test_phi_f_against_oracle():
    g = zd_box([5, 5], 1)
    x = min(g.window_interior)
    lam = F(1, 3000)
    p = 1 / (1 + lam)
    ctx = SupContext.from_params(g, p, F(1, 2), WIRED, R=1)
    res = truncated_phi_f(g, ctx, [x], 8)
    exact = finite_connectivity_exact(g, ModelParams(p, F(1, 2), WIRED), [x])
    assert res.tail_bound is not None
    assert abs(float(res.value - exact)) <= res.tail_bound
    assert res.extra["smallest_root"] == 4
    # a single vertex has f_G = 4 on the square lattice
    assert float(exact) <= sup_decay_bound(ctx, 4)
    th = theta_series(g, ctx, x, 8)
    assert th.value == 1 - res.value
    assert 0 <= float(th.value) <= 1
    assert abs(float(th.value - theta_exact(g, ModelParams(p, F(1, 2), WIRED), x))) <= th.tail_bound


def test_p_one():
    g = zd_box([5, 5], 1)
    x = min(g.window_interior)
    ctx = SupContext.from_params(g, F(1), F(2), WIRED, R=1)
    assert truncated_phi_f(g, ctx, [x], 6).value == 0
    assert truncated_phi_f(g, ctx, [x], 6).tail_bound == 0.0
    assert kp_certificate(ctx).threshold_ok


def test_kp_certificate_values():
    g = zd_box([6, 6], 1)
    ctx = SupContext.from_params(g, 0.99, 0.5, WIRED, R=1)
    assert ctx.delta_p == pytest.approx(1 / 99)
    assert ctx.A == 32
    d = critical_delta(32, 4, 1)
    assert d == pytest.approx(1 / (math.e * 32 * 17))
    ps = critical_p_sup(2.0, 32, 4, 1)
    assert (1 - ps) / ps * 2 == pytest.approx(d)
    assert critical_p_sup(0.5, 32, 4, 1) == pytest.approx(1 / (1 + d))


def test_trees_rejected_for_large_p():
    t = regular_tree(3, 4, 1)
    with pytest.raises(PreconditionError):
        SupContext.from_params(t, 0.99, 2.0)
    ctx = SupContext.from_params(t, 0.99, 2.0, allow_tree=True)
    assert not counting_bound_check(t, ctx, [t.vertex("r")], 3)["eligible"]


def test_counting_bound():
    g = zd_box([9, 9], 2)
    ctx = SupContext.from_params(g, 0.99, 2.0, WIRED, R=1)
    rep = counting_bound_check(g, ctx, [g.center()], 3)
    assert rep["eligible"] and rep["ok"] and rep["bound"] == 32 ** 3


def test_activity_bound():
    g = zd_box([5, 5], 1)
    for bc in (FREE, WIRED):
        ctx = SupContext.from_params(g, F(19, 20), F(1, 2), bc, R=1)
        assert activity_bound_check(g, ctx, 5) <= 1


def test_pressure_density_is_translation_invariant():
    g = zd_box([8, 8], 1)
    ctx = SupContext.from_params(g, F(99, 100), F(2), WIRED, R=1)
    a = pressure_density(g, ctx, E(g, "3,3", "3,4"), 3).value
    b = pressure_density(g, ctx, E(g, "4,3", "4,4"), 3).value
    c = pressure_density(g, ctx, E(g, "3,3", "4,3"), 3).value
    assert a == b == c


def test_pressure_densities_sum_to_log_psi():
    g = zd_box([2, 3], 0)
    ctx = SupContext.from_params(g, F(9, 10), F(1, 3), WIRED, R=1)
    K = 4
    total = sum(pressure_density(g, ctx, e, K).value for e in g.window_edges)
    assert total == log_psi(g, ctx, K).value


def test_finite_connectivity_bound():
    g = zd_box([15, 15], 4)
    ctx = SupContext.from_params(g, 0.9999, 2.0, WIRED, R=1)
    bound, fg = finite_connectivity_bound(g, ctx, [g.center()])
    assert fg == 4
    assert bound == pytest.approx((1 + 4 ** -2) * (32 * math.e * ctx.delta_p) ** 4)


def test_cutset_constants():
    g = zd_box([6, 6], 1)
    need, complete = verify_cutset(g, 1, walls=False)
    assert need == 1 and complete
    need, _ = cutset_constant(zd_box([4, 4], 0), walls=True)
    assert need > 1
    with pytest.raises(InvariantError):
        verify_cutset(zd_box([4, 4], 0), 1, walls=True)


def test_interior_required():
    g = zd_box([5, 5], 1)
    ctx = SupContext.from_params(g, F(19, 20), F(2), WIRED, R=1)
    with pytest.raises(PreconditionError):
        truncated_phi_f(g, ctx, [min(g.window)], 4)
