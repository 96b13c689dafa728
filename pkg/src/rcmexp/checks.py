"""Named invariant checks run by ``rcm verify``.

Each check returns a CheckResult.  Details are built from exact values or
fixed-format floats only, so reports are byte-identical across runs.
"""
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from . import gas as gasmod
from . import subexp, supexp
from .corpus import corpus
from .graphcore import FREE, WIRED, SpecError, edge_boundary, enumerate_connected_vertex_sets, zd_box
from .oracle import census, cluster_count

PAIRS = [(Fraction(1, 7), Fraction(1, 2)), (Fraction(1, 3), Fraction(3)),
         (Fraction(2, 5), Fraction(1, 3)), (Fraction(9, 10), Fraction(2)),
         (Fraction(3, 4), Fraction(5, 2))]


@dataclass
class CheckResult:
    name: str
    ok: bool
    cases: int
    detail: str = ""


def _complete(n):
    return [[i != j for j in range(n)] for i in range(n)]


def check_ursell():
    bad = []
    for n in range(1, 7):
        expect = (-1) ** (n - 1) * math.factorial(n - 1)
        got = gasmod.ursell(_complete(n), cap=7)
        brute = gasmod.ursell_bruteforce(_complete(n))
        if not got == brute == expect:
            bad.append(f"n={n}: got {got}, brute {brute}, expected {expect}")
    # two disjoint pairs: incompatibility graph disconnected
    adj = [[False, True, False, False], [True, False, False, False],
           [False, False, False, True], [False, False, True, False]]
    if gasmod.ursell(adj) != 0:
        bad.append("disconnected incompatibility graph gave a nonzero coefficient")
    return CheckResult("ursell_closed_forms", not bad, 7, "; ".join(bad))


def check_connected_spanning():
    g = zd_box([4, 4], 0)
    bad = 0
    cases = 0
    for R in enumerate_connected_vertex_sets(g, 0, 2, 6, region=g.window):
        n, edges = subexp._shape(g, R)
        cases += 1
        if list(subexp.connected_spanning_poly(n, edges)) != list(
                subexp.connected_spanning_bruteforce(n, edges)):
            bad += 1
    return CheckResult("connected_spanning_recursion", bad == 0, cases,
                       f"{bad} mismatches" if bad else "")


def check_enumeration():
    bad = []
    cases = 0
    for nm, g in corpus():
        for root in g.window_vertices:
            cap = min(len(g.window), 10)
            fast = set(enumerate_connected_vertex_sets(g, root, 1, cap, cap=10))
            slow = set()
            others = [v for v in g.window_vertices if v != root]
            for k in range(len(others) + 1):
                for rest in itertools.combinations(others, k):
                    S = frozenset((root,) + rest)
                    if g.is_connected_set(S):
                        slow.add(S)
            cases += 1
            if fast != slow:
                bad.append(f"{nm} root {g.name_of(root)}")
    return CheckResult("connected_set_enumeration", not bad, cases, "; ".join(bad))


def check_normalization_and_sandwich():
    bad = []
    cases = 0
    for nm, g in corpus():
        c = census(g)
        for bc in (FREE, WIRED):
            cases += 1
            if c.weight_sum(Fraction(2, 7), Fraction(1), bc) != 1:
                bad.append(f"{nm} {bc}: Z != 1 at q = 1")
        for p, q in PAIRS:
            cases += 1
            z0 = c.weight_sum(p, q, FREE)
            z1 = c.weight_sum(p, q, WIRED)
            top = z1 * q ** c.n_boundary
            ok = (z1 <= z0 <= top) if q >= 1 else (z1 >= z0 >= top)
            if not ok:
                bad.append(f"{nm} p={p} q={q}: sandwich fails")
    return CheckResult("normalization_and_sandwich", not bad, cases, "; ".join(bad))


def check_cluster_count_bounds():
    bad = []
    cases = 0
    for nm, g in corpus():
        if len(g.window_edges) > 7:
            continue
        we = g.window_edges
        nb = len(g.window_boundary)
        for mask in range(1 << len(we)):
            open_edges = [e for j, e in enumerate(we) if mask >> j & 1]
            k0 = cluster_count(g, open_edges, FREE)
            k1 = cluster_count(g, open_edges, WIRED)
            cases += 1
            if not k1 <= k0 <= k1 + nb:
                bad.append(f"{nm} config {mask}")
    return CheckResult("cluster_count_bounds", not bad, cases, "; ".join(bad[:5]))


def check_sub_identity():
    bad = []
    cases = 0
    for nm, g in corpus():
        c = census(g)
        ne = len(g.window_edges)
        for p, q in PAIRS:
            for bc in (FREE, WIRED):
                ctx = subexp.SubContext.from_params(g, p, q, bc)
                xi = subexp.xi_packing(g, ctx)
                nv = len(g.window) if bc == FREE else len(g.window_interior)
                cases += 1
                if q ** nv * (1 - p) ** ne * xi != c.weight_sum(p, q, bc):
                    bad.append(f"{nm} p={p} q={q} {bc}")
    return CheckResult("subcritical_repartition", not bad, cases, "; ".join(bad))


def identity_range(g, bc):
    """Cut-set range used for the exact large-p identity on a small window."""
    return max(1, supexp.cutset_constant(g, walls=bc == FREE)[0])


def check_sup_identity():
    bad = []
    cases = 0
    for nm, g in corpus():
        c = census(g)
        ne = len(g.window_edges)
        for bc in (FREE, WIRED):
            R = identity_range(g, bc)
            for p, q in PAIRS:
                ctx = supexp.SupContext.from_params(g, p, q, bc, R=R, allow_tree=True)
                psi = supexp.psi_packing(g, ctx)
                z = c.weight_sum(p, q, bc)
                cases += 1
                if p ** ne * psi != (z if bc == WIRED else z / q):
                    bad.append(f"{nm} p={p} q={q} {bc} R={R}")
    return CheckResult("supercritical_repartition", not bad, cases, "; ".join(bad))


def check_activity_sums():
    g = zd_box([15, 15], 6)
    x = g.center()
    bad = []
    cases = 0
    for q in (Fraction(1, 2), Fraction(1), Fraction(2)):
        p = Fraction(1, 100)
        for bc in (FREE, WIRED):
            ctx = subexp.SubContext.from_params(g, p, q, bc)
            for n in range(2, 6):
                total, bound, ok = subexp.activity_sum_check(g, ctx, x, n)
                cases += 1
                if not ok:
                    bad.append(f"q={q} {bc} n={n}: {float(total):.6e} > {bound:.6e}")
    return CheckResult("activity_sum_bound", not bad, cases, "; ".join(bad))


def check_sup_activity_bound():
    g = zd_box([5, 5], 1)
    bad = []
    cases = 0
    for q in (Fraction(1, 2), Fraction(2)):
        for bc in (FREE, WIRED):
            ctx = supexp.SupContext.from_params(g, Fraction(19, 20), q, bc, R=1)
            worst = supexp.activity_bound_check(g, ctx, 6)
            cases += 1
            if worst > 1:
                bad.append(f"q={q} {bc}: ratio {worst}")
    return CheckResult("dual_animal_activity_bound", not bad, cases, "; ".join(bad))


def check_fences():
    g = zd_box([17, 17], 5)
    x = g.center()
    fences = supexp.enumerate_fences(g, x, 8)
    bad = []
    for f in fences:
        ok, rec = supexp.is_fence(g, f.gamma)
        if not ok or rec.interior != f.interior:
            bad.append(f"not a fence: {sorted(f.gamma)}")
            continue
        if edge_boundary(g, f.interior) != f.gamma:
            bad.append(f"boundary mismatch: {sorted(f.gamma)}")
        for v in f.interior:
            if not supexp.fence_crosses_rays(g, f, v):
                bad.append(f"ray escapes fence {sorted(f.gamma)} from {g.name_of(v)}")
    n4 = sum(1 for f in fences if len(f.gamma) == 4)
    if n4 != 1:
        bad.append(f"{n4} fences of size 4")
    return CheckResult("fence_invariants", not bad, len(fences), "; ".join(bad[:5]))


def check_example_grid():
    g = zd_box([2, 3], 0)
    p, q = Fraction(9, 10), Fraction(1, 3)
    ctx = supexp.SupContext.from_params(g, p, q, WIRED, R=1)
    lhs = p ** len(g.window_edges) * supexp.psi_packing(g, ctx)
    rhs = census(g).weight_sum(p, q, WIRED)
    return CheckResult("wired_identity_2x3", lhs == rhs, 1, "" if lhs == rhs else f"{lhs} != {rhs}")


SUITE = [("ursell_closed_forms", check_ursell),
         ("connected_spanning_recursion", check_connected_spanning),
         ("connected_set_enumeration", check_enumeration),
         ("normalization_and_sandwich", check_normalization_and_sandwich),
         ("cluster_count_bounds", check_cluster_count_bounds),
         ("subcritical_repartition", check_sub_identity),
         ("supercritical_repartition", check_sup_identity),
         ("wired_identity_2x3", check_example_grid),
         ("activity_sum_bound", check_activity_sums),
         ("dual_animal_activity_bound", check_sup_activity_bound),
         ("fence_invariants", check_fences)]


def run_suite(names=None):
    known = [n for n, _ in SUITE]
    if names:
        unknown = [n for n in names if n not in known]
        if unknown:
            raise SpecError(f"unknown check(s): {', '.join(unknown)}")
    return [fn() for n, fn in SUITE if not names or n in names]
