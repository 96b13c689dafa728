"""Large-p expansion over fences and dual animals.

With lambda = (1-p)/p the closed edge set C of a configuration splits into
R-connected components (dual animals).  Wired: p^{-|E_N|} Z^1 equals the gas
of pairwise far-apart dual animals with activity lambda^{|S|} q^{n_S}, where
n_S counts the components of (V_N, E_N - S) that avoid the window boundary.
Free: the same with q^{n~_S}, where n~_S = #components(V_N, E_N - S) - 1 for
animals within distance R of the boundary, and the result is p^{-|E_N|} Z^0 / q.

Host-level operations (fences, f_G) treat the host boundary as infinity;
window-level ones treat the window boundary as infinity.
"""
import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np

from . import gas as gasmod
from .graphcore import (EDGE_CAP, FREE, VERTEX_CAP, WIRED, CapError, InvariantError,
                        MarginError, PreconditionError, diameter, edge_boundary,
                        edge_neighbors_within, edge_support, enumerate_connected_vertex_sets,
                        enumerate_r_connected_edge_sets, grow_connected, r_components,
                        scalar_mode, cut_set_function)
from .subexp import Certificate, ExpansionResult

KP_A_GRID = np.linspace(1e-3, 6.0, 1200)


@dataclass(frozen=True)
class Fence:
    gamma: frozenset
    interior: frozenset
    interior_edges: frozenset


def _components(n_verts, edges, removed, verts=None):
    """Union-find components over verts (default all) using edges not in removed."""
    verts = range(n_verts) if verts is None else verts
    parent = {v: v for v in verts}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for i, (a, b) in edges:
        if i in removed or a not in parent or b not in parent:
            continue
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    return {v: find(v) for v in verts}


# host-level fences

def _host_labels(g, removed):
    return _components(len(g.names), list(enumerate(g.edges)), set(removed))


def _finite_components(g, removed):
    lab = _host_labels(g, removed)
    inf = {lab[b] for b in g.host_boundary}
    comps = {}
    for v, r in lab.items():
        if r not in inf:
            comps.setdefault(r, set()).add(v)
    return [frozenset(c) for c in comps.values()]


def _complement_reaches_infinity(g, I):
    I = set(I)
    seen = set(b for b in g.host_boundary if b not in I)
    dq = deque(seen)
    while dq:
        v = dq.popleft()
        for u in g.adj[v]:
            if u not in I and u not in seen:
                seen.add(u)
                dq.append(u)
    return len(seen) + len(I) == len(g.names)


def _fence_from_interior(g, I):
    gamma = edge_boundary(g, I)
    inner = frozenset(e for e in range(len(g.edges))
                      if g.edges[e][0] in I and g.edges[e][1] in I)
    return Fence(gamma, frozenset(I), inner)


def enumerate_fences(g, anchor, max_size, cap=VERTEX_CAP, edge_anchor=False):
    """Fences with |gamma| <= max_size around a vertex (or through an edge).

    Interiors are enumerated as connected sets of at most max_size vertices,
    which covers every fence of that size on Z^d and on regular trees.
    """
    if not g.host_boundary:
        raise MarginError("host has no boundary standing in for infinity")
    n_int = min(max_size, cap)
    if edge_anchor:
        u, v = g.edges[anchor]
        roots = [(u, v), (v, u)]
    else:
        roots = [(anchor, None)]
    hb = sorted(g.host_boundary)
    out = {}
    for r, banned in roots:
        if int(g.distances[r, hb].min()) < n_int:
            raise MarginError("fence interiors around the anchor could touch the host boundary")
        region = set(range(len(g.names))) - set(g.host_boundary)
        if banned is not None:
            region.discard(banned)
        for I in enumerate_connected_vertex_sets(g, r, 1, n_int, cap=cap, region=region):
            gamma = edge_boundary(g, I)
            if len(gamma) > max_size:
                continue
            if not _complement_reaches_infinity(g, I):
                continue
            if not all(e in set(g.window_edges) for e in gamma):
                raise MarginError("fence leaves the window")
            f = _fence_from_interior(g, I)
            out[tuple(sorted(gamma))] = f
    return [out[k] for k in sorted(out, key=lambda k: (len(k), k))]


def is_fence(g, gamma):
    gamma = frozenset(gamma)
    wedges = set(g.window_edges)
    if not gamma <= wedges:
        raise MarginError("edge set leaves the window")
    finite = _finite_components(g, gamma)
    if len(finite) != 1:
        return False, None
    for e in gamma:
        if _finite_components(g, gamma - {e}):
            return False, None
    f = _fence_from_interior(g, finite[0])
    if f.gamma != gamma:
        return False, None
    return True, f


def fence_crosses_rays(g, f, x):
    """Every path from x to the host boundary uses an edge of the fence."""
    if x not in f.interior:
        raise PreconditionError("vertex is not inside the fence")
    lab = _host_labels(g, f.gamma)
    return all(lab[b] != lab[x] for b in g.host_boundary)


def surrounds(f, X):
    return frozenset(X) <= f.interior


def separates(g, f, X):
    """X does not lie in a single component of (V, E - gamma)."""
    X = list(X)
    lab = _host_labels(g, f.gamma)
    return len({lab[x] for x in X}) > 1


# window world: the window boundary plays the role of infinity

class Window:
    def __init__(self, g, R):
        self.g = g
        self.R = R
        self.verts = g.window_vertices
        self.vset = g.window
        self.edges = [(e, g.edges[e]) for e in g.window_edges]
        self.edge_set = frozenset(g.window_edges)
        self.boundary = g.window_boundary
        if not self.boundary:
            raise PreconditionError("window has no boundary vertices; wired counting is undefined")
        self._bnd_arr = np.array(sorted(self.boundary))

    def labels(self, removed):
        return _components(None, self.edges, removed, self.verts)

    def n_wired(self, S):
        """Components of (V_N, E_N - S) containing no boundary vertex."""
        lab = self.labels(S)
        inf = {lab[b] for b in self.boundary}
        return len(set(lab.values()) - inf)

    def n_total(self, S):
        return len(set(self.labels(S).values()))

    def near_boundary(self, S):
        supp = sorted(edge_support(self.g, S))
        return int(self.g.distances[np.ix_(supp, self._bnd_arr)].min()) <= self.R

    def n_free(self, S):
        if self.near_boundary(S):
            return self.n_total(S) - 1
        return self.n_wired(S)

    def finite_labels(self, S):
        lab = self.labels(S)
        inf = {lab[b] for b in self.boundary}
        return lab, inf


def minimal_fence_count(g, S, mode=WIRED, R=None):
    """n_S (wired) or n~_S (free) for an edge set inside the window."""
    S = frozenset(S)
    if not S <= set(g.window_edges):
        raise MarginError("edge set leaves the window")
    R = R or (g.cutset[0] if g.cutset else 1)
    w = Window(g, R)
    return w.n_wired(S) if mode == WIRED else w.n_free(S)


def wall_r_needed(g, edges_set):
    """Smallest R making an edge set R-connected (bottleneck spanning tree)."""
    es = sorted(edges_set)
    if len(es) <= 1:
        return 0
    D = g.distances
    ends = np.array([g.edges[e] for e in es])
    n = len(es)
    dm = np.minimum.reduce([D[np.ix_(ends[:, i], ends[:, j])] for i in (0, 1) for j in (0, 1)])
    best = dm[0].astype(float).copy()
    used = np.zeros(n, dtype=bool)
    used[0] = True
    best[0] = np.inf
    worst = 0
    for _ in range(n - 1):
        cand = np.where(used, np.inf, best)
        i = int(np.argmin(cand))
        worst = max(worst, int(cand[i]))
        used[i] = True
        best = np.minimum(best, dm[i])
    return worst


def cutset_constant(g, cap=16, walls=True):
    """Largest R needed over window fences (and walls) with interior of <= cap vertices.

    Fences are edge boundaries (inside E_N) of connected I avoiding the window
    boundary whose complement reaches it; walls are the same for I touching
    the boundary.  Returns (R_needed, complete) where complete means every
    interior fitted under the cap.
    """
    w = Window(g, 1)
    verts = w.verts
    n = len(verts)
    need = 0
    complete = cap >= n
    allowed = set(verts) if walls else set(verts) - w.boundary
    if not walls:
        complete = cap >= len(allowed)
    for v in sorted(allowed):
        region = {u for u in allowed if u >= v}
        for I in enumerate_connected_vertex_sets(g, v, 1, min(cap, n), cap=max(cap, n),
                                                 region=region):
            if len(I) == n:
                continue
            rest = w.vset - I
            lab = _components(None, w.edges, frozenset(), sorted(rest))
            roots = set(lab.values())
            ok_roots = {lab[b] for b in w.boundary if b in lab}
            if roots - ok_roots:
                continue
            wall = frozenset(e for e, (a, b) in w.edges if (a in I) != (b in I))
            need = max(need, wall_r_needed(g, wall))
    return need, complete


def verify_cutset(g, R, cap=16, walls=False):
    need, complete = cutset_constant(g, cap, walls)
    if need > R:
        raise InvariantError(f"declared cut-set constant {R} but a fence needs {need}")
    return need, complete


# context

@dataclass
class SupContext:
    lam: object
    q: object
    bc: str
    R: int
    C: float
    delta: int
    p: object = None

    @property
    def delta_p(self):
        return float(self.lam) * max(float(self.q), 1.0)

    @property
    def A(self):
        return max(2 * self.C, 1) * self.delta ** (2 * self.R)

    @classmethod
    def from_params(cls, g, p, q, bc=WIRED, R=None, C=None, allow_tree=False):
        scalar_mode(p, q)
        if not 0 < p <= 1 or q <= 0:
            raise PreconditionError("need 0 < p <= 1 and q > 0")
        if bc not in (FREE, WIRED):
            raise PreconditionError(f"unknown boundary condition {bc!r}")
        if g.template.get("template") == "tree" and not allow_tree:
            raise PreconditionError("trees are not cut-set bounded")
        if R is None:
            if bc == FREE:
                R = max(1, cutset_constant(g, walls=True)[0])
            else:
                R = g.cutset[0] if g.cutset else max(1, cutset_constant(g, walls=False)[0])
        if C is None:
            C = g.cutset[1] if g.cutset else 1.0
        return cls((1 - p) / p, q, bc, int(R), float(C), g.max_degree, p)


def kp_certificate(ctx):
    val = math.e * ctx.A * (1 + ctx.delta ** (ctx.R + 1)) * ctx.delta_p
    return Certificate("kotecky-preiss", val <= 1, a_value=1.0, delta_p=ctx.delta_p,
                       A=ctx.A, threshold_value=val)


def critical_delta(A, delta, R):
    return 1.0 / (math.e * A * (1 + delta ** (R + 1)))


def critical_p_sup(q, A, delta, R):
    """p above which e A (1 + Delta^{R+1}) delta_p <= 1."""
    d = critical_delta(A, delta, R)
    m = max(float(q), 1.0)
    return m / (m + d)


# the gas of dual animals and X-polymers

class SupGas(gasmod.PolymerGas):
    """Polymers are tuples of edge sets: one part for a dual animal, several
    far-apart parts each enclosing part of X for a multi-part X-polymer."""

    def __init__(self, g, ctx, X=None, max_size=EDGE_CAP, cap=EDGE_CAP):
        self.g = g
        self.ctx = ctx
        self.win = Window(g, ctx.R)
        self.region = self.win.edge_set
        self.cap = cap
        self.max_size = max_size
        self.X = frozenset(X) if X else frozenset()
        self._zero = 0 * ctx.lam
        self._edge_nbrs = edge_neighbors_within(g, ctx.R, self.region)
        self._act = {}
        self._xrel = {}
        self._supp = {}
        self._nb = {}
        self._near = {}
        self.ursell_cap = 16
        self.x_polymers = self._build_x_polymers() if self.X else []

    def zero(self):
        return self._zero

    def size(self, P):
        return sum(len(s) for s in P)

    def key(self, P):
        return (tuple(tuple(sorted(s)) for s in P),)

    def support(self, P):
        if P not in self._supp:
            self._supp[P] = np.array(sorted(set().union(*[edge_support(self.g, s) for s in P])))
        return self._supp[P]

    def dist(self, P, Q):
        return int(self.g.distances[np.ix_(self.support(P), self.support(Q))].min())

    def part_relevant(self, S):
        if not self.X:
            return False
        if S not in self._xrel:
            lab, inf = self.win.finite_labels(S)
            self._xrel[S] = any(lab[x] not in inf for x in self.X)
        return self._xrel[S]

    def relevant(self, P):
        return all(self.part_relevant(s) for s in P)

    def part_activity(self, S):
        n = self.win.n_wired(S) if self.ctx.bc == WIRED else self.win.n_free(S)
        return self.ctx.lam ** len(S) * self.ctx.q ** n

    def activity(self, P):
        if P not in self._act:
            val = self._zero + 1
            for s in P:
                val = val * self.part_activity(s)
            self._act[P] = val
        return self._act[P]

    def incompatible(self, P, Q):
        if P == Q:
            return True
        if self.relevant(P) and self.relevant(Q):
            return True
        return self.dist(P, Q) <= self.ctx.R

    def _near_edges(self, P):
        supp = self.support(P)
        D = self.g.distances
        out = []
        for e in sorted(self.region):
            a, b = self.g.edges[e]
            if min(D[a, supp].min(), D[b, supp].min()) <= self.ctx.R:
                out.append(e)
        return out

    def _animals_touching(self, edges, max_size):
        out = []
        region = set(self.region)
        for e in edges:
            out.extend(enumerate_r_connected_edge_sets(
                self.g, e, self.ctx.R, 1, max_size, cap=self.cap, region=region,
                nbrs=self._edge_nbrs))
            region.discard(e)
        return out

    def neighbors(self, P, max_size):
        if max_size < 1:
            return []
        k = (P, max_size)
        if k not in self._nb:
            res = {}
            for S in self._animals_touching(self._near_edges(P), max_size):
                Q = (S,)
                if Q != P:
                    res[Q] = None
            for Q in self.x_polymers:
                if Q != P and len(Q) > 1 and self.size(Q) <= max_size and self.incompatible(P, Q):
                    res[Q] = None
            if self.relevant(P):
                for Q in self.x_polymers:
                    if Q != P and self.size(Q) <= max_size:
                        res[Q] = None
            self._nb[k] = sorted(res, key=self.key)
        return self._nb[k]

    def _build_x_polymers(self):
        # every enclosing animal crosses a shortest path from x to the window boundary
        g = self.g
        D = g.distances
        bnd = sorted(self.win.boundary)
        ray_edges = set()
        for x in sorted(self.X):
            if x in self.win.boundary:
                raise PreconditionError("X must lie in the window interior")
            v = x
            target = min(bnd, key=lambda b: (D[x, b], b))
            while v != target:
                nxt = min((u for u in g.adj[v] if u in self.win.vset and D[u, target] < D[v, target]))
                ray_edges.add(g.edge_between(v, nxt))
                v = nxt
        singles = {}
        for S in self._animals_touching(sorted(ray_edges), min(self.max_size, self.cap)):
            if self.part_relevant(S):
                singles[S] = None
        singles = sorted(singles, key=lambda s: tuple(sorted(s)))
        polys = [(s,) for s in singles]
        # multi-part: pairwise far-apart relevant animals
        sizes = {s: len(s) for s in singles}

        def extend(parts, start, used):
            for i in range(start, len(singles)):
                s = singles[i]
                if used + sizes[s] > self.max_size:
                    continue
                if all(self.dist((s,), (t,)) > self.ctx.R for t in parts):
                    new = parts + [s]
                    if len(new) >= 2:
                        polys.append(tuple(sorted(new, key=lambda z: tuple(sorted(z)))))
                    extend(new, i + 1, used + sizes[s])

        extend([], 0, 0)
        polys = sorted(set(polys), key=self.key)
        return polys

    def roots(self, max_size):
        """X-polymers P with X inside one component of (V_N, E_N - P) avoiding the boundary."""
        out = []
        for P in self.x_polymers:
            if self.size(P) > max_size:
                continue
            if root_condition(self.win, P, self.X):
                out.append(P)
        return out


def root_condition(win, P, X):
    removed = frozenset().union(*P)
    lab, inf = win.finite_labels(removed)
    labs = {lab[x] for x in X}
    return len(labs) == 1 and not labs & inf


# truncated series and bounds

def _kp_options(ctx):
    """(a, t, w) with (1 + Delta^{R+1}) w / (1 - w) <= a where w = A delta t e^a."""
    d = ctx.delta_p
    if d == 0:
        return None
    c = 1 + ctx.delta ** (ctx.R + 1)
    a = KP_A_GRID
    w = a / (a + c)
    t = w / (ctx.A * d * np.exp(a))
    ok = t >= 1
    if not ok.any():
        return None
    return a[ok], t[ok], w[ok]


def sup_tail(ctx, K, m_x):
    """Omitted part of the rooted series, given the size counting bound A^n."""
    if ctx.delta_p == 0:
        return 0.0
    opts = _kp_options(ctx)
    if opts is None:
        return None
    a, t, w = opts
    with np.errstate(over="ignore", divide="ignore"):
        val = t ** (-(K + 1.0)) * w ** m_x / (1 - w)
    return float(np.min(val))


def sup_decay_bound(ctx, fg):
    return (1 + ctx.delta ** (-ctx.R - 1)) * (ctx.A * math.e * ctx.delta_p) ** fg


def _result(by, K, tail, cert, zero):
    total = zero
    rows = []
    for s in sorted(by):
        total = total + by[s]
        rows.append((s, by[s], total))
    return ExpansionResult(total, K, tail, cert, rows, {})


def truncated_phi_f(g, ctx, X, K, cap=EDGE_CAP, gas=None):
    X = frozenset(X)
    if not X or not X <= g.window_interior:
        raise PreconditionError("X must lie in the window interior")
    if K > cap:
        raise CapError(f"K={K} exceeds the edge-set cap {cap}")
    gas = gas or SupGas(g, ctx, X, max_size=K, cap=cap)
    cert = kp_certificate(ctx)
    by = {}
    roots = gas.roots(K)
    for P in roots:
        rho = gas.activity(P)
        if rho == 0:
            continue
        part = gasmod.rooted_sum(gas, P, K - gas.size(P))
        for s, v in part.items():
            by[s] = by.get(s, gas.zero()) + rho * v
    res = _result(by, K, None, cert, gas.zero())
    m_x = min((gas.size(P) for P in roots), default=K + 1)
    res.extra["smallest_root"] = m_x
    res.extra["root_polymers"] = len(roots)
    if cert.threshold_ok:
        res.tail_bound = sup_tail(ctx, K, m_x)
    return res


def theta_series(g, ctx, x0, K, cap=EDGE_CAP):
    phi = truncated_phi_f(g, ctx, [x0], K, cap=cap)
    one = ctx.lam * 0 + 1
    res = ExpansionResult(one - phi.value, K, phi.tail_bound, phi.certificate,
                          [(s, -v, one - c) for s, v, c in phi.by_size], dict(phi.extra))
    res.extra["leading_scale"] = (1 - float(ctx.p)) ** g.degree[x0]
    return res


def finite_connectivity_bound(g, ctx, X, cap=VERTEX_CAP):
    """Decay bound (1 + Delta^{-R-1}) (A e delta_p)^{f_G(diam X)}."""
    fg = cut_set_function(g, diameter(g, X), cap=cap)
    return sup_decay_bound(ctx, fg), fg


def counting_bound_check(g, ctx, X, n, cap=EDGE_CAP):
    """Largest count of size-n dual animals through an edge plus size-n X-polymers, against A^n."""
    if g.template.get("template") == "tree":
        return {"eligible": False, "reason": "trees are not cut-set bounded"}
    if n > cap:
        raise CapError(f"size {n} exceeds cap {cap}")
    gas = SupGas(g, ctx, X, max_size=n, cap=cap)
    nbrs = gas._edge_nbrs
    best = 0
    for e in g.window_edges:
        c = len(enumerate_r_connected_edge_sets(g, e, ctx.R, n, n, cap=cap, nbrs=nbrs))
        best = max(best, c)
    xcount = sum(1 for P in gas.x_polymers if gas.size(P) == n)
    bound = ctx.A ** n
    return {"eligible": True, "animals": best, "x_polymers": xcount, "count": best + xcount,
            "bound": bound, "ok": best + xcount <= bound,
            "animals_ok": best <= bound, "x_polymers_ok": xcount <= bound}


def activity_bound_check(g, ctx, max_size):
    """Largest |rho(S)| / delta_p^{|S|} over window dual animals up to max_size.

    Computed in the scalar mode of the context, so the ratio is exact for
    rational parameters.
    """
    gas = SupGas(g, ctx, None, max_size=max_size)
    dp = abs(ctx.lam) * max(ctx.q, 1)
    worst = 0 * dp
    region = set(gas.region)
    for e in sorted(gas.region):
        for S in enumerate_r_connected_edge_sets(g, e, ctx.R, 1, max_size, cap=max(max_size, 1),
                                                 region=region, nbrs=gas._edge_nbrs):
            r = abs(gas.part_activity(S)) / dp ** len(S)
            worst = max(worst, r)
        region.discard(e)
    return worst


def pressure_density(g, ctx, e, K, cap=EDGE_CAP, gas=None):
    """Share of edge e in the truncated ln Psi (clusters of total size <= K)."""
    if e not in set(g.window_edges):
        raise PreconditionError("edge outside the window")
    gas = gas or SupGas(g, ctx, None, max_size=K, cap=cap)
    exact = isinstance(ctx.lam, (Fraction, int))
    by = {}
    for S in enumerate_r_connected_edge_sets(g, e, ctx.R, 1, K, cap=cap, nbrs=gas._edge_nbrs):
        P = (S,)
        rho = gas.activity(P)

        def w(polys, mults):
            n = sum(mults)
            return Fraction(1, n) if exact else 1.0 / n

        part = gasmod.rooted_sum(gas, P, K - len(S), weight=w)
        for s, v in part.items():
            by[s] = by.get(s, gas.zero()) + rho * v / len(S)
    return _result(by, K, None, kp_certificate(ctx), gas.zero())


def log_psi(g, ctx, K, cap=EDGE_CAP):
    """Truncated ln Psi over dual animals (no X)."""
    gas = SupGas(g, ctx, None, max_size=K, cap=cap)
    polys = []
    region = set(gas.region)
    for e in sorted(gas.region):
        polys.extend((S,) for S in enumerate_r_connected_edge_sets(
            g, e, ctx.R, 1, K, cap=cap, region=region, nbrs=gas._edge_nbrs))
        region.discard(e)
    by = gasmod.log_partition(gas, polys, K)
    return _result(by, K, None, kp_certificate(ctx), gas.zero())


# exact references

def psi_packing(g, ctx, graded=False):
    """Sum over families of pairwise far-apart dual animals, without cluster expansion."""
    win = Window(g, ctx.R)
    edges = sorted(win.edge_set)
    nbrs = edge_neighbors_within(g, ctx.R, win.edge_set)
    zero = 0 * ctx.lam
    memo = {}
    act = {}

    def rho(S):
        if S not in act:
            n = win.n_wired(S) if ctx.bc == WIRED else win.n_free(S)
            act[S] = ctx.lam ** len(S) * ctx.q ** n if not graded else ctx.q ** n
        return act[S]

    def add(a, b, shift, scale):
        n = max(len(a), len(b) + shift)
        out = [zero] * n
        for i, v in enumerate(a):
            out[i] += v
        for i, v in enumerate(b):
            out[i + shift] += v * scale
        return out

    def rec(U):
        if U in memo:
            return memo[U]
        if not U:
            val = [zero + 1] if graded else zero + 1
            memo[U] = val
            return val
        e = min(U)
        val = rec(U - {e})
        sets = grow_connected(e, nbrs, len(U), lambda f: f in U)
        for S in sets:
            S = frozenset(S)
            blocked = set(S)
            for f in S:
                blocked.update(nbrs(f))
            sub = rec(U - blocked)
            if graded:
                val = add(val, sub, len(S), rho(S))
            else:
                val = val + rho(S) * sub
        memo[U] = val
        return val

    return rec(frozenset(edges))
