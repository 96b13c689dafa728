"""Exact finite-volume quantities by summing over every edge configuration.

Configurations of the window edges are integers whose bit j is the state of
window edge j (1 = open), visited in binary counting order.  Each chunk of
configurations is labelled by vectorized minimum-label propagation; the
result is an integer census of (open edges, cluster counts, events), from
which any (p, q) is evaluated exactly.
"""
import math
import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .graphcore import FREE, WIRED, CapError, PreconditionError, scalar_mode

EDGE_CAP = 22
CHUNK_BITS = 16


@dataclass(frozen=True)
class ModelParams:
    p: object
    q: object
    bc: str = FREE

    def __post_init__(self):
        mode = scalar_mode(self.p, self.q)
        if self.bc not in (FREE, WIRED):
            raise PreconditionError(f"unknown boundary condition {self.bc!r}")
        if not 0 <= self.p <= 1:
            raise PreconditionError("p must lie in [0, 1]")
        if self.q <= 0:
            raise PreconditionError("q must be positive")
        object.__setattr__(self, "mode", mode)

    @property
    def exact(self):
        return self.mode == "exact"


def thread_count(threads=None):
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("RCM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


class _Layout:
    """Window in local indexing."""

    def __init__(self, g):
        self.verts = list(g.window_vertices)
        loc = {v: i for i, v in enumerate(self.verts)}
        self.loc = loc
        self.edges = [(loc[g.edges[e][0]], loc[g.edges[e][1]]) for e in g.window_edges]
        self.nv = len(self.verts)
        self.ne = len(self.edges)
        self.boundary = np.zeros(self.nv, dtype=bool)
        for v in g.window_boundary:
            self.boundary[loc[v]] = True


def _labels(layout, configs):
    """Component label (smallest local vertex id) per vertex, shape (vertices, configs)."""
    n = len(configs)
    L = np.repeat(np.arange(layout.nv, dtype=np.int16)[:, None], n, axis=1)
    cols = np.arange(n)
    opens = [((configs >> j) & 1).astype(bool) for j in range(layout.ne)]
    active = [(u, v, opens[j]) for j, (u, v) in enumerate(layout.edges) if opens[j].any()]
    sweep = 0
    while True:
        changed = False
        order = active if sweep % 2 == 0 else active[::-1]
        for u, v, m in order:
            a = L[u]
            b = L[v]
            mn = np.where(m, np.minimum(a, b), a)
            if not changed and not np.array_equal(mn, a):
                changed = True
            L[u] = mn
            mn = np.where(m, np.minimum(mn, b), b)
            if not changed and not np.array_equal(mn, b):
                changed = True
            L[v] = mn
        L = L[L, cols]
        sweep += 1
        if not changed:
            break
    return L, opens, cols


def _chunk_census(layout, X_list, lo, hi):
    configs = np.arange(lo, hi, dtype=np.int64)
    n = len(configs)
    L, opens, cols = _labels(layout, configs)
    n_open = np.zeros(n, dtype=np.int64)
    nonisolated = np.zeros((layout.nv, n), dtype=bool)
    for j, (u, v) in enumerate(layout.edges):
        o = opens[j]
        n_open += o
        nonisolated[u] |= o
        nonisolated[v] |= o
    s = nonisolated.sum(axis=0)
    root = L == np.arange(layout.nv, dtype=np.int16)[:, None]
    k0 = root.sum(axis=0)
    touched = np.zeros((layout.nv, n), dtype=bool)
    for b in np.flatnonzero(layout.boundary):
        touched[L[b], cols] = True
    k1 = (root & ~touched).sum(axis=0)
    key = n_open
    key = key * 64 + k0
    key = key * 64 + k1
    key = key * 64 + s
    for X in X_list:
        lab0 = L[X[0]]
        same = np.ones(n, dtype=bool)
        for x in X[1:]:
            same &= L[x] == lab0
        if len(X) == 1:
            conn = same & nonisolated[X[0]]
        else:
            conn = same
        fconn = same & ~touched[lab0, cols]
        key = key * 4 + conn * 2 + fconn
    vals, counts = np.unique(key, return_counts=True)
    return dict(zip(vals.tolist(), counts.tolist()))


class Census:
    """Integer counts of configurations keyed by (open, k0, k1, s, events)."""

    def __init__(self, layout, X_list, counts):
        self.nv = layout.nv
        self.ne = layout.ne
        self.n_interior = int((~layout.boundary).sum())
        self.n_boundary = int(layout.boundary.sum())
        self.X_list = X_list
        self.rows = []
        nx = len(X_list)
        for key in sorted(counts):
            c = counts[key]
            flags = []
            k = key
            for _ in range(nx):
                flags.append(k % 4)
                k //= 4
            flags.reverse()
            s = k % 64
            k //= 64
            k1 = k % 64
            k //= 64
            k0 = k % 64
            n_open = k // 64
            self.rows.append((n_open, k0, k1, s, tuple(flags), c))

    def x_slot(self, X):
        key = tuple(sorted(X))
        for i, Y in enumerate(self.X_list):
            if tuple(sorted(Y)) == key:
                return i
        raise PreconditionError("vertex set not part of this census")

    def weight_sum(self, p, q, bc, select=None):
        """Sum of p^open (1-p)^closed q^k over rows accepted by select(flags)."""
        acc = Counter()
        for n_open, k0, k1, s, flags, c in self.rows:
            if select is not None and not select(flags):
                continue
            acc[(n_open, k0 if bc == FREE else k1)] += c
        return _evaluate(acc, p, q, self.ne)

    def graded(self, bc, select=None):
        """Counts keyed by (open, k, s) for generating-function checks."""
        acc = Counter()
        for n_open, k0, k1, s, flags, c in self.rows:
            if select is not None and not select(flags):
                continue
            acc[(n_open, k0 if bc == FREE else k1, s)] += c
        return acc


def _evaluate(acc, p, q, ne):
    exact = isinstance(p, Fraction) or isinstance(p, int)
    one = Fraction(1) if exact else 1.0
    total = 0 * one
    pp = [one]
    qp = {}
    for _ in range(ne):
        pp.append(pp[-1] * p)
    cp = [one]
    for _ in range(ne):
        cp.append(cp[-1] * (one - p))
    for (n_open, k), c in sorted(acc.items()):
        if k not in qp:
            qp[k] = q ** k
        total += c * pp[n_open] * cp[ne - n_open] * qp[k]
    return total


_CACHE = {}


def census(g, X_list=(), cap=EDGE_CAP, threads=None):
    """Configuration census of the window of g, tracking the listed vertex sets."""
    layout = _Layout(g)
    if layout.ne > cap:
        raise CapError(f"window has {layout.ne} edges, above the cap {cap}")
    if layout.nv >= 64 or layout.ne >= 64:
        raise CapError("window too large for the census encoding")
    X_local = []
    for X in X_list:
        X = sorted(set(X))
        if not X:
            raise PreconditionError("empty vertex set")
        for x in X:
            if x not in layout.loc:
                raise PreconditionError("vertex outside the window")
        X_local.append(tuple(layout.loc[x] for x in X))
    ckey = (id(g), tuple(g.window_edges), tuple(X_local))
    if ckey in _CACHE and _CACHE[ckey][0] is g:
        return _CACHE[ckey][1]
    total = 1 << layout.ne
    step = 1 << min(CHUNK_BITS, layout.ne)
    bounds = [(lo, min(lo + step, total)) for lo in range(0, total, step)]
    nt = thread_count(threads)
    merged = Counter()
    if nt > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=nt) as pool:
            parts = list(pool.map(lambda b: _chunk_census(layout, X_local, *b), bounds))
    else:
        parts = [_chunk_census(layout, X_local, lo, hi) for lo, hi in bounds]
    for part in parts:
        merged.update(part)
    res = Census(layout, [tuple(sorted(X)) for X in X_list], merged)
    if len(_CACHE) > 16:
        _CACHE.clear()
    _CACHE[ckey] = (g, res)
    return res


# single-configuration reference

def cluster_count(g, open_edges, bc):
    """k^xi for one configuration given as a set of open window-edge indices."""
    w = g.window
    parent = {v: v for v in w}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for e in open_edges:
        if e not in set(g.window_edges):
            raise PreconditionError("open edge outside the window")
        a, b = g.edges[e]
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    roots = {find(v) for v in w}
    if bc == FREE:
        return len(roots)
    touched = {find(v) for v in g.window_boundary}
    return len(roots - touched)


# public quantities

def _check_params(params):
    if not isinstance(params, ModelParams):
        raise PreconditionError("expected ModelParams")


def partition_function(g, params, cap=EDGE_CAP, threads=None):
    _check_params(params)
    c = census(g, (), cap=cap, threads=threads)
    return c.weight_sum(params.p, params.q, params.bc)


def _interior_check(g, X, interior=True):
    if any(x not in g.window for x in X):
        raise PreconditionError("X must lie in the window")
    if interior and any(x in g.window_boundary for x in X):
        raise PreconditionError("X must lie in the window interior")


def connectivity_exact(g, params, X, cap=EDGE_CAP, threads=None):
    """P(some open animal contains X).

    Under free boundary conditions X may touch the window boundary.
    """
    _check_params(params)
    X = tuple(sorted(set(X)))
    _interior_check(g, X, interior=params.bc == WIRED)
    c = census(g, [X], cap=cap, threads=threads)
    i = c.x_slot(X)
    num = c.weight_sum(params.p, params.q, params.bc, lambda f: f[i] & 2)
    return num / c.weight_sum(params.p, params.q, params.bc)


def finite_connectivity_exact(g, params, X, cap=EDGE_CAP, threads=None):
    """P(X lies in one open cluster avoiding the window boundary); isolated x counts."""
    _check_params(params)
    X = tuple(sorted(set(X)))
    _interior_check(g, X)
    c = census(g, [X], cap=cap, threads=threads)
    i = c.x_slot(X)
    num = c.weight_sum(params.p, params.q, params.bc, lambda f: f[i] & 1)
    return num / c.weight_sum(params.p, params.q, params.bc)


def theta_exact(g, params, x0, cap=EDGE_CAP, threads=None):
    one = 1 if params.exact else 1.0
    return one - finite_connectivity_exact(g, params, [x0], cap=cap, threads=threads)


def frac_log(x):
    if isinstance(x, Fraction):
        if x <= 0:
            raise PreconditionError("log of a nonpositive value")
        return math.log(x.numerator) - math.log(x.denominator)
    return math.log(x)


def sandwich_check(g, p, q, cap=EDGE_CAP, threads=None):
    """Check Z^1 <= Z^0 <= Z^1 q^|boundary| for q >= 1 (reversed for q < 1)."""
    c = census(g, (), cap=cap, threads=threads)
    z0 = c.weight_sum(p, q, FREE)
    z1 = c.weight_sum(p, q, WIRED)
    top = z1 * q ** c.n_boundary
    if q >= 1:
        ok = z1 <= z0 <= top
    else:
        ok = z1 >= z0 >= top
    return {"Z_free": z0, "Z_wired": z1, "Z_wired_times_q_boundary": top, "ok": ok}


def pressure_finite(g, params, cap=EDGE_CAP, threads=None):
    """(1/|V_N|) ln Z, computed from the exact Z; returns (value, sandwich report)."""
    _check_params(params)
    c = census(g, (), cap=cap, threads=threads)
    z = c.weight_sum(params.p, params.q, params.bc)
    val = frac_log(z) / c.nv
    return val, sandwich_check(g, params.p, params.q, cap=cap, threads=threads)
