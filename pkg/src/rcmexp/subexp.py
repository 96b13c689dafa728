"""Small-p expansion: polymers are connected vertex sets of size >= 2.

With lambda = p/(1-p), (1-p)^{-|E_N|} Z^0 = q^{|V_N|} Xi^0 where Xi^0 is the
hard-core gas of disjoint polymers with activity
rho(R) = q^{-(|R|-1)} * sum over connected spanning subgraphs of lambda^{edges}.
Wired activities use q^{-|R & interior|} for polymers touching the boundary.
"""
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from . import gas as gasmod
from .graphcore import (FREE, VERTEX_CAP, WIRED, PreconditionError, diameter,
                        enumerate_connected_vertex_sets, scalar_mode, set_distance,
                        tree_distance)

A_VALUE = math.log(1 + 1 / math.sqrt(2))
CONNECTIVITY_FACTOR = 3 + 2 * math.sqrt(2)
DECAY_PREFACTOR = (7 + 5 * math.sqrt(2)) / (2 * math.sqrt(2) + 3)


@dataclass
class Certificate:
    kind: str
    threshold_ok: bool
    epsilon_p: float = None
    epsilon_star_p: float = None
    a_value: float = None
    delta_p: float = None
    A: float = None
    threshold_value: float = None

    def as_dict(self):
        return {k: v for k, v in self.__dict__.items() if v is not None}


@dataclass
class ExpansionResult:
    value: object
    K: int
    tail_bound: float
    certificate: Certificate
    by_size: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def has_tail(self):
        return self.tail_bound is not None


# activities

def _shape(g, R):
    verts = sorted(R)
    loc = {v: i for i, v in enumerate(verts)}
    edges = []
    for v in verts:
        for u in g.adj[v]:
            if u in loc and v < u:
                edges.append((loc[v], loc[u]))
    return len(verts), tuple(sorted(edges))


@lru_cache(maxsize=None)
def connected_spanning_poly(n, edges):
    """Coefficients c_k = number of connected spanning subgraphs with k edges.

    Subset recursion W_conn(U) = W_all(U) - sum_{S} W_conn(S) W_all(U - S) over
    proper S containing min(U), with W_all(U) = (1 + lambda)^{e(U)}.  Polynomials
    are packed into integers at lambda = 2^64, exact since every intermediate
    has nonnegative coefficients bounded by 2^|E|.
    """
    if n == 1:
        return (1,)
    shift = 64
    if len(edges) >= shift:
        raise PreconditionError("too many edges for the packed recursion")
    full = (1 << n) - 1
    masks = [(1 << a) | (1 << b) for a, b in edges]
    base = (1 << shift) + 1
    wall = [0] * (full + 1)
    for U in range(full + 1):
        e = sum(1 for m in masks if m & U == m)
        wall[U] = base ** e
    conn = [0] * (full + 1)
    for U in range(1, full + 1):
        low = U & -U
        rest = U ^ low
        total = wall[U]
        S = (rest - 1) & rest if rest else 0
        if rest:
            # S ranges over proper subsets of rest; Sp = low | S is a proper subset of U
            while True:
                Sp = low | S
                c = conn[Sp]
                if c:
                    total -= c * wall[U ^ Sp]
                if S == 0:
                    break
                S = (S - 1) & rest
        conn[U] = total
    val = conn[full]
    coeffs = []
    mask = (1 << shift) - 1
    while val:
        coeffs.append(val & mask)
        val >>= shift
    return tuple(coeffs) if coeffs else (0,)


def connected_spanning_bruteforce(n, edges):
    """Reference count of connected spanning subgraphs by edge count (2^|E| scan)."""
    counts = [0] * (len(edges) + 1)
    for mask in range(1 << len(edges)):
        parent = list(range(n))

        def find(v):
            while parent[v] != v:
                v = parent[v]
            return v

        k = 0
        comps = n
        for b, (i, j) in enumerate(edges):
            if mask >> b & 1:
                k += 1
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[ri] = rj
                    comps -= 1
        if comps == 1:
            counts[k] += 1
    while len(counts) > 1 and counts[-1] == 0:
        counts.pop()
    return tuple(counts)


def _poly_eval(coeffs, x):
    acc = 0 * x
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


@dataclass
class SubContext:
    lam: object
    q: object
    bc: str
    boundary: frozenset
    p: object = None

    @classmethod
    def from_params(cls, g, p, q, bc=FREE):
        scalar_mode(p, q)
        if p == 1:
            raise PreconditionError("p = 1 has no small-p expansion")
        if not 0 <= p < 1 or q <= 0:
            raise PreconditionError("need 0 <= p < 1 and q > 0")
        if bc not in (FREE, WIRED):
            raise PreconditionError(f"unknown boundary condition {bc!r}")
        return cls(p / (1 - p), q, bc, g.window_boundary, p)


def activity(g, ctx, R):
    R = frozenset(R)
    if len(R) < 2 or not g.is_connected_set(R):
        return 0 * ctx.lam
    n, edges = _shape(g, R)
    w = _poly_eval(connected_spanning_poly(n, edges), ctx.lam)
    if ctx.bc == WIRED and not R.isdisjoint(ctx.boundary):
        expo = len(R - ctx.boundary)
    else:
        expo = len(R) - 1
    return w / ctx.q ** expo


# the gas

class SubGas(gasmod.PolymerGas):
    def __init__(self, g, ctx, cap=VERTEX_CAP):
        self.g = g
        self.ctx = ctx
        self.cap = cap
        self._act = {}
        self._nb = {}
        self._zero = 0 * ctx.lam

    def zero(self):
        return self._zero

    def size(self, P):
        return len(P)

    def key(self, P):
        return tuple(sorted(P))

    def activity(self, P):
        if P not in self._act:
            self._act[P] = activity(self.g, self.ctx, P)
        return self._act[P]

    def incompatible(self, P, Q):
        return not P.isdisjoint(Q)

    def neighbors(self, P, max_size):
        if max_size < 2:
            return []
        k = (P, max_size)
        if k not in self._nb:
            out = []
            region = set(self.g.window)
            for v in sorted(P):
                out.extend(Q for Q in enumerate_connected_vertex_sets(
                    self.g, v, 2, max_size, cap=self.cap, region=region) if Q != P)
                region.discard(v)
            self._nb[k] = out
        return self._nb[k]

    def polymers(self, max_size):
        out = []
        region = set(self.g.window)
        for v in sorted(self.g.window):
            out.extend(enumerate_connected_vertex_sets(self.g, v, 2, max_size,
                                                       cap=self.cap, region=region))
            region.discard(v)
        return out


# certificates and tails

def epsilon_p(p, q, delta):
    """(epsilon_p, epsilon*_p) as floats."""
    p = float(p)
    q = float(q)
    if p >= 1:
        raise PreconditionError("p = 1 not allowed")
    if p == 0:
        return 0.0, 0.0
    star = math.e * delta / q * abs(math.log1p(-p)) / (1 - p) ** delta
    return max(star, q * star), star


def connectivity_certificate(p, q, delta):
    eps, star = epsilon_p(p, q, delta)
    val = CONNECTIVITY_FACTOR * eps
    return Certificate("connectivity", val <= 1, eps, star, A_VALUE, threshold_value=val)


def pressure_certificate(p, q, delta):
    eps, star = epsilon_p(p, q, delta)
    val = 2 * math.e ** 2 * star
    return Certificate("pressure", val < 1, eps, star, A_VALUE, threshold_value=val)


def critical_p(q, delta, kind="connectivity"):
    """p at which the chosen certificate becomes tight."""
    def f(p):
        eps, star = epsilon_p(p, q, delta)
        if kind == "connectivity":
            return CONNECTIVITY_FACTOR * eps - 1
        return 2 * math.e ** 2 * star - 1
    return brentq(f, 1e-15, 1 - 1e-9, xtol=1e-15)


_A_GRID = np.linspace(1e-3, 4.0, 800)


def _tilt_options(eps):
    """(a, u = t e^a, t) with sum_n eps^{n-1} u^n over n >= 2 equal to e^a - 1."""
    if eps <= 0:
        return None
    ea1 = np.expm1(_A_GRID)
    u = (-ea1 * eps + np.sqrt((ea1 * eps) ** 2 + 4 * eps * ea1)) / (2 * eps)
    t = u / np.exp(_A_GRID)
    ok = t >= 1
    if not ok.any():
        return None
    return _A_GRID[ok], u[ok], t[ok]


def phi_tail(eps, K, n0):
    """Bound on the omitted part of the rooted series when clusters are cut at total size K.

    Tilting every activity by t^{|R|} keeps the subset-gas convergence condition
    sum_{R ni x} |rho| e^{a|R|} <= e^a - 1 whenever u = t e^a solves
    u^2 eps / (1 - u eps) <= e^a - 1, so the omitted terms are bounded by
    t^{-(K+1)} sum_{n >= n0} eps^{n-1} u^n.
    """
    if eps == 0:
        return 0.0
    opts = _tilt_options(eps)
    if opts is None:
        return None
    a, u, t = opts
    with np.errstate(over="ignore", divide="ignore"):
        val = t ** (-(K + 1.0)) * u ** n0 * eps ** (n0 - 1) / (1 - u * eps)
    return float(np.min(val))


def log_tail(eps, K, nverts):
    if eps == 0:
        return 0.0
    opts = _tilt_options(eps)
    if opts is None:
        return None
    a, u, t = opts
    with np.errstate(over="ignore"):
        val = nverts * np.expm1(a) * t ** (-(K + 1.0))
    return float(np.min(val))


def decay_bound(eps, dtree):
    """Upper bound on the connectivity of X in terms of its tree distance."""
    return DECAY_PREFACTOR * ((1 + 1 / math.sqrt(2)) * eps) ** (dtree - 1)


# truncated series

def _delta(g):
    return g.max_degree


def _result(by_size, K, tail, cert, zero, extra=None):
    total = zero
    rows = []
    for s in sorted(by_size):
        total = total + by_size[s]
        rows.append((s, by_size[s], total))
    return ExpansionResult(total, K, tail, cert, rows, extra or {})


def pi_coefficient(g, ctx, R, K, gas=None, cap=VERTEX_CAP):
    """Pi(R) from clusters rooted at R whose other members total at most K."""
    gas = gas or SubGas(g, ctx, cap)
    R = frozenset(R)
    part = gasmod.rooted_sum(gas, R, K)
    cert = connectivity_certificate(ctx.p, ctx.q, _delta(g))
    by = {s - len(R): v for s, v in part.items()}
    res = _result(by, K, None, cert, gas.zero())
    if cert.threshold_ok:
        res.extra["bound"] = (1 + 1 / math.sqrt(2)) ** len(R)
        opts = _tilt_options(cert.epsilon_p)
        if cert.epsilon_p == 0:
            res.tail_bound = 0.0
        elif opts is not None:
            a, u, t = opts
            res.tail_bound = float(np.min(t ** (-(K + 1.0)) * np.exp(a * len(R))))
    return res


def truncated_phi(g, ctx, X, K, gas=None, cap=VERTEX_CAP):
    """Connectivity of X as sum over polymers R containing X of rho(R) Pi(R)."""
    X = frozenset(X)
    if not X or not X <= g.window:
        raise PreconditionError("X must be a nonempty subset of the window")
    gas = gas or SubGas(g, ctx, cap)
    delta = _delta(g)
    cert = connectivity_certificate(ctx.p, ctx.q, delta)
    by = {}
    x0 = min(X)
    for R in enumerate_connected_vertex_sets(g, x0, max(2, len(X)), max(2, min(K, cap)),
                                             cap=cap):
        if not X <= R or len(R) > K:
            continue
        rho = gas.activity(R)
        if rho == 0:
            continue
        part = gasmod.rooted_sum(gas, R, K - len(R))
        for s, v in part.items():
            by[s] = by.get(s, gas.zero()) + rho * v
    n0 = max(2, len(X), diameter(g, X) + 1)
    tail = phi_tail(cert.epsilon_p, K, n0) if cert.threshold_ok else None
    res = _result(by, K, tail, cert, gas.zero())
    dt = tree_distance(g, X)
    res.extra["tree_distance"] = dt
    if len(X) >= 2 and cert.threshold_ok:
        res.extra["decay_bound"] = decay_bound(cert.epsilon_p, dt)
    return res


def truncated_log_xi(g, ctx, K, gas=None, cap=VERTEX_CAP):
    gas = gas or SubGas(g, ctx, cap)
    if ctx.p == 0:
        cert = connectivity_certificate(0.0, ctx.q, _delta(g))
        return _result({}, K, 0.0, cert, gas.zero())
    polys = gas.polymers(min(K, cap))
    by = gasmod.log_partition(gas, polys, K)
    cert = connectivity_certificate(ctx.p, ctx.q, _delta(g))
    tail = log_tail(cert.epsilon_p, K, len(g.window)) if cert.threshold_ok else None
    return _result(by, K, tail, cert, gas.zero())


def activity_sum_check(g, ctx, x, n, cap=VERTEX_CAP):
    """Sum of |rho(R)| over polymers of size n containing x, against eps_p^{n-1}."""
    if n < 2:
        raise PreconditionError("polymers have at least 2 vertices")
    total = 0 * ctx.lam
    for R in enumerate_connected_vertex_sets(g, x, n, n, cap=cap):
        total += abs(activity(g, ctx, R))
    eps, _ = epsilon_p(ctx.p, ctx.q, _delta(g))
    bound = eps ** (n - 1)
    return total, bound, float(total) <= bound


def bc_gap(g, p, q, X, K, cap=VERTEX_CAP):
    """|phi_free - phi_wired| for truncated series, with the boundary decay scale."""
    free = truncated_phi(g, SubContext.from_params(g, p, q, FREE), X, K, cap=cap)
    wired = truncated_phi(g, SubContext.from_params(g, p, q, WIRED), X, K, cap=cap)
    gap = abs(free.value - wired.value)
    eps, _ = epsilon_p(p, q, _delta(g))
    dist = set_distance(g, X, g.window_boundary)
    scale = ((1 + 1 / math.sqrt(2)) * eps) ** dist
    return {"gap": gap, "free": free.value, "wired": wired.value,
            "distance_to_boundary": dist, "scale": scale,
            "certified": free.certificate.threshold_ok}


def pressure_series(g, p, q, K, cap=VERTEX_CAP):
    """(1/|V_N|)[ln Xi^0 + |E_N| ln(1-p)] + ln q with ln Xi^0 truncated at total size K."""
    ctx = SubContext.from_params(g, p, q, FREE)
    lx = truncated_log_xi(g, ctx, K, cap=cap)
    nv = len(g.window)
    ne = len(g.window_edges)
    val = float(lx.value) / nv + ne / nv * math.log1p(-float(p)) + math.log(float(q))
    cert = pressure_certificate(p, q, _delta(g))
    eps_free = cert.epsilon_star_p
    tail = log_tail(eps_free, K, nv) if cert.threshold_ok else None
    res = ExpansionResult(val, K, None if tail is None else tail / nv, cert,
                          [(s, float(v) / nv, float(c) / nv) for s, v, c in lx.by_size])
    if g.orbit_fractions:
        res.extra["edge_density_limit"] = 0.5 * sum(a * d for _, a, d in g.orbit_fractions)
    res.extra["edge_density_window"] = ne / nv
    return res


# exact references built from the polymer representation

def xi_packing(g, ctx, graded=False, region=None):
    """Sum over families of pairwise disjoint polymers (no cluster expansion).

    With graded=True the result is a list of coefficients of z^s where s is the
    total polymer size.
    """
    region = frozenset(g.window if region is None else region)
    memo = {}
    zero = 0 * ctx.lam

    def add(a, b, shift=0, scale=1):
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
        v = min(U)
        rest = U - {v}
        val = rec(rest)
        for R in enumerate_connected_vertex_sets(g, v, 2, min(len(U), VERTEX_CAP),
                                                 cap=VERTEX_CAP, region=U):
            rho = activity(g, ctx, R)
            sub = rec(U - R)
            if graded:
                val = add(val, sub, len(R), rho)
            else:
                val = val + rho * sub
        memo[U] = val
        return val

    return rec(region)


def pi_exact(g, ctx, R):
    """Pi(R) = Xi(window - R) / Xi(window), the derivative of ln Xi in rho(R)."""
    R = frozenset(R)
    return xi_packing(g, ctx, region=g.window - R) / xi_packing(g, ctx)


def series_inverse(a, n):
    """Power series 1/a truncated to n terms (a[0] must be nonzero)."""
    out = []
    for k in range(n):
        s = (1 if k == 0 else 0) - sum(a[j] * out[k - j] for j in range(1, min(k, len(a) - 1) + 1))
        out.append(s / a[0])
    return out


def series_log(a, n):
    """ln of a power series with a[0] = 1, truncated to n terms."""
    a = list(a) + [0] * max(0, n - len(a))
    b = [0 * a[0]] * n
    # b' = a'/a: k b_k = k a_k - sum_{j=1}^{k-1} j b_j a_{k-j}
    for k in range(1, n):
        s = k * a[k] - sum(j * b[j] * a[k - j] for j in range(1, k))
        b[k] = s / k
    return b

