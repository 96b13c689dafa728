"""Abstract hard-core polymer gas: Ursell coefficients and truncated cluster sums.

A gas supplies polymers (hashable), their sizes, a canonical sort key, an
activity and an incompatibility relation, plus ``neighbors(P, m)``: the
polymers of size <= m incompatible with P (P itself excluded).  Clusters are
truncated by total size, root included.
"""
import math
from collections import defaultdict
from functools import lru_cache

from .graphcore import CapError

URSELL_CAP = 7


@lru_cache(maxsize=None)
def _ursell_masks(adj, n):
    # connected spanning subgraph sum with W_all(U) = 1 if U has no edge else 0
    full = (1 << n) - 1
    free = [False] * (1 << n)
    for U in range(1 << n):
        ok = True
        m = U
        while m:
            low = m & -m
            i = low.bit_length() - 1
            if adj[i] & U:
                ok = False
                break
            m ^= low
        free[U] = ok
    conn = [0] * (1 << n)
    for U in range(1, full + 1):
        low = U & -U
        rest = U ^ low
        total = 1 if free[U] else 0
        S = rest
        # proper subsets S' of U containing the lowest element: S' = low | S
        while True:
            Sp = low | S
            if Sp != U:
                c = conn[Sp]
                if c and free[U ^ Sp]:
                    total -= c
            if S == 0:
                break
            S = (S - 1) & rest
        conn[U] = total
    return conn[full]


def ursell(adjacency, cap=URSELL_CAP):
    """Ursell coefficient of an incompatibility graph given as a boolean matrix."""
    n = len(adjacency)
    if n > cap:
        raise CapError(f"cluster of {n} polymers exceeds the Ursell cap {cap}")
    if n == 0:
        return 0
    masks = []
    for i in range(n):
        m = 0
        for j in range(n):
            if i != j and adjacency[i][j]:
                m |= 1 << j
        masks.append(m)
    return _ursell_masks(tuple(masks), n)


def ursell_bruteforce(adjacency):
    """Reference: alternating sum over connected spanning edge subsets."""
    n = len(adjacency)
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if adjacency[i][j]]
    total = 0
    for mask in range(1 << len(edges)):
        parent = list(range(n))

        def find(v):
            while parent[v] != v:
                v = parent[v]
            return v

        k = 0
        for b, (i, j) in enumerate(edges):
            if mask >> b & 1:
                k += 1
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[ri] = rj
        if len({find(v) for v in range(n)}) == 1:
            total += (-1) ** k
    return total


class PolymerGas:
    """Base class; subclasses implement the five hooks below."""

    ursell_cap = 12

    def size(self, P):
        raise NotImplementedError

    def key(self, P):
        raise NotImplementedError

    def activity(self, P):
        raise NotImplementedError

    def incompatible(self, P, Q):
        raise NotImplementedError

    def neighbors(self, P, max_size):
        raise NotImplementedError

    def zero(self):
        return 0


def connected_polymer_sets(gas, root, budget, allowed=None):
    """Sets of distinct polymers (root excluded) that with the root form a
    connected incompatibility graph, total size <= budget.  Each set once."""
    out = []

    def rec(chosen, used, cand, banned):
        out.append(tuple(chosen))
        inset = set(chosen)
        for i, v in enumerate(cand):
            sv = gas.size(v)
            if sv > budget - used:
                continue
            ban = banned | set(cand[:i])
            rem = budget - used - sv
            later = cand[i + 1:]
            seen = set(later)
            ext = [c for c in later if gas.size(c) <= rem]
            for u in gas.neighbors(v, rem):
                if u in inset or u in ban or u in seen:
                    continue
                if allowed is not None and not allowed(u):
                    continue
                ext.append(u)
                seen.add(u)
            chosen.append(v)
            rec(chosen, used + sv, ext, ban | {v})
            chosen.pop()

    start = [u for u in gas.neighbors(root, budget)
             if u != root and (allowed is None or allowed(u))]
    rec([], 0, start, frozenset([root]))
    return out


def _multiplicities(sizes, budget):
    """All tuples of extra copies (>= 0) with sum(extra * size) <= budget."""
    if not sizes:
        yield ()
        return
    s = sizes[0]
    for extra in range(budget // s + 1):
        for rest in _multiplicities(sizes[1:], budget - extra * s):
            yield (extra,) + rest


def _cluster_weight(gas, polys, mults):
    # polys distinct, mults >= 1; returns Ursell / prod(m!) (caller adds activities)
    inst = []
    for P, m in zip(polys, mults):
        inst.extend([P] * m)
    n = len(inst)
    if n > gas.ursell_cap:
        raise CapError(f"cluster of {n} polymers exceeds the Ursell cap {gas.ursell_cap}")
    k = len(polys)
    pair = [[True] * k for _ in range(k)]
    for a in range(k):
        for b in range(a + 1, k):
            pair[a][b] = pair[b][a] = gas.incompatible(polys[a], polys[b])
    owner = []
    for a, m in enumerate(mults):
        owner.extend([a] * m)
    masks = []
    for i in range(n):
        mk = 0
        for j in range(n):
            if i != j and pair[owner[i]][owner[j]]:
                mk |= 1 << j
        masks.append(mk)
    phi = _ursell_masks(tuple(masks), n)
    return phi, math.prod(math.factorial(m) for m in mults)


def rooted_sum(gas, root, budget, allowed=None, root_counted=False, weight=None):
    """Cluster sum anchored at ``root`` with extra size <= budget, split by total size.

    root_counted=False gives Pi(root): Sum 1/n! Phi^T(root, R_1..R_n) prod rho(R_i).
    root_counted=True gives the clusters whose canonical minimum is ``root``
    (used for ln Xi); the root's own activity and multiplicity are included.
    ``weight(polys, mults)`` multiplies each term when given.
    Returns {total size: value}.
    """
    out = defaultdict(gas.zero)
    rs = gas.size(root)
    for others in connected_polymer_sets(gas, root, budget, allowed):
        polys = (root,) + others
        sizes = [gas.size(P) for P in polys]
        used = sum(sizes[1:])
        for extra in _multiplicities(sizes, budget - used):
            mults = (1 + extra[0],) + tuple(1 + e for e in extra[1:])
            phi, fact = _cluster_weight(gas, polys, mults)
            if phi == 0:
                continue
            if root_counted:
                val = gas.activity(root) ** mults[0]
            else:
                # the distinguished root instance is not part of the 1/n! multiset
                fact = fact // math.factorial(mults[0]) * math.factorial(extra[0])
                val = gas.activity(root) ** extra[0]
            for P, e in zip(others, extra[1:]):
                val = val * gas.activity(P) ** (1 + e)
            term = val * phi / fact
            if weight is not None:
                term = term * weight(polys, mults)
            total = rs + used + sum(e * s for e, s in zip(extra, sizes))
            out[total] += term
    return dict(out)


def log_partition(gas, polymers, K):
    """Truncated ln Xi: clusters of total size <= K, split by total size."""
    out = defaultdict(gas.zero)
    keyed = sorted(polymers, key=gas.key)
    for P in keyed:
        if gas.size(P) > K:
            continue
        kp = gas.key(P)
        part = rooted_sum(gas, P, K - gas.size(P), allowed=lambda u, kp=kp: gas.key(u) > kp,
                          root_counted=True)
        for s, v in part.items():
            out[s] += v
    return dict(out)


def partial_sums(by_size):
    """Cumulative sums in increasing size order."""
    acc = None
    res = []
    for s in sorted(by_size):
        acc = by_size[s] if acc is None else acc + by_size[s]
        res.append((s, by_size[s], acc))
    return res
