"""Host graphs with a window, metrics, boundaries and connected-set enumeration.

A host graph is a finite graph standing in for a piece of an infinite graph.
Vertices of reduced degree (box faces, tree leaves, declared boundary vertices
of explicit graphs) form the host boundary: anything touching them is treated
as connected to infinity.  The window V_N is the sub-box (or sub-ball) kept
at distance >= margin from that boundary.
"""
import itertools
import json
from fractions import Fraction
from functools import cached_property

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

FREE = "free"
WIRED = "wired"

VERTEX_CAP = 10
EDGE_CAP = 8


class RCMError(Exception):
    exit_code = 1


class CapError(RCMError):
    exit_code = 2


class MarginError(RCMError):
    exit_code = 2


class InvariantError(RCMError):
    exit_code = 3


class SpecError(RCMError):
    exit_code = 4


class PreconditionError(RCMError, ValueError):
    exit_code = 4


# scalars: Fraction is the exact mode, float the approximate one

def parse_scalar(text, exact=True):
    """Parse '3/4', '0.95' or '2'; decimals become exact fractions in exact mode."""
    if isinstance(text, (Fraction, int)):
        return Fraction(text) if exact else float(text)
    if isinstance(text, float):
        if exact:
            raise PreconditionError("float given where an exact value is required")
        return text
    try:
        val = Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise SpecError(f"cannot parse number {text!r}") from exc
    return val if exact else float(val)


def scalar_mode(*vals):
    """Return 'exact' or 'approx'; mixing the two is an error."""
    modes = set()
    for v in vals:
        if isinstance(v, bool):
            raise PreconditionError("boolean is not a scalar")
        if isinstance(v, (Fraction, int)):
            modes.add("exact")
        elif isinstance(v, float):
            modes.add("approx")
        else:
            raise PreconditionError(f"unsupported scalar type {type(v).__name__}")
    if len(modes) > 1:
        raise PreconditionError("mixed exact and approximate scalars")
    return modes.pop() if modes else "exact"


def format_scalar(v):
    """Reduced "a/b" for rationals (plain "a" when integral), repr for floats."""
    if isinstance(v, Fraction):
        if v.denominator == 1:
            return str(v.numerator)
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, int):
        return str(v)
    if v is None:
        return ""
    return repr(float(v))


class HostGraph:
    """Immutable finite graph with a designated window.

    Vertices and edges are referred to by integer index.  ``names[i]`` is the
    external name (a coordinate tuple, a root-path string or a declared label).
    Edges are sorted pairs (u, v) with u < v, in lexicographic order.
    """

    def __init__(self, names, edges, window, margin, template, host_boundary,
                 nominal_degree=None, orbit_fractions=None, cutset=None):
        self.names = list(names)
        self.index = {nm: i for i, nm in enumerate(self.names)}
        if len(self.index) != len(self.names):
            raise SpecError("duplicate vertex names")
        n = len(self.names)
        pairs = set()
        for u, v in edges:
            if u == v:
                raise SpecError(f"self-loop at {self.names[u]!r}")
            key = (min(u, v), max(u, v))
            if key in pairs:
                raise SpecError(f"duplicate edge {self.names[u]!r}-{self.names[v]!r}")
            pairs.add(key)
        self.edges = sorted(pairs)
        self.edge_index = {e: i for i, e in enumerate(self.edges)}
        adj = [[] for _ in range(n)]
        inc = [[] for _ in range(n)]
        for i, (u, v) in enumerate(self.edges):
            adj[u].append(v)
            adj[v].append(u)
            inc[u].append(i)
            inc[v].append(i)
        self.adj = [tuple(sorted(a)) for a in adj]
        self.inc = [tuple(sorted(a)) for a in inc]
        self.degree = [len(a) for a in self.adj]
        if n == 0:
            raise SpecError("empty graph")
        if n > 1 and min(self.degree) == 0:
            bad = self.names[self.degree.index(0)]
            raise SpecError(f"vertex {bad!r} has degree 0")
        self.max_degree = max(self.degree)
        self.nominal_degree = nominal_degree or self.max_degree
        self.window = frozenset(window)
        self.margin = margin
        self.template = dict(template)
        self.host_boundary = frozenset(host_boundary)
        self.orbit_fractions = orbit_fractions
        self.cutset = cutset  # declared (R, C) or None
        if not self._connected(range(n)):
            raise SpecError("graph is not connected")
        if not self.window:
            raise SpecError("empty window")
        if self.host_boundary and margin > 0:
            dist = self.distances
            hb = sorted(self.host_boundary)
            for w in self.window:
                if dist[w, hb].min() < margin:
                    raise MarginError("window vertex closer than margin to host boundary")

    def _connected(self, verts):
        verts = set(verts)
        if not verts:
            return True
        start = next(iter(verts))
        seen = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for w in self.adj[u]:
                if w in verts and w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == len(verts)

    def is_connected_set(self, verts):
        return self._connected(verts)

    @cached_property
    def distances(self):
        n = len(self.names)
        rows = [u for u, v in self.edges] + [v for u, v in self.edges]
        cols = [v for u, v in self.edges] + [u for u, v in self.edges]
        mat = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
        d = shortest_path(mat, method="D", unweighted=True)
        return d.astype(np.int32)

    # window data

    @cached_property
    def window_vertices(self):
        return tuple(sorted(self.window))

    @cached_property
    def window_edges(self):
        w = self.window
        return tuple(i for i, (u, v) in enumerate(self.edges) if u in w and v in w)

    @cached_property
    def window_boundary(self):
        """Window vertices adjacent to the outside or lying on the host boundary."""
        w = self.window
        out = set()
        for v in w:
            if v in self.host_boundary or any(u not in w for u in self.adj[v]):
                out.add(v)
        return frozenset(out)

    @cached_property
    def window_interior(self):
        return self.window - self.window_boundary

    @cached_property
    def window_edge_boundary(self):
        return edge_boundary(self, self.window)

    def vertex(self, name):
        """Look up a vertex by name, accepting '1,2' strings for coordinates."""
        if name in self.index:
            return self.index[name]
        if isinstance(name, str) and self.template.get("template") == "zd":
            try:
                coords = tuple(int(c) for c in name.strip("() ").split(","))
            except ValueError:
                coords = None
            if coords in self.index:
                return self.index[coords]
        if isinstance(name, (list, tuple)) and tuple(name) in self.index:
            return self.index[tuple(name)]
        raise PreconditionError(f"unknown vertex {name!r}")

    def name_of(self, v):
        nm = self.names[v]
        if isinstance(nm, tuple):
            return ",".join(str(c) for c in nm)
        return str(nm)

    def edge_name(self, e):
        u, v = self.edges[e]
        return f"{self.name_of(u)}-{self.name_of(v)}"

    def edge_between(self, u, v):
        return self.edge_index[(min(u, v), max(u, v))]

    def center(self):
        """Window vertex minimizing the largest distance to the window."""
        wv = list(self.window_vertices)
        sub = self.distances[np.ix_(wv, wv)]
        return wv[int(np.argmin(sub.max(axis=1)))]

    def summary(self):
        return {
            "template": self.template,
            "vertices": len(self.names),
            "edges": len(self.edges),
            "window_vertices": len(self.window),
            "window_edges": len(self.window_edges),
            "window_boundary": len(self.window_boundary),
            "max_degree": self.max_degree,
            "margin": self.margin,
        }


# templates

def zd_box(dims, margin=0):
    dims = [int(L) for L in dims]
    if not dims or min(dims) < 1:
        raise SpecError("box dimensions must be positive")
    if 2 * margin >= min(dims):
        raise MarginError("margin larger than half the smallest dimension")
    names = list(itertools.product(*[range(L) for L in dims]))
    index = {c: i for i, c in enumerate(names)}
    edges = []
    for c, i in index.items():
        for ax in range(len(dims)):
            if c[ax] + 1 < dims[ax]:
                nb = c[:ax] + (c[ax] + 1,) + c[ax + 1:]
                edges.append((i, index[nb]))
    deg = 2 * len(dims)
    window = [i for c, i in index.items()
              if all(margin <= c[ax] <= dims[ax] - 1 - margin for ax in range(len(dims)))]
    counts = [0] * len(names)
    for u, v in edges:
        counts[u] += 1
        counts[v] += 1
    boundary = [i for i in range(len(names)) if counts[i] < deg]
    tpl = {"template": "zd", "dims": dims, "margin": margin}
    return HostGraph(names, edges, window, margin, tpl, boundary,
                     nominal_degree=deg, orbit_fractions=[(0, 1.0, deg)],
                     cutset=(1, 1.0))


def regular_tree(degree, depth, margin=0):
    if degree < 2 or depth < 0:
        raise SpecError("tree needs degree >= 2 and depth >= 0")
    if margin > depth:
        raise MarginError("margin larger than the tree depth")
    names = ["r"]
    level = ["r"]
    edges = []
    for d in range(depth):
        nxt = []
        for nm in level:
            kids = degree if nm == "r" else degree - 1
            for c in range(kids):
                child = nm + str(c) if degree <= 10 else nm + "." + str(c)
                names.append(child)
                edges.append((nm, child))
                nxt.append(child)
        level = nxt
    index = {nm: i for i, nm in enumerate(names)}
    e_idx = [(index[a], index[b]) for a, b in edges]

    def depth_of(nm):
        return len(nm) - 1 if degree <= 10 else nm.count(".")

    window = [index[nm] for nm in names if depth_of(nm) <= depth - margin]
    boundary = [index[nm] for nm in level] if depth > 0 else []
    tpl = {"template": "tree", "degree": degree, "depth": depth, "margin": margin}
    return HostGraph(names, e_idx, window, margin, tpl, boundary,
                     nominal_degree=degree, orbit_fractions=None, cutset=None)


def explicit_graph(vertices, edges, boundary=None, orbit_fractions=None, cutset=None):
    names = list(vertices)
    index = {}
    for i, nm in enumerate(names):
        if nm in index:
            raise SpecError(f"duplicate vertex {nm!r}")
        index[nm] = i
    e_idx = []
    for pair in edges:
        if len(pair) != 2:
            raise SpecError(f"bad edge {pair!r}")
        a, b = pair
        if a not in index or b not in index:
            raise SpecError(f"edge {pair!r} uses an undeclared vertex")
        e_idx.append((index[a], index[b]))
    deg = [0] * len(names)
    for u, v in e_idx:
        if u != v:
            deg[u] += 1
            deg[v] += 1
    if boundary is None:
        top = max(deg) if deg else 0
        hb = [i for i in range(len(names)) if deg[i] < top]
    else:
        hb = []
        for nm in boundary:
            if nm not in index:
                raise SpecError(f"boundary vertex {nm!r} not declared")
            hb.append(index[nm])
    tpl = {"template": "edges", "vertices": names, "edges": [list(p) for p in edges]}
    if boundary is not None:
        tpl["boundary"] = list(boundary)
    return HostGraph(names, e_idx, range(len(names)), 0, tpl, hb,
                     orbit_fractions=orbit_fractions, cutset=cutset)


def build_template(desc):
    """Build a host graph from a descriptor dict (JSON graph file format)."""
    if not isinstance(desc, dict) or "template" not in desc:
        raise SpecError("template descriptor must be a mapping with a 'template' key")
    kind = desc["template"]
    try:
        if kind == "zd":
            return zd_box(desc["dims"], int(desc.get("margin", 0)))
        if kind == "tree":
            return regular_tree(int(desc["degree"]), int(desc["depth"]), int(desc.get("margin", 0)))
        if kind == "edges":
            if int(desc.get("margin", 0)) != 0:
                raise SpecError("explicit graphs take margin 0")
            orb = desc.get("orbit_fractions")
            if orb is not None:
                orb = [(o[0], float(o[1]), int(o[2])) for o in orb]
            cut = desc.get("cutset")
            if cut is not None:
                cut = (int(cut[0]), float(cut[1]))
            verts = [_hashable(v) for v in desc["vertices"]]
            edges = [[_hashable(a), _hashable(b)] for a, b in desc["edges"]]
            bnd = desc.get("boundary")
            if bnd is not None:
                bnd = [_hashable(v) for v in bnd]
            return explicit_graph(verts, edges, bnd, orb, cut)
    except KeyError as exc:
        raise SpecError(f"template descriptor missing field {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise SpecError(f"bad template descriptor: {exc}") from exc
    raise SpecError(f"unknown template {kind!r}")


def _hashable(v):
    return tuple(v) if isinstance(v, list) else v


def load_graph_file(path):
    try:
        with open(path, encoding="utf-8") as fh:
            desc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SpecError(f"cannot read graph file {path}: {exc}") from exc
    return build_template(desc)


# metrics and boundaries

def distance(g, x, y):
    return int(g.distances[x, y])


def set_distance(g, A, B):
    A = sorted(A)
    B = sorted(B)
    if not A or not B:
        return np.inf
    return int(g.distances[np.ix_(A, B)].min())


def tree_distance(g, X):
    """Minimum spanning tree weight of X under graph distance (Prim)."""
    X = sorted(set(X))
    if not X:
        raise PreconditionError("empty vertex set")
    d = g.distances
    best = {x: int(d[X[0], x]) for x in X[1:]}
    total = 0
    while best:
        x = min(best, key=lambda v: (best[v], v))
        total += best.pop(x)
        for y in best:
            best[y] = min(best[y], int(d[x, y]))
    return total


def diameter(g, R):
    R = sorted(R)
    if not R:
        raise PreconditionError("empty vertex set")
    return int(g.distances[np.ix_(R, R)].max())


def edge_boundary(g, R):
    R = set(R)
    if not R:
        raise PreconditionError("empty vertex set")
    out = set()
    for v in R:
        for e in g.inc[v]:
            a, b = g.edges[e]
            if (a in R) != (b in R):
                out.add(e)
    return frozenset(out)


def vertex_boundaries(g, R):
    """(external, internal) vertex boundaries of R."""
    R = set(R)
    if not R:
        raise PreconditionError("empty vertex set")
    ext, internal = set(), set()
    for v in R:
        for u in g.adj[v]:
            if u not in R:
                ext.add(u)
                internal.add(v)
    return frozenset(ext), frozenset(internal)


def edge_support(g, S):
    out = set()
    for e in S:
        out.update(g.edges[e])
    return frozenset(out)


def edge_distance(g, e, f):
    a, b = g.edges[e]
    c, d = g.edges[f]
    D = g.distances
    return int(min(D[a, c], D[a, d], D[b, c], D[b, d]))


def edge_set_distance(g, S, T):
    return set_distance(g, edge_support(g, S), edge_support(g, T))


def is_r_connected(g, S, R):
    S = sorted(S)
    if not S:
        return False
    seen = {S[0]}
    stack = [S[0]]
    while stack:
        e = stack.pop()
        for f in S:
            if f not in seen and edge_distance(g, e, f) <= R:
                seen.add(f)
                stack.append(f)
    return len(seen) == len(S)


def r_components(g, S, R):
    """Split an edge set into its R-connected components (canonically ordered)."""
    rest = sorted(S)
    comps = []
    while rest:
        seen = {rest[0]}
        stack = [rest[0]]
        while stack:
            e = stack.pop()
            for f in rest:
                if f not in seen and edge_distance(g, e, f) <= R:
                    seen.add(f)
                    stack.append(f)
        comps.append(frozenset(seen))
        rest = [e for e in rest if e not in seen]
    return comps


# enumeration

def grow_connected(root, neighbors, max_size, allowed=None):
    """All connected sets containing ``root`` with at most max_size elements.

    ``neighbors(v)`` lists the neighbours of v.  Every set is produced once:
    a candidate skipped at one branch is banned from all later branches.
    Output order is not canonical; callers sort.
    """
    out = []

    def rec(chosen, cand, banned):
        out.append(tuple(chosen))
        if len(chosen) == max_size:
            return
        inset = set(chosen)
        for i, v in enumerate(cand):
            ban = banned | set(cand[:i])
            ext = list(cand[i + 1:])
            seen = set(ext)
            for u in neighbors(v):
                if u in inset or u in ban or u in seen or u == v:
                    continue
                if allowed is not None and not allowed(u):
                    continue
                ext.append(u)
                seen.add(u)
            chosen.append(v)
            rec(chosen, ext, ban | {v})
            chosen.pop()

    start = [u for u in neighbors(root) if u != root and (allowed is None or allowed(u))]
    rec([root], start, frozenset([root]))
    return out


def enumerate_connected_vertex_sets(g, root, min_size, max_size, cap=VERTEX_CAP, region=None):
    """Connected vertex sets containing root, sizes in [min_size, max_size], canonical order."""
    if max_size > cap:
        raise CapError(f"vertex-set size {max_size} exceeds cap {cap}")
    if min_size < 1 or min_size > max_size:
        return []
    region = g.window if region is None else frozenset(region)
    if root not in region:
        raise PreconditionError("root outside the enumeration region")
    sets = grow_connected(root, lambda v: g.adj[v], max_size, lambda u: u in region)
    res = [tuple(sorted(s)) for s in sets if min_size <= len(s)]
    res.sort()
    return [frozenset(s) for s in res]


def edge_neighbors_within(g, R, region):
    """Function giving the edges of ``region`` within distance R of an edge."""
    region = sorted(region)
    cache = {}
    reg_arr = np.array(region, dtype=np.int64)
    if len(region):
        ends = np.array([g.edges[e] for e in region])
    D = g.distances

    def nbrs(e):
        if e not in cache:
            if not len(region):
                cache[e] = ()
            else:
                a, b = g.edges[e]
                dm = np.minimum.reduce([D[a, ends[:, 0]], D[a, ends[:, 1]],
                                        D[b, ends[:, 0]], D[b, ends[:, 1]]])
                cache[e] = tuple(int(x) for x in reg_arr[dm <= R] if x != e)
        return cache[e]

    return nbrs


def enumerate_r_connected_edge_sets(g, seed_edge, R, min_size, max_size, cap=EDGE_CAP,
                                    region=None, nbrs=None):
    """R-connected edge sets containing seed_edge, canonical order."""
    if R < 1:
        raise PreconditionError("R must be at least 1")
    if max_size > cap:
        raise CapError(f"edge-set size {max_size} exceeds cap {cap}")
    if min_size > max_size:
        return []
    region = frozenset(g.window_edges) if region is None else frozenset(region)
    if seed_edge not in region:
        raise PreconditionError("seed edge outside the enumeration region")
    if nbrs is None:
        nbrs = edge_neighbors_within(g, R, region)
    sets = grow_connected(seed_edge, nbrs, max_size, lambda f: f in region)
    res = sorted(tuple(sorted(s)) for s in sets if len(s) >= min_size)
    return [frozenset(s) for s in res]


# cut-set function and self-avoiding walks

def _anchors(g):
    if g.template.get("template") == "edges":
        return list(g.window_vertices)
    return [g.center()]


def cut_set_function(g, n, cap=VERTEX_CAP, max_size=None):
    """Smallest edge boundary over connected sets of diameter exactly n.

    Sets are anchored at the deep window centre (all window vertices for
    explicit graphs) and have at most max_size vertices (default n + 3).
    """
    if n < 0:
        raise PreconditionError("n must be nonnegative")
    if max_size is None:
        max_size = n + 3
    max_size = min(max_size, cap)
    if n + 1 > max_size:
        raise CapError(f"diameter {n} needs sets larger than the cap {cap}")
    explicit = g.template.get("template") == "edges"
    best = None
    for a in _anchors(g):
        if not explicit and g.host_boundary:
            reach = min(int(g.distances[a, b]) for b in g.host_boundary)
            if reach < max_size:
                raise MarginError("sets around the anchor could touch the host boundary")
        for W in enumerate_connected_vertex_sets(g, a, 1, max_size, cap=cap,
                                                 region=range(len(g.names))):
            if diameter(g, W) != n:
                continue
            b = len(edge_boundary(g, W))
            if best is None or b < best:
                best = b
    if best is None:
        raise PreconditionError(f"no connected set of diameter {n} fits")
    return best


def saw_counts(g, x, n_max):
    """Number of self-avoiding walks of each length 1..n_max starting at x."""
    if g.template.get("template") != "edges":
        hb = sorted(g.host_boundary)
        if hb and int(g.distances[x, hb].min()) < n_max:
            raise MarginError("walks could reach the host boundary")
    counts = [0] * (n_max + 1)
    visited = [False] * len(g.names)
    visited[x] = True

    def walk(v, n):
        counts[n] += 1
        if n == n_max:
            return
        for u in g.adj[v]:
            if not visited[u]:
                visited[u] = True
                walk(u, n + 1)
                visited[u] = False

    walk(x, 0)
    c = counts[1:]
    roots = [ci ** (1.0 / (i + 1)) for i, ci in enumerate(c)]
    return c, roots
