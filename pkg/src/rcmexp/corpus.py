"""Bundled corpus of small graphs (at most 12 window edges) for identity checks."""
from .graphcore import explicit_graph, regular_tree, zd_box


def _path(n):
    names = [f"v{i}" for i in range(n)]
    return explicit_graph(names, [(names[i], names[i + 1]) for i in range(n - 1)])


def _cycle(n, boundary):
    names = [f"c{i}" for i in range(n)]
    edges = [(names[i], names[(i + 1) % n]) for i in range(n)]
    return explicit_graph(names, edges, boundary=[names[i] for i in boundary])


def _graph(vertices, edges, boundary=None):
    return explicit_graph(list(vertices), [tuple(e) for e in edges], boundary=boundary)


def corpus():
    """List of (name, HostGraph); order is fixed."""
    out = [
        ("edge", _graph("ab", ["ab"], boundary=["a"])),
        ("path3", _path(3)),
        ("path4", _path(4)),
        ("path5", _path(5)),
        ("path7", _path(7)),
        ("cycle3", _cycle(3, [0])),
        ("cycle4", _cycle(4, [0])),
        ("cycle5", _cycle(5, [0, 2])),
        ("cycle6", _cycle(6, [0, 3])),
        ("grid2x2", zd_box([2, 2], 0)),
        ("grid2x3", zd_box([2, 3], 0)),
        ("grid2x4", zd_box([2, 4], 0)),
        ("grid3x3", zd_box([3, 3], 0)),
        ("grid3x3_in_5x5", zd_box([5, 5], 1)),
        ("grid2x2_in_4x4", zd_box([4, 4], 1)),
        ("star3", regular_tree(3, 1)),
        ("star4", regular_tree(4, 1)),
        ("tree3_depth2", regular_tree(3, 2)),
        ("tree2_depth3", regular_tree(2, 3)),
        ("bowtie", _graph("abcde", ["ab", "bc", "ca", "cd", "de", "ec"])),
        ("k4_pendant", _graph("abcde", ["ab", "ac", "ad", "bc", "bd", "cd", "de"])),
        ("house", _graph("abcde", ["ab", "bc", "cd", "da", "ae", "be"], boundary=["c", "d"])),
    ]
    return out


def corpus_small(max_edges):
    return [(nm, g) for nm, g in corpus() if len(g.window_edges) <= max_edges]
