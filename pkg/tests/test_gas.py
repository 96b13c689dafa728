import math

import pytest

from rcmexp.gas import URSELL_CAP, partial_sums, ursell, ursell_bruteforce
from rcmexp.graphcore import CapError


def complete(n):
    return [[i != j for j in range(n)] for i in range(n)]


@pytest.mark.parametrize("n", range(1, 7))
def test_complete_incompatibility(n):
    expect = (-1) ** (n - 1) * math.factorial(n - 1)
    assert ursell(complete(n)) == expect
    assert ursell_bruteforce(complete(n)) == expect


def test_disconnected_is_zero():
    adj = [[False, True, False], [True, False, False], [False, False, False]]
    assert ursell(adj) == 0 == ursell_bruteforce(adj)


def test_single_and_pair():
    assert ursell([[False]]) == 1
    assert ursell([[False, True], [True, False]]) == -1


def test_random_graphs_match_bruteforce():
    import random
    rng = random.Random(7)
    for _ in range(40):
        n = rng.randint(2, 5)
        adj = [[False] * n for _ in range(n)]
        for i in range(n):
            for j in range(i + 1, n):
                adj[i][j] = adj[j][i] = rng.random() < 0.6
        assert ursell(adj) == ursell_bruteforce(adj)


def test_path_graph_value():
    # a tree has a single connected spanning subgraph: (-1)^(n-1)
    n = 5
    adj = [[abs(i - j) == 1 for j in range(n)] for i in range(n)]
    assert ursell(adj) == 1


def test_cap():
    with pytest.raises(CapError):
        ursell(complete(URSELL_CAP + 1))


def test_partial_sums():
    assert partial_sums({3: 1, 1: 2}) == [(1, 2, 2), (3, 1, 3)]
