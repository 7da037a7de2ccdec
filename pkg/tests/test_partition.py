import logging
import random

import pytest
from hypothesis import given, settings, strategies as st

from distlp.errors import ConfigError
from distlp.partition import Strategy, edge_cut, fnv1a_64, partition

from instances import path_graph, random_instance


@pytest.mark.parametrize(
    "data, expected",
    [(b"", 0xCBF29CE484222325), (b"a", 0xAF63DC4C8601EC8C), (b"foobar", 0x85944171F73967E8)],
)
def test_fnv1a_64_vectors(data, expected):
    assert fnv1a_64(data) == expected


def test_range_path():
    g = path_graph("ABCD")
    p = partition(g, 2, Strategy.RANGE)
    names = [[g.ids[v] for v in owned] for owned in p.owned]
    assert names == [["A", "B"], ["C", "D"]]
    C, B = g.index["C"], g.index["B"]
    assert p.ghosts[0] == {C: 1}
    assert p.ghosts[1] == {B: 0}
    assert p.boundary[0] == {B: [(1, C)]}
    assert edge_cut(g, p) == 1


@pytest.mark.parametrize("strategy", list(Strategy))
def test_single_part(strategy):
    g, _ = random_instance(random.Random(1), 40, 40)
    p = partition(g, 1, strategy)
    assert p.owned == (tuple(range(g.node_count)),)
    assert p.ghosts == ({},) and p.boundary == ({},)
    assert edge_cut(g, p) == 0


def test_hash_uses_fnv_of_external_id():
    g, _ = random_instance(random.Random(2), 50, 50)
    p = partition(g, 4, Strategy.HASH)
    for v, ext in enumerate(g.ids):
        assert p.part_of[v] == fnv1a_64(ext.encode()) % 4


def direct_scan_tables(graph, part_of, k):
    ghosts = [dict() for _ in range(k)]
    boundary = [dict() for _ in range(k)]
    for i, j, _ in graph.edges():
        pi, pj = part_of[i], part_of[j]
        if pi != pj:
            ghosts[pi][j] = pj
            ghosts[pj][i] = pi
            boundary[pi].setdefault(i, set()).add((pj, j))
            boundary[pj].setdefault(j, set()).add((pi, i))
    return ghosts, boundary


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(list(Strategy)), st.sampled_from([2, 3, 4, 8]))
def test_tables_match_direct_scan(seed, strategy, k):
    g, _ = random_instance(random.Random(seed), 5, 100)
    p = partition(g, k, strategy)
    ghosts, boundary = direct_scan_tables(g, p.part_of, k)
    assert list(p.ghosts) == ghosts
    assert [{v: set(b) for v, b in part.items()} for part in p.boundary] == boundary
    for part in p.boundary:
        for dests in part.values():
            assert [u for _, u in dests] == sorted(u for _, u in dests)
    assert sorted(v for owned in p.owned for v in owned) == list(range(g.node_count))
    assert all(0 <= q < k for q in p.part_of)


def test_hash_100_nodes_ghosts():
    g, _ = random_instance(random.Random(100), 100, 100)
    p = partition(g, 4, Strategy.HASH)
    assert list(p.ghosts) == direct_scan_tables(g, p.part_of, 4)[0]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(list(Strategy)), st.integers(1, 9))
def test_edge_cut_brute_force(seed, strategy, k):
    g, _ = random_instance(random.Random(seed), 5, 80)
    p = partition(g, k, strategy)
    brute = 0
    for i in range(g.node_count):
        for j in g.nbrs[i]:
            brute += p.part_of[i] != p.part_of[j]
    assert edge_cut(g, p) == brute // 2


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 12))
def test_greedy_balance(seed, k):
    rng = random.Random(seed)
    n = rng.randint(5, 150)
    # connected: random tree plus extras
    from distlp.graph import Graph

    edges = {(rng.randrange(i), i) for i in range(1, n)}
    edges |= {tuple(sorted(rng.sample(range(n), 2))) for _ in range(n)}
    g = Graph.from_edges((f"u{a}", f"u{b}", 1.0) for a, b in edges)
    p = partition(g, min(k, n), Strategy.GREEDY_BFS)
    sizes = p.sizes
    assert max(sizes) - min(sizes) <= -(-n // min(k, n))


def test_greedy_prefers_connected_parts():
    g = path_graph("abcdefgh")
    p = partition(g, 2, Strategy.GREEDY_BFS)
    assert edge_cut(g, p) == 1


def test_more_parts_than_nodes(caplog):
    g = path_graph("abc")
    with caplog.at_level(logging.WARNING):
        p = partition(g, 5, Strategy.RANGE)
    assert "surplus" in caplog.text
    assert sum(p.sizes) == 3 and p.sizes.count(0) == 2


@pytest.mark.parametrize("k", [0, -1])
def test_k_validated(k):
    with pytest.raises(ConfigError):
        partition(path_graph("ab"), k)
