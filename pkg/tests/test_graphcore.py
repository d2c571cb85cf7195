import math

import networkx as nx
import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from swarmres.graphcore import (GraphError, algebraic_connectivity, centrality_features, k_shell,
                                make_graph, natural_connectivity, rank_normalize, read_edgelist,
                                write_edgelist)


def phi_oracle(g):
    a = nx.to_numpy_array(g, weight=None)
    return math.log(np.trace(scipy.linalg.expm(a)) / len(a))


def lambda2_oracle(g):
    lap = nx.laplacian_matrix(g).toarray().astype(float)
    return sorted(np.linalg.eig(lap)[0].real)[1]


@st.composite
def graphs(draw, min_nodes=1, max_nodes=12):
    n = draw(st.integers(min_nodes, max_nodes))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    g = nx.Graph()
    g.add_nodes_from(range(n))
    g.add_edges_from(p for p, keep in zip(pairs, mask) if keep)
    return g


def test_edgeless_phi_is_zero():
    assert natural_connectivity(nx.empty_graph(7)) == 0.0


def test_triangle_phi():
    assert natural_connectivity(nx.complete_graph(3)) == pytest.approx(
        math.log((math.e ** 2 + 2 / math.e) / 3), abs=1e-12)


def test_single_edge_phi():
    assert natural_connectivity(nx.path_graph(2)) == pytest.approx(math.log(math.cosh(1)), abs=1e-12)


def test_empty_graph_rejected():
    with pytest.raises(GraphError):
        natural_connectivity(nx.Graph())
    with pytest.raises(GraphError):
        algebraic_connectivity(nx.empty_graph(1))


def test_algebraic_connectivity_examples():
    two = nx.disjoint_union(nx.complete_graph(3), nx.path_graph(4))
    assert algebraic_connectivity(two) == 0.0
    assert algebraic_connectivity(nx.complete_graph(3)) == pytest.approx(3.0, abs=1e-12)
    assert algebraic_connectivity(nx.path_graph(3)) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("seed", range(20))
def test_spectral_measures_match_dense_oracles(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 51))
    g = nx.gnp_random_graph(n, float(rng.uniform(0.05, 0.5)), seed=seed)
    assert natural_connectivity(g) == pytest.approx(phi_oracle(g), abs=1e-9)
    expected = lambda2_oracle(g) if nx.is_connected(g) else 0.0
    assert algebraic_connectivity(g) == pytest.approx(expected, abs=1e-9)


def union_find_connected(g):
    parent = {v: v for v in g}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for u, v in g.edges:
        parent[find(u)] = find(v)
    return len({find(v) for v in g}) == 1


@pytest.mark.parametrize("seed", range(100))
def test_lambda2_positive_iff_connected(seed):
    g = nx.gnp_random_graph(12, 0.18, seed=seed)
    assert (algebraic_connectivity(g) > 1e-9) == union_find_connected(g)


@settings(max_examples=60, deadline=None)
@given(graphs(min_nodes=2))
def test_phi_strictly_increases_with_an_edge(g):
    missing = [(u, v) for u in g for v in g if u < v and not g.has_edge(u, v)]
    if not missing:
        return
    h = g.copy()
    h.add_edge(*missing[0])
    assert natural_connectivity(h) > natural_connectivity(g)


@settings(max_examples=60, deadline=None)
@given(graphs())
def test_phi_non_negative(g):
    assert natural_connectivity(g) >= 0.0


def test_k_shell_examples():
    assert set(k_shell(nx.empty_graph(4)).values()) == {0}
    assert set(k_shell(nx.complete_graph(4)).values()) == {3}
    assert set(k_shell(nx.star_graph(4)).values()) == {1}
    assert set(k_shell(nx.cycle_graph(6)).values()) == {2}


@pytest.mark.parametrize("seed", range(15))
def test_k_shell_matches_networkx_core_number(seed):
    g = nx.barabasi_albert_graph(80, 3, seed=seed)
    g.add_nodes_from([1000, 1001])
    assert k_shell(g) == nx.core_number(g)


def test_star_center_has_top_degree_rank():
    g = nx.star_graph(4)
    fm = centrality_features(g)
    center = fm.nodes.index(0)
    assert fm.column("DC")[center] == 1.0
    assert not fm.disconnected


def test_features_are_rank_fractions_on_large_graph():
    g = nx.barabasi_albert_graph(1000, 2, seed=3)
    fm = centrality_features(g)
    n = len(fm.nodes)
    scaled = fm.values * n
    assert np.allclose(scaled, np.round(scaled), atol=1e-9)
    assert scaled.min() >= 1 and scaled.max() <= n
    assert fm.values.shape == (n, 5)


def test_rank_ties_take_minimum_rank():
    assert rank_normalize([3.0, 1.0, 3.0, 2.0]).tolist() == [0.75, 0.25, 0.75, 0.5]


def test_disconnected_features_are_flagged():
    g = nx.disjoint_union(nx.path_graph(3), nx.path_graph(2))
    fm = centrality_features(g)
    assert fm.disconnected
    assert np.all(np.isfinite(fm.values))


def test_make_graph_validation():
    with pytest.raises(GraphError):
        make_graph([0], [(0, 0)])
    with pytest.raises(GraphError):
        make_graph([0, 1], [(0, 1), (1, 0)])
    with pytest.raises(GraphError):
        make_graph([0], [(0, 2)])
    with pytest.raises(GraphError):
        make_graph([0, 1], [(0, 1)], {(0, 1): 0.0})
    g = make_graph([0, 1], [(0, 1)], {(1, 0): 2.5})
    assert g.edges[0, 1]["length"] == 2.5


def test_edgelist_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    g = nx.gnp_random_graph(30, 0.2, seed=1)
    for u, v in g.edges:
        g.edges[u, v]["length"] = float(rng.uniform(0.1, 900.0)) / 3.0
    g.add_node(99)
    path = tmp_path / "g.edgelist"
    write_edgelist(g, path)
    h = read_edgelist(path)
    assert set(h.nodes) == set(g.nodes)
    assert {frozenset(e) for e in h.edges} == {frozenset(e) for e in g.edges}
    for u, v in g.edges:
        assert abs(h.edges[u, v]["length"] - g.edges[u, v]["length"]) <= 1e-12


def test_edgelist_errors_are_line_anchored(tmp_path):
    path = tmp_path / "bad.edgelist"
    path.write_text("0 1\n1 x\n")
    with pytest.raises(GraphError, match=r"bad.edgelist:2"):
        read_edgelist(path)
