import math

import networkx as nx
import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from swarmres.criticality import (_combine, birnbaum, birnbaum_all, global_importance, minmax,
                                  surbi_rank, surrounding_influence, write_report_csv)
from swarmres.graphcore import GraphError
from swarmres.io import read_csv


def phi_oracle(g):
    a = nx.to_numpy_array(g, weight=None)
    return math.log(np.trace(scipy.linalg.expm(a)) / len(a))


def test_birnbaum_symmetric_graph():
    bi = birnbaum_all(nx.cycle_graph(5))
    assert max(bi.values()) - min(bi.values()) < 1e-12


def test_birnbaum_triangle():
    want = phi_oracle(nx.complete_graph(3)) - phi_oracle(nx.complete_graph(2))
    for v in range(3):
        assert birnbaum(nx.complete_graph(3), v) == pytest.approx(want, abs=1e-12)


def test_birnbaum_isolated_node_only_changes_n():
    g = nx.path_graph(2)
    g.add_node(2)
    want = phi_oracle(g) - phi_oracle(nx.path_graph(2))
    assert birnbaum(g, 2) == pytest.approx(want, abs=1e-12)
    assert want < 0


@pytest.mark.parametrize("seed", range(5))
def test_birnbaum_all_matches_node_removal_oracle(seed):
    g = nx.gnp_random_graph(15, 0.3, seed=seed)
    bi = birnbaum_all(g)
    for v in g:
        h = g.copy()
        h.remove_node(v)
        assert bi[v] == pytest.approx(phi_oracle(g) - phi_oracle(h), abs=1e-9)


def test_birnbaum_errors():
    with pytest.raises(GraphError):
        birnbaum(nx.path_graph(3), 9)
    with pytest.raises(GraphError):
        birnbaum(nx.empty_graph(1), 0)


def test_surrounding_influence_examples():
    g = nx.path_graph(3)
    g.add_node(7)
    assert surrounding_influence(g, 7) == 0.0
    c6 = [surrounding_influence(nx.cycle_graph(6), v) for v in range(6)]
    assert c6[0] == pytest.approx(4 / math.sqrt(6), abs=1e-12)
    assert max(c6) - min(c6) < 1e-12
    star = nx.star_graph(5)
    vec = np.abs(np.linalg.eigh(nx.to_numpy_array(star))[1][:, -1])
    assert surrounding_influence(star, 0) == pytest.approx(5 * vec[0], abs=1e-12)
    assert surrounding_influence(star, 0) > surrounding_influence(star, 1)
    with pytest.raises(GraphError):
        surrounding_influence(star, 99)


def test_report_invariants():
    g = nx.barabasi_albert_graph(40, 2, seed=5)
    rep = surbi_rank(g, 0.3)
    assert np.allclose(rep.ni, 0.3 * rep.bi_norm + 0.7 * rep.si_norm)
    score = rep.score()
    for (u, v), ei in rep.edge_ei.items():
        assert ei == pytest.approx(score[u] + score[v])
    assert sorted(rep.ranking) == sorted(g.nodes)
    assert all(score[a] >= score[b] - 1e-12 for a, b in zip(rep.ranking, rep.ranking[1:]))
    top = rep.edge_ranking()[0]
    assert rep.edge_ei[top] == pytest.approx(max(rep.edge_ei.values()), abs=1e-12)
    assert np.all(np.isfinite(rep.ni))


def test_ties_break_by_node_id():
    rep = surbi_rank(nx.cycle_graph(6), 0.5)
    assert rep.ranking == tuple(range(6))


@pytest.mark.parametrize("seed", range(5))
def test_extreme_weights_reduce_to_single_component(seed):
    g = nx.barabasi_albert_graph(30, 2, seed=seed)
    bi = birnbaum_all(g)
    si = {v: surrounding_influence(g, v) for v in g}
    by = lambda s: sorted(g.nodes, key=lambda v: (-round(s[v], 12), v))
    assert list(surbi_rank(g, 1.0).ranking) == by({v: (bi[v] - min(bi.values())) for v in g})
    assert list(surbi_rank(g, 0.0).ranking) == by(si)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 100), st.floats(-50, 50), st.floats(0.01, 100), st.floats(-50, 50), st.floats(0, 1))
def test_ranking_invariant_under_affine_transforms(a, b, c, d, r):
    g = nx.barabasi_albert_graph(20, 2, seed=1)
    rep = surbi_rank(g, r)
    other = _combine(rep.nodes, a * rep.bi_raw + b, c * rep.si_raw + d, r, list(rep.edge_ei))
    assert np.allclose(other.ni, rep.ni, atol=1e-9)


def test_with_r_matches_fresh_ranking():
    g = nx.barabasi_albert_graph(25, 2, seed=2)
    assert np.allclose(surbi_rank(g, 0.3).with_r(0.8).ni, surbi_rank(g, 0.8).ni)
    with pytest.raises(ValueError):
        surbi_rank(g, 1.5)
    with pytest.raises(GraphError):
        surbi_rank(nx.Graph())


def test_minmax_constant_vector():
    assert minmax(np.full(4, 3.0)).tolist() == [0.0] * 4


def test_global_importance_examples():
    g = nx.barabasi_albert_graph(20, 2, seed=0)
    rep = surbi_rank(g)
    one = global_importance([rep], [1.0])
    for v, s in rep.score().items():
        assert one.phi[v] == pytest.approx(-math.exp(-s))
    zero = global_importance([rep, rep], [0.0, 0.0])
    assert set(zero.phi.values()) == {-1.0}
    with pytest.raises(ValueError):
        global_importance([rep], [0.5, 0.5])


def test_global_importance_absent_nodes_count_zero():
    a = surbi_rank(nx.path_graph(4))
    b = surbi_rank(nx.relabel_nodes(nx.star_graph(3), {0: 3, 1: 4, 2: 5, 3: 6}))
    gi = global_importance([a, b], [0.6, 0.4], universe=range(8))
    assert gi.phi[7] == -1.0
    for v in range(8):
        s = 0.6 * a.score().get(v, 0.0) + 0.4 * b.score().get(v, 0.0)
        assert gi.phi[v] == pytest.approx(-math.exp(-s))
        assert -1.0 <= gi.phi[v] <= 0.0
    exps = {v: -math.log(-gi.phi[v]) for v in range(8)}
    assert all(exps[x] >= exps[y] - 1e-12 for x, y in zip(gi.ranking, gi.ranking[1:]))


def test_report_csv(tmp_path):
    g = nx.barabasi_albert_graph(15, 2, seed=3)
    rep = surbi_rank(g)
    write_report_csv(rep, tmp_path / "n.csv", tmp_path / "e.csv")
    rows = read_csv(tmp_path / "n.csv")
    assert list(rows[0]) == ["node_id", "bi_raw", "si_raw", "ni", "rank"]
    assert [int(r["node_id"]) for r in rows] == list(rep.ranking)
    assert [int(r["rank"]) for r in rows] == list(range(1, 16))
    edges = read_csv(tmp_path / "e.csv")
    assert len(edges) == g.number_of_edges()
    assert float(edges[0]["ei"]) == pytest.approx(max(rep.edge_ei.values()))
