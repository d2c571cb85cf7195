import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swarmres.adversary import (AttackPlan, SirConfig, attack_edges, attack_node, calibrate_r,
                                compromise, decay_auc, katz_scores, mean_curve, multiphase_campaign,
                                phase_impact, random_campaigns, run_campaign, sir_run, sir_simulate)
from swarmres.graphcore import GraphError, natural_connectivity
from swarmres.layered import build_layered
from swarmres.mission import LinkModel, comm_success
from swarmres.scenarios import gen_contested3d, gen_pln


def pos(n, m):
    p = {v: (100.0 * v, 0.0, 200.0) for v in range(n)}
    p.update({v: (100.0 * v, 50.0, 0.0) for v in range(n, n + m)})
    return p


def test_attack_no_edges_is_identity():
    net, _ = gen_contested3d(seed=1)
    out = attack_edges(net, [])
    assert set(out.comm.edges) == set(net.comm.edges)
    assert set(out.struct_.nodes) == set(net.struct_.nodes)


def test_cutting_only_edge_fails_both_vehicles():
    net = build_layered(1, 1, 2, 3, [(0, 1)], [(0, 1)], [], pos(1, 1))
    out = attack_edges(net, [(0, 1)])
    assert out.struct_.number_of_nodes() == 0
    assert out.comm.number_of_nodes() == 0
    assert out.task.number_of_nodes() == 0


def test_cutting_one_of_two_paths_keeps_nodes():
    edges = [(0, 1), (1, 3), (0, 2), (2, 3)]
    net = build_layered(2, 2, 1, 1, edges, edges, [], pos(2, 2))
    lm = LinkModel()
    out = attack_edges(net, [(0, 2)])
    assert set(out.struct_.nodes) == {0, 1, 2, 3}
    via_1 = math.prod(math.exp(-((net.comm.edges[e]["length"] / 400.0) ** 2)) for e in [(0, 1), (1, 3)])
    assert comm_success(out.comm, lm, 0, 3) == pytest.approx(via_1, rel=1e-12)
    assert comm_success(net.comm, lm, 0, 3) >= comm_success(out.comm, lm, 0, 3)
    with pytest.raises(GraphError):
        attack_edges(net, [(0, 3)])


def test_attack_uav_removes_payloads():
    net, _ = gen_contested3d(seed=0)
    out = attack_node(net, 4)
    assert out.struct_.number_of_nodes() == net.struct_.number_of_nodes() - 1
    assert out.comm.number_of_nodes() == net.comm.number_of_nodes() - 1
    assert out.task.number_of_nodes() == net.task.number_of_nodes() - 2
    usv = attack_node(net, 40)
    assert usv.task.number_of_nodes() == net.task.number_of_nodes() - 3
    assert set(usv.comm.nodes) == set(usv.struct_.nodes)
    assert all(usv.host(u) in usv.struct_ for u in usv.task)
    with pytest.raises(GraphError):
        attack_node(net, 999)


def test_attack_everything_empties_all_layers():
    net, _ = gen_contested3d(n_uav=4, n_usv=3, seed=2, comm_range=1500)
    for v in range(7):
        net = attack_node(net, v)
    assert net.struct_.number_of_nodes() == net.comm.number_of_nodes() == net.task.number_of_nodes() == 0


def test_campaign_zero_steps():
    g = gen_pln(50, 2, seed=0)
    trace = run_campaign(g, AttackPlan(steps=0))
    assert trace.phi == [pytest.approx(natural_connectivity(g))]
    assert trace.removals == []


@pytest.mark.parametrize("fraction,steps", [(0.02, 25), (0.07, 10), (0.3, 3), (0.25, 4)])
def test_campaign_removal_counts(fraction, steps):
    g = gen_pln(60, 2, seed=1)
    trace = run_campaign(g, AttackPlan("targeted", "nodes", fraction, steps))
    per = math.ceil(fraction * 60)
    assert sum(len(b) for b in trace.removals) == min(per * steps, 60)
    flat = [v for b in trace.removals for v in b]
    assert len(flat) == len(set(flat))
    assert all(p >= 0 for p in trace.phi)
    assert trace.fractions[-1] == pytest.approx(min(per * steps, 60) / 60)


def test_full_removal_ends_at_zero():
    g = gen_pln(40, 2, seed=1)
    trace = run_campaign(g, AttackPlan("random", "nodes", 0.25, 4, None, seed=3))
    assert trace.phi[-1] == 0.0 and trace.lambda2[-1] == 0.0


def test_targeted_uses_static_ranking():
    g = gen_pln(80, 2, seed=4)
    scores = {v: float(-v) for v in g}
    trace = run_campaign(g, AttackPlan("targeted", "nodes", 0.05, 3), scores=scores)
    assert [v for b in trace.removals for v in b] == list(range(12))
    with pytest.raises(ValueError):
        run_campaign(g, AttackPlan(), scores={0: 1.0})


def test_random_mode_is_reproducible():
    g = gen_pln(80, 2, seed=4)
    plan = AttackPlan("random", "edges", 0.05, 5, None, seed=11)
    a, b = run_campaign(g, plan), run_campaign(g, plan)
    assert a.removals == b.removals and a.phi == b.phi
    runs = random_campaigns(g, plan, 5, seed=2)
    again = random_campaigns(g, plan, 5, seed=2)
    assert [t.phi for t in runs] == [t.phi for t in again]
    phi, lam, frac = mean_curve(runs)
    assert phi == pytest.approx(np.mean([t.phi for t in runs], axis=0).tolist())
    assert len(lam) == len(frac) == 6


def test_rerank_and_baselines_run():
    g = gen_pln(60, 2, seed=5)
    for source in ("surbi", "kshell", "katz"):
        t = run_campaign(g, AttackPlan("targeted", "nodes", 0.05, 4, source, rerank=True))
        assert len(t.phi) == 5
    with pytest.raises(ValueError):
        AttackPlan("targeted", score_source=None)
    with pytest.raises(ValueError):
        AttackPlan(fraction_per_step=0.5, steps=3)


def test_layered_edge_campaign():
    net, _ = gen_contested3d(seed=3)
    t = run_campaign(net, AttackPlan("targeted", "edges", 0.05, 4))
    assert sum(len(b) for b in t.removals) == 4 * math.ceil(0.05 * net.comm.number_of_edges())
    assert t.final.comm.number_of_edges() <= net.comm.number_of_edges() - 4 * math.ceil(
        0.05 * net.comm.number_of_edges())


def test_decay_auc_trapezoid():
    assert decay_auc([2.0, 1.0, 0.0], [0.0, 0.1, 0.2]) == pytest.approx(0.1)
    assert decay_auc([0.0, 0.0], [0.0, 0.1]) == 0.0


def test_katz_matches_linear_solve():
    g = nx.karate_club_graph()
    a = nx.to_numpy_array(g, weight=None)
    alpha = 0.9 / max(np.linalg.eigvalsh(a))
    want = np.linalg.inv(np.eye(len(a)) - alpha * a) @ np.ones(len(a)) - 1
    got = katz_scores(g)
    assert np.allclose([got[v] for v in g], want)


def test_sir_examples():
    g = nx.complete_graph(8)
    assert sir_simulate(g, SirConfig(0.0, 0.3, 50, 1), [0, 1], np.random.default_rng(0)) == 0
    run = sir_run(g, SirConfig(0.0, 0.3, 50, 1), [0, 1], np.random.default_rng(0))
    assert run.i[0] == 2
    assert sir_simulate(g, SirConfig(1.0, 0.0, 50, 1), [3], np.random.default_rng(0)) == 1
    with pytest.raises(ValueError):
        sir_simulate(g, SirConfig(), [], np.random.default_rng(0))
    with pytest.raises(ValueError):
        SirConfig(infection_prob=1.5)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(0, 1), st.floats(0, 1))
def test_sir_conservation_and_determinism(seed, beta, gamma):
    g = nx.barabasi_albert_graph(40, 2, seed=seed % 7)
    cfg = SirConfig(beta, gamma, 60, 1)
    run = sir_run(g, cfg, [0, 5], np.random.default_rng(seed))
    assert all(s + i + r == 40 for s, i, r in zip(run.s, run.i, run.r))
    assert all(b >= a for a, b in zip(run.r, run.r[1:]))
    assert run.peak_tick == int(np.argmax(run.i))
    again = sir_run(g, cfg, [0, 5], np.random.default_rng(seed))
    assert again.i == run.i


def test_calibrate_single_r():
    g = gen_pln(60, 2, seed=0)
    res = calibrate_r(g, [0.5], 5, 3, SirConfig(0.2, 0.1, 80, 3), seed=1)
    assert res.r == 0.5
    assert len(res.table) == 3
    with pytest.raises(ValueError):
        calibrate_r(g, [1.2], 5, 3, SirConfig())
    with pytest.raises(ValueError):
        calibrate_r(g, [0.3], 50, 3, SirConfig())


def test_phase_impact_shapes():
    base = gen_pln(80, 2, seed=3)
    from swarmres.scenarios import gen_multiphase
    plan, graphs = gen_multiphase(base, 3, seed=3)
    out = phase_impact(graphs, plan.betas, 0.1)
    assert set(out) == {"none", "global", "phase0", "phase1", "phase2"}
    assert all(len(v) == 3 for v in out.values())
    for j in range(3):
        assert out[f"phase{j}"][j] < out["none"][j]
    universe = set().union(*(set(g) for g in graphs))
    curve, frac = multiphase_campaign(graphs, plan.betas, sorted(base.nodes), 0.1, 3)
    assert curve[0] == pytest.approx(np.dot(plan.betas, out["none"]))
    per = math.ceil(0.1 * len(universe))
    assert frac == pytest.approx([k * per / len(universe) for k in range(4)])


def test_compromise_counts():
    net, _ = gen_contested3d(seed=0)
    out, victims, cut = compromise(net, 0.1, 0.1)
    assert len(victims) == 5
    assert all(v not in out.struct_ for v in victims)
    assert all(not out.comm.has_edge(*e) for e in cut)
    empty, v0, c0 = compromise(net, 0.0, 0.0)
    assert v0 == () and c0 == [] and set(empty.comm.edges) == set(net.comm.edges)
