"""Adversarial node/edge attacks, attack campaigns and the SIR calibration harness."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .criticality import CriticalityReport, rank_desc, surbi_rank
from .graphcore import (GraphError, adjacency, algebraic_connectivity, edge_key, k_shell,
                        natural_connectivity_or_zero)
from .layered import LayeredNetwork

METHODS = ("surbi", "kshell", "katz", "random")


# --- single attacks -----------------------------------------------------------

def attack_node(net: LayeredNetwork, v_a) -> LayeredNetwork:
    """Destroy vehicle ``v_a``: its comm module, comm links and hosted payloads go with it."""
    if v_a not in net.struct_:
        raise GraphError(f"unknown vehicle {v_a!r}")
    struct_ = net.struct_.copy()
    struct_.remove_node(v_a)
    comm = net.comm.copy()
    comm.remove_node(net.phi(v_a))
    task = net.task.copy()
    task.remove_nodes_from([u for u in net.payloads_of(v_a) if u in task])
    out = net.with_layers(comm, struct_, task)
    out.validate()
    return out


def attack_edges(net: LayeredNetwork, edge_set) -> LayeredNetwork:
    """Cut communication links; a vehicle whose module loses its last link fails."""
    comm = net.comm.copy()
    touched = set()
    for u, v in edge_set:
        if not comm.has_edge(u, v):
            raise GraphError(f"unknown communication edge ({u}, {v})")
        comm.remove_edge(u, v)
        touched.update((u, v))
    out = net.with_layers(comm=comm)
    for c in sorted(touched):
        if c in out.comm and out.comm.degree[c] == 0:
            out = attack_node(out, c)  # phi is the identity pairing
    return out


def remove_nodes(g: nx.Graph, nodes) -> nx.Graph:
    h = g.copy()
    h.remove_nodes_from(nodes)
    return h


# --- scores -------------------------------------------------------------------

def katz_scores(g: nx.Graph, damping: float = 0.9) -> dict:
    """Katz centrality with attenuation ``damping / lambda_max``."""
    nodes = list(g.nodes)
    if not nodes:
        return {}
    a = adjacency(g)
    lam = float(np.linalg.eigvalsh(a)[-1]) if g.number_of_edges() else 0.0
    if lam <= 0:
        return {v: 0.0 for v in nodes}
    alpha = damping / lam
    x = np.linalg.solve(np.eye(len(nodes)) - alpha * a, np.ones(len(nodes))) - 1.0
    return dict(zip(nodes, x.tolist()))


def node_scores(g: nx.Graph, method: str, r: float = 0.3) -> dict:
    if method == "surbi":
        return surbi_rank(g, r).score()
    if method == "kshell":
        return {v: float(s) for v, s in k_shell(g).items()}
    if method == "katz":
        return katz_scores(g)
    raise ValueError(f"no score for method {method!r}")


def edge_scores(g: nx.Graph, method: str, r: float = 0.3) -> dict:
    """Edge score = sum of endpoint scores (for SurBi this is EI)."""
    s = node_scores(g, method, r)
    return {edge_key(u, v): s[u] + s[v] for u, v in g.edges}


# --- campaigns ----------------------------------------------------------------

@dataclass(frozen=True)
class AttackPlan:
    mode: str = "targeted"            # "targeted" | "random"
    target: str = "nodes"             # "nodes" | "edges"
    fraction_per_step: float = 0.02
    steps: int = 25
    score_source: str | None = "surbi"   # surbi (NI/EI) | kshell | katz
    seed: int = 0
    rerank: bool = False
    r: float = 0.3
    attack_phase: int = 0

    def __post_init__(self):
        if self.mode not in ("targeted", "random"):
            raise ValueError(f"unknown attack mode {self.mode!r}")
        if self.target not in ("nodes", "edges"):
            raise ValueError(f"unknown attack target {self.target!r}")
        if not 0 < self.fraction_per_step <= 1:
            raise ValueError("fraction_per_step must lie in (0, 1]")
        if self.steps < 0:
            raise ValueError("steps must be non-negative")
        if self.fraction_per_step * self.steps > 1 + 1e-12:
            raise ValueError("fraction_per_step * steps exceeds 1")
        if self.mode == "targeted" and not self.score_source:
            raise ValueError("a targeted attack needs a score source")


@dataclass
class AttackTrace:
    removals: list                 # per step: list of removed node ids or edges
    phi: list                      # natural connectivity after each step (index 0 = intact)
    lambda2: list
    fractions: list                # removed fraction of the initial element count
    final: object = field(repr=False, default=None)

    def auc(self) -> float:
        return decay_auc(self.phi, self.fractions)


def decay_auc(phi, fractions) -> float:
    """Trapezoidal area under Phi/Phi_0 over the removed fraction."""
    phi = np.asarray(phi, dtype=float)
    if len(phi) < 2 or phi[0] <= 0:
        return 0.0
    y = phi / phi[0]
    x = np.asarray(fractions, dtype=float)
    return float(np.sum((y[1:] + y[:-1]) * np.diff(x)) / 2.0)


def _lambda2(g):
    return algebraic_connectivity(g) if g.number_of_nodes() >= 2 else 0.0


def _measure_graph(obj, target):
    if isinstance(obj, LayeredNetwork):
        # node attacks are tracked on the structure layer, edge attacks on the attacked comm layer
        return obj.struct_ if target == "nodes" else obj.comm
    return obj


def _elements(obj, target):
    g = _measure_graph(obj, target)
    if target == "nodes":
        return list(g.nodes)
    return [edge_key(u, v) for u, v in g.edges]


def _apply(obj, target, batch):
    if isinstance(obj, LayeredNetwork):
        if target == "nodes":
            for v in batch:
                if v in obj.struct_:
                    obj = attack_node(obj, v)
            return obj
        alive = [e for e in batch if obj.comm.has_edge(*e)]
        return attack_edges(obj, alive)
    h = obj.copy()
    if target == "nodes":
        h.remove_nodes_from(batch)
    else:
        h.remove_edges_from(batch)
    return h


def _scores_for(g, plan: AttackPlan):
    if plan.target == "nodes":
        return node_scores(g, plan.score_source, plan.r)
    return edge_scores(g, plan.score_source, plan.r)


def run_campaign(net, plan: AttackPlan, scores: dict | None = None, rng=None) -> AttackTrace:
    """Remove ceil(fraction * N0) elements per step and track the decay of Phi and lambda2.

    ``net`` is a graph or a :class:`LayeredNetwork`. Targeted mode ranks once
    up front (``scores`` or the plan's score source) unless ``plan.rerank``.
    """
    rng = np.random.default_rng(plan.seed if rng is None else rng)
    g0 = _measure_graph(net, plan.target)
    universe = _elements(net, plan.target)
    n0 = len(universe)
    per_step = math.ceil(plan.fraction_per_step * n0) if n0 else 0
    state = net
    phi = [natural_connectivity_or_zero(g0)]
    lam = [_lambda2(g0)]
    fractions = [0.0]
    removals = []
    removed = 0
    if plan.mode == "targeted":
        if scores is None:
            scores = _scores_for(g0, plan)
        missing = [e for e in universe if e not in scores]
        if missing:
            raise ValueError(f"scores missing for {len(missing)} elements")
        order = rank_desc(list(scores), list(scores.values()))
    else:
        order = [universe[k] for k in rng.permutation(n0)]
    for _ in range(plan.steps):
        alive = set(_elements(state, plan.target))
        if plan.mode == "targeted" and plan.rerank and alive:
            cur = _scores_for(_measure_graph(state, plan.target), plan)
            order = rank_desc(list(cur), list(cur.values()))
        candidates = [e for e in order if e in alive]
        batch = candidates[:min(per_step, n0 - removed)]
        removed += len(batch)
        state = _apply(state, plan.target, batch)
        g = _measure_graph(state, plan.target)
        removals.append(batch)
        phi.append(natural_connectivity_or_zero(g))
        lam.append(_lambda2(g))
        fractions.append(removed / n0 if n0 else 0.0)
    return AttackTrace(removals, phi, lam, fractions, state)


def random_campaigns(net, plan: AttackPlan, runs: int = 20, seed: int = 0) -> list:
    """Independent Monte-Carlo random campaigns with per-run child seeds."""
    children = np.random.SeedSequence(seed).spawn(runs)
    rand_plan = AttackPlan("random", plan.target, plan.fraction_per_step, plan.steps, None, seed)
    return [run_campaign(net, rand_plan, rng=np.random.default_rng(c)) for c in children]


def mean_curve(traces) -> tuple:
    phi = np.mean([t.phi for t in traces], axis=0)
    lam = np.mean([t.lambda2 for t in traces], axis=0)
    return phi.tolist(), lam.tolist(), list(traces[0].fractions)


# --- multi-phase removal --------------------------------------------------------

def phase_connectivity(graphs, removed=()) -> list:
    removed = set(removed)
    return [natural_connectivity_or_zero(remove_nodes(g, [v for v in g if v in removed]))
            for g in graphs]


def multiphase_campaign(graphs, betas, order, fraction_per_step, steps, n0=None) -> tuple:
    """Remove nodes in ``order`` from every phase graph; track sum_j beta_j Phi_j.

    Returns ``(curve, fractions)``.
    """
    universe = set().union(*(set(g.nodes) for g in graphs))
    n0 = n0 or len(universe)
    per_step = math.ceil(fraction_per_step * n0)
    removed = []
    curve = [float(np.dot(betas, phase_connectivity(graphs)))]
    fractions = [0.0]
    order = [v for v in order if v in universe]
    for s in range(steps):
        removed = order[:min(len(order), (s + 1) * per_step)]
        curve.append(float(np.dot(betas, phase_connectivity(graphs, removed))))
        fractions.append(len(removed) / n0)
    return curve, fractions


def phase_impact(graphs, betas, fraction: float = 0.1, r: float = 0.3) -> dict:
    """Per-phase Phi after removing the top ``fraction`` phase-critical or globally critical nodes.

    Phase-critical sets are taken from each phase's own active nodes; the
    global set is the same fraction of all nodes ranked by global importance.
    Keys: ``"none"``, ``"global"`` and one ``"phase{j}"`` per phase.
    """
    from .criticality import global_importance

    reports = [surbi_rank(g, r) for g in graphs]
    universe = sorted(set().union(*(set(g.nodes) for g in graphs)))
    out = {"none": phase_connectivity(graphs)}
    for j, rep in enumerate(reports):
        k = math.ceil(fraction * len(rep.nodes))
        out[f"phase{j}"] = phase_connectivity(graphs, rep.ranking[:k])
    gi = global_importance(reports, betas, universe)
    k = math.ceil(fraction * len(universe))
    out["global"] = phase_connectivity(graphs, gi.ranking[:k])
    return out


def compromise(net: LayeredNetwork, node_fraction: float = 0.1, edge_fraction: float = 0.1,
               r: float = 0.3) -> tuple:
    """NI-targeted node strike followed by an EI-targeted link strike on the comm layer.

    Returns ``(compromised network, removed vehicles, removed links)``.
    """
    n0 = net.struct_.number_of_nodes()
    k = math.ceil(node_fraction * n0) if node_fraction > 0 else 0
    victims = surbi_rank(net.comm, r).ranking[:k]
    for v in victims:
        net = attack_node(net, v)
    m0 = net.comm.number_of_edges()
    k = math.ceil(edge_fraction * m0) if edge_fraction > 0 and m0 else 0
    cut = surbi_rank(net.comm, r).edge_ranking()[:k]
    net = attack_edges(net, cut)
    return net, victims, cut


# --- SIR ----------------------------------------------------------------------

@dataclass(frozen=True)
class SirConfig:
    infection_prob: float = 0.1
    recovery_prob: float = 0.05
    max_ticks: int = 500
    repetitions: int = 30

    def __post_init__(self):
        for name in ("infection_prob", "recovery_prob"):
            p = getattr(self, name)
            if not 0 <= p <= 1:
                raise ValueError(f"{name} must be a probability")


@dataclass
class SirRun:
    peak_tick: int
    s: list
    i: list
    r: list


def sir_run(g: nx.Graph, cfg: SirConfig, seed_set, rng) -> SirRun:
    """Discrete-time SIR: infection then recovery, synchronous per tick."""
    nodes = list(g.nodes)
    index = {v: k for k, v in enumerate(nodes)}
    seeds = [index[v] for v in seed_set]
    if not seeds:
        raise ValueError("seed set is empty")
    a = nx.to_scipy_sparse_array(g, nodelist=nodes, weight=None, format="csr")
    n = len(nodes)
    state = np.zeros(n, dtype=np.int8)  # 0 S, 1 I, 2 R
    state[seeds] = 1
    s_hist, i_hist, r_hist = [n - len(seeds)], [len(seeds)], [0]
    log_escape = math.log1p(-cfg.infection_prob) if cfg.infection_prob < 1 else -math.inf
    for _ in range(cfg.max_ticks):
        infected = state == 1
        if not infected.any():
            break
        pressure = a @ infected.astype(float)
        with np.errstate(invalid="ignore"):
            p_inf = np.where(pressure > 0, -np.expm1(pressure * log_escape), 0.0)
        new_inf = (state == 0) & (rng.random(n) < p_inf)
        recover = infected & (rng.random(n) < cfg.recovery_prob)
        state[new_inf] = 1
        state[recover] = 2
        s_hist.append(int((state == 0).sum()))
        i_hist.append(int((state == 1).sum()))
        r_hist.append(int((state == 2).sum()))
    return SirRun(int(np.argmax(i_hist)), s_hist, i_hist, r_hist)


def sir_simulate(g: nx.Graph, cfg: SirConfig, seed_set, rng) -> int:
    """Tick at which the infected count first peaks."""
    return sir_run(g, cfg, seed_set, rng).peak_tick


@dataclass
class CalibrationResult:
    r: float
    flagged: bool
    table: list          # rows (r, group, mean_time_to_peak, monotone_ok)
    group_times: dict    # r -> list of mean times


def calibrate_r(g: nx.Graph, r_grid, group_size: int, n_groups: int, cfg: SirConfig, seed: int = 0,
                report: CriticalityReport | None = None) -> CalibrationResult:
    """Pick the SurBi weight r whose top-ranked groups peak in rank order, fastest first."""
    r_grid = [float(r) for r in r_grid]
    if not r_grid or any(not 0 <= r <= 1 for r in r_grid):
        raise ValueError("r grid must be a non-empty subset of [0, 1]")
    need = group_size * n_groups
    if need > g.number_of_nodes():
        raise ValueError(f"graph has fewer than {need} nodes")
    base = report or surbi_rank(g, r_grid[0])
    table, times = [], {}
    for r in r_grid:
        ranking = base.with_r(r).ranking
        groups = [ranking[k * group_size:(k + 1) * group_size] for k in range(n_groups)]
        means = []
        for k, grp in enumerate(groups):
            # same random stream per group index, so every r is judged on equal footing
            streams = np.random.SeedSequence([seed, k]).spawn(cfg.repetitions)
            peaks = [sir_simulate(g, cfg, grp, np.random.default_rng(s)) for s in streams]
            means.append(float(np.mean(peaks)))
        times[r] = means
        ok = all(b >= a for a, b in zip(means, means[1:]))
        for k, t in enumerate(means):
            table.append((r, k + 1, t, ok))
    violations = {r: sum(b < a for a, b in zip(t, t[1:])) for r, t in times.items()}
    fine = [r for r in r_grid if violations[r] == 0]
    if fine:
        best = min(fine, key=lambda r: (times[r][0], r_grid.index(r)))
        return CalibrationResult(best, False, table, times)
    best = min(r_grid, key=lambda r: (violations[r], times[r][0], r_grid.index(r)))
    return CalibrationResult(best, True, table, times)
