"""Swarm topology search: objectives, genome repair, attack-based selection and reconfiguration."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import networkx as nx
import numpy as np

from ..adversary import AttackPlan, run_campaign
from ..criticality import surbi_rank
from ..graphcore import LENGTH, algebraic_connectivity, edge_key, natural_connectivity
from ..layered import LayeredNetwork
from ..mission import LinkModel, MissionPlan, global_comm_success, mission_success
from .nsga3 import nsga3 as _nsga3
from .topsis import simplex_grid, topsis


class InfeasibleError(RuntimeError):
    """No connected topology can be built (CLI exit code 3)."""


@dataclass(frozen=True)
class ObjectiveVector:
    f1: float
    f2: float
    f3: float
    f4: int | None = None

    @property
    def minimization(self) -> tuple:
        image = (1.0 - self.f1, 1.0 - self.f2, self.f3)
        return image if self.f4 is None else image + (float(self.f4),)

    def as_dict(self) -> dict:
        d = {"f1": self.f1, "f2": self.f2, "f3": self.f3}
        if self.f4 is not None:
            d["f4"] = self.f4
        return d


@dataclass
class ParetoSolution:
    edges: frozenset
    graph: nx.Graph = field(repr=False)
    objectives: ObjectiveVector
    topsis_score: float | None = None
    decay_auc: float | None = None

    def as_dict(self) -> dict:
        d = {"edges": sorted([list(e) for e in self.edges])}
        d.update(self.objectives.as_dict())
        d["topsis_score"] = self.topsis_score
        d["decay_auc"] = self.decay_auc
        return d


def reconfiguration_cost(e_new, e_0) -> int:
    """Size of the symmetric difference between two edge sets."""
    a = {edge_key(*e) for e in e_new}
    b = {edge_key(*e) for e in e_0}
    return len(a) + len(b) - 2 * len(a & b)


def _topo(g_or_net):
    return g_or_net.comm if isinstance(g_or_net, LayeredNetwork) else g_or_net


def evaluate_static(g: nx.Graph, net, plan: MissionPlan, lm: LinkModel,
                    normalization: str = "clamp") -> ObjectiveVector | None:
    """(lambda2, global comm success, 1 - P_task) of a candidate; None if disconnected."""
    if g.number_of_nodes() < 2 or not nx.is_connected(g):
        return None
    return ObjectiveVector(algebraic_connectivity(g), global_comm_success(g, lm),
                           1.0 - mission_success(g, plan, normalization=normalization))


def subsequent_vulnerability(g: nx.Graph, net, plan: MissionPlan, j_a: int,
                             normalization: str = "clamp") -> float:
    """1 - P_task restricted to phases j_a.. (0-based) and their common bridge nodes."""
    if not 0 <= j_a < len(plan.phases):
        raise IndexError(f"attack phase {j_a} out of range")
    return 1.0 - mission_success(g, plan, start=j_a, normalization=normalization)


def feasibility_pool(positions: dict, nodes, comm_range: float) -> list:
    """All node pairs within ``comm_range`` (3D), shortest first."""
    nodes = sorted(nodes)
    pool = []
    for a, u in enumerate(nodes):
        pu = np.asarray(positions[u], dtype=float)
        for v in nodes[a + 1:]:
            d = float(np.linalg.norm(pu - np.asarray(positions[v], dtype=float)))
            if d <= comm_range:
                pool.append((d, (u, v)))
    pool.sort()
    return [(e, d) for d, e in pool]


class TopologyProblem:
    """Bit-per-pool-edge genome over a fixed node set.

    ``mode="static"`` minimizes (1-f1, 1-f2, f3); ``mode="dynamic"`` minimizes
    (1-f1, 1-f2, f3', f4) against the compromised edge set ``e0``.
    """

    def __init__(self, nodes, pool, n_edges: int, plan: MissionPlan, lm: LinkModel,
                 mode: str = "static", e0=(), attack_phase: int = 0, band: float = 0.05,
                 normalization: str = "clamp", seed_edges=()):
        if mode not in ("static", "dynamic"):
            raise ValueError(f"unknown mode {mode!r}")
        self.nodes = sorted(nodes)
        self.pool = [(edge_key(*e), max(float(d), np.finfo(float).tiny)) for e, d in pool]
        self.index = {e: k for k, (e, _) in enumerate(self.pool)}
        self.n_edges = n_edges
        self.lo = math.ceil(n_edges * (1 - band) - 1e-9)
        self.hi = math.floor(n_edges * (1 + band) + 1e-9)
        self.plan = plan
        self.lm = lm
        self.mode = mode
        self.e0 = frozenset(edge_key(*e) for e in e0)
        self.attack_phase = attack_phase
        self.normalization = normalization
        self.seed_edges = [frozenset(edge_key(*e) for e in s) for s in seed_edges]
        self.n_obj = 3 if mode == "static" else 4
        # shortest-first order is the pool order

    @property
    def n_bits(self) -> int:
        return len(self.pool)

    def genome(self, edges) -> np.ndarray:
        bits = np.zeros(self.n_bits, dtype=bool)
        for e in edges:
            k = self.index.get(edge_key(*e))
            if k is not None:
                bits[k] = True
        return bits

    def decode(self, bits) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self.nodes)
        for k in np.flatnonzero(bits):
            (u, v), d = self.pool[k]
            g.add_edge(u, v, **{LENGTH: d})
        return g

    def random_genome(self, rng) -> np.ndarray:
        p = min(1.0, self.n_edges / max(self.n_bits, 1))
        return rng.random(self.n_bits) < p

    def seeds(self, rng) -> list:
        return [self.genome(s) for s in self.seed_edges]

    def repair(self, bits) -> np.ndarray:
        """Join components with the shortest pool edges, then fit the edge-count band."""
        bits = np.array(bits, dtype=bool)
        g = self.decode(bits)
        comp = {v: k for k, c in enumerate(nx.connected_components(g)) for v in c}
        n_comp = len(set(comp.values()))
        if n_comp > 1:
            # Kruskal-style pass over the shortest-first pool
            parent = {c: c for c in set(comp.values())}

            def find(c):
                while parent[c] != c:
                    parent[c] = parent[parent[c]]
                    c = parent[c]
                return c

            for k, ((u, v), _) in enumerate(self.pool):
                a, b = find(comp[u]), find(comp[v])
                if a != b:
                    parent[a] = b
                    bits[k] = True
                    n_comp -= 1
                    if n_comp == 1:
                        break
            g = self.decode(bits)
        count = int(bits.sum())
        if count > self.hi:
            ei = surbi_rank(g).edge_ei
            order = sorted(ei, key=lambda e: (ei[e], e))
            bridges = {edge_key(*e) for e in nx.bridges(g)}
            for e in order:
                if count <= self.hi:
                    break
                if e in bridges:
                    continue
                g.remove_edge(*e)
                bits[self.index[e]] = False
                count -= 1
                bridges = {edge_key(*b) for b in nx.bridges(g)}
        elif count < self.lo:
            for k in range(self.n_bits):
                if count >= self.lo:
                    break
                if not bits[k]:
                    bits[k] = True
                    count += 1
        return bits

    def objectives(self, g) -> ObjectiveVector | None:
        if self.mode == "static":
            return evaluate_static(g, None, self.plan, self.lm, self.normalization)
        if g.number_of_nodes() < 2 or not nx.is_connected(g):
            return None
        return ObjectiveVector(
            algebraic_connectivity(g), global_comm_success(g, self.lm),
            subsequent_vulnerability(g, None, self.plan, self.attack_phase, self.normalization),
            reconfiguration_cost(g.edges, self.e0))

    def evaluate(self, bits):
        g = self.decode(bits)
        count = int(bits.sum())
        band_gap = max(0, self.lo - count, count - self.hi)
        if not nx.is_connected(g):
            return None, nx.number_connected_components(g) - 1 + band_gap
        if band_gap:
            return None, band_gap
        return self.objectives(g).minimization, 0

    def solution(self, bits) -> ParetoSolution:
        g = self.decode(bits)
        return ParetoSolution(frozenset(edge_key(u, v) for u, v in g.edges), g, self.objectives(g))


def optimize(problem: TopologyProblem, pop: int = 92, gens: int = 200, rng=None, **kw) -> list:
    """Pareto front of a topology problem as :class:`ParetoSolution` objects."""
    if problem.n_bits == 0:
        raise InfeasibleError("empty feasible edge pool")
    front = _nsga3(problem, pop, gens, rng, **kw)
    if not front:
        raise InfeasibleError(
            f"no connected topology with {problem.lo}..{problem.hi} edges was found in a pool of {problem.n_bits}")
    return [problem.solution(bits) for bits, _ in front]


def score_front(front, weights) -> list:
    """Copies of the front solutions carrying TOPSIS scores for ``weights``."""
    matrix = [s.objectives.minimization for s in front]
    res = topsis(matrix, weights)
    return [replace(s, topsis_score=float(sc)) for s, sc in zip(front, res.scores)]


def attack_auc(g: nx.Graph, fraction: float = 0.1, steps: int = 5, r: float = 0.3,
               rerank: bool = False) -> tuple:
    """Normalized decay AUC of a targeted NI campaign, plus the trace."""
    plan = AttackPlan("targeted", "nodes", fraction, steps, "surbi", r=r, rerank=rerank)
    trace = run_campaign(g, plan)
    return trace.auc(), trace


@dataclass
class Selection:
    weights: np.ndarray
    solution: ParetoSolution
    table: list    # per weight vector: (weights, front index, topsis score, auc)


def select_by_attack(front, weight_grid=None, net=None, plan=None, attack_fraction=0.1,
                     attack_steps=5, r=0.3, rerank=False) -> Selection:
    """Best TOPSIS pick per weight vector, judged by the slowest NI-attack decay."""
    if not front:
        raise ValueError("empty front")
    n_obj = len(front[0].objectives.minimization)
    grid = list(weight_grid) if weight_grid is not None else simplex_grid(n_obj)
    matrix = [s.objectives.minimization for s in front]
    cache = {}
    table = []
    best = None
    for w in grid:
        w = np.asarray(w, dtype=float)
        res = topsis(matrix, w)
        k = res.best
        if k not in cache:
            cache[k] = attack_auc(front[k].graph, attack_fraction, attack_steps, r, rerank)[0]
        auc = cache[k]
        table.append((w, k, float(res.scores[k]), auc))
        if best is None or auc > best[2]:
            best = (w, k, auc, float(res.scores[k]))
    w, k, auc, score = best
    return Selection(w, replace(front[k], topsis_score=score, decay_auc=auc), table)


@dataclass(frozen=True)
class ReconfigConfig:
    comm_range: float = 600.0
    link: LinkModel = LinkModel()
    pop: int = 92
    gens: int = 200
    attack_fraction: float = 0.1
    attack_steps: int = 5
    r: float = 0.3
    rerank: bool = False
    seed: int = 0
    weight_grid: tuple | None = None
    normalization: str = "clamp"


@dataclass
class ReconfigResult:
    g_star: ParetoSolution
    g0: nx.Graph
    front: list
    phi_g0: float
    phi_star: float
    selections: list     # TOPSIS pick per weight vector: (weights, index, score, auc)

    @property
    def front_mean_auc(self) -> float:
        return float(np.mean([s.decay_auc for s in self.front]))


def reconfigure(net0: LayeredNetwork, plan: MissionPlan, j_a: int, n_edges: int,
                cfg: ReconfigConfig = ReconfigConfig()) -> ReconfigResult:
    """Post-attack re-optimization: 4-objective search, then the slowest-decaying topology."""
    survivors = sorted(net0.struct_.nodes)
    if len(survivors) < 2:
        raise InfeasibleError("fewer than two surviving vehicles")
    g0 = _topo(net0)
    pool = feasibility_pool(net0.positions, survivors, cfg.comm_range)
    pool_graph = nx.Graph()
    pool_graph.add_nodes_from(survivors)
    pool_graph.add_edges_from(e for e, _ in pool)
    if not nx.is_connected(pool_graph):
        raise InfeasibleError(
            f"surviving vehicles cannot be connected within comm range {cfg.comm_range} m "
            f"({nx.number_connected_components(pool_graph)} components)")
    plan = plan.restrict(survivors)
    # the pre-attack edge budget may no longer fit the survivors
    n_edges = min(max(n_edges, len(survivors) - 1), len(pool))
    e0 = {edge_key(u, v) for u, v in g0.edges}
    problem = TopologyProblem(survivors, pool, n_edges, plan, cfg.link, "dynamic", e0, j_a,
                              normalization=cfg.normalization, seed_edges=[e0])
    rng = np.random.default_rng(cfg.seed)
    front = optimize(problem, cfg.pop, cfg.gens, rng)
    repaired_g0 = problem.solution(problem.repair(problem.genome(e0)))
    for k, s in enumerate(front):
        auc, _ = attack_auc(s.graph, cfg.attack_fraction, cfg.attack_steps, cfg.r, cfg.rerank)
        front[k] = replace(s, decay_auc=auc)
    phi_g0 = natural_connectivity(g0) if g0.number_of_nodes() else 0.0
    eligible = [s for s in front if natural_connectivity(s.graph) >= phi_g0]
    if not eligible:
        auc, _ = attack_auc(repaired_g0.graph, cfg.attack_fraction, cfg.attack_steps, cfg.r, cfg.rerank)
        eligible = [replace(repaired_g0, decay_auc=auc)]
    star = max(eligible, key=lambda s: (s.decay_auc, -s.objectives.f4 if s.objectives.f4 is not None else 0))
    grid = list(cfg.weight_grid) if cfg.weight_grid is not None else simplex_grid(4)
    matrix = [s.objectives.minimization for s in front]
    selections = []
    for w in grid:
        res = topsis(matrix, w)
        selections.append((np.asarray(w), res.best, float(res.scores[res.best]), front[res.best].decay_auc))
    return ReconfigResult(star, g0, front, phi_g0, natural_connectivity(star.graph), selections)
