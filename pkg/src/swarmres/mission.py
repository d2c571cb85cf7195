"""Link reliability, percolation fragility, payload reliability and mission success.

Phase indices are 0-based throughout: phase ``j`` of an ``l``-phase plan
has ``0 <= j < l`` and payload reliability at phase ``j`` accumulates the
stressed durations of phases ``0..j``.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np
from scipy.sparse.csgraph import csgraph_from_dense, dijkstra

from .graphcore import LENGTH, GraphError, algebraic_connectivity
from .layered import LayeredNetwork, active_subgraph

# Returned by er_percolation when <k^2>/<k> <= 1: the phase is below the
# percolation threshold and counts as fully fragile.
FULLY_FRAGILE = math.inf


@dataclass(frozen=True)
class LinkModel:
    d0: float = 400.0
    n_exp: float = 2.0

    def __post_init__(self):
        if not self.d0 > 0:
            raise ValueError("d0 must be positive")
        if not self.n_exp >= 1:
            raise ValueError("path-loss exponent must be >= 1")


@dataclass(frozen=True)
class Phase:
    nodes: frozenset
    duration: float
    beta: float = 1.0
    uav_required: int | None = None
    usv_required: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "nodes", frozenset(self.nodes))
        if not self.duration > 0:
            raise ValueError("phase duration must be positive")
        if self.beta < 0:
            raise ValueError("phase weight beta must be non-negative")


@dataclass(frozen=True)
class MissionPlan:
    phases: tuple
    base_rates: dict = field(default_factory=dict)   # node -> failure rate per second
    stress: dict = field(default_factory=dict)       # (node, p, j) -> acceleration factor
    eta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "phases", tuple(self.phases))
        if not self.phases:
            raise ValueError("a mission needs at least one phase")
        if self.eta < 0:
            raise ValueError("eta must be non-negative")
        for key, xi in self.stress.items():
            if xi < 1:
                raise ValueError(f"stress factor {key} = {xi} is below 1")

    @property
    def betas(self) -> list:
        return [p.beta for p in self.phases]

    def xi(self, node, p: int, j: int) -> float:
        return self.stress.get((node, p, j), 1.0)

    def bridge_nodes(self, start: int = 0) -> frozenset:
        return frozenset.intersection(*(p.nodes for p in self.phases[start:]))

    def participation(self, node, start: int = 0) -> int:
        return sum(node in p.nodes for p in self.phases[start:])

    def eq5_violations(self, universe) -> list:
        """Human-readable list of broken phase-activation constraints."""
        out = []
        universe = set(universe)
        if sum(len(p.nodes) for p in self.phases) < len(universe):
            out.append("sum of phase sizes is smaller than the node count")
        for a in range(len(self.phases)):
            for b in range(a + 1, len(self.phases)):
                if not self.phases[a].nodes & self.phases[b].nodes:
                    out.append(f"phases {a} and {b} share no node")
        for j, p in enumerate(self.phases):
            if not p.nodes <= universe:
                out.append(f"phase {j} uses unknown nodes")
        return out

    def restrict(self, survivors) -> "MissionPlan":
        """Drop failed nodes from every phase (phases may become sparse)."""
        survivors = set(survivors)
        phases = tuple(Phase(p.nodes & survivors, p.duration, p.beta, p.uav_required, p.usv_required)
                       for p in self.phases)
        return MissionPlan(phases, self.base_rates, self.stress, self.eta)


@dataclass(frozen=True)
class PercolationSpec:
    kind: str = "scale-free"
    gamma: float = 2.5
    k_min: float = 1.0
    k_max: float = 100.0
    norm_const: float = 1.0

    def __post_init__(self):
        if self.kind not in ("ER", "scale-free"):
            raise ValueError(f"unknown percolation kind {self.kind!r}")
        if self.kind == "scale-free":
            if not self.gamma > 1:
                raise ValueError("gamma must exceed 1")
            if self.k_min > self.k_max:
                raise ValueError("k_min must not exceed k_max")


def link_failure_prob(d: float, lm: LinkModel) -> float:
    if d < 0:
        raise ValueError(f"negative distance {d}")
    return -math.expm1(-((d / lm.d0) ** lm.n_exp))


def link_weight(d: float, lm: LinkModel) -> float:
    """Survival probability W(d) = 1 - P_fail(d)."""
    if d < 0:
        raise ValueError(f"negative distance {d}")
    return math.exp(-((d / lm.d0) ** lm.n_exp))


def _edge_length(g, u, v):
    try:
        return g.edges[u, v][LENGTH]
    except KeyError:
        raise GraphError(f"edge ({u}, {v}) has no length") from None


def comm_success(g: nx.Graph, lm: LinkModel, i, j) -> float:
    """Most reliable path probability between ``i`` and ``j`` (max-product Dijkstra)."""
    if i not in g or j not in g:
        raise GraphError("endpoint not in graph")
    if i == j:
        return 1.0
    best = {i: 1.0}
    heap = [(-1.0, 0, i)]
    tie = 1
    done = set()
    while heap:
        negp, _, u = heapq.heappop(heap)
        if u in done:
            continue
        if u == j:
            return -negp
        done.add(u)
        for w in g.adj[u]:
            if w in done:
                continue
            p = -negp * link_weight(_edge_length(g, u, w), lm)
            if p > best.get(w, 0.0):
                best[w] = p
                heapq.heappush(heap, (-p, tie, w))
                tie += 1
    return 0.0


def pairwise_success(g: nx.Graph, lm: LinkModel) -> np.ndarray:
    """All-pairs most-reliable-path matrix via shortest paths on -ln W costs."""
    nodes = list(g.nodes)
    idx = {v: k for k, v in enumerate(nodes)}
    n = len(nodes)
    cost = np.full((n, n), np.inf)
    for u, v, d in g.edges(data=True):
        if LENGTH not in d:
            raise GraphError(f"edge ({u}, {v}) has no length")
        c = (d[LENGTH] / lm.d0) ** lm.n_exp   # -ln W(d)
        cost[idx[u], idx[v]] = cost[idx[v], idx[u]] = c
    dist = dijkstra(csgraph_from_dense(cost, null_value=np.inf), directed=False)
    return np.exp(-dist)


def global_comm_success(g: nx.Graph, lm: LinkModel) -> float:
    n = g.number_of_nodes()
    if n < 2:
        raise GraphError("global communication success needs at least 2 nodes")
    omega = pairwise_success(g, lm)
    iu = np.triu_indices(n, k=1)
    return float(2.0 * omega[iu].sum() / (n * (n - 1)))


def degree_moments(g: nx.Graph) -> tuple:
    k = np.fromiter((d for _, d in g.degree), dtype=float, count=g.number_of_nodes())
    if k.size == 0:
        return 0.0, 0.0
    return float(k.mean()), float((k ** 2).mean())


def er_percolation(g_j: nx.Graph) -> float:
    """Critical occupation probability 1/(k0 - 1) with k0 = <k^2>/<k> over ``g_j``.

    Returns :data:`FULLY_FRAGILE` when ``<k> = 0`` or ``k0 <= 1``.
    """
    k1, k2 = degree_moments(g_j)
    if k1 <= 0:
        return FULLY_FRAGILE
    k0 = k2 / k1
    if k0 <= 1:
        return FULLY_FRAGILE
    return 1.0 / (k0 - 1.0)


def scale_free_k0(spec: PercolationSpec) -> float:
    """Asymptotic <k^2>/<k> of a power-law degree distribution."""
    g = spec.gamma
    if g in (2, 3):
        raise ValueError(f"gamma={g} is a singular point; use empirical degree moments")
    if not g > 1:
        raise ValueError("gamma must exceed 1")
    pref = abs((2 - g) / (3 - g))
    if g > 3:
        return pref * spec.k_min
    if g > 2:
        return pref * spec.k_min ** (g - 2) * spec.k_max ** (3 - g)
    return pref * spec.k_max


def payload_reliability(plan: MissionPlan, node, j: int) -> float:
    if not 0 <= j < len(plan.phases):
        raise IndexError(f"phase {j} out of range")
    delta = plan.base_rates.get(node, 0.0)
    exposure = sum(plan.xi(node, p, j) * plan.phases[p].duration for p in range(j + 1))
    return math.exp(-delta * exposure)


def _topology(net) -> nx.Graph:
    return net.struct_ if isinstance(net, LayeredNetwork) else net


def phase_graphs(net, plan: MissionPlan) -> list:
    g = _topology(net)
    return [active_subgraph(g, [v for v in p.nodes if v in g]) for p in plan.phases]


def structural_factors(net, plan: MissionPlan, normalization: str = "clamp",
                       phases=None) -> list:
    """``1 - Normalization(P_Tj)`` for the selected phases (default: all).

    ``"clamp"`` (default) caps the critical probability at 1, so the factor is
    the tolerable removal fraction ``max(0, 1 - P_Tj)``. ``"minmax"`` rescales
    over the selected phases; a single phase or all-equal values give 1.
    Fully fragile phases get factor 0 under both schemes.
    """
    phases = list(range(len(plan.phases))) if phases is None else list(phases)
    graphs = phase_graphs(net, plan)
    pt = [er_percolation(graphs[j]) for j in phases]
    if normalization == "clamp":
        return [0.0 if math.isinf(p) else max(0.0, 1.0 - min(p, 1.0)) for p in pt]
    if normalization == "minmax":
        finite = [p for p in pt if not math.isinf(p)]
        lo, hi = (min(finite), max(finite)) if finite else (0.0, 0.0)
        out = []
        for p in pt:
            if math.isinf(p):
                out.append(0.0)
            elif hi == lo:
                out.append(1.0)
            else:
                out.append(1.0 - (p - lo) / (hi - lo))
        return out
    raise ValueError(f"unknown normalization {normalization!r}")


def phase_fragility(net, plan: MissionPlan, j: int, normalization: str = "clamp",
                    phases=None) -> float:
    """Phase survivability P_j: structural factor times payload reliability product."""
    phases = list(range(len(plan.phases))) if phases is None else list(phases)
    structural = structural_factors(net, plan, normalization, phases)[phases.index(j)]
    functional = 1.0
    for v in plan.phases[j].nodes:
        functional *= payload_reliability(plan, v, j)
    return structural * functional


def global_connectivity_score(net, plan: MissionPlan) -> float:
    total = 0.0
    for g_j, phase in zip(phase_graphs(net, plan), plan.phases):
        if g_j.number_of_nodes() >= 2 and nx.is_connected(g_j):
            total += phase.beta * algebraic_connectivity(g_j)
    return -math.exp(-total)


def bridge_penalty(net, plan: MissionPlan, start: int = 0, degree_mode: str = "participation") -> float:
    """Sum of deg(u) over the bridge nodes of phases ``start..``.

    ``participation`` counts phases a node takes part in; ``graph`` uses the
    node's degree in the topology.
    """
    bridge = plan.bridge_nodes(start)
    if degree_mode == "participation":
        return float(sum(plan.participation(u, start) for u in bridge))
    if degree_mode == "graph":
        g = _topology(net)
        return float(sum(g.degree[u] for u in bridge if u in g))
    raise ValueError(f"unknown degree mode {degree_mode!r}")


def mission_success(net, plan: MissionPlan, start: int = 0, normalization: str = "clamp",
                    degree_mode: str = "participation") -> float:
    """P_task over phases ``start..l-1`` (``start=0`` is the whole mission)."""
    phases = list(range(start, len(plan.phases)))
    factors = structural_factors(net, plan, normalization, phases)
    prod = 1.0
    for s, j in zip(factors, phases):
        functional = 1.0
        for v in plan.phases[j].nodes:
            functional *= payload_reliability(plan, v, j)
        prod *= s * functional
    penalty = bridge_penalty(net, plan, start, degree_mode)
    return prod * math.exp(-plan.eta * penalty)
