"""Seeded generators for the three experiment datasets.

* PLN: a connected scale-free graph (shifted-linear preferential attachment).
* multiphase: a five-phase mission over a PLN base with per-phase rewiring.
* contested3d: 30 UAVs + 20 USVs in a 1 km cube with a connected radio topology.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import networkx as nx
import numpy as np

from .layered import LayeredNetwork, build_layered
from .mission import LinkModel, MissionPlan, Phase
from .optimize.topology import InfeasibleError, feasibility_pool

STREAMS = {"generation": 0, "attacks": 1, "sir": 2, "nsga": 3, "gcn": 4}


def stream(seed: int, name: str) -> np.random.Generator:
    """Independent generator for one named purpose under a master seed."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), STREAMS[name]]))


def stream_seed(seed: int, name: str) -> int:
    return int(stream(seed, name).integers(2**31 - 1))


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    dataset: str = "pln"                    # pln | multiphase | contested3d
    nodes: int = 1000
    attachment: int = 2
    gamma: float | None = None
    phases: int = 5
    active_fraction: float = 0.5
    rewire: float = 1.0
    n_uav: int = 30
    n_usv: int = 20
    bounds: tuple = (1000.0, 1000.0, 1000.0)
    comm_range: float = 600.0
    mean_degree: float = 4.0
    d0: float = 400.0
    n_exp: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if self.dataset not in ("pln", "multiphase", "contested3d"):
            raise ScenarioError(f"unknown dataset {self.dataset!r}")
        if self.nodes <= 0 or self.n_uav < 0 or self.n_usv < 0 or self.phases <= 0:
            raise ScenarioError("counts must be positive")
        if any(b <= 0 for b in self.bounds):
            raise ScenarioError("bounds must be positive")

    @property
    def link(self) -> LinkModel:
        return LinkModel(self.d0, self.n_exp)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["bounds"] = list(self.bounds)
        return d


def gen_pln(n: int = 1000, m: int = 2, seed: int = 0, gamma: float | None = None) -> nx.Graph:
    """Connected scale-free graph; ``gamma`` (> 2) sets the tail exponent, default 3.

    New nodes attach to ``m`` distinct targets with probability proportional
    to ``degree + a`` where ``a = m (gamma - 3)``. Node labels are shuffled so
    ids carry no information about arrival order.
    """
    if n < 10:
        raise ScenarioError("PLN graphs need at least 10 nodes")
    if m < 1 or m >= n:
        raise ScenarioError("attachment must be in [1, n)")
    gamma = 3.0 if gamma is None else float(gamma)
    if gamma <= 2:
        raise ScenarioError("gamma must exceed 2 for preferential attachment")
    a = m * (gamma - 3.0)
    rng = np.random.default_rng(seed)
    core = m + 1 if m > 1 else 2
    edges = [(u, v) for u in range(core) for v in range(u + 1, core)]
    degree = np.zeros(n)
    for u, v in edges:
        degree[u] += 1
        degree[v] += 1
    for new in range(core, n):
        w = degree[:new] + a
        w = np.clip(w, 1e-12, None)
        targets = rng.choice(new, size=m, replace=False, p=w / w.sum())
        for t in sorted(int(t) for t in targets):
            edges.append((t, new))
            degree[t] += 1
            degree[new] += 1
    labels = rng.permutation(n)
    g = nx.Graph()
    g.add_nodes_from(range(n))
    g.add_edges_from((int(labels[u]), int(labels[v])) for u, v in edges)
    return g


def largest_component(g: nx.Graph) -> set:
    comps = list(nx.connected_components(g))
    if not comps:
        return set()
    return max(comps, key=lambda c: (len(c), -min(c)))


def _rewired(base: nx.Graph, rewire: float, rng) -> nx.Graph:
    nodes = sorted(base.nodes)
    k = int(round(rewire * len(nodes)))
    if k < 2:
        return base
    chosen = rng.choice(len(nodes), size=k, replace=False)
    shuffled = rng.permutation(chosen)
    mapping = {v: v for v in nodes}
    for src, dst in zip(chosen, shuffled):
        mapping[nodes[src]] = nodes[dst]
    return nx.relabel_nodes(base, mapping, copy=True)


def gen_multiphase(base: nx.Graph, phases: int = 5, seed: int = 0, active_fraction: float = 0.5,
                   rewire: float = 1.0, bridge_fraction: float = 0.02, uav_fraction: float = 0.6,
                   duration: float = 600.0, delta: float = 1e-6, eta: float = 1e-3,
                   max_tries: int = 50) -> tuple:
    """Mission plan plus one phase graph per phase over the nodes of ``base``.

    Each phase activates a random node subset (always containing a shared
    bridge set), rewires the base by permuting a ``rewire`` fraction of node
    labels (same degree structure, different wiring), and keeps the largest
    connected component of the induced active graph. A single-phase plan
    keeps the base wiring.
    """
    if not nx.is_connected(base):
        raise ScenarioError("base graph must be connected")
    rng = np.random.default_rng(seed)
    nodes = sorted(base.nodes)
    n = len(nodes)
    n_uav = int(round(uav_fraction * n))
    size = max(2, int(round(active_fraction * n)))
    n_bridge = max(1, int(round(bridge_fraction * n)))
    if n_bridge > size:
        raise ScenarioError("bridge set larger than a phase")
    for _ in range(max_tries):
        bridge = set(rng.choice(nodes, size=n_bridge, replace=False).tolist())
        others = [v for v in nodes if v not in bridge]
        graphs = []
        for _j in range(phases):
            if size >= n:
                active = set(nodes)
            else:
                active = bridge | set(rng.choice(others, size=size - n_bridge, replace=False).tolist())
            topo = _rewired(base, rewire, rng) if phases > 1 else base
            induced = topo.subgraph(sorted(active))
            keep = largest_component(induced)
            graphs.append(nx.Graph(induced.subgraph(sorted(keep))))
        plan = MissionPlan(tuple(
            Phase(frozenset(g.nodes), duration, 1.0 / phases,
                  sum(1 for v in g if v < n_uav), sum(1 for v in g if v >= n_uav))
            for g in graphs), {v: delta for v in nodes}, {}, eta)
        if not plan.eq5_violations(nodes):
            return plan, graphs
    raise ScenarioError(f"could not satisfy the phase-activation constraints in {max_tries} draws")


def gen_contested3d(n_uav: int = 30, n_usv: int = 20, bounds=(1000.0, 1000.0, 1000.0),
                    comm_range: float = 600.0, seed: int = 0, mean_degree: float = 4.0,
                    x: int = 2, y: int = 3, z: int = 3, phases: int = 3,
                    positions: dict | None = None) -> tuple:
    """Layered swarm in a 3D box plus a mission plan.

    USVs sit at z = 0, UAVs at z ~ U[50, bounds_z]. The radio topology is the
    minimum spanning tree of the in-range pairs plus random in-range links up
    to ``mean_degree``. Comm and structure layers share that topology; each
    vehicle's payloads are chained in the task layer.
    """
    rng = np.random.default_rng(seed)
    n = n_uav + n_usv
    bx, by, bz = (float(b) for b in bounds)
    if positions is None:
        positions = {}
        for v in range(n):
            px, py = rng.uniform(0, bx), rng.uniform(0, by)
            pz = rng.uniform(min(50.0, bz), bz) if v < n_uav else 0.0
            positions[v] = (float(px), float(py), float(pz))
    pool = feasibility_pool(positions, range(n), comm_range)
    pool_graph = nx.Graph()
    pool_graph.add_nodes_from(range(n))
    for (u, v), d in pool:
        pool_graph.add_edge(u, v, weight=d)
    if n > 1 and not nx.is_connected(pool_graph):
        raise InfeasibleError(f"in-range links leave the swarm disconnected; increase comm_range above {comm_range} m")
    tree = {tuple(sorted(e)) for e in nx.minimum_spanning_edges(pool_graph, weight="weight", data=False)}
    target = max(len(tree), int(round(mean_degree * n / 2)))
    extra = [e for e, _ in pool if e not in tree]
    picks = rng.permutation(len(extra))[: max(0, target - len(tree))]
    topo = sorted(tree | {extra[k] for k in picks})
    task_edges = []
    for v in range(n):
        per = x if v < n_uav else y
        base = v * x if v < n_uav else n_uav * x + (v - n_uav) * y
        task_edges.extend((base + k, base + k + 1) for k in range(per - 1))
    net = build_layered(n_uav, n_usv, x, y, topo, topo, task_edges, positions, z=z)
    plan = _contested_plan(net, phases, rng)
    return net, plan


def _contested_plan(net: LayeredNetwork, phases: int, rng, active_fraction: float = 0.6,
                    bridge: int = 3, duration: float = 1200.0, delta: float = 2e-5,
                    eta: float = 0.01) -> MissionPlan:
    vehicles = list(range(net.n + net.m))
    n = len(vehicles)
    bridge_set = set(rng.choice(vehicles, size=min(bridge, n), replace=False).tolist()) if n else set()
    size = max(len(bridge_set), int(math.ceil(active_fraction * n)))
    others = [v for v in vehicles if v not in bridge_set]
    plist = []
    for _ in range(phases):
        active = bridge_set | set(rng.choice(others, size=min(len(others), size - len(bridge_set)),
                                             replace=False).tolist())
        plist.append(Phase(frozenset(active), duration, 1.0 / phases,
                           sum(1 for v in active if v < net.n), sum(1 for v in active if v >= net.n)))
    return MissionPlan(tuple(plist), {v: delta for v in vehicles}, {}, eta)
