"""Coupled communication / structure / task network of a UAV-USV swarm.

Vehicles are numbered ``0..n+m-1`` (UAVs first). The communication module
of vehicle ``v`` is comm node ``v`` (identity pairing), and payload ``k`` of
vehicle ``v`` is task node ``v*x + k`` for UAVs and ``n*x + (v-n)*y + k`` for
USVs. Inter-layer edges are never materialized; their counts follow from
``n, m, x, y``.

Node references that must name a layer use ``(layer, id)`` tuples with
layer one of ``"C"``, ``"S"``, ``"T"``.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .graphcore import LENGTH, GraphError

LAYERS = ("C", "S", "T")


class LayeredNetworkError(ValueError):
    pass


@dataclass(frozen=True)
class LayeredNetwork:
    n: int
    m: int
    x: int
    y: int
    z: int
    comm: nx.Graph
    struct_: nx.Graph
    task: nx.Graph
    positions: dict = field(repr=False)
    payload_types: dict = field(default_factory=dict, repr=False)

    # canonical mappings -------------------------------------------------
    def phi(self, v: int) -> int:
        return v

    def host(self, u: int) -> int:
        nx_ = self.n * self.x
        if u < nx_:
            return u // self.x
        return self.n + (u - nx_) // self.y

    def payloads_of(self, v: int) -> range:
        if v < self.n:
            return range(v * self.x, (v + 1) * self.x)
        base = self.n * self.x + (v - self.n) * self.y
        return range(base, base + self.y)

    def is_uav(self, v: int) -> bool:
        return v < self.n

    def layer(self, name: str) -> nx.Graph:
        return {"C": self.comm, "S": self.struct_, "T": self.task}[name]

    @property
    def vehicles(self) -> list:
        return list(self.struct_.nodes)

    def topology(self) -> nx.Graph:
        """The communication layer, i.e. the graph the optimizer rewires."""
        return self.comm

    def with_layers(self, comm=None, struct_=None, task=None) -> "LayeredNetwork":
        return LayeredNetwork(
            self.n, self.m, self.x, self.y, self.z,
            comm if comm is not None else self.comm,
            struct_ if struct_ is not None else self.struct_,
            task if task is not None else self.task,
            self.positions, self.payload_types,
        )

    def validate(self) -> None:
        """Raise :class:`LayeredNetworkError` naming the first violated invariant."""
        vehicles = set(self.struct_.nodes)
        universe = set(range(self.n + self.m))
        if not vehicles <= universe:
            raise LayeredNetworkError(f"structure layer has unknown vehicles {sorted(vehicles - universe)}")
        if set(self.comm.nodes) != {self.phi(v) for v in vehicles}:
            raise LayeredNetworkError("phi is not a bijection between structure and communication nodes")
        expected_tasks = {u for v in vehicles for u in self.payloads_of(v)}
        tasks = set(self.task.nodes)
        if tasks - expected_tasks:
            raise LayeredNetworkError(f"orphan payloads without a live host: {sorted(tasks - expected_tasks)[:5]}")
        if expected_tasks - tasks:
            raise LayeredNetworkError("task layer cardinality does not match n*x + m*y for the live vehicles")
        for v in vehicles:
            if v not in self.positions:
                raise LayeredNetworkError(f"vehicle {v} has no position")
            if not self.is_uav(v) and self.positions[v][2] != 0:
                raise LayeredNetworkError(f"USV {v} must sit on the sea surface (z=0)")
        for g in (self.comm, self.struct_, self.task):
            if nx.number_of_selfloops(g):
                raise LayeredNetworkError("self-loop in a layer")


def _distance(positions, u, v) -> float:
    return float(np.linalg.norm(np.subtract(positions[u], positions[v])))


def _layer_graph(nodes, edges, name, positions=None) -> nx.Graph:
    g = nx.Graph()
    g.add_nodes_from(nodes)
    for u, v in edges:
        if u == v:
            raise LayeredNetworkError(f"{name} layer: self-loop on {u}")
        if u not in g or v not in g:
            raise LayeredNetworkError(f"{name} layer: edge ({u}, {v}) references an unknown node")
        if g.has_edge(u, v):
            raise LayeredNetworkError(f"{name} layer: duplicate edge ({u}, {v})")
        g.add_edge(u, v)
        if positions is not None:
            d = _distance(positions, u, v)
            if d > 0:
                g.edges[u, v][LENGTH] = d
            else:
                # co-located vehicles: keep a positive length so the edge stays usable
                g.edges[u, v][LENGTH] = np.finfo(float).tiny
    return g


def build_layered(n, m, x, y, comm_edges=(), struct_edges=(), task_edges=(),
                  positions=None, z=1, payload_types=None) -> LayeredNetwork:
    """Assemble and validate the three-layer network.

    ``positions`` maps each vehicle to ``(x, y, z)`` meters; communication and
    structure edges get their 3D Euclidean length attached.
    """
    for name, val in (("n", n), ("m", m), ("x", x), ("y", y)):
        if int(val) != val or val < 0:
            raise LayeredNetworkError(f"{name} must be a non-negative integer, got {val!r}")
    vehicles = range(n + m)
    positions = {int(k): tuple(float(c) for c in p) for k, p in dict(positions or {}).items()}
    missing = [v for v in vehicles if v not in positions]
    if missing:
        raise LayeredNetworkError(f"positions missing for vehicles {missing[:5]}")
    comm = _layer_graph(vehicles, comm_edges, "communication", positions)
    struct_ = _layer_graph(vehicles, struct_edges, "structure", positions)
    task = _layer_graph(range(n * x + m * y), task_edges, "task")
    if payload_types is None:
        payload_types = {u: (u % max(z, 1)) for u in task.nodes}
    net = LayeredNetwork(n, m, x, y, z, comm, struct_, task, positions, dict(payload_types))
    net.validate()
    return net


def cross_layer_degree(net: LayeredNetwork, node) -> int:
    """Number of inter-layer edges at ``(layer, id)``."""
    layer, i = node
    if layer not in LAYERS or i not in net.layer(layer):
        raise KeyError(f"unknown node {node!r}")
    if layer == "T":
        return 1
    return 1 + (net.x if net.is_uav(i) else net.y)


@dataclass(frozen=True)
class DegreeReport:
    total: dict        # (layer, id) -> k
    intra: dict        # (layer, id) -> k(G_L)
    cross: dict        # (layer, id) -> k^l
    average_degree: float
    ccdf: dict         # k -> P_T(k) = fraction of nodes with degree >= k


def degree_report(net: LayeredNetwork) -> DegreeReport:
    intra, cross, total = {}, {}, {}
    for layer in LAYERS:
        g = net.layer(layer)
        for v in g.nodes:
            key = (layer, v)
            intra[key] = g.degree[v]
            cross[key] = cross_layer_degree(net, key)
            total[key] = intra[key] + cross[key]
    count = len(total)
    avg = sum(total.values()) / count if count else 0.0
    ccdf = {0: 1.0}
    if count:
        hist = Counter(total.values())
        running = 0
        for k in range(max(hist), -1, -1):
            running += hist.get(k, 0)
            ccdf[k] = running / count
        ccdf = dict(sorted(ccdf.items()))
    return DegreeReport(total, intra, cross, avg, ccdf)


def active_subgraph(net, phase_nodes) -> nx.Graph:
    """Structure layer (or a bare graph) induced on the phase's active vehicles."""
    g = net.struct_ if isinstance(net, LayeredNetwork) else net
    phase_nodes = set(phase_nodes)
    unknown = phase_nodes - set(g.nodes)
    if unknown:
        raise GraphError(f"phase references unknown nodes {sorted(unknown)[:5]}")
    return g.subgraph([v for v in g.nodes if v in phase_nodes]).copy()
