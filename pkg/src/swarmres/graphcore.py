"""Undirected simple graphs, spectral robustness measures and centrality features.

Graphs are plain :class:`networkx.Graph` objects with hashable (normally
integer) node ids. An optional ``length`` edge attribute carries the link
length in meters. Functions here never mutate their input.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import networkx as nx
import numpy as np
from scipy.special import logsumexp
from scipy.stats import rankdata

LENGTH = "length"

FEATURE_NAMES = ("DC", "BC", "EC", "CC", "KS")


class GraphError(ValueError):
    """Raised when a graph violates a structural precondition."""


def make_graph(nodes=(), edges=(), lengths=None) -> nx.Graph:
    """Build a validated simple graph.

    ``edges`` holds ``(u, v)`` pairs; ``lengths`` optionally maps an edge
    (either orientation) to its length in meters.
    """
    g = nx.Graph()
    g.add_nodes_from(nodes)
    for u, v in edges:
        if u == v:
            raise GraphError(f"self-loop on node {u!r}")
        if g.has_edge(u, v):
            raise GraphError(f"duplicate edge ({u!r}, {v!r})")
        if u not in g or v not in g:
            raise GraphError(f"edge ({u!r}, {v!r}) references a node not in the graph")
        g.add_edge(u, v)
    if lengths:
        for (u, v), d in lengths.items():
            if not g.has_edge(u, v):
                raise GraphError(f"length given for missing edge ({u!r}, {v!r})")
            if not d > 0:
                raise GraphError(f"edge ({u!r}, {v!r}) has non-positive length {d!r}")
            g.edges[u, v][LENGTH] = float(d)
    return g


def edge_key(u, v) -> tuple:
    """Canonical orientation of an undirected edge."""
    return (u, v) if u <= v else (v, u)


def edge_set(g: nx.Graph) -> frozenset:
    return frozenset(edge_key(u, v) for u, v in g.edges)


def adjacency(g: nx.Graph) -> np.ndarray:
    """Dense binary adjacency in ``g.nodes`` order."""
    return nx.to_numpy_array(g, nodelist=list(g.nodes), weight=None, dtype=float)


def adjacency_spectrum(g: nx.Graph) -> np.ndarray:
    """Ascending adjacency eigenvalues."""
    if g.number_of_nodes() == 0:
        return np.zeros(0)
    return np.linalg.eigvalsh(adjacency(g))


def laplacian_spectrum(g: nx.Graph) -> np.ndarray:
    """Ascending eigenvalues of L = D - A."""
    if g.number_of_nodes() == 0:
        return np.zeros(0)
    a = adjacency(g)
    lap = np.diag(a.sum(axis=1)) - a
    return np.linalg.eigvalsh(lap)


def _phi_from_spectrum(eigs: np.ndarray) -> float:
    n = len(eigs)
    return max(float(logsumexp(eigs) - np.log(n)), 0.0)


def natural_connectivity(g: nx.Graph) -> float:
    """ln of the mean of exp(eigenvalue) over the adjacency spectrum."""
    n = g.number_of_nodes()
    if n == 0:
        raise GraphError("natural connectivity is undefined for an empty graph")
    if g.number_of_edges() == 0:
        return 0.0
    return _phi_from_spectrum(adjacency_spectrum(g))


def natural_connectivity_or_zero(g: nx.Graph) -> float:
    """Natural connectivity, with the empty graph mapped to 0 (attack curves)."""
    if g.number_of_nodes() == 0:
        return 0.0
    return natural_connectivity(g)


def natural_connectivity_without(a: np.ndarray, drop: int) -> float:
    """Natural connectivity of the dense adjacency ``a`` with row/col ``drop`` removed."""
    n = a.shape[0]
    if n <= 1:
        raise GraphError("cannot remove a node from a graph with fewer than 2 nodes")
    keep = np.r_[0:drop, drop + 1:n]
    sub = a[np.ix_(keep, keep)]
    if not sub.any():
        return 0.0
    return _phi_from_spectrum(np.linalg.eigvalsh(sub))


def algebraic_connectivity(g: nx.Graph) -> float:
    """Second-smallest Laplacian eigenvalue; exactly 0 for disconnected graphs."""
    if g.number_of_nodes() < 2:
        raise GraphError("algebraic connectivity needs at least 2 nodes")
    if not nx.is_connected(g):
        return 0.0
    return float(laplacian_spectrum(g)[1])


def k_shell(g: nx.Graph) -> dict:
    """Shell index of every node by iterative minimum-degree pruning.

    Isolated nodes sit in shell 0.
    """
    degree = dict(g.degree)
    neighbors = {v: set(g.adj[v]) for v in g.nodes}
    shell = {}
    remaining = set(g.nodes)
    k = 0
    while remaining:
        k = max(k, min(degree[v] for v in remaining))
        frontier = [v for v in remaining if degree[v] <= k]
        while frontier:
            v = frontier.pop()
            if v not in remaining:
                continue
            shell[v] = k
            remaining.discard(v)
            for u in neighbors[v]:
                if u in remaining:
                    degree[u] -= 1
                    if degree[u] <= k:
                        frontier.append(u)
    return shell


def eigenvector_centrality(g: nx.Graph) -> dict:
    """Dominant adjacency eigenvector, unit L2 norm, non-negative."""
    nodes = list(g.nodes)
    if not nodes:
        return {}
    if g.number_of_edges() == 0:
        return {v: 1.0 / np.sqrt(len(nodes)) for v in nodes}
    _, vecs = np.linalg.eigh(adjacency(g))
    x = np.abs(vecs[:, -1])
    x /= np.linalg.norm(x)
    return dict(zip(nodes, x.tolist()))


def rank_normalize(values) -> np.ndarray:
    """Map raw scores to rank/N; rank 1 is the lowest score, ties take the minimum rank.

    Scores are rounded to 10 decimals first so that float noise between
    symmetric nodes does not split a tie.
    """
    v = np.round(np.asarray(values, dtype=float), 10)
    if v.size == 0:
        return v
    return rankdata(v, method="min") / v.size


@dataclass(frozen=True)
class FeatureMatrix:
    nodes: tuple
    values: np.ndarray  # shape (N, 5), columns FEATURE_NAMES
    raw: np.ndarray = field(repr=False)
    disconnected: bool = False
    # rank direction is a local choice: higher raw score -> higher feature value
    rank_direction: str = "ascending"

    def column(self, name: str) -> np.ndarray:
        return self.values[:, FEATURE_NAMES.index(name)]


def centrality_features(g: nx.Graph) -> FeatureMatrix:
    """DC, BC, EC, CC and KS per node, each converted to rank/N.

    On a disconnected graph closeness is computed harmonic-style per
    component and the result is flagged ``disconnected``.
    """
    nodes = tuple(g.nodes)
    n = len(nodes)
    if n == 0:
        raise GraphError("feature matrix of an empty graph")
    connected = nx.is_connected(g)
    dc = nx.degree_centrality(g) if n > 1 else {nodes[0]: 0.0}
    bc = nx.betweenness_centrality(g)
    ec = eigenvector_centrality(g)
    if connected:
        cc = nx.closeness_centrality(g)
    else:
        hc = nx.harmonic_centrality(g)
        cc = {v: hc[v] / (n - 1) for v in nodes}
    ks = k_shell(g)
    raw = np.array([[dc[v], bc[v], ec[v], cc[v], ks[v]] for v in nodes], dtype=float)
    values = np.column_stack([rank_normalize(raw[:, c]) for c in range(raw.shape[1])])
    return FeatureMatrix(nodes=nodes, values=values, raw=raw, disconnected=not connected)


def edgelist_text(g: nx.Graph) -> str:
    """``u v [length_m]`` lines, sorted; isolated nodes get a bare ``u`` line."""
    lines = []
    for u, v, d in sorted((*edge_key(u, v), d) for u, v, d in g.edges(data=True)):
        if LENGTH in d:
            lines.append(f"{u} {v} {float(d[LENGTH])!r}")
        else:
            lines.append(f"{u} {v}")
    lines.extend(str(v) for v in sorted(g.nodes) if g.degree[v] == 0)
    return "\n".join(lines) + ("\n" if lines else "")


def write_edgelist(g: nx.Graph, path) -> None:
    Path(path).write_text(edgelist_text(g), encoding="utf-8")


def read_edgelist(path) -> nx.Graph:
    g = nx.Graph()
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        parts = line.split("#", 1)[0].split()
        if not parts:
            continue
        try:
            ids = [int(p) for p in parts[:2]]
        except ValueError:
            raise GraphError(f"{path}:{lineno}: node ids must be unsigned integers") from None
        if any(i < 0 for i in ids) or len(parts) > 3:
            raise GraphError(f"{path}:{lineno}: expected 'u v [length_m]'")
        if len(ids) == 1:
            g.add_node(ids[0])
            continue
        u, v = ids
        if u == v or g.has_edge(u, v):
            raise GraphError(f"{path}:{lineno}: self-loop or duplicate edge ({u}, {v})")
        g.add_edge(u, v)
        if len(parts) == 3:
            try:
                d = float(parts[2])
            except ValueError:
                d = float("nan")
            if not d > 0:
                raise GraphError(f"{path}:{lineno}: edge length must be a positive number")
            g.edges[u, v][LENGTH] = d
    return g
