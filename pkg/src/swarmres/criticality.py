"""SurBi node/edge criticality: Birnbaum importance fused with surrounding influence."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .graphcore import (GraphError, adjacency, edge_key, eigenvector_centrality, k_shell,
                        natural_connectivity, natural_connectivity_without)


def birnbaum(g: nx.Graph, v) -> float:
    """Drop in natural connectivity when ``v`` and its edges are removed."""
    if v not in g:
        raise GraphError(f"unknown node {v!r}")
    if g.number_of_nodes() < 2:
        raise GraphError("Birnbaum importance needs at least 2 nodes")
    nodes = list(g.nodes)
    a = adjacency(g)
    return natural_connectivity(g) - natural_connectivity_without(a, nodes.index(v))


def birnbaum_all(g: nx.Graph) -> dict:
    """Birnbaum importance of every node, recomputing each removal exactly."""
    nodes = list(g.nodes)
    if len(nodes) < 2:
        return {v: 0.0 for v in nodes}
    a = adjacency(g)
    base = natural_connectivity(g)
    return {v: base - natural_connectivity_without(a, k) for k, v in enumerate(nodes)}


def surrounding_influence_all(g: nx.Graph) -> dict:
    shells = k_shell(g)
    ec = eigenvector_centrality(g)
    return {v: sum(shells[u] for u in g.adj[v]) * ec[v] for v in g.nodes}


def surrounding_influence(g: nx.Graph, v) -> float:
    """Neighbor shell-index sum times eigenvector centrality."""
    if v not in g:
        raise GraphError(f"unknown node {v!r}")
    return surrounding_influence_all(g)[v]


def minmax(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return values
    lo, hi = values.min(), values.max()
    if hi - lo <= 1e-12 * max(1.0, abs(hi)):
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


def rank_desc(nodes, scores) -> list:
    """Nodes by descending score, node id ascending on ties.

    Scores are compared at 12 decimals so float noise between symmetric
    nodes does not override the id tie-break.
    """
    return [v for _, v in sorted(zip(scores, nodes), key=lambda t: (-round(t[0], 12), t[1]))]


@dataclass(frozen=True)
class CriticalityReport:
    nodes: tuple
    bi_raw: np.ndarray
    si_raw: np.ndarray
    bi_norm: np.ndarray
    si_norm: np.ndarray
    ni: np.ndarray
    r: float
    edge_ei: dict = field(repr=False)
    ranking: tuple = ()
    # BI and SI are min-max scaled before they are mixed by r
    normalization: str = "minmax"

    def score(self) -> dict:
        return dict(zip(self.nodes, self.ni.tolist()))

    def rank_of(self) -> dict:
        return {v: k + 1 for k, v in enumerate(self.ranking)}

    def edge_ranking(self) -> list:
        return sorted(self.edge_ei, key=lambda e: (-round(self.edge_ei[e], 12), e))

    def with_r(self, r: float) -> "CriticalityReport":
        """Re-mix the stored components with another weight (no recomputation)."""
        return _combine(self.nodes, self.bi_raw, self.si_raw, r, self._edges())

    def _edges(self):
        return list(self.edge_ei)


def _combine(nodes, bi, si, r, edges) -> CriticalityReport:
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"r must lie in [0, 1], got {r}")
    bi_n, si_n = minmax(bi), minmax(si)
    ni = r * bi_n + (1.0 - r) * si_n
    score = dict(zip(nodes, ni.tolist()))
    ei = {edge_key(u, v): score[u] + score[v] for u, v in edges}
    return CriticalityReport(tuple(nodes), bi, si, bi_n, si_n, ni, r, ei,
                             tuple(rank_desc(nodes, ni.tolist())))


def surbi_rank(g: nx.Graph, r: float = 0.3) -> CriticalityReport:
    """Score every node with r*BI + (1-r)*SI and every edge with the sum of its endpoints."""
    nodes = list(g.nodes)
    if not nodes:
        raise GraphError("cannot rank an empty graph")
    bi = birnbaum_all(g)
    si = surrounding_influence_all(g)
    return _combine(nodes, np.array([bi[v] for v in nodes]), np.array([si[v] for v in nodes]),
                    r, [edge_key(u, v) for u, v in g.edges])


@dataclass(frozen=True)
class GlobalImportance:
    phi: dict          # node -> -exp(-sum_j beta_j NI_j)
    per_phase: list    # list of {node: NI_j}
    betas: tuple
    ranking: tuple


def global_importance(reports, betas, universe=None) -> GlobalImportance:
    """Combine per-phase NI scores into one cumulative importance per node.

    Nodes missing from a phase contribute NI_j = 0 for that phase.
    """
    reports = list(reports)
    betas = tuple(float(b) for b in betas)
    if len(betas) != len(reports):
        raise ValueError(f"{len(betas)} phase weights for {len(reports)} phases")
    per_phase = [rep.score() for rep in reports]
    if universe is None:
        universe = sorted(set().union(*(set(s) for s in per_phase)))
    phi = {}
    exponent = {}
    for v in universe:
        exponent[v] = sum(b * s.get(v, 0.0) for b, s in zip(betas, per_phase))
        phi[v] = -math.exp(-exponent[v])
    # order by the exponent: exp saturates at large sums and would fake ties
    ranking = tuple(sorted(universe, key=lambda v: (-round(exponent[v], 12), v)))
    return GlobalImportance(phi, per_phase, betas, ranking)


def write_report_csv(report: CriticalityReport, node_path, edge_path=None) -> None:
    from .io import write_csv
    rank = report.rank_of()
    pos = {v: k for k, v in enumerate(report.nodes)}
    write_csv(node_path, ["node_id", "bi_raw", "si_raw", "ni", "rank"],
              ([v, report.bi_raw[pos[v]], report.si_raw[pos[v]], report.ni[pos[v]], rank[v]]
               for v in report.ranking))
    if edge_path is not None:
        write_csv(edge_path, ["u", "v", "ei"],
                  ([e[0], e[1], report.edge_ei[e]] for e in report.edge_ranking()))
