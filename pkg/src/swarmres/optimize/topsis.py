"""TOPSIS on a minimization matrix, scored as relative distance to the ideal (lower is better)."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np


@dataclass(frozen=True)
class TopsisResult:
    scores: np.ndarray
    dropped: tuple        # indices of constant columns left out of the distances
    weights_used: np.ndarray

    @property
    def best(self) -> int:
        return int(np.argmin(self.scores))

    @property
    def flagged(self) -> bool:
        return bool(self.dropped)


def topsis(matrix, weights) -> TopsisResult:
    """Score rows of a cost matrix: ``D+ / (D+ + D-)``, 0 at the ideal, 1 at the anti-ideal.

    Columns are vector-normalized. A column whose entries are all equal
    cannot separate alternatives; it is dropped and the remaining weights
    are rescaled to sum to one.
    """
    X = np.asarray(matrix, dtype=float)
    w = np.asarray(weights, dtype=float)
    if X.ndim != 2 or X.shape[1] != w.size:
        raise ValueError(f"{w.size} weights for a matrix of shape {X.shape}")
    if np.any(w < 0) or not np.isclose(w.sum(), 1.0, atol=1e-9):
        raise ValueError("weights must be non-negative and sum to 1")
    n = X.shape[0]
    if n == 0:
        return TopsisResult(np.zeros(0), (), w)
    spread = X.max(axis=0) - X.min(axis=0)
    dropped = tuple(int(c) for c in np.flatnonzero(spread <= 1e-12 * np.maximum(1.0, np.abs(X).max(axis=0))))
    live = np.array([c for c in range(X.shape[1]) if c not in dropped], dtype=int)
    w_used = np.zeros_like(w)
    if live.size and w[live].sum() > 0:
        w_used[live] = w[live] / w[live].sum()
    else:
        return TopsisResult(np.zeros(n), dropped, w_used)
    norms = np.linalg.norm(X, axis=0)
    norms[norms == 0] = 1.0
    V = X / norms * w_used
    ideal = V.min(axis=0)
    anti = V.max(axis=0)
    d_plus = np.linalg.norm(V - ideal, axis=1)
    d_minus = np.linalg.norm(V - anti, axis=1)
    total = d_plus + d_minus
    scores = np.divide(d_plus, total, out=np.zeros(n), where=total > 0)
    return TopsisResult(scores, dropped, w_used)


def simplex_grid(n_obj: int, step: float = 0.05, cap: int = 50) -> list:
    """Weight vectors on the simplex lattice, thinned evenly to at most ``cap``."""
    k = int(round(1.0 / step))
    pts = [tuple(c / k for c in combo) + ((k - sum(combo)) / k,)
           for combo in product(range(k + 1), repeat=n_obj - 1) if sum(combo) <= k]
    pts.sort(reverse=True)
    if len(pts) > cap:
        idx = np.linspace(0, len(pts) - 1, cap).round().astype(int)
        pts = [pts[i] for i in idx]
    return [np.array(p) for p in pts]
