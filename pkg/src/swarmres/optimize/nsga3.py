"""NSGA-III over fixed-length bit genomes.

The search problem supplies ``n_bits``, ``repair(bits)``, ``evaluate(bits)``
(returning ``(objectives, violation)`` with objectives minimized and
``violation == 0`` meaning feasible) and optionally ``seeds(rng)``.
Every feasible solution ever evaluated passes through an elitist archive, so
the returned front is the non-dominated set of everything visited.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np


def das_dennis(n_obj: int, divisions: int) -> np.ndarray:
    """Structured reference points on the unit simplex."""
    points = []
    for bars in combinations(range(divisions + n_obj - 1), n_obj - 1):
        prev = -1
        parts = []
        for b in bars:
            parts.append(b - prev - 1)
            prev = b
        parts.append(divisions + n_obj - 1 - prev - 1)
        points.append(parts)
    return np.array(points, dtype=float) / divisions


DEFAULT_DIVISIONS = {2: 91, 3: 12, 4: 6, 5: 4}


def dominates(a, b) -> bool:
    a = np.asarray(a)
    b = np.asarray(b)
    return bool(np.all(a <= b) and np.any(a < b))


def nondominated(F) -> list:
    """Indices of the rows of ``F`` not dominated by any other row."""
    F = np.asarray(F, dtype=float)
    keep = []
    for i in range(len(F)):
        le = np.all(F <= F[i], axis=1)
        lt = np.any(F < F[i], axis=1)
        if not np.any(le & lt):
            keep.append(i)
    return keep


def fast_nondominated_sort(F, violation=None) -> list:
    """Fronts as lists of indices; infeasible rows follow all feasible ones, by violation."""
    F = np.asarray(F, dtype=float)
    n = len(F)
    violation = np.zeros(n) if violation is None else np.asarray(violation, dtype=float)
    feas = np.flatnonzero(violation == 0)
    fronts = []
    if len(feas):
        sub = F[feas]
        le = np.all(sub[:, None, :] <= sub[None, :, :], axis=2)
        lt = np.any(sub[:, None, :] < sub[None, :, :], axis=2)
        dom = le & lt                       # dom[i, j]: i dominates j
        count = dom.sum(axis=0)
        done = np.zeros(len(feas), dtype=bool)
        current = np.flatnonzero(count == 0)
        while current.size:
            fronts.append([int(feas[i]) for i in current])
            done[current] = True
            count = count - dom[current].sum(axis=0)
            current = np.flatnonzero((count == 0) & ~done)
    infeas = np.flatnonzero(violation > 0)
    for v in sorted(set(violation[infeas].tolist())):
        fronts.append([int(i) for i in infeas if violation[i] == v])
    return fronts


def _normalize(F, ideal):
    """Translate by the ideal point and scale by hyperplane intercepts (nadir fallback)."""
    Ft = F - ideal
    m = F.shape[1]
    weights = np.eye(m) + 1e-6
    weights[np.eye(m, dtype=bool)] = 1.0
    extremes = np.array([Ft[np.argmin(np.max(Ft / w, axis=1))] for w in weights])
    nadir = Ft.max(axis=0)
    try:
        b = np.linalg.solve(extremes, np.ones(m))
        intercepts = 1.0 / b
        if np.any(~np.isfinite(intercepts)) or np.any(intercepts <= 1e-10):
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        intercepts = nadir
    intercepts = np.where(intercepts <= 1e-10, 1.0, intercepts)
    return Ft / intercepts


def _associate(Fn, refs):
    norms = refs / np.linalg.norm(refs, axis=1, keepdims=True)
    proj = Fn @ norms.T
    dist = np.sqrt(np.maximum((Fn ** 2).sum(axis=1)[:, None] - proj ** 2, 0.0))
    nearest = np.argmin(dist, axis=1)
    return nearest, dist[np.arange(len(Fn)), nearest]


def environmental_selection(F, violation, n_select, refs, rng) -> list:
    """NSGA-III survivor selection: whole fronts, then reference-point niching."""
    fronts = fast_nondominated_sort(F, violation)
    chosen = []
    last = []
    for front in fronts:
        if len(chosen) + len(front) <= n_select:
            chosen.extend(front)
            if len(chosen) == n_select:
                return chosen
        else:
            last = front
            break
    if not last:
        return chosen
    if violation[last[0]] > 0:
        picks = rng.permutation(last)[: n_select - len(chosen)]
        return chosen + [int(i) for i in picks]
    pool = [i for i in chosen if violation[i] == 0] + last
    Fp = np.asarray(F, dtype=float)[pool]
    Fn = _normalize(Fp, Fp.min(axis=0))
    niche, dist = _associate(Fn, refs)
    where = {idx: k for k, idx in enumerate(pool)}
    counts = np.zeros(len(refs), dtype=int)
    for i in chosen:
        if i in where:
            counts[niche[where[i]]] += 1
    remaining = {j: [] for j in range(len(refs))}
    for i in last:
        remaining[niche[where[i]]].append(i)
    active = np.ones(len(refs), dtype=bool)
    while len(chosen) < n_select:
        cand = np.flatnonzero(active)
        low = cand[counts[cand] == counts[cand].min()]
        j = int(rng.choice(low))
        members = remaining[j]
        if not members:
            active[j] = False
            continue
        if counts[j] == 0:
            pick = min(members, key=lambda i: (dist[where[i]], i))
        else:
            pick = members[int(rng.integers(len(members)))]
        members.remove(pick)
        chosen.append(pick)
        counts[j] += 1
    return chosen


@dataclass
class Individual:
    bits: np.ndarray
    key: bytes
    F: np.ndarray | None
    violation: float


class _Evaluator:
    """Caches evaluations by decoded genome and keeps the non-dominated archive."""

    def __init__(self, problem):
        self.problem = problem
        self.repaired = {}
        self.cache = {}
        self.archive = {}

    def __call__(self, bits) -> Individual:
        bits = np.asarray(bits, dtype=bool)
        raw = np.packbits(bits).tobytes()
        if raw not in self.repaired:
            self.repaired[raw] = self.problem.repair(bits)
        bits = self.repaired[raw]
        key = np.packbits(bits).tobytes()
        if key not in self.cache:
            F, v = self.problem.evaluate(bits)
            self.cache[key] = (None if F is None else np.asarray(F, dtype=float), float(v))
            if v == 0:
                self._archive(key, bits, self.cache[key][0])
        F, v = self.cache[key]
        return Individual(bits, key, F, v)

    def _archive(self, key, bits, F):
        for other, (_, G) in list(self.archive.items()):
            if dominates(G, F):
                return
        for other, (_, G) in list(self.archive.items()):
            if dominates(F, G):
                del self.archive[other]
        self.archive[key] = (bits.copy(), F)


def nsga3(problem, pop_size: int = 92, generations: int = 200, rng=None, crossover_prob: float = 0.9,
          mutation_prob: float | None = None, divisions: int | None = None) -> list:
    """Run NSGA-III; returns the non-dominated ``(bits, F)`` pairs sorted by genome."""
    rng = np.random.default_rng(rng)
    n_bits = problem.n_bits
    if n_bits == 0:
        raise ValueError("empty feasible edge pool")
    evaluator = _Evaluator(problem)
    sample = evaluator(problem.random_genome(rng))
    n_obj = len(sample.F) if sample.F is not None else problem.n_obj
    refs = das_dennis(n_obj, divisions or DEFAULT_DIVISIONS.get(n_obj, 3))
    if pop_size < len(refs):
        refs = refs[np.linspace(0, len(refs) - 1, pop_size).round().astype(int)]
    pm = mutation_prob if mutation_prob is not None else min(0.5, 2.0 / n_bits)

    pop = [sample]
    for bits in getattr(problem, "seeds", lambda r: [])(rng):
        pop.append(evaluator(bits))
    while len(pop) < pop_size:
        pop.append(evaluator(problem.random_genome(rng)))
    pop = pop[:pop_size]

    for _ in range(generations):
        offspring = []
        order = rng.permutation(len(pop))
        for k in range(0, len(order), 2):
            a = pop[order[k]].bits
            b = pop[order[(k + 1) % len(order)]].bits
            if rng.random() < crossover_prob:
                mask = rng.random(n_bits) < 0.5
                c1, c2 = np.where(mask, a, b), np.where(mask, b, a)
            else:
                c1, c2 = a.copy(), b.copy()
            for c in (c1, c2):
                flip = rng.random(n_bits) < pm
                offspring.append(evaluator(c ^ flip))
        merged = pop + offspring[:pop_size]
        # unique genomes first so duplicates never crowd out distinct solutions
        seen, unique, dupes = set(), [], []
        for ind in merged:
            (dupes if ind.key in seen else unique).append(ind)
            seen.add(ind.key)
        cand = unique if len(unique) >= pop_size else unique + dupes
        F = np.array([ind.F if ind.F is not None else np.full(n_obj, np.inf) for ind in cand])
        viol = np.array([ind.violation for ind in cand])
        keep = environmental_selection(np.where(np.isfinite(F), F, 0.0), viol, pop_size, refs, rng)
        pop = [cand[i] for i in keep]

    items = sorted(evaluator.archive.items())
    return [(bits, F) for _, (bits, F) in items]
