"""Partition pseudo-metrics and their metric quotients.

For a partition of a finite metric space, a string joining ``x`` to ``y`` is a
chain of point pairs whose consecutive links share a class; its cost is the
sum of the pair distances.  The pseudo-metric ``delta`` is the cheapest such
chain.  Collapsing chain links to their classes turns this into a shortest
path problem on the complete graph of classes weighted by subset distance,
which is what :func:`delta_p` solves.  :func:`delta_p_oracle` instead
enumerates class sequences outright and is kept independent of the solver.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from . import _kernels
from .metric import (
    CapacityError,
    MetricSpace,
    Partition,
    PreconditionError,
    canonical_labels,
)

EQ_RTOL = 1e-12
ORACLE_MAX_CLASSES = 9
SOLVERS = ("auto", "dijkstra", "floyd-warshall")


def equality_tolerance(space: MetricSpace) -> float:
    """Absolute tolerance for equality assertions: 1e-12 of the diameter."""
    return EQ_RTOL * max(space.diameter, np.finfo(float).tiny)


def worker_count(workers: int | None = None) -> int:
    if workers is not None:
        return max(1, int(workers))
    try:
        return max(1, int(os.environ.get("PQ_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True, eq=False)
class ClassGraph:
    """Complete graph on classes; ``w[a, b]`` is the distance between classes."""

    w: np.ndarray

    @property
    def K(self) -> int:
        return self.w.shape[0]


def class_graph(space: MetricSpace, partition: Partition) -> ClassGraph:
    if partition.n != space.n:
        raise PreconditionError(f"partition has {partition.n} points, space has {space.n}")
    order = np.argsort(partition.class_of, kind="stable")
    starts = np.searchsorted(partition.class_of[order], np.arange(partition.K))
    D = space.dist[order]
    rows = np.minimum.reduceat(D, starts, axis=0)
    w = np.minimum.reduceat(rows[:, order], starts, axis=1)
    np.fill_diagonal(w, 0.0)
    w.setflags(write=False)
    return ClassGraph(w)


def shortest_paths(w: np.ndarray, solver: str = "auto", workers: int | None = None) -> tuple[np.ndarray, str]:
    """All-pairs shortest paths on a dense nonnegative weight matrix.

    Returns the (exactly symmetric) distance matrix and the solver used.
    """
    if solver not in SOLVERS:
        raise PreconditionError(f"unknown solver {solver!r}; choose from {SOLVERS}")
    w = np.ascontiguousarray(w, dtype=float)
    K = w.shape[0]
    nw = worker_count(workers)
    if solver == "auto":
        # measured: single-threaded Floyd-Warshall beats dense Dijkstra about 2x at every K
        solver = "dijkstra" if nw > 1 else "floyd-warshall"
    if K == 0:
        return np.zeros((0, 0)), solver
    if solver == "floyd-warshall":
        out = _kernels.floyd_warshall(w)
    else:
        nw = min(nw, K)
        chunks = np.array_split(np.arange(K, dtype=np.int64), nw)
        if nw == 1:
            out = _kernels.dijkstra_rows(w, chunks[0])
        else:
            with ThreadPoolExecutor(nw) as pool:
                parts = list(pool.map(lambda c: _kernels.dijkstra_rows(w, c), chunks))
            out = np.vstack(parts)
    # both orientations are valid path sums; take the smaller so the result is exactly symmetric
    out = np.minimum(out, out.T)
    np.fill_diagonal(out, 0.0)
    return out, solver


@dataclass(frozen=True)
class StringWitness:
    """One optimal class sequence and a point-level string realizing it.

    ``pairs`` is a chain ``(x_1, y_1), ..., (x_k, y_k)`` with ``x_1 = x``,
    ``y_k = y`` and ``y_{i-1}`` in the class of ``x_i``.
    """

    class_sequence: tuple[int, ...]
    total: float
    pairs: tuple[tuple[int, int], ...]


@dataclass(frozen=True, eq=False)
class QuotientPseudoMetric:
    space: MetricSpace
    partition: Partition
    graph: ClassGraph
    class_delta: np.ndarray
    delta: np.ndarray
    solver: str

    def witness(self, x: int, y: int) -> StringWitness:
        """Reconstruct an optimal string from ``x`` to ``y``.

        Among optimal class sequences the walk always steps to the smallest
        admissible next class, so the result is reproducible.
        """
        c = self.partition.class_of
        a, b = int(c[x]), int(c[y])
        w = self.graph.w
        to_b = self.class_delta[:, b]
        tol = equality_tolerance(self.space)
        seq = [a]
        seen = {a}
        u = a
        while u != b:
            ok = np.flatnonzero(w[u] + to_b <= to_b[u] + tol)
            nxt = next((int(v) for v in ok if v != u and v not in seen), None)
            if nxt is None:
                raise RuntimeError("witness walk stalled; class_delta is not a shortest-path matrix")
            seq.append(nxt)
            seen.add(nxt)
            u = nxt
        members = self.partition.class_members
        D = self.space.dist
        links = []
        for p, q in zip(seq, seq[1:]):
            block = D[np.ix_(members[p], members[q])]
            i, j = np.unravel_index(np.argmin(block), block.shape)
            links.append((int(members[p][i]), int(members[q][j])))
        pairs = []
        if not links or links[0][0] != x:
            pairs.append((int(x), int(x)))
        pairs.extend(links)
        if pairs[-1][1] != y:
            pairs.append((int(y), int(y)))
        total = float(sum(w[p, q] for p, q in zip(seq, seq[1:])))
        return StringWitness(tuple(seq), total, tuple(pairs))


def delta_p(
    space: MetricSpace,
    partition: Partition,
    solver: str = "auto",
    workers: int | None = None,
) -> QuotientPseudoMetric:
    """Exact partition pseudo-metric, as all-pairs shortest paths on classes."""
    graph = class_graph(space, partition)
    cd, used = shortest_paths(graph.w, solver, workers)
    # a multi-hop sum that undercuts the direct edge only by rounding is not a shorter string
    snap = graph.w - cd <= equality_tolerance(space)
    cd[snap] = graph.w[snap]
    cd.setflags(write=False)
    c = partition.class_of
    delta = cd[np.ix_(c, c)]
    delta.setflags(write=False)
    return QuotientPseudoMetric(space, partition, graph, cd, delta, used)


@lru_cache(maxsize=None)
def _sequences(K: int):
    """All simple class sequences of length >= 2, grouped by (first, last)."""
    groups = []
    for L in range(2, K + 1):
        seqs = np.array(list(permutations(range(K), L)), dtype=np.int64)
        keys = seqs[:, 0] * K + seqs[:, -1]
        order = np.argsort(keys, kind="stable")
        seqs = seqs[order]
        uniq, starts = np.unique(keys[order], return_index=True)
        groups.append((seqs, uniq, starts))
    return groups


def delta_p_oracle(space: MetricSpace, partition: Partition) -> np.ndarray:
    """Brute-force pseudo-metric: minimum over every simple class sequence.

    Class distances are recomputed here point pair by point pair; nothing is
    shared with :func:`delta_p`.  Limited to ``K <= 9`` classes.
    """
    K = partition.K
    if partition.n != space.n:
        raise PreconditionError("partition does not match the space")
    if K > ORACLE_MAX_CLASSES:
        raise CapacityError(
            f"oracle enumerates all class sequences and is limited to K <= {ORACLE_MAX_CLASSES} "
            f"(got K = {K}); use delta_p"
        )
    c = partition.class_of
    D = space.dist
    w = np.full((K, K), np.inf)
    for i in range(space.n):
        for j in range(space.n):
            if D[i, j] < w[c[i], c[j]]:
                w[c[i], c[j]] = D[i, j]
    best = np.full(K * K, np.inf)
    best[np.arange(K) * K + np.arange(K)] = 0.0
    for seqs, keys, starts in _sequences(K):
        costs = w[seqs[:, :-1], seqs[:, 1:]].sum(axis=1)
        best[keys] = np.minimum(best[keys], np.minimum.reduceat(costs, starts))
    best = best.reshape(K, K)
    return best[np.ix_(c, c)]


@dataclass(frozen=True, eq=False)
class QuotientSpace:
    """Classes of zero pseudo-distance with the induced metric.

    ``pi[i]`` is the quotient class of point ``i``; ``Q`` is the same map as a
    :class:`Partition`.
    """

    Q: Partition
    nabla: np.ndarray
    pi: np.ndarray
    tau_merge: float
    qpm: QuotientPseudoMetric

    @property
    def size(self) -> int:
        return self.nabla.shape[0]

    def image(self, points) -> np.ndarray:
        """Sorted quotient classes hit by the given points."""
        return np.unique(self.pi[np.asarray(points, dtype=np.int64)])

    def as_metric_space(self) -> MetricSpace:
        return MetricSpace(self.nabla)


def quotient_space(qpm: QuotientPseudoMetric, tau_merge: float = 0.0) -> QuotientSpace:
    """Merge points at pseudo-distance ``<= tau_merge`` and induce the metric."""
    if not tau_merge >= 0:
        raise PreconditionError("tau_merge must be non-negative")
    close = qpm.class_delta <= tau_merge
    _, comp = connected_components(csr_matrix(close), directed=False)
    pi = canonical_labels(comp[qpm.partition.class_of])
    Q = Partition(pi)
    reps = np.array([m[0] for m in Q.class_members], dtype=np.int64)
    nabla = np.array(qpm.delta[np.ix_(reps, reps)])
    np.fill_diagonal(nabla, 0.0)
    nabla.setflags(write=False)
    return QuotientSpace(Q, nabla, Q.class_of, float(tau_merge), qpm)
