"""Finite metric spaces, subsets, partitions and delta-connectivity."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import pdist, squareform

from . import _kernels
from .report import MAX_LISTED, Report

TRIANGLE_RTOL = 1e-9


class PQError(Exception):
    """Base class for library errors."""


class MalformedInputError(PQError, ValueError):
    pass


class PreconditionError(PQError, ValueError):
    pass


class CapacityError(PQError):
    pass


class DuplicatePointsError(MalformedInputError):
    """Raised when two distinct points are at distance zero.

    ``groups`` lists the index groups that coincide; merge them with
    :func:`merge_duplicates` before building the space.
    """

    def __init__(self, groups: list[list[int]]):
        self.groups = groups
        shown = "; ".join(str(g) for g in groups[:5])
        more = "" if len(groups) <= 5 else f" (+{len(groups) - 5} more)"
        super().__init__(
            f"{len(groups)} group(s) of coincident points: {shown}{more}; "
            "merge them first (pquotient.metric.merge_duplicates)"
        )


@dataclass(frozen=True, eq=False)
class MetricSpace:
    """A finite point set with its full distance matrix.

    Construction only checks the matrix is square and finite; use
    :func:`validate_metric` for the metric axioms.  ``triangle`` records that
    the triangle inequality is known to hold (Euclidean input, or a passed
    triangle validation).
    """

    dist: np.ndarray
    coords: np.ndarray | None = None
    labels: tuple[str, ...] | None = None
    triangle: bool = False

    def __post_init__(self):
        D = _square_matrix(self.dist)
        D.setflags(write=False)
        object.__setattr__(self, "dist", D)
        if self.coords is not None:
            X = np.array(self.coords, dtype=float)
            if X.ndim != 2 or X.shape[0] != D.shape[0]:
                raise MalformedInputError("coords must be an (n, k) array matching dist")
            X.setflags(write=False)
            object.__setattr__(self, "coords", X)
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != D.shape[0]:
                raise MalformedInputError("labels must have one entry per point")
            object.__setattr__(self, "labels", labels)

    @classmethod
    def from_points(cls, points, labels: Sequence[str] | None = None) -> MetricSpace:
        """Euclidean space on the given coordinates; rejects coincident points."""
        X = np.asarray(points, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2 or X.shape[0] == 0:
            raise MalformedInputError("points must be a non-empty (n, k) array")
        if not np.isfinite(X).all():
            raise MalformedInputError("points contain non-finite coordinates")
        D = squareform(pdist(X)) if X.shape[0] > 1 else np.zeros((1, 1))
        groups = _zero_groups(D)
        if groups:
            raise DuplicatePointsError(groups)
        return cls(D, coords=X, labels=labels, triangle=True)

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    @cached_property
    def diameter(self) -> float:
        return float(self.dist.max())

    @cached_property
    def nearest_neighbor_distances(self) -> np.ndarray:
        if self.n == 1:
            return np.zeros(1)
        D = self.dist.copy()
        np.fill_diagonal(D, np.inf)
        return D.min(axis=1)

    def subspace(self, indices) -> MetricSpace:
        idx = as_subset(indices, self.n)
        return MetricSpace(
            self.dist[np.ix_(idx, idx)],
            coords=None if self.coords is None else self.coords[idx],
            labels=None if self.labels is None else tuple(self.labels[i] for i in idx),
            triangle=self.triangle,
        )

    def scaled(self, factor: float) -> MetricSpace:
        return MetricSpace(
            self.dist * factor,
            coords=None if self.coords is None else self.coords * factor,
            labels=self.labels,
            triangle=self.triangle,
        )


def merge_duplicates(points) -> tuple[np.ndarray, np.ndarray]:
    """Drop repeated coordinates, keeping first occurrences.

    Returns ``(unique_points, index_map)`` where ``index_map[i]`` is the row
    of the original point ``i`` in ``unique_points``.
    """
    X = np.asarray(points, dtype=float)
    _, first, inverse = np.unique(X, axis=0, return_index=True, return_inverse=True)
    order = np.argsort(first)
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    return X[np.sort(first)], rank[np.ravel(inverse)]


def as_subset(indices, n: int | None = None) -> np.ndarray:
    """Normalize to a sorted, duplicate-free int64 index array."""
    if not isinstance(indices, np.ndarray):
        indices = list(indices)
    idx = np.unique(np.asarray(indices, dtype=np.int64).ravel())
    if n is not None and idx.size and (idx[0] < 0 or idx[-1] >= n):
        raise PreconditionError(f"subset indices out of range 0..{n - 1}")
    return idx


def canonical_labels(labels) -> np.ndarray:
    """Relabel so classes are numbered in order of their smallest member."""
    labels = np.asarray(labels)
    if labels.size == 0:
        return labels.astype(np.int64)
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    return rank[np.ravel(inverse)].astype(np.int64)


@dataclass(frozen=True, eq=False)
class Partition:
    """Assignment of points ``0..n-1`` to classes ``0..K-1``, all non-empty."""

    class_of: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.class_of)
        if c.ndim != 1 or c.size == 0:
            raise MalformedInputError("class_of must be a non-empty 1-D array")
        if not np.issubdtype(c.dtype, np.integer):
            if not np.all(np.equal(np.mod(c, 1), 0)):
                raise MalformedInputError("class labels must be integers")
        c = c.astype(np.int64)
        if c.min() < 0:
            raise MalformedInputError("class labels must be non-negative")
        used = np.unique(c)
        if used.size != c.max() + 1:
            raise MalformedInputError("class labels must be 0..K-1 with every class non-empty")
        c.setflags(write=False)
        object.__setattr__(self, "class_of", c)

    @classmethod
    def from_labels(cls, labels) -> Partition:
        return cls(canonical_labels(labels))

    @classmethod
    def from_classes(cls, classes: Iterable[Iterable[int]], n: int) -> Partition:
        labels = np.full(n, -1, dtype=np.int64)
        for k, members in enumerate(classes):
            m = np.asarray(list(members), dtype=np.int64)
            if m.size == 0:
                raise MalformedInputError("empty class")
            if np.any(labels[m] >= 0):
                raise MalformedInputError("classes overlap")
            labels[m] = k
        if np.any(labels < 0):
            raise MalformedInputError("classes do not cover all points")
        return cls.from_labels(labels)

    @classmethod
    def singletons(cls, n: int) -> Partition:
        return cls(np.arange(n))

    @classmethod
    def whole(cls, n: int) -> Partition:
        return cls(np.zeros(n, dtype=np.int64))

    @property
    def n(self) -> int:
        return self.class_of.size

    @cached_property
    def K(self) -> int:
        return int(self.class_of.max()) + 1

    @cached_property
    def class_members(self) -> tuple[np.ndarray, ...]:
        order = np.argsort(self.class_of, kind="stable")
        bounds = np.searchsorted(self.class_of[order], np.arange(self.K + 1))
        return tuple(order[bounds[k]:bounds[k + 1]] for k in range(self.K))

    @cached_property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.class_of, minlength=self.K)

    def refines(self, other: Partition) -> bool:
        """True when every class of ``self`` lies inside one class of ``other``."""
        if other.n != self.n:
            raise PreconditionError("partitions of different point sets")
        return all(np.unique(other.class_of[m]).size == 1 for m in self.class_members)

    def to_list(self) -> list[int]:
        return self.class_of.tolist()


def _square_matrix(dist) -> np.ndarray:
    try:
        D = np.array(dist, dtype=float)
    except (TypeError, ValueError) as exc:
        raise MalformedInputError(f"distance matrix is not numeric: {exc}") from None
    if D.ndim != 2 or D.shape[0] != D.shape[1] or D.shape[0] == 0:
        raise MalformedInputError(f"distance matrix must be square and non-empty, got shape {D.shape}")
    if not np.isfinite(D).all():
        raise MalformedInputError("distance matrix has non-finite entries")
    return D


def _zero_groups(D: np.ndarray) -> list[list[int]]:
    Z = D == 0
    np.fill_diagonal(Z, False)
    if not Z.any():
        return []
    ncomp, lab = connected_components(csr_matrix(Z), directed=False)
    groups = [np.flatnonzero(lab == c).tolist() for c in range(ncomp)]
    return sorted(g for g in groups if len(g) > 1)


def validate_metric(space: MetricSpace | np.ndarray, check_triangle: bool = False) -> Report:
    """Check the metric axioms; an empty report means every axiom holds.

    The triangle check (cubic) runs only when requested, with tolerance
    ``1e-9 * max(dist)``.
    """
    D = space.dist if isinstance(space, MetricSpace) else _square_matrix(space)
    rep = Report("metric")
    n = D.shape[0]

    diag = np.diagonal(D)
    rep.touch("diagonal")
    bad = np.flatnonzero(diag != 0)
    rep.add_many("diagonal", zip(bad, bad), diag[bad], np.zeros(bad.size), 0.0)

    rep.touch("symmetry")
    iu, ju = np.nonzero(np.triu(D != D.T, k=1))
    rep.add_many("symmetry", zip(iu, ju), D[iu, ju], D[ju, iu], 0.0)

    rep.touch("nonnegativity")
    ineg, jneg = np.nonzero(D < 0)
    rep.add_many("nonnegativity", zip(ineg, jneg), D[ineg, jneg], np.zeros(ineg.size), 0.0)

    rep.touch("identity")
    off = D == 0
    np.fill_diagonal(off, False)
    iz, jz = np.nonzero(np.triu(off, k=1))
    rep.add_many("identity", zip(iz, jz), D[iz, jz], np.zeros(iz.size), 0.0)

    if check_triangle:
        rep.touch("triangle")
        tol = TRIANGLE_RTOL * float(D.max()) if n else 0.0
        count, rows = _kernels.triangle_scan(np.ascontiguousarray(D), tol, MAX_LISTED)
        i, j, k = rows.T if len(rows) else (np.empty(0, int),) * 3
        rep.add_many("triangle", rows, D[i, k], D[i, j] + D[j, k], tol, total=count)
    return rep


def subset_distance(space: MetricSpace, X, Y) -> float:
    """``min d(x, y)`` over ``x in X``, ``y in Y``."""
    X = as_subset(X, space.n)
    Y = as_subset(Y, space.n)
    if X.size == 0 or Y.size == 0:
        raise PreconditionError("subset_distance needs non-empty subsets")
    return float(space.dist[np.ix_(X, Y)].min())


def point_set_distance(space: MetricSpace, S) -> np.ndarray:
    """Distance from every point to the subset ``S`` (``inf`` when ``S`` is empty)."""
    S = as_subset(S, space.n)
    if S.size == 0:
        return np.full(space.n, np.inf)
    return space.dist[:, S].min(axis=1)


def epsilon_components(space: MetricSpace, S, delta: float) -> list[np.ndarray]:
    """Components of the graph on ``S`` joining points at distance ``<= delta``.

    Classes are returned as sorted index arrays, ordered by smallest member.
    """
    S = as_subset(S, space.n)
    if S.size == 0:
        raise PreconditionError("epsilon_components needs a non-empty subset")
    if not delta > 0:
        raise PreconditionError("delta must be positive")
    A = space.dist[np.ix_(S, S)] <= delta
    _, lab = connected_components(csr_matrix(A), directed=False)
    lab = canonical_labels(lab)
    order = np.argsort(lab, kind="stable")
    bounds = np.searchsorted(lab[order], np.arange(lab.max() + 2))
    return [S[order[bounds[c]:bounds[c + 1]]] for c in range(lab.max() + 1)]


def is_connected(space: MetricSpace, delta: float) -> bool:
    return len(epsilon_components(space, np.arange(space.n), delta)) == 1


def ball(space: MetricSpace, x: int, r: float, closed: bool = False) -> np.ndarray:
    if not 0 <= x < space.n:
        raise PreconditionError(f"point index {x} out of range")
    row = space.dist[x]
    idx = np.flatnonzero(row <= r if closed else row < r)
    if x not in idx:
        idx = np.union1d(idx, [x])
    return idx.astype(np.int64)


def delta_graph(space: MetricSpace, delta: float) -> csr_matrix:
    """CSR adjacency of the delta-graph (no self loops)."""
    A = space.dist <= delta
    np.fill_diagonal(A, False)
    return csr_matrix(A)
