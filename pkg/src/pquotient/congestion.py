"""Congestion detection, canonical partitions and the Peano-quotient pipeline.

A point counts as congested at scales ``(r, R, delta)`` when some point within
``r`` of it cannot be reached by ``delta``-steps without leaving the closed
ball of radius ``R`` around it: at that resolution the point has no small
connected neighbourhood.
"""
from __future__ import annotations

import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import _kernels
from .checks import (
    local_isometry_check,
    refinement_check,
    separation_check,
    verify_pseudometric,
)
from .metric import (
    MetricSpace,
    Partition,
    PreconditionError,
    as_subset,
    delta_graph,
    epsilon_components,
    is_connected,
    point_set_distance,
    validate_metric,
)
from .quotient import QuotientSpace, delta_p, quotient_space, worker_count
from .report import Report


class ConnectivityWarning(UserWarning):
    """The delta-graph of the whole space is disconnected."""


@dataclass(frozen=True)
class CongestionParams:
    r: float
    R: float
    delta: float

    def __post_init__(self):
        if not (0 < self.r < self.R):
            raise PreconditionError(f"need 0 < r < R (got r={self.r}, R={self.R})")
        if not (0 < self.delta <= self.R):
            raise PreconditionError(f"need 0 < delta <= R (got delta={self.delta}, R={self.R})")

    @classmethod
    def from_delta(cls, delta: float, r: float | None = None, R: float | None = None) -> CongestionParams:
        """Fill ``r = 3 delta`` and ``R = 10 delta`` unless given."""
        return cls(r=3.0 * delta if r is None else r, R=10.0 * delta if R is None else R, delta=delta)

    @classmethod
    def default_for(cls, space: MetricSpace) -> CongestionParams:
        """``delta`` bridges the widest sampling gap: twice the largest nearest-neighbour distance."""
        delta = 2.0 * float(space.nearest_neighbor_distances.max())
        if delta <= 0:
            raise PreconditionError("cannot derive scales from a one-point space")
        return cls.from_delta(delta)

    def to_dict(self) -> dict[str, float]:
        return {"r": self.r, "R": self.R, "delta": self.delta}


def congestion_set(space: MetricSpace, params: CongestionParams, workers: int | None = None) -> np.ndarray:
    """Indices of points flagged as congested (sorted)."""
    if not is_connected(space, params.delta):
        warnings.warn(
            f"delta-graph at delta={params.delta:.6g} is disconnected; detections near the gaps are unreliable",
            ConnectivityWarning,
            stacklevel=2,
        )
    A = delta_graph(space, params.delta)
    D = np.ascontiguousarray(space.dist)
    indptr = A.indptr.astype(np.int64)
    indices = A.indices.astype(np.int64)
    bounds = np.linspace(0, space.n, min(worker_count(workers), space.n) + 1).astype(np.int64)

    def scan(k: int) -> np.ndarray:
        return _kernels.congestion_scan(D, indptr, indices, params.r, params.R, bounds[k], bounds[k + 1])

    if len(bounds) == 2:
        flags = scan(0)
    else:
        with ThreadPoolExecutor(len(bounds) - 1) as pool:
            flags = np.concatenate(list(pool.map(scan, range(len(bounds) - 1))))
    return np.flatnonzero(flags).astype(np.int64)


def collar(space: MetricSpace, N, width: float = 0.0) -> np.ndarray:
    """``N`` together with every point within ``width`` of it."""
    N = as_subset(N, space.n)
    if width <= 0 or N.size == 0:
        return N
    return np.flatnonzero(point_set_distance(space, N) <= width).astype(np.int64)


@dataclass(frozen=True, eq=False)
class CanonicalDecomposition:
    N: np.ndarray
    F: np.ndarray
    O: np.ndarray
    SF: tuple[np.ndarray, ...]
    partition: Partition
    delta_F: float

    @property
    def F_classes(self) -> np.ndarray:
        """Partition classes making up ``F``, ascending."""
        if self.F.size == 0:
            return np.zeros(0, dtype=np.int64)
        return np.unique(self.partition.class_of[self.F])

    def validate(self) -> Report:
        rep = Report("decomposition")
        n = self.partition.n
        rep.touch("cover")
        if np.union1d(self.F, self.O).size != n or np.intersect1d(self.F, self.O).size:
            rep.add("cover", (), self.F.size + self.O.size, n, 0)
        rep.touch("N_in_F")
        missing = np.setdiff1d(self.N, self.F)
        rep.add_many("N_in_F", ((int(i),) for i in missing), np.ones(missing.size), np.zeros(missing.size), 0)
        rep.touch("class_shape")
        in_f = np.zeros(n, dtype=bool)
        in_f[self.F] = True
        for k, m in enumerate(self.partition.class_members):
            if not (in_f[m].all() or (m.size == 1 and not in_f[m[0]])):
                rep.add("class_shape", (k,), m.size, 1, 0)
        return rep

    def to_dict(self) -> dict[str, Any]:
        return {
            "N": self.N.tolist(),
            "F": self.F.tolist(),
            "O": self.O.tolist(),
            "SF": [c.tolist() for c in self.SF],
            "delta_F": self.delta_F,
        }


def canonical_partition(space: MetricSpace, F, delta_F: float, N=None) -> CanonicalDecomposition:
    """Components of ``F`` at resolution ``delta_F`` plus singletons of the rest.

    ``N`` (the detected set that ``F`` closes up) defaults to ``F``.
    """
    F = as_subset(F, space.n)
    N = F if N is None else as_subset(N, space.n)
    if not delta_F > 0:
        raise PreconditionError("delta_F must be positive")
    if np.setdiff1d(N, F).size:
        raise PreconditionError("N must be contained in F")
    O = np.setdiff1d(np.arange(space.n), F).astype(np.int64)
    SF = tuple(epsilon_components(space, F, delta_F)) if F.size else ()
    labels = np.empty(space.n, dtype=np.int64)
    for k, comp in enumerate(SF):
        labels[comp] = k
    labels[O] = len(SF) + np.arange(O.size)
    return CanonicalDecomposition(N, F, O, SF, Partition.from_labels(labels), float(delta_F))


@dataclass(eq=False)
class PipelineReport:
    params: CongestionParams
    delta_F: float
    tau_merge: float
    collar: float
    decomposition: CanonicalDecomposition
    qspace: QuotientSpace
    residual: np.ndarray
    checks: dict[str, Report]
    diagnostics: dict[str, Any]
    timings_ms: dict[str, float] = field(default_factory=dict)

    @property
    def residual_points(self) -> np.ndarray:
        """Original points whose quotient class is residually congested."""
        return np.flatnonzero(np.isin(self.qspace.pi, self.residual)).astype(np.int64)

    @property
    def checks_ok(self) -> bool:
        return all(r.ok for r in self.checks.values())

    @property
    def ok(self) -> bool:
        return self.residual.size == 0 and self.checks_ok


def peano_pipeline(
    space: MetricSpace,
    params: CongestionParams | None = None,
    delta_F: float | None = None,
    tau_merge: float = 0.0,
    collar_width: float = 0.0,
    F=None,
    workers: int | None = None,
) -> PipelineReport:
    """Detect congestion, collapse it, and re-probe the quotient.

    Passing ``F`` skips detection and uses that set as the collapsed part
    (any superset of the congestion set, or a deliberately deficient one).
    """
    timings: dict[str, float] = {}
    clock = time.perf_counter()

    def lap(name: str):
        nonlocal clock
        now = time.perf_counter()
        timings[name] = round((now - clock) * 1e3, 3)
        clock = now

    params = params or CongestionParams.default_for(space)
    delta_F = params.delta if delta_F is None else float(delta_F)
    connected = is_connected(space, params.delta)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConnectivityWarning)
        if F is None:
            N = congestion_set(space, params, workers)
            F_set = collar(space, N, collar_width)
        else:
            F_set = as_subset(F, space.n)
            N = F_set
        lap("detect")
        dec = canonical_partition(space, F_set, delta_F, N=N)
        lap("partition")
        qpm = delta_p(space, dec.partition, workers=workers)
        lap("delta_p")
        qs = quotient_space(qpm, tau_merge)
        lap("quotient")
        qms = qs.as_metric_space()
        quotient_connected = is_connected(qms, params.delta) if qms.n > 1 else True
        residual = congestion_set(qms, params, workers) if qms.n > 1 else np.zeros(0, dtype=np.int64)
        lap("residual")

    checks = {
        "decomposition": dec.validate(),
        "quotient": refinement_check(qs),
        "separation": separation_check(qs, qs.image(dec.F) if dec.F.size else []),
        "local_isometry": local_isometry_check(space, dec.partition, dec.F, qpm),
        "pseudometric": verify_pseudometric(qpm),
        "quotient_metric": validate_metric(qms, check_triangle=True),
    }
    lap("checks")
    diagnostics = {
        "n_points": space.n,
        "n_detected": int(N.size),
        "n_F": int(dec.F.size),
        "n_F_classes": len(dec.SF),
        "n_partition_classes": dec.partition.K,
        "n_quotient_classes": qs.size,
        "quotient_diameter": float(qs.nabla.max()) if qs.size else 0.0,
        "n_residual": int(residual.size),
        "connected_at_delta": bool(connected),
        "quotient_connected_at_delta": bool(quotient_connected),
        "solver": qpm.solver,
        "F_source": "detected" if F is None else "given",
    }
    return PipelineReport(
        params=params,
        delta_F=delta_F,
        tau_merge=float(tau_merge),
        collar=float(collar_width),
        decomposition=dec,
        qspace=qs,
        residual=residual,
        checks=checks,
        diagnostics=diagnostics,
        timings_ms=timings,
    )


def residual_congestion_check(
    space: MetricSpace,
    F_dagger,
    params: CongestionParams | None = None,
    delta_F: float | None = None,
    tau_merge: float = 0.0,
    N=None,
    workers: int | None = None,
) -> tuple[Report, PipelineReport]:
    """Collapse a set that misses some congestion points and confirm the
    quotient keeps congestion at the images of the missed points."""
    params = params or CongestionParams.default_for(space)
    F_dagger = as_subset(F_dagger, space.n)
    if N is None:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConnectivityWarning)
            N = congestion_set(space, params, workers)
    N = as_subset(N, space.n)
    excluded = np.setdiff1d(N, F_dagger)
    if excluded.size == 0:
        raise PreconditionError("F_dagger contains every detected congestion point; nothing is excluded")
    pipe = peano_pipeline(space, params, delta_F, tau_merge, F=F_dagger, workers=workers)
    rep = Report("residual_congestion")
    rep.touch("residual_nonempty")
    rep.touch("excluded_images_residual")
    if pipe.residual.size == 0:
        rep.add("residual_nonempty", (), 0, 1, 0)
    hit = np.intersect1d(pipe.qspace.image(excluded), pipe.residual)
    if hit.size == 0:
        rep.add("excluded_images_residual", (), 0, 1, 0)
    rep.notices.append(
        f"{excluded.size} congestion point(s) excluded; {hit.size} of their quotient images are residually congested"
    )
    return rep, pipe


def precision_recall(detected, truth) -> tuple[float, float]:
    """Precision and recall of a detected index set against ground truth.

    Empty detections have precision 1; empty truth has recall 1.
    """
    detected = np.unique(np.asarray(detected, dtype=np.int64))
    truth = np.unique(np.asarray(truth, dtype=np.int64))
    tp = np.intersect1d(detected, truth).size
    precision = tp / detected.size if detected.size else 1.0
    recall = tp / truth.size if truth.size else 1.0
    return float(precision), float(recall)
