"""Executable properties of partition pseudo-metrics and their quotients.

Every checker returns a :class:`~pquotient.report.Report`; an ``ok`` report
means the property held on every pair or triple examined.
"""
from __future__ import annotations

import numpy as np

from . import _kernels
from .metric import (
    MetricSpace,
    Partition,
    PreconditionError,
    as_subset,
    point_set_distance,
    validate_metric,
)
from .quotient import (
    QuotientPseudoMetric,
    QuotientSpace,
    delta_p,
    delta_p_oracle,
    equality_tolerance,
    shortest_paths,
)
from .report import MAX_LISTED, Report


def verify_pseudometric(qpm: QuotientPseudoMetric) -> Report:
    """Pseudo-metric axioms plus domination by ``d`` and class constancy.

    Works on ``qpm.delta`` as stored, so a tampered matrix is caught.
    """
    delta = np.asarray(qpm.delta, dtype=float)
    D = qpm.space.dist
    c = qpm.partition.class_of
    tol = equality_tolerance(qpm.space)
    rep = Report("pseudometric")

    i, j = np.nonzero(delta < 0)
    rep.touch("nonnegativity")
    rep.add_many("nonnegativity", zip(i, j), delta[i, j], np.zeros(i.size), 0.0)

    d0 = np.flatnonzero(np.diagonal(delta) != 0)
    rep.touch("diagonal")
    rep.add_many("diagonal", zip(d0, d0), delta[d0, d0], np.zeros(d0.size), 0.0)

    i, j = np.nonzero(np.triu(np.abs(delta - delta.T) > tol, k=1))
    rep.touch("symmetry")
    rep.add_many("symmetry", zip(i, j), delta[i, j], delta[j, i], tol)

    count, rows = _kernels.triangle_scan(np.ascontiguousarray(delta), tol, MAX_LISTED)
    rep.touch("triangle")
    if count:
        a, b, k = rows.T
        rep.add_many("triangle", rows, delta[a, k], delta[a, b] + delta[b, k], tol, total=count)

    i, j = np.nonzero(delta > D + tol)
    rep.touch("dominated_by_d")
    rep.add_many("dominated_by_d", zip(i, j), delta[i, j], D[i, j], tol)

    same = c[:, None] == c[None, :]
    i, j = np.nonzero(same & (delta != 0))
    rep.touch("zero_on_class")
    rep.add_many("zero_on_class", zip(i, j), delta[i, j], np.zeros(i.size), 0.0)

    first = np.array([m[0] for m in qpm.partition.class_members], dtype=np.int64)
    ref = delta[first[c]]
    i, z = np.nonzero(np.abs(delta - ref) > tol)
    rep.touch("class_invariance")
    rep.add_many(
        "class_invariance", zip(i, first[c[i]], z), delta[i, z], ref[i, z], tol
    )
    return rep


def oracle_check(qpm: QuotientPseudoMetric) -> Report:
    """Compare the solver output against brute-force enumeration."""
    expected = delta_p_oracle(qpm.space, qpm.partition)
    tol = equality_tolerance(qpm.space)
    rep = Report("oracle")
    rep.touch("oracle_equality")
    i, j = np.nonzero(np.abs(qpm.delta - expected) > tol)
    rep.add_many("oracle_equality", zip(i, j), qpm.delta[i, j], expected[i, j], tol)
    return rep


def require_f_form(partition: Partition, F) -> np.ndarray:
    """Check that classes either lie inside ``F`` or are singletons outside it."""
    F = as_subset(F, partition.n)
    in_f = np.zeros(partition.n, dtype=bool)
    in_f[F] = True
    for k, m in enumerate(partition.class_members):
        inside = in_f[m]
        if inside.all():
            continue
        if m.size == 1:
            continue
        raise PreconditionError(
            f"class {k} mixes F and non-F points or is a non-singleton outside F"
        )
    return F


def _qpm_for(space: MetricSpace, partition: Partition, qpm: QuotientPseudoMetric | None):
    if qpm is None:
        return delta_p(space, partition)
    if qpm.partition is not partition and not np.array_equal(qpm.partition.class_of, partition.class_of):
        raise PreconditionError("qpm was computed for a different partition")
    return qpm


def lower_bound_check(
    space: MetricSpace, partition: Partition, F, qpm: QuotientPseudoMetric | None = None
) -> Report:
    """``delta(x, y) >= min(max(dist(x, F), dist(y, F)), d(x, y))`` for all pairs."""
    F = require_f_form(partition, F)
    qpm = _qpm_for(space, partition, qpm)
    dF = point_set_distance(space, F)
    bound = np.minimum(np.maximum(dF[:, None], dF[None, :]), space.dist)
    tol = equality_tolerance(space)
    rep = Report("lower_bound")
    rep.touch("lower_bound")
    i, j = np.nonzero(qpm.delta < bound - tol)
    rep.add_many("lower_bound", zip(i, j), qpm.delta[i, j], bound[i, j], tol)
    return rep


def local_isometry_check(
    space: MetricSpace, partition: Partition, F, qpm: QuotientPseudoMetric | None = None
) -> Report:
    """For ``x`` outside ``F``: ``d = delta`` on the open ball of radius ``dist(x, F)/3``."""
    F = require_f_form(partition, F)
    rep = Report("local_isometry")
    rep.touch("local_isometry")
    outside = np.setdiff1d(np.arange(space.n), F)
    if outside.size == 0:
        rep.notices.append("F is the whole space; property holds vacuously")
        return rep
    qpm = _qpm_for(space, partition, qpm)
    D = space.dist
    radius = point_set_distance(space, F)[outside] / 3.0
    M = D[outside] < radius[:, None]
    Mf = M.astype(np.float32)
    covered = (Mf.T @ Mf) > 0.5
    tol = equality_tolerance(space)
    bad = covered & (np.abs(D - qpm.delta) > tol)
    x1, x2 = np.nonzero(np.triu(bad))
    centers = [outside[np.flatnonzero(M[:, a] & M[:, b])[0]] for a, b in zip(x1[:MAX_LISTED], x2[:MAX_LISTED])]
    centers += [-1] * (x1.size - len(centers))
    rep.add_many("local_isometry", zip(centers, x1, x2), D[x1, x2], qpm.delta[x1, x2], tol)
    return rep


def f_restricted_delta(
    space: MetricSpace, partition: Partition, F, qpm: QuotientPseudoMetric | None = None
) -> tuple[np.ndarray, Report]:
    """Shortest paths over the classes inside ``F`` only, checked against ``delta``.

    Returns the restricted class matrix (classes inside ``F`` in ascending
    class order) and an equality report over all pairs of ``F`` points.
    Requires the triangle inequality on ``d``.
    """
    F = require_f_form(partition, F)
    if not space.triangle:
        tri = validate_metric(space, check_triangle=True)
        if not tri.ok:
            raise PreconditionError(f"triangle inequality fails ({tri.summary()}); restricted equality need not hold")
    qpm = _qpm_for(space, partition, qpm)
    rep = Report("f_restricted")
    rep.touch("f_restricted")
    if F.size == 0:
        rep.notices.append("F is empty; nothing to compare")
        return np.zeros((0, 0)), rep
    fc = np.unique(partition.class_of[F])
    restricted, _ = shortest_paths(qpm.graph.w[np.ix_(fc, fc)])
    pos = np.searchsorted(fc, partition.class_of[F])
    lifted = restricted[np.ix_(pos, pos)]
    actual = qpm.delta[np.ix_(F, F)]
    tol = equality_tolerance(space)
    a, b = np.nonzero(np.triu(np.abs(lifted - actual) > tol))
    rep.add_many("f_restricted", zip(F[a], F[b]), lifted[a, b], actual[a, b], tol)
    return restricted, rep


def separation_check(qspace: QuotientSpace, F_classes) -> Report:
    """Distinct quotient classes coming from ``F`` are at positive distance."""
    fc = as_subset(F_classes, qspace.size)
    rep = Report("separation")
    rep.touch("separation")
    if fc.size < 2:
        rep.notices.append("fewer than two F-classes; property holds vacuously")
        return rep
    sub = qspace.nabla[np.ix_(fc, fc)]
    a, b = np.nonzero(np.triu(sub <= 0, k=1))
    rep.add_many("separation", zip(fc[a], fc[b]), sub[a, b], np.zeros(a.size), 0.0)
    return rep


def refinement_check(qspace: QuotientSpace) -> Report:
    """Partition refines the quotient, touching classes merge, and the
    quotient metric pulls back to ``delta``."""
    qpm = qspace.qpm
    P = qpm.partition
    rep = Report("quotient")
    rep.touch("refinement")
    for k, m in enumerate(P.class_members):
        hit = np.unique(qspace.pi[m])
        if hit.size != 1:
            rep.add("refinement", (k, int(hit[0]), int(hit[1])), hit.size, 1, 0)
    rep.touch("zero_distance_merge")
    w = qpm.graph.w
    a, b = np.nonzero(np.triu(w <= qspace.tau_merge, k=1))
    reps = np.array([m[0] for m in P.class_members], dtype=np.int64)
    split = qspace.pi[reps[a]] != qspace.pi[reps[b]]
    rep.add_many("zero_distance_merge", zip(a[split], b[split]), w[a[split], b[split]], np.zeros(split.sum()), 0.0)
    rep.touch("pullback")
    if qspace.tau_merge > 0:
        rep.notices.append("tau_merge > 0: pullback holds only up to merge slack; not checked")
        return rep
    pulled = qspace.nabla[np.ix_(qspace.pi, qspace.pi)]
    tol = equality_tolerance(qpm.space)
    i, j = np.nonzero(np.abs(pulled - qpm.delta) > tol)
    rep.add_many("pullback", zip(i, j), pulled[i, j], qpm.delta[i, j], tol)
    return rep
