"""Command-line front end: ``pq {generate,analyze,quotient,verify,pipeline}``.

Exit codes
    0  success
    1  an ``--expect-residual`` assertion found an empty residual
    2  bad parameters
    3  input is malformed or fails metric validation
    4  partition file inconsistent with the input
    5  a verification check failed
    6  residual congestion is non-empty

Option values come from the command line, then from ``--config`` (a JSON
object keyed by option name), then from built-in defaults.  Reports go to
``--output`` (stdout when omitted); stderr only carries diagnostics.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from pathlib import Path
from typing import Any

import numpy as np

from . import io
from .checks import (
    f_restricted_delta,
    local_isometry_check,
    lower_bound_check,
    oracle_check,
    refinement_check,
    separation_check,
    verify_pseudometric,
)
from .congestion import (
    CongestionParams,
    ConnectivityWarning,
    canonical_partition,
    collar,
    congestion_set,
    peano_pipeline,
    precision_recall,
    residual_congestion_check,
)
from .generators import GENERATORS, generate
from .metric import (
    CapacityError,
    MalformedInputError,
    MetricSpace,
    Partition,
    PQError,
    PreconditionError,
    is_connected,
    validate_metric,
)
from .quotient import delta_p, quotient_space
from .report import Report

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_PARAMS = 2
EXIT_METRIC = 3
EXIT_PARTITION = 4
EXIT_VERIFY = 5
EXIT_RESIDUAL = 6

MAX_WITNESS_CLASSES = 64

DEFAULTS: dict[str, Any] = {
    "output": None,
    "name": None,
    "n": None,
    "param": [],
    "r": None,
    "R": None,
    "delta": None,
    "delta_f": None,
    "tau_merge": 0.0,
    "collar": 0.0,
    "check_triangle": False,
    "oracle": False,
    "emit_witnesses": False,
    "multiscale": None,
    "expect_residual": False,
    "exclude_truth_fraction": None,
    "partition": None,
    "subset": None,
    "timings": False,
}


class CLIError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------- parsing


def _positive(text: str) -> float:
    value = float(text)
    if not (value > 0 and math.isfinite(value)):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return value


def _nonnegative(text: str) -> float:
    value = float(text)
    if not (value >= 0 and math.isfinite(value)):
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {text!r}")
    return value


def _scale_list(text: str) -> list[float]:
    try:
        return [_positive(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated positive numbers, got {text!r}") from None


def _fraction(text: str) -> float:
    value = float(text)
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError(f"expected a fraction in (0, 1), got {text!r}")
    return value


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file of option defaults")
    common.add_argument("--output", default=S, help="report path (stdout when omitted)")

    scales = argparse.ArgumentParser(add_help=False)
    scales.add_argument("--r", type=_positive, default=S, help="probe radius (default 3*delta)")
    scales.add_argument("--R", type=_positive, default=S, help="ball radius (default 10*delta)")
    scales.add_argument("--delta", type=_positive, default=S, help="step size (default 2*max NN distance)")

    inp = argparse.ArgumentParser(add_help=False)
    inp.add_argument("--input", required=True, help="point-cloud .json or distance-matrix .csv")
    inp.add_argument("--check-triangle", action="store_true", default=S, help="also validate the triangle inequality")

    fsub = argparse.ArgumentParser(add_help=False)
    fsub.add_argument("--partition", default=S, help="JSON array: class label of every point")
    fsub.add_argument("--subset", default=S, help="JSON array: indices of F")
    fsub.add_argument("--delta-f", type=_positive, default=S, help="component scale inside F (default delta)")
    fsub.add_argument("--collar", type=_nonnegative, default=S, help="grow detected set by this width")

    parser = argparse.ArgumentParser(prog="pq", description="Partition quotients of finite metric spaces.")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="sample a continuum")
    g.add_argument("--name", default=S, help=f"one of: {', '.join(GENERATORS)}")
    g.add_argument("--n", type=int, default=S, help="number of points")
    g.add_argument("--param", action="append", default=S, metavar="KEY=VALUE", help="generator parameter")

    a = sub.add_parser("analyze", parents=[common, inp, scales], help="detect congestion points")
    a.add_argument("--multiscale", type=_scale_list, default=S, metavar="D1,D2,...", help="sweep delta values")

    q = sub.add_parser("quotient", parents=[common, inp, scales, fsub], help="compute the quotient space")
    q.add_argument("--tau-merge", type=_nonnegative, default=S)
    q.add_argument("--emit-witnesses", action="store_true", default=S)

    v = sub.add_parser("verify", parents=[common, inp, scales, fsub], help="run the property checks")
    v.add_argument("--tau-merge", type=_nonnegative, default=S)
    v.add_argument("--oracle", action="store_true", default=S, help="compare against brute force (K <= 9)")

    p = sub.add_parser("pipeline", parents=[common, inp, scales], help="detect, collapse, re-probe")
    p.add_argument("--delta-f", type=_positive, default=S)
    p.add_argument("--tau-merge", type=_nonnegative, default=S)
    p.add_argument("--collar", type=_nonnegative, default=S)
    p.add_argument("--expect-residual", action="store_true", default=S)
    p.add_argument("--exclude-truth-fraction", type=_fraction, default=S, metavar="F")
    p.add_argument("--timings", action="store_true", default=S, help="include wall-clock timings (not reproducible)")
    return parser


def resolve(ns: argparse.Namespace) -> argparse.Namespace:
    """Apply config-file values and defaults below explicit flags."""
    config: dict[str, Any] = {}
    if ns.config:
        try:
            config = json.loads(Path(ns.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise CLIError(EXIT_PARAMS, f"cannot read config {ns.config}: {exc}") from None
        if not isinstance(config, dict):
            raise CLIError(EXIT_PARAMS, "config file must hold a JSON object")
        config = {k.replace("-", "_"): val for k, val in config.items()}
        unknown = set(config) - set(DEFAULTS) - {"input"}
        if unknown:
            raise CLIError(EXIT_PARAMS, f"unknown config key(s): {sorted(unknown)}")
    for key, default in {**DEFAULTS, "input": None}.items():
        if not hasattr(ns, key):
            setattr(ns, key, config.get(key, default))
    return ns


# ---------------------------------------------------------------- helpers


def _load(path: str, check_triangle: bool) -> tuple[MetricSpace, np.ndarray | None, dict, Report]:
    try:
        space, truth, meta = io.load_space(path)
    except OSError as exc:
        raise CLIError(EXIT_METRIC, f"cannot read {path}: {exc}") from None
    except (MalformedInputError, ValueError) as exc:
        raise CLIError(EXIT_METRIC, str(exc)) from None
    report = validate_metric(space, check_triangle=check_triangle)
    return space, truth, meta, report


def _load_valid(ns) -> tuple[MetricSpace, np.ndarray | None, dict, Report]:
    space, truth, meta, report = _load(ns.input, ns.check_triangle)
    if not report.ok:
        raise CLIError(EXIT_METRIC, f"{ns.input}: metric validation failed: {report.summary()}")
    return space, truth, meta, report


def _scales(ns, space: MetricSpace, delta: float | None = None) -> CongestionParams:
    delta = ns.delta if delta is None else delta
    if delta is None:
        base = CongestionParams.default_for(space)
        return CongestionParams.from_delta(base.delta, ns.r, ns.R)
    return CongestionParams.from_delta(delta, ns.r, ns.R)


def _detect(space: MetricSpace, params: CongestionParams) -> tuple[np.ndarray, bool]:
    connected = is_connected(space, params.delta)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConnectivityWarning)
        detected = congestion_set(space, params)
    if not connected:
        _note(f"delta-graph disconnected at delta={params.delta:.6g}")
    return detected, connected


def _note(message: str) -> None:
    print(f"pq: {message}", file=sys.stderr)


def _emit(ns, doc: dict) -> None:
    text = io.dumps(doc)
    if ns.output is None:
        sys.stdout.write(text)
    else:
        Path(ns.output).write_text(text)


def _input_meta(ns, space: MetricSpace, meta: dict) -> dict[str, Any]:
    return {"input": Path(ns.input).name, "n_points": space.n, **({"corpus": meta} if meta else {})}


def _partition_and_F(ns, space: MetricSpace, default_F=None) -> tuple[Partition, np.ndarray, float, str]:
    """Resolve ``--partition`` / ``--subset`` into a partition and its ``F``.

    Without a subset, ``F`` is the union of the non-singleton classes.
    """
    n = space.n
    if ns.partition is not None:
        try:
            partition = io.load_partition(ns.partition, n)
        except (OSError, ValueError) as exc:
            raise CLIError(EXIT_PARTITION, str(exc)) from None
        if ns.subset is not None:
            F = _subset(ns.subset, n)
        else:
            F = np.flatnonzero(partition.sizes[partition.class_of] > 1).astype(np.int64)
        return partition, F, float("nan"), "partition"
    base = CongestionParams.default_for(space)
    delta_f = ns.delta_f if ns.delta_f is not None else (ns.delta if ns.delta is not None else base.delta)
    if ns.subset is not None:
        F, source = _subset(ns.subset, n), "subset"
    elif default_F is not None:
        F, source = default_F, "detected"
    else:
        F, source = np.zeros(0, dtype=np.int64), "empty"
    dec = canonical_partition(space, F, delta_f)
    return dec.partition, dec.F, delta_f, source


def _subset(path: str, n: int) -> np.ndarray:
    try:
        return io.load_subset(path, n)
    except (OSError, ValueError) as exc:
        raise CLIError(EXIT_PARAMS, str(exc)) from None


# ---------------------------------------------------------------- commands


def cmd_generate(ns) -> int:
    if ns.name is None or ns.n is None:
        raise CLIError(EXIT_PARAMS, "generate needs --name and --n")
    params: dict[str, Any] = {}
    for item in ns.param:
        key, sep, value = item.partition("=")
        if not sep:
            raise CLIError(EXIT_PARAMS, f"--param expects KEY=VALUE, got {item!r}")
        params[key.strip()] = value.strip()
    try:
        corpus = generate(ns.name, ns.n, params)
    except ValueError as exc:
        raise CLIError(EXIT_PARAMS, str(exc)) from None
    out = Path(ns.output) if ns.output is not None else Path(".")
    if out.is_dir() or out.suffix.lower() != ".json":
        out.mkdir(parents=True, exist_ok=True)
        out = out / corpus.filename
    io.write_json(out, corpus.to_dict())
    _note(f"wrote {out} ({corpus.space.n} points, {corpus.truth.size} congested)")
    return EXIT_OK


def cmd_analyze(ns) -> int:
    space, truth, meta, _ = _load_valid(ns)
    deltas = ns.multiscale if ns.multiscale else [ns.delta]
    sections = []
    for d in deltas:
        params = _scales(ns, space, d)
        detected, connected = _detect(space, params)
        section: dict[str, Any] = {
            "params": params.to_dict(),
            "connected_at_delta": connected,
            "n_detected": int(detected.size),
            "detected": detected.tolist(),
        }
        if truth is not None:
            precision, recall = precision_recall(detected, truth)
            section.update(precision=precision, recall=recall)
        sections.append(section)
    doc = {
        **_input_meta(ns, space, meta),
        "check_triangle": bool(ns.check_triangle),
        "has_truth": truth is not None,
        "multiscale": bool(ns.multiscale),
        "sections": sections,
    }
    _emit(ns, doc)
    return EXIT_OK


def cmd_quotient(ns) -> int:
    space, _, meta, _ = _load_valid(ns)
    default_F = None
    if ns.partition is None and ns.subset is None:
        params = _scales(ns, space)
        detected, _ = _detect(space, params)
        default_F = collar(space, detected, ns.collar)
    partition, F, delta_f, source = _partition_and_F(ns, space, default_F)
    qpm = delta_p(space, partition)
    qs = quotient_space(qpm, ns.tau_merge)
    sink = io.MatrixSink(ns.output)
    doc = {
        **_input_meta(ns, space, meta),
        "partition_source": source,
        "delta_F": None if math.isnan(delta_f) else delta_f,
        "F": F.tolist(),
        **io.qspace_to_dict(qs, sink),
    }
    if ns.emit_witnesses:
        doc["witnesses"] = _witnesses(qpm)
    _emit(ns, doc)
    return EXIT_OK


def _witnesses(qpm) -> list[dict[str, Any]] | dict[str, str]:
    K = qpm.partition.K
    if K > MAX_WITNESS_CLASSES:
        _note(f"witnesses skipped: {K} classes exceeds {MAX_WITNESS_CLASSES}")
        return {"skipped": f"{K} classes exceeds {MAX_WITNESS_CLASSES}"}
    out = []
    first = [int(m[0]) for m in qpm.partition.class_members]
    for a in range(K):
        for b in range(a + 1, K):
            w = qpm.witness(first[a], first[b])
            out.append(
                {
                    "x": first[a],
                    "y": first[b],
                    "delta": float(qpm.delta[first[a], first[b]]),
                    "class_sequence": list(w.class_sequence),
                    "total": w.total,
                    "pairs": [list(p) for p in w.pairs],
                }
            )
    return out


def cmd_verify(ns) -> int:
    check_triangle = ns.check_triangle or Path(ns.input).suffix.lower() != ".json"
    space, _, meta, metric = _load(ns.input, check_triangle)
    default_F = None
    if ns.partition is None and ns.subset is None:
        params = _scales(ns, space)
        detected, _ = _detect(space, params)
        default_F = collar(space, detected, ns.collar)
    partition, F, delta_f, source = _partition_and_F(ns, space, default_F)
    qpm = delta_p(space, partition)
    qs = quotient_space(qpm, ns.tau_merge)
    reports: dict[str, Report] = {"metric": metric}
    reports["pseudometric"] = verify_pseudometric(qpm)
    reports["quotient"] = refinement_check(qs)
    reports["separation"] = separation_check(qs, qs.image(F) if F.size else [])
    try:
        reports["lower_bound"] = lower_bound_check(space, partition, F, qpm)
        reports["local_isometry"] = local_isometry_check(space, partition, F, qpm)
    except PreconditionError as exc:
        reports["f_form"] = _failed("f_form", str(exc))
    if "f_form" not in reports:
        if metric.ok or not check_triangle:
            try:
                reports["f_restricted"] = f_restricted_delta(space, partition, F, qpm)[1]
            except PreconditionError as exc:
                reports["f_restricted"] = _skipped("f_restricted", str(exc))
        else:
            reports["f_restricted"] = _skipped("f_restricted", "input is not a metric; check not applicable")
    if ns.oracle:
        try:
            reports["oracle"] = oracle_check(qpm)
        except CapacityError as exc:
            reports["oracle"] = _skipped("oracle", str(exc))
            _note(f"oracle skipped: {exc}")
    ok = all(r.ok for r in reports.values())
    doc = {
        **_input_meta(ns, space, meta),
        "partition_source": source,
        "delta_F": None if math.isnan(delta_f) else delta_f,
        "tau_merge": ns.tau_merge,
        "n_partition_classes": partition.K,
        "n_quotient_classes": qs.size,
        "ok": ok,
        "checks": {k: r.to_dict() for k, r in reports.items()},
    }
    _emit(ns, doc)
    if not ok:
        for r in reports.values():
            if not r.ok:
                _note(r.summary())
        return EXIT_VERIFY
    return EXIT_OK


def _skipped(name: str, reason: str) -> Report:
    rep = Report(name)
    rep.notices.append(reason)
    return rep


def _failed(name: str, reason: str) -> Report:
    rep = Report(name)
    rep.add(name, (), 1, 0, 0)
    rep.notices.append(reason)
    return rep


def cmd_pipeline(ns) -> int:
    space, truth, meta, _ = _load_valid(ns)
    params = _scales(ns, space)
    sink = io.MatrixSink(ns.output)
    doc: dict[str, Any] = {**_input_meta(ns, space, meta)}
    if ns.exclude_truth_fraction is not None:
        if truth is None or truth.size == 0:
            raise CLIError(EXIT_PARAMS, "--exclude-truth-fraction needs an input with non-empty truth labels")
        k = math.ceil(ns.exclude_truth_fraction * truth.size)
        excluded, F_dagger = truth[:k], truth[k:]
        rc, report = residual_congestion_check(
            space, F_dagger, params, ns.delta_f, ns.tau_merge, N=truth
        )
        doc["negative_control"] = {
            "fraction": ns.exclude_truth_fraction,
            "excluded": excluded.tolist(),
            "excluded_images": report.qspace.image(excluded).tolist(),
            "check": rc.to_dict(),
        }
    else:
        report = peano_pipeline(space, params, ns.delta_f, ns.tau_merge, ns.collar)
        rc = None
    doc.update(io.pipeline_to_dict(report, sink, include_timings=ns.timings))
    if truth is not None:
        detected = report.decomposition.N
        precision, recall = precision_recall(detected, truth)
        doc["truth"] = {
            "n_truth": int(truth.size),
            "precision": precision,
            "recall": recall,
            "truth_quotient_classes": report.qspace.image(truth).tolist() if truth.size else [],
        }
    _emit(ns, doc)
    if not report.diagnostics["connected_at_delta"]:
        _note(f"delta-graph disconnected at delta={params.delta:.6g}")
    if not report.checks_ok:
        for r in report.checks.values():
            if not r.ok:
                _note(r.summary())
        return EXIT_VERIFY
    if report.residual.size:
        _note(f"residual congestion: {report.residual.size} quotient class(es)")
        if rc is not None and not rc.ok:
            _note(rc.summary())
        return EXIT_RESIDUAL
    if ns.expect_residual:
        _note("expected residual congestion but the residual is empty")
        return EXIT_ASSERTION
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "analyze": cmd_analyze,
    "quotient": cmd_quotient,
    "verify": cmd_verify,
    "pipeline": cmd_pipeline,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        ns = resolve(ns)
        return COMMANDS[ns.command](ns)
    except CLIError as exc:
        _note(str(exc))
        return exc.code
    except PQError as exc:
        _note(str(exc))
        return EXIT_PARAMS


if __name__ == "__main__":
    sys.exit(main())
