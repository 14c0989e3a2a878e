"""Deterministic samples of classical planar continua with congestion labels.

Each continuum is a union of branches (curves).  Branches are sampled
uniformly in arc length, and the point budget is split in proportion to
branch length.  ``truth`` marks the points placed on the analytically known
set where the continuum fails to be locally connected.

Generators and parameters (documented ranges):

``interval``        unit segment; truth empty.
``circle``          unit circle; truth empty.
``topologist_sine`` graph of sin(1/x) on [x_min, 1] plus the limit segment
                    {0} x [-1, 1]; ``x_min`` in [0.005, 0.5], default 0.02;
                    truth = the limit segment.
``warsaw_circle``   the sine curve closed up by a polygonal arc below it
                    from (0, -1) to (1, sin 1); same ``x_min``; truth = the
                    limit segment.
``comb``            base [0, 1] x {0}, teeth {1/k} x [0, 1] for k = 1..m,
                    spine {0} x [0, 1]; ``m`` in [2, 50], default 8;
                    truth = spine points above the base.
``cantor_fan``      segments from the apex (0.5, 1) to the endpoints of the
                    level-``m`` Cantor intervals on [0, 1] x {0}; ``m`` in
                    [1, 6], default 2; truth empty (a hard negative).
``harmonic_broom``  segments from the origin to (1, 1/k), k = 1..m, plus the
                    limiting segment to (1, 0); ``m`` in [2, 50], default 8;
                    truth = limiting segment minus the origin.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .metric import MetricSpace, PreconditionError

MIN_POINTS = 50
_FINE = 200_000

Curve = Callable[[np.ndarray], np.ndarray]


class UnknownGeneratorError(PreconditionError):
    pass


@dataclass(frozen=True)
class _Branch:
    label: str
    curve: Curve
    t0: float
    t1: float
    congested: bool = False
    closed_start: bool = True
    closed_end: bool = True

    def length(self) -> float:
        return float(_cumlen(self)[1][-1])


@dataclass(frozen=True, eq=False)
class GeneratedCorpus:
    space: MetricSpace
    truth: np.ndarray
    name: str
    params: dict[str, Any]

    @property
    def filename(self) -> str:
        return f"{self.name}_n{self.space.n}.json"

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "params": dict(self.params),
            "points": self.space.coords.tolist(),
            "labels": list(self.space.labels),
            "truth": self.truth.tolist(),
        }


def _segment(p, q) -> Curve:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return lambda t: p[None, :] + t[:, None] * (q - p)[None, :]


def _sine(u: np.ndarray) -> np.ndarray:
    # parametrized by u = 1/x so the oscillations are evenly spread in u
    return np.stack([1.0 / u, np.sin(u)], axis=1)


def _cumlen(branch: _Branch):
    t = np.linspace(branch.t0, branch.t1, _FINE)
    p = branch.curve(t)
    s = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(p, axis=0).T))])
    return t, s


def _sample(branch: _Branch, m: int) -> np.ndarray:
    t, s = _cumlen(branch)
    L = s[-1]
    j = np.arange(m, dtype=float)
    if branch.closed_start and branch.closed_end:
        pos = L * j / max(m - 1, 1)
    elif branch.closed_start:
        pos = L * j / m
    elif branch.closed_end:
        pos = L * (j + 1) / m
    else:
        pos = L * (j + 1) / (m + 1)
    return branch.curve(np.interp(pos, s, t))


def _split_budget(lengths: list[float], n: int) -> list[int]:
    """Largest-remainder apportionment with at least two points per branch."""
    k = len(lengths)
    free = n - 2 * k
    total = sum(lengths)
    raw = [free * L / total for L in lengths]
    base = [int(math.floor(x)) for x in raw]
    rest = free - sum(base)
    order = sorted(range(k), key=lambda i: (-(raw[i] - base[i]), i))
    for i in order[:rest]:
        base[i] += 1
    return [b + 2 for b in base]


def _branches(name: str, p: dict[str, Any]) -> tuple[list[_Branch], list[np.ndarray], float]:
    """Branches, extra isolated vertices, and the finest feature size to resolve."""
    if name == "interval":
        return [_Branch("interval", _segment((0, 0), (1, 0)), 0, 1)], [], 1.0
    if name == "circle":
        circ = lambda t: np.stack([np.cos(t), np.sin(t)], axis=1)
        return [_Branch("circle", circ, 0, 2 * math.pi, closed_end=False)], [], 1.0
    if name in ("topologist_sine", "warsaw_circle"):
        x_min = p["x_min"]
        branches = [
            _Branch("tail", _sine, 1.0, 1.0 / x_min),
            _Branch("limit", _segment((0, -1), (0, 1)), 0, 1, congested=True),
        ]
        if name == "warsaw_circle":
            corners = [(0.0, -1.0), (0.0, -2.0), (1.0, -2.0), (1.0, math.sin(1.0))]
            arc = _polyline(corners)
            branches.append(_Branch("arc", arc, 0, 1, closed_start=False, closed_end=False))
        # the outermost full oscillation of the tail must be resolved
        return branches, [], 1.0 / (2.0 * math.pi)
    if name == "comb":
        m = p["m"]
        branches = [
            _Branch("base", _segment((0, 0), (1, 0)), 0, 1),
            _Branch("spine", _segment((0, 0), (0, 1)), 0, 1, congested=True, closed_start=False),
        ]
        for k in range(1, m + 1):
            branches.append(_Branch(f"tooth{k}", _segment((1 / k, 0), (1 / k, 1)), 0, 1, closed_start=False))
        return branches, [], 1.0 / (m * (m - 1))
    if name == "harmonic_broom":
        m = p["m"]
        branches = [
            _Branch(f"bristle{k}", _segment((0, 0), (1, 1 / k)), 0, 1, closed_start=False)
            for k in range(1, m + 1)
        ]
        branches.append(_Branch("limit", _segment((0, 0), (1, 0)), 0, 1, congested=True, closed_start=False))
        return branches, [np.array([0.0, 0.0])], 1.0 / (m * (m - 1))
    if name == "cantor_fan":
        m = p["m"]
        feet = sorted({e for a, b in _cantor_intervals(m) for e in (a, b)})
        branches = [
            _Branch(f"ray{i}", _segment((0.5, 1.0), (x, 0.0)), 0, 1, closed_start=False)
            for i, x in enumerate(feet)
        ]
        return branches, [np.array([0.5, 1.0])], 3.0 ** (-m)
    raise UnknownGeneratorError(f"unknown generator {name!r}; choose from {sorted(GENERATORS)}")


def _polyline(corners) -> Curve:
    P = np.asarray(corners, dtype=float)
    seg = np.hypot(*np.diff(P, axis=0).T)
    cum = np.concatenate([[0.0], np.cumsum(seg)]) / seg.sum()

    def curve(t: np.ndarray) -> np.ndarray:
        return np.stack([np.interp(t, cum, P[:, 0]), np.interp(t, cum, P[:, 1])], axis=1)

    return curve


def _cantor_intervals(m: int) -> list[tuple[float, float]]:
    parts = [(0.0, 1.0)]
    for _ in range(m):
        parts = [piece for a, b in parts for piece in ((a, a + (b - a) / 3), (b - (b - a) / 3, b))]
    return parts


GENERATORS: dict[str, dict[str, tuple[Any, Any, Any]]] = {
    # name -> {param: (default, low, high)}
    "interval": {},
    "circle": {},
    "topologist_sine": {"x_min": (0.02, 0.005, 0.5)},
    "warsaw_circle": {"x_min": (0.02, 0.005, 0.5)},
    "comb": {"m": (8, 2, 50)},
    "cantor_fan": {"m": (2, 1, 6)},
    "harmonic_broom": {"m": (8, 2, 50)},
}


def _resolve_params(name: str, params: dict[str, Any] | None) -> dict[str, Any]:
    if name not in GENERATORS:
        raise UnknownGeneratorError(f"unknown generator {name!r}; choose from {sorted(GENERATORS)}")
    table = GENERATORS[name]
    params = dict(params or {})
    unknown = set(params) - set(table)
    if unknown:
        raise PreconditionError(f"{name} takes no parameter(s) {sorted(unknown)}; known: {sorted(table)}")
    out: dict[str, Any] = {}
    for key, (default, lo, hi) in table.items():
        value = params.get(key, default)
        value = type(default)(value)
        if not lo <= value <= hi:
            raise PreconditionError(f"{name}: {key}={value} outside [{lo}, {hi}]")
        out[key] = value
    return out


def minimum_points(name: str, params: dict[str, Any] | None = None) -> int:
    """Smallest budget whose default delta (about twice the sampling gap)
    stays below the generator's finest feature."""
    p = _resolve_params(name, params)
    branches, extra, feature = _branches(name, p)
    L = sum(b.length() for b in branches)
    return max(MIN_POINTS, math.ceil(2.0 * L / feature) + 2 * len(branches) + len(extra))


def generate(name: str, n: int, params: dict[str, Any] | None = None) -> GeneratedCorpus:
    p = _resolve_params(name, params)
    n = int(n)
    need = minimum_points(name, p)
    if n < need:
        raise PreconditionError(f"{name} needs n >= {need} to resolve its finest feature (got n = {n})")
    branches, extra, _ = _branches(name, p)
    budget = _split_budget([b.length() for b in branches], n - len(extra))
    pts, labels, truth = [], [], []
    start = 0
    for v in extra:
        pts.append(v[None, :])
        labels.append("vertex")
        start += 1
    for b, m in zip(branches, budget):
        pts.append(_sample(b, m))
        labels.extend([b.label] * m)
        if b.congested:
            truth.extend(range(start, start + m))
        start += m
    X = np.vstack(pts)
    space = MetricSpace.from_points(X, labels=labels)
    return GeneratedCorpus(space, np.asarray(truth, dtype=np.int64), name, {"n": n, **p})
