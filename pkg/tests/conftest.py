import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from pquotient import MetricSpace, Partition

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

_CRITERIA: dict[int, tuple[bool, str]] = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    _CRITERIA[number] = (passed, detail)
    print(f"criterion {number}: {'PASS' if passed else 'FAIL'} {detail}")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        passed, detail = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.fixture
def line():
    """Points 0, 1, 9, 10 on the real line."""
    x = np.array([0.0, 1.0, 9.0, 10.0])
    return MetricSpace.from_points(x[:, None])


@pytest.fixture
def line_partition():
    # classes {1, 9}, {0}, {10} by point index
    return Partition.from_labels([1, 0, 0, 2])


def random_cloud(rng, n):
    return MetricSpace.from_points(rng.random((n, 2)))


def random_partition(rng, n, K):
    labels = rng.integers(0, K, n)
    return Partition.from_labels(labels)


def random_f_form(rng, n, frac_lo=0.1, frac_hi=0.3, max_f_classes=4):
    """Random F of 10-30% of the points, split into classes; singletons elsewhere."""
    size = max(1, int(round(rng.uniform(frac_lo, frac_hi) * n)))
    F = np.sort(rng.choice(n, size, replace=False))
    labels = np.empty(n, dtype=np.int64)
    kf = int(rng.integers(1, min(max_f_classes, size) + 1))
    labels[F] = rng.integers(0, kf, size)
    rest = np.setdiff1d(np.arange(n), F)
    labels[rest] = kf + np.arange(rest.size)
    return Partition.from_labels(labels), F
