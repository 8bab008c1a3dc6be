import numpy as np
import pytest

from gwpp.design import SurveySample

ACCEPTANCE_LINES = []


def record(criterion: int, passed: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append((criterion, passed, detail))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def make_sample(raw_w, strata=None, T=1, Q=1):
    raw_w = np.asarray(raw_w, dtype=float)
    n = raw_w.size
    return SurveySample(
        unit_ids=np.arange(n), pi=1.0 / raw_w, raw_w=raw_w, norm_w=n * raw_w / raw_w.sum(),
        y=np.zeros((n, T, Q), dtype=np.int64), missing=None,
        strata=np.zeros(n, dtype=np.int64) if strata is None else np.asarray(strata),
    )


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(f"criterion {criterion:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
