import numpy as np
import pytest

from uspanner.metric import Metric


def line(*xs):
    return Metric.from_points([[float(x)] for x in xs])


def random_metric(n, seed, dim=2):
    return Metric.from_points(np.random.default_rng(seed).random((n, dim)))


@pytest.fixture
def line012():
    return line(0, 1, 2)


@pytest.fixture
def line_0_1_10_11():
    return line(0, 1, 10, 11)


@pytest.fixture(scope="module")
def rand100():
    return random_metric(100, 7)


# one line per acceptance criterion, printed after the run
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(number: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[number] = (bool(ok), detail)
    print(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
