import numpy as np
import pytest

from povm_learn import kernels


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=sorted(kernels.implementations()))
def backend(request):
    return kernels.implementations()[request.param]


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Report one acceptance criterion as a PASS/FAIL line, then assert it."""

    def report(label: str, title: str, passed: bool, detail: str = ""):
        line = f"{'PASS' if passed else 'FAIL'}  criterion {label}: {title}  [{detail}]"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        assert passed, line

    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
