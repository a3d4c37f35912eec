import numpy as np
import pytest

ACCEPTANCE = {}


@pytest.fixture(scope="session")
def record():
    """Record one acceptance line: record(criterion, passed, detail)."""
    def _record(criterion, passed, detail):
        ACCEPTANCE[criterion] = (bool(passed), detail)
        return passed
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    def order(key):
        text = str(key)
        digits = "".join(c for c in text if c.isdigit())
        return int(digits), text

    for key in sorted(ACCEPTANCE, key=order):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {str(key):>3}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
