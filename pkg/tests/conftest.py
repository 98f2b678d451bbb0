import numpy as np
import pytest

# criterion number -> "CRITERION k ... PASS|FAIL ..." line, filled by test_acceptance
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
