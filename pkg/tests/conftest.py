import numpy as np
import pytest

ACCEPTANCE_RESULTS = []


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def record_acceptance(number, title, passed, detail=""):
    ACCEPTANCE_RESULTS.append((number, title, bool(passed), detail))
    status = "PASS" if passed else "FAIL"
    print(f"[acceptance {number:>2}] {status} {title}{': ' + detail if detail else ''}")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE_RESULTS):
        status = "PASS" if passed else "FAIL"
        line = f"criterion {number:>2}: {status}  {title}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
