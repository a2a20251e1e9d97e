import numpy as np
import pytest

from ctdispatch import cheapest_dispatch_cost, scenario_rule, solve_robust
from ctdispatch.casefile import bundled_case_path, load_case


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def sixbus():
    case = load_case(bundled_case_path())
    return case, case.envelope()


@pytest.fixture(scope="session")
def sixbus_robust(sixbus):
    import time

    case, env = sixbus
    t0 = time.perf_counter()
    rule, log = solve_robust(env, case.system, seed=case.run.seed, tol=case.run.tol)
    return rule, log, time.perf_counter() - t0


@pytest.fixture(scope="session")
def sixbus_scenario(sixbus):
    case, env = sixbus
    return scenario_rule(env, case.system, 30, 0)


@pytest.fixture(scope="session")
def sixbus_cheapest(sixbus):
    case, env = sixbus
    return cheapest_dispatch_cost(env, case.system)


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def report(name, ok, detail=""):
        line = f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'}" + (f" ({detail})" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
