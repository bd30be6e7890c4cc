import pytest
from hypothesis import HealthCheck, settings

from streetsim.world import WorldParams, generate_world

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def world():
    return generate_world(7)


@pytest.fixture(scope="session")
def big_world():
    return generate_world(5, WorldParams(node_count=400, instance_density=2.0))


# one PASS/FAIL line per acceptance test, shown in the terminal summary
_VERDICTS: list[str] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call" and item.get_closest_marker("acceptance"):
        detail = dict(item.user_properties).get("detail", "")
        line = f"{'PASS' if rep.passed else 'FAIL'}  {item.name}  {detail}".rstrip()
        _VERDICTS.append(line)
        print("\n" + line)


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
