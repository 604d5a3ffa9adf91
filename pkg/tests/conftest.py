import pytest

from suiteopt import Landmark, Pose2, Scenario, build_default_library, bundled_scenario

# (criterion number, passed, detail) appended by test_acceptance
ACCEPTANCE_LINES: list[tuple[int, bool, str]] = []


@pytest.fixture(scope="session")
def library():
    return build_default_library()


@pytest.fixture(scope="session")
def linear03():
    return bundled_scenario("linear03")


@pytest.fixture
def tiny_scenario():
    """Three poses heading +x at 1 m spacing and two landmarks within 10 m."""
    poses = [Pose2(float(i), float(i), 0.0, 0.0) for i in range(3)]
    return Scenario("tiny", tuple(poses), (Landmark(0, 5.0, 3.0), Landmark(1, -4.0, -2.0)))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
