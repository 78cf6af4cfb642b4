import os

import pytest
from hypothesis import HealthCheck, settings

from nvsim.params import SystemParams

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=300, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def strong_coupling(spin_count=1.7e16, temperature=300.0, **kw):
    """3 GHz, Q = 1e6, gamma1 = 250 Hz, Delta_en = 1 MHz, g = 1 Hz."""
    base = dict(cavity_frequency=3e9, spin_frequency=3e9, kappa=3e3, gamma1=250.0, gamma2=1e6,
                pump=0.0, coupling=1.0, spin_count=spin_count, temperature=temperature)
    base.update(kw)
    return SystemParams(**base)


@pytest.fixture
def fig2_params():
    return strong_coupling()


@pytest.fixture
def protected_params():
    return strong_coupling(spin_count=1e20)


# acceptance reporting: each criterion records a detail string; the outcome
# comes from the test report and is printed once in the terminal summary
ACCEPTANCE = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or rep.when != "call" and not (rep.when == "setup" and rep.failed):
        return
    number, title = marker.args
    detail = getattr(item, "acceptance_detail", "")
    if rep.failed and not detail:
        detail = str(rep.longrepr).strip().splitlines()[-1]
    ACCEPTANCE[number] = ("PASS" if rep.passed else "FAIL", title, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        status, title, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"{status} {number:2d} {title}: {detail}")


@pytest.fixture
def note(request):
    """Attach a detail string to the running acceptance test."""
    def record(text):
        request.node.acceptance_detail = text
    return record
