import os

from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=300, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def pytest_terminal_summary(terminalreporter):
    import helpers

    if not helpers.ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, helpers.N_CRITERIA + 1):
        terminalreporter.write_line(helpers.ACCEPTANCE.get(n, f"---- criterion {n:2d} not reported (deselected or errored before reporting)"))
