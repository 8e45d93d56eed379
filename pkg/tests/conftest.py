import pytest
from hypothesis import HealthCheck, settings

from ftsheat._backend import available_backends

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], print_blob=True)
settings.load_profile("default")

BACKENDS = sorted(available_backends())


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


_acceptance = []


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    _acceptance.append((props["criterion"], props.get("title", ""), report.outcome,
                        props.get("backend", ""), props.get("detail", "")))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num, title, outcome, be, detail in sorted(_acceptance, key=lambda r: (r[0], r[3])):
        status = "PASS" if outcome == "passed" else "FAIL"
        tag = f" [{be}]" if be else ""
        tr.write_line(f"criterion {num}{tag}: {status} - {title}" + (f" ({detail})" if detail else ""))
