import os
import random
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings

from natop import poly as P
from natop.calculus import PolySection
from natop.tensor import BundleSpec

settings.register_profile("natop", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "natop"))

_ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion n")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    crit = getattr(report, "_criterion", None)
    if crit is None:
        return
    n, title = crit
    prev = _ACCEPTANCE.get(n)
    outcome = report.outcome
    if prev and prev[1] != "passed":
        outcome = prev[1]
    _ACCEPTANCE[n] = (title, outcome)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result()._criterion = marker.args


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        title, outcome = _ACCEPTANCE[n]
        verdict = {"passed": "PASS", "skipped": "SKIP"}.get(outcome, "FAIL")
        terminalreporter.write_line(f"criterion {n:2d}: {verdict}  {title}")


# ---------------------------------------------------------------------------
# shared helpers


@pytest.fixture
def rng():
    return random.Random(20240611)


def section(bundle: BundleSpec, m: int, terms) -> PolySection:
    """Build a section from ``[(label, {alpha: coeff}), ...]``."""
    out = PolySection.zero(bundle, m)
    for label, poly in terms:
        out = out + PolySection.basis_element(bundle, m, label, poly)
    return out


def x(m, *powers, c=1):
    """The monomial ``c * x^powers`` as a polynomial dict."""
    powers = tuple(powers) + (0,) * (m - len(powers))
    return P.pmonomial(powers, Fraction(c))


def one(m):
    return P.pconst(m, 1)
