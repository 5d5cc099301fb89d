import json
from pathlib import Path

import numpy as np
import pytest

from fspec.constructions import cantor_measure
from fspec.measures import AtomicMeasure, ConvPower, Mixture, Product, dirac, lebesgue_unit

FROZEN = json.loads((Path(__file__).parent / "oracles" / "frozen.json").read_text())


@pytest.fixture(scope="session")
def frozen():
    return FROZEN


def corpus():
    """Built-in measures every invariant is checked on."""
    c = cantor_measure("1/3")
    rng = np.random.default_rng(7)
    atoms = AtomicMeasure(rng.uniform(-1, 1, (12, 1)), rng.uniform(0.1, 1, 12))
    return {
        "cantor": c,
        "cantor_1_4": cantor_measure("1/4"),
        "lebesgue": lebesgue_unit(),
        "dirac": dirac(0.0),
        "atoms": atoms,
        "mixture": Mixture((dirac(0.0), c), [0.5, 0.5]),
        "convpower": ConvPower(c, 2),
        "product2": Product((c, cantor_measure("1/4"))),
    }


THETA_GRID = tuple(round(0.1 * i, 1) for i in range(11))
_spectra_cache = {}


def spectra(name):
    """Default-plan estimates over ``THETA_GRID`` for a corpus measure, computed once per session."""
    if name not in _spectra_cache:
        from fspec.spectrum import estimate_spectra

        ests = estimate_spectra(corpus()[name], THETA_GRID)
        _spectra_cache[name] = dict(zip(THETA_GRID, ests))
    return _spectra_cache[name]


# ----------------------------------------------------------------------------
# one pass/fail line per acceptance criterion
# ----------------------------------------------------------------------------

_criteria: dict[int, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    for n in getattr(report, "criteria", ()):
        _criteria.setdefault(n, []).append(report.outcome)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    rep.criteria = tuple(m.args[0] for m in item.iter_markers("criterion"))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    from test_acceptance import CRITERIA

    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        results = _criteria.get(n)
        if not results:
            status = "NOT RUN"
        elif all(r == "passed" for r in results):
            status = "PASS"
        else:
            status = "FAIL"
        terminalreporter.write_line(f"criterion {n:>2}: {status:<7} {CRITERIA[n]}")
