"""Acceptance criteria 1-10, each at its stated tolerance.

Every test records one PASS/FAIL line that is printed in the terminal
summary, then asserts.  The brain-scale runs (criterion 10) take several
minutes.
"""

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from polyprion import verify


def record(number, title, report):
    failed = [c.name for c in report.checks if not c.passed]
    detail = "; ".join(f"{c.name} = {_fmt(c.value)}" for c in report.checks)
    status = "PASS" if report.passed else "FAIL"
    ACCEPTANCE_LINES[number] = f"[{status}] criterion {number:2d} {title}: {detail}"
    assert not failed, f"criterion {number} failed checks: {failed}"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    if isinstance(v, list):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def subset(report, names, suite=None):
    out = verify.Report(suite or report.suite)
    out.checks = [report.check(n) for n in names]
    return out


@pytest.fixture(scope="module")
def equilibria():
    return verify.suite_equilibria()


def test_criterion_01_dof_accounting():
    record(1, "dof accounting", verify.suite_dofs())


def test_criterion_02_equilibria(equilibria):
    record(2, "equilibria", subset(equilibria, ["healthy equilibrium", "diseased equilibrium", "reaction residual",
                                                "uniform run reaches (0.3, 1.5) by T=25"]))


def test_criterion_03_alpha_cross_check(equilibria):
    record(3, "alpha cross-check", subset(equilibria, ["alpha white", "alpha grey", "grey alpha conflict warned"]))


def test_criterion_04_spatial_convergence():
    rep = verify.Report("spatial convergence")
    for (kind, l), tab in verify.spatial_convergence().items():
        assert len(tab.h) == 4
        for s, orders in tab.orders.items():
            rep.add(f"{kind} l={l} {s}", float(orders[-1]), f">= {l + 0.8}", orders[-1] >= l + 1 - 0.2)
    record(4, "spatial convergence (final-pair L2 orders)", rep)


def test_criterion_05_temporal_convergence():
    rep = verify.Report("temporal convergence")
    for kind in ("fk", "heterodimer"):
        orders, _ = verify.temporal_study(kind, dts=(0.04, 0.02, 0.01, 0.005))
        rep.add(kind, orders.tolist(), "2.0 +- 0.1", bool(np.all(np.abs(orders - 2.0) <= 0.1)))
    record(5, "temporal convergence", rep)


def test_criterion_06_conservation():
    record(6, "mass conservation", verify.suite_conservation(n_steps=1000))


def test_criterion_07_operator_properties():
    record(7, "operator properties", verify.suite_matrices())


def test_criterion_08_wave_speed():
    record(8, "FK wave speed", verify.suite_wavespeed())


def test_criterion_09_model_ordering():
    record(9, "model ordering", verify.suite_ordering())


def test_criterion_10_brain_smoke():
    record(10, "brain-scale runs", verify.suite_brain())
