from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polyprion import oracle
from polyprion.meshgen import square_polymesh
from polyprion.models import HeterodimerMatter, HeterodimerParams

WHITE = HeterodimerParams.defaults().white


@pytest.mark.parametrize("c", [0.0, 1.0])
def test_fd_fixed_points(c):
    r = oracle.fd1d_fk(0.9, 1e-3, 1.0, 50, np.full(50, c), 0.1, 2.0)
    assert np.abs(r.values["c"] - c).max() < 1e-14


def test_fd_fisher_speed_nondimensional():
    r = oracle.fd1d_fk(1.0, 1.0, 200.0, 2000, lambda x: 0.5 * (1 - np.tanh(x - 5)), 0.05, 60.0, sample_every=1.0)
    pos = oracle.front_positions(r.x, r.values["c"], 0.5)
    late = r.times >= 30
    speed = np.polyfit(r.times[late], pos[late], 1)[0]
    assert speed == pytest.approx(oracle.fisher_speed(1.0, 1.0), rel=0.03)
    # the approach to 2 is from below (logarithmic delay of pulled fronts)
    assert speed < 2.0


def test_fd_temporal_self_convergence():
    c0 = lambda x: 0.4 + 0.3 * np.cos(np.pi * x)  # noqa: E731
    sols = [oracle.fd1d_fk(0.9, 0.01, 1.0, 64, c0, dt, 1.0).values["c"][-1] for dt in (0.1, 0.05, 0.025, 0.0125)]
    orders, _ = oracle.self_convergence_orders(sols)
    assert np.all(np.abs(orders - 2.0) < 0.2)


def test_fd_heterodimer_equilibria_and_relaxation():
    r = oracle.fd1d_heterodimer(WHITE, 1.0, 20, 0.3, 1.5, 0.1, 1.0)
    assert np.abs(r.values["p"] - 0.3).max() < 1e-13
    assert np.abs(r.values["q"] - 1.5).max() < 1e-13
    # with q = 0 the p equation is linear: p = k0/k1 + (p0 - k0/k1) exp(-k1 t)
    r = oracle.fd1d_heterodimer(WHITE, 1.0, 20, 0.2, 0.0, 0.005, 2.0)
    exact = 1.2 + (0.2 - 1.2) * np.exp(-0.5 * r.times)
    assert np.abs(r.values["p"][:, 0] - exact).max() < 1e-6
    assert np.all(r.values["q"] == 0)


def test_scalar_recurrence_tracks_ode():
    t = np.linspace(0, 5, 501)
    P, Q = oracle.heterodimer_ode(WHITE, 1.2, 0.05, t)
    p, q = oracle.heterodimer_cn_scalar(WHITE, 1.2, 0.05, 0.01, 500)
    assert np.abs(p - P).max() < 1e-3 and np.abs(q - Q).max() < 1e-3
    c = oracle.logistic_cn_scalar(0.9, 0.1, 0.01, 500)
    exact = 1 / (1 + 9 * np.exp(-0.9 * t))
    assert np.abs(c - exact).max() < 1e-4


def test_heterodimer_front_not_faster_than_fk():
    m = HeterodimerMatter(1.0, 0.0, 0.6, 1.0, 0.5, 0.3)
    seed = lambda x: 1 - np.tanh(x - 5)  # noqa: E731
    hd = oracle.fd1d_heterodimer(m, 150.0, 1500, 1.2, lambda x: 0.15 * seed(x), 0.05, 50.0, sample_every=1.0)
    fk = oracle.fd1d_fk(0.9, 1.0, 150.0, 1500, lambda x: 0.1 * seed(x), 0.05, 50.0, sample_every=1.0)
    late = hd.times >= 25
    s_hd = np.polyfit(hd.times[late], oracle.front_positions(hd.x, hd.values["q"], 0.75)[late], 1)[0]
    s_fk = np.polyfit(fk.times[late], oracle.front_positions(fk.x, fk.values["c"], 0.5)[late], 1)[0]
    c = oracle.fisher_speed(0.9, 1.0)
    assert s_hd == pytest.approx(c, rel=0.03)
    assert s_fk == pytest.approx(c, rel=0.03)
    assert s_hd <= s_fk


def test_monomial_integrals_exact():
    unit = [(0, 0), (1, 0), (0, 1)]
    assert oracle.monomial_integral_triangle(unit, 0, 0) == Fraction(1, 2)
    assert oracle.monomial_integral_triangle(unit, 1, 0) == Fraction(1, 6)
    assert oracle.monomial_integral_triangle(unit, 1, 1) == Fraction(1, 24)
    assert oracle.monomial_integral_triangle(unit, 2, 3) == Fraction(2 * 6, 7 * 6 * 5 * 4 * 3 * 2)
    sq_half = [(0, 0), (2, 0), (2, 2)]
    # int over {0<y<x<2} of x^2 = int_0^2 x^3 dx = 4
    assert oracle.monomial_integral_triangle(sq_half, 2, 0) == 4


@given(st.integers(0, 6), st.integers(0, 6))
def test_monomial_integrals_additive(i, j):
    a = oracle.monomial_integral_triangle([(0, 0), (1, 0), (1, 1)], i, j)
    b = oracle.monomial_integral_triangle([(0, 0), (1, 1), (0, 1)], i, j)
    assert a + b == Fraction(1, (i + 1) * (j + 1))


def _smooth_step(x, y, mod=np):
    return 0.3 + 0.2 * (3 * x**2 - 2 * x**3) - 0.1 * (3 * y**2 - 2 * y**3)


def test_manufactured_cubic_reproduced_exactly():
    tab = oracle.manufactured_run("fk", [square_polymesh(3)], 3, exact={"c": _smooth_step})
    assert tab.errors["c"][0] < 1e-9
    tab = oracle.manufactured_run("heterodimer", [square_polymesh(3)], 3,
                                  exact={"p": _smooth_step, "q": lambda x, y, mod=np: 0.5 - _smooth_step(y, x)})
    assert tab.errors["p"][0] < 1e-9 and tab.errors["q"][0] < 1e-9


def test_manufactured_orders_degree_one():
    tab = oracle.manufactured_run("fk", [square_polymesh(n) for n in (4, 8, 16)], 1)
    assert tab.orders["c"][-1] == pytest.approx(2.0, abs=0.3)
