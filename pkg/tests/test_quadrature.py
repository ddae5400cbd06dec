from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polyprion.oracle import monomial_integral_triangle
from polyprion.quadrature import MAX_ORDER, gauss_legendre, reference_triangle, segment_rule, triangle_rule


def test_reference_weights_sum_to_half():
    pts, w = reference_triangle(2)
    assert w.sum() == pytest.approx(0.5, abs=1e-15)
    assert np.all(w > 0) and np.all(pts.sum(axis=1) <= 1)


def test_x2y2_over_unit_square():
    verts = np.array([[[0, 0], [1, 0], [1, 1]], [[0, 0], [1, 1], [0, 1]]], dtype=float)
    rule = triangle_rule(verts, 4)
    assert abs(rule.integrate(rule.points[:, 0] ** 2 * rule.points[:, 1] ** 2) - 1 / 9) < 1e-13


def test_segment_midpoint_rule():
    rule = segment_rule(np.array([[[0.0, 0.0], [2.0, 0.0]]]), 1)
    assert len(rule) == 1
    assert rule.weights[0] == pytest.approx(2.0)
    assert np.allclose(rule.points[0], [1.0, 0.0])


def test_gauss_legendre_x6():
    x, w = gauss_legendre(7)
    assert len(w) == 4
    assert abs(w @ x**6 - 1 / 7) < 1e-14


@pytest.mark.parametrize("order", [-1, MAX_ORDER + 1])
def test_order_out_of_range(order):
    with pytest.raises(ValueError):
        reference_triangle(order)


small = st.integers(-4, 4).map(lambda v: Fraction(v, 2))


@given(st.lists(st.tuples(small, small), min_size=3, max_size=3), st.integers(0, 12), st.data())
def test_triangle_rule_exact_for_monomials(verts, order, data):
    v = np.array([[float(a), float(b)] for a, b in verts])
    area2 = abs((v[1, 0] - v[0, 0]) * (v[2, 1] - v[0, 1]) - (v[2, 0] - v[0, 0]) * (v[1, 1] - v[0, 1]))
    if area2 < 1e-9 or order == 0:
        return
    i = data.draw(st.integers(0, order))
    j = data.draw(st.integers(0, order - i))
    exact = float(monomial_integral_triangle(verts, i, j))
    rule = triangle_rule(v[None], order)
    got = rule.integrate(rule.points[:, 0] ** i * rule.points[:, 1] ** j)
    assert abs(got - exact) <= 1e-12 * max(1.0, abs(exact)) * 4 ** (i + j)


@given(st.integers(1, 30), st.floats(0.1, 3.0), st.floats(-1, 1), st.floats(-1, 1))
def test_segment_rule_exact(order, length, x0, y0):
    theta = 0.3
    a = np.array([x0, y0])
    b = a + length * np.array([np.cos(theta), np.sin(theta)])
    rule = segment_rule(np.array([[a, b]]), order)
    # integrate s^order along the segment parameterized by arclength s
    s = np.linalg.norm(rule.points - a, axis=1)
    assert rule.integrate(s ** order) == pytest.approx(length ** (order + 1) / (order + 1), rel=1e-12)
