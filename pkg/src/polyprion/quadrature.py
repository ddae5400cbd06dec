"""Quadrature rules on triangles and segments.

Triangle rules are collapsed (Stroud conical) products of Gauss-Legendre and
Gauss-Jacobi points on the reference triangle (0,0), (1,0), (0,1).  They have
positive weights and are exact for any requested total degree, which is what
the degree-3l nonlinear terms need.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

MAX_ORDER = 40


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray

    def integrate(self, values):
        return np.tensordot(self.weights, values, axes=(0, 0))

    def __len__(self):
        return len(self.weights)


def _check_order(order):
    if not 0 <= order <= MAX_ORDER:
        raise ValueError(f"unsupported quadrature order {order} (max {MAX_ORDER})")


@lru_cache(maxsize=None)
def gauss_legendre(order):
    """Gauss-Legendre rule on [0, 1] exact for polynomials of degree `order`."""
    _check_order(order)
    n = order // 2 + 1
    x, w = roots_legendre(n)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def reference_triangle(order):
    """Collapsed rule on the unit reference triangle, weights summing to 1/2."""
    _check_order(order)
    n = order // 2 + 1
    a, wa = gauss_legendre(order)
    # weight (1 - b) absorbs the collapse Jacobian
    b, wb = roots_jacobi(n, 1.0, 0.0)
    b = 0.5 * (b + 1.0)
    wb = 0.25 * wb
    A, B = np.meshgrid(a, b, indexing="ij")
    pts = np.column_stack([(A * (1.0 - B)).ravel(), B.ravel()])
    wts = np.outer(wa, wb).ravel()
    pts.setflags(write=False)
    wts.setflags(write=False)
    return pts, wts


def triangle_rule(vertices, order):
    """Composite rule over one or more physical triangles.

    `vertices` has shape (..., 3, 2); the result stacks the points of every
    triangle in order.
    """
    v = np.asarray(vertices, dtype=float).reshape(-1, 3, 2)
    ref, w = reference_triangle(order)
    e1 = v[:, 1] - v[:, 0]
    e2 = v[:, 2] - v[:, 0]
    det = np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    pts = v[:, None, 0] + ref[None, :, 0, None] * e1[:, None] + ref[None, :, 1, None] * e2[:, None]
    wts = det[:, None] * w[None, :]
    return QuadratureRule(pts.reshape(-1, 2), wts.ravel())


def segment_rule(segments, order):
    """Gauss-Legendre rule on a chain of segments, shape (n_seg, 2, 2)."""
    s = np.asarray(segments, dtype=float).reshape(-1, 2, 2)
    t, w = gauss_legendre(order)
    d = s[:, 1] - s[:, 0]
    length = np.hypot(d[:, 0], d[:, 1])
    pts = s[:, None, 0] + t[None, :, None] * d[:, None]
    wts = length[:, None] * w[None, :]
    return QuadratureRule(pts.reshape(-1, 2), wts.ravel())

