"""Broken polynomial spaces on agglomerated polygons.

Each element carries the monomials of total degree <= l in coordinates
scaled to its bounding box, orthonormalized in L2(K) with element quadrature.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np
from scipy.linalg import cholesky, qr, solve_triangular

from .mesh import Face, PolyMesh
from .quadrature import QuadratureRule, segment_rule, triangle_rule


class DegenerateElementError(ValueError):
    pass


def monomial_exponents(degree):
    return np.array([(t - b, b) for t in range(degree + 1) for b in range(t + 1)], dtype=np.int64)


def local_dimension(degree):
    return (degree + 1) * (degree + 2) // 2


def element_quadrature(poly: PolyMesh, k: int, order: int) -> QuadratureRule:
    """Composite rule over the parent triangles of element `k`."""
    if order < 1:
        raise ValueError("quadrature order must be >= 1")
    return triangle_rule(poly.element_vertices(k), order)


def face_quadrature(face: Face, order: int) -> QuadratureRule:
    return segment_rule(face.segments, order)


def _scaled_monomials(exps, degree, xi, eta):
    px = xi[:, None] ** np.arange(degree + 1)
    py = eta[:, None] ** np.arange(degree + 1)
    return px[:, exps[:, 0]] * py[:, exps[:, 1]]


def _scaled_monomial_grads(exps, degree, xi, eta):
    k = np.arange(degree + 1)
    px = xi[:, None] ** k
    py = eta[:, None] ** k
    dpx = np.zeros_like(px)
    dpy = np.zeros_like(py)
    dpx[:, 1:] = k[1:] * px[:, :-1]
    dpy[:, 1:] = k[1:] * py[:, :-1]
    gx = dpx[:, exps[:, 0]] * py[:, exps[:, 1]]
    gy = px[:, exps[:, 0]] * dpy[:, exps[:, 1]]
    return gx, gy


class DGSpace:
    """Discontinuous space of degree `degree` on `poly`.

    Basis function j of element k is sum_m coeffs[k][m, j] * mono_m with
    mono_m = ((x - cx)/sx)^a ((y - cy)/sy)^b.
    """

    def __init__(self, poly: PolyMesh, degree: int, centers, scales, coeffs):
        self.poly = poly
        self.degree = degree
        self.exponents = monomial_exponents(degree)
        self.n_local = local_dimension(degree)
        self.centers = centers
        self.scales = scales
        self.coeffs = coeffs
        self.dof_offset = np.arange(poly.n_elements + 1) * self.n_local

    @property
    def n_elements(self):
        return self.poly.n_elements

    @property
    def n_dofs(self):
        return self.n_elements * self.n_local

    def dofs(self, k):
        return slice(self.dof_offset[k], self.dof_offset[k + 1])

    def _local(self, k, points):
        if not 0 <= k < self.n_elements:
            raise IndexError(f"unknown element id {k}")
        p = np.atleast_2d(np.asarray(points, dtype=float))
        xi = (p[:, 0] - self.centers[k, 0]) / self.scales[k, 0]
        eta = (p[:, 1] - self.centers[k, 1]) / self.scales[k, 1]
        return xi, eta

    def eval_basis(self, k, points):
        xi, eta = self._local(k, points)
        return _scaled_monomials(self.exponents, self.degree, xi, eta) @ self.coeffs[k]

    def eval_basis_grad(self, k, points):
        """Gradients, shape (n_points, n_local, 2)."""
        xi, eta = self._local(k, points)
        gx, gy = _scaled_monomial_grads(self.exponents, self.degree, xi, eta)
        c = self.coeffs[k]
        return np.stack([gx @ c / self.scales[k, 0], gy @ c / self.scales[k, 1]], axis=-1)

    def evaluate(self, coeffs, k, points):
        """Value of the discrete function with dof vector `coeffs` inside element k."""
        return self.eval_basis(k, points) @ coeffs[self.dofs(k)]

    @cached_property
    def barycenter_basis(self):
        """Basis values at parent-triangle barycenters (one row per triangle)."""
        tri = self.poly.tri
        out = np.empty((tri.n_triangles, self.n_local))
        cent = tri.centroids
        for k, e in enumerate(self.poly.elements):
            out[e] = self.eval_basis(k, cent[e])
        return out

    def sample_barycenters(self, coeffs):
        """Discrete function values at every parent-triangle barycenter."""
        blocks = np.asarray(coeffs).reshape(self.n_elements, self.n_local)
        eot = self.poly.elem_of_tri
        return np.einsum("tj,tj->t", self.barycenter_basis, blocks[eot])

    def sample_nodes(self, coeffs):
        """Per-parent-triangle vertex values, shape (n_triangles, 3)."""
        tri = self.poly.tri
        out = np.empty((tri.n_triangles, 3))
        for k, e in enumerate(self.poly.elements):
            pts = tri.vertices[e].reshape(-1, 2)
            out[e] = self.evaluate(coeffs, k, pts).reshape(-1, 3)
        return out

    @cached_property
    def constant_one(self):
        """Dof vector of the function identically equal to 1.

        The first basis function of every element is the normalized constant.
        """
        u = np.zeros((self.n_elements, self.n_local))
        u[:, 0] = 1.0 / self.coeffs[:, 0, 0]
        return u.ravel()


def build_space(poly: PolyMesh, degree: int) -> DGSpace:
    if degree < 1:
        raise ValueError("polynomial degree must be >= 1")
    n_elem = poly.n_elements
    exps = monomial_exponents(degree)
    n = len(exps)
    centers = np.empty((n_elem, 2))
    scales = np.empty((n_elem, 2))
    coeffs = np.empty((n_elem, n, n))
    for k in range(n_elem):
        v = poly.element_vertices(k).reshape(-1, 2)
        lo, hi = v.min(axis=0), v.max(axis=0)
        centers[k] = 0.5 * (lo + hi)
        scales[k] = 0.5 * (hi - lo)
        rule = element_quadrature(poly, k, 2 * degree)
        xi = (rule.points[:, 0] - centers[k, 0]) / scales[k, 0]
        eta = (rule.points[:, 1] - centers[k, 1]) / scales[k, 1]
        sw = np.sqrt(rule.weights)[:, None]
        V = sw * _scaled_monomials(exps, degree, xi, eta)
        R = qr(V, mode="r")[0][:n]
        d = np.abs(np.diag(R))
        if d.min() <= 1e-12 * d.max():
            raise DegenerateElementError(f"element {k}: Gram matrix numerically singular")
        C = solve_triangular(R, np.eye(n)) * np.sign(np.diag(R))[None, :]
        # second pass removes round-off loss of orthogonality
        Q = V @ C
        L = cholesky(Q.T @ Q, lower=True)
        C = solve_triangular(L, C.T, lower=True).T
        coeffs[k] = C
    return DGSpace(poly, degree, centers, scales, coeffs)
