"""Sparse DG operators: mass, linear/nonlinear reaction, SIP stiffness, loads.

Coefficients are piecewise constant per element.  Interior faces carry the
symmetric interior penalty terms; boundary faces contribute nothing, which
imposes homogeneous Neumann conditions weakly.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .femspace import DGSpace, element_quadrature
from .mesh import Face, MaterialLabel, PolyMesh
from .quadrature import segment_rule

MODEL_KINDS = ("heterodimer", "fk")


@dataclass(frozen=True, eq=False)
class CoefficientField:
    """Per-element physical data.

    `rates` maps names (k0, k1, k1_tilde, k12 for the heterodimer model,
    alpha for FK) to per-element arrays.
    """

    d_ext: np.ndarray
    d_axn: np.ndarray
    axon: np.ndarray
    rates: dict = field(default_factory=dict)

    def rate(self, name):
        return self.rates[name]

    def tensors(self):
        """Diffusion tensors of all elements, shape (n_elem, 2, 2)."""
        a = self.axon
        outer = a[:, :, None] * a[:, None, :]
        return self.d_ext[:, None, None] * np.eye(2) + self.d_axn[:, None, None] * outer

    def max_diffusivity(self):
        """Spectral norm of each element tensor."""
        return self.d_ext + self.d_axn * np.sum(self.axon**2, axis=1)

    def validate(self, model_kind=None):
        if np.any(self.d_ext <= 0):
            raise ValueError("d_ext must be positive")
        if np.any(self.d_axn < 0):
            raise ValueError("d_axn must be non-negative")
        if model_kind == "heterodimer":
            for name in ("k0", "k1", "k1_tilde", "k12"):
                if np.any(self.rates[name] <= 0):
                    raise ValueError(f"heterodimer rate {name} must be positive")
        return self


def element_axons(poly: PolyMesh):
    """Principal direction of the area-weighted axon structure tensor per element."""
    tri = poly.tri
    w = tri.areas
    a = tri.tri_axon
    out = np.zeros((poly.n_elements, 2))
    for k, e in enumerate(poly.elements):
        S = np.einsum("t,ti,tj->ij", w[e], a[e], a[e])
        if np.trace(S) <= 1e-12 * w[e].sum():
            continue
        vals, vecs = np.linalg.eigh(S)
        v = vecs[:, -1]
        if v[0] < 0 or (v[0] == 0 and v[1] < 0):
            v = -v
        out[k] = v
    return out


def coefficient_field(poly: PolyMesh, white: dict, grey: dict) -> CoefficientField:
    """Piecewise-constant field from per-matter parameter dictionaries."""
    white_mask = poly.elem_label == MaterialLabel.WHITE
    keys = sorted(set(white) | set(grey))

    def pick(name):
        return np.where(white_mask, float(white[name]), float(grey[name]))

    rates = {k: pick(k) for k in keys if k not in ("d_ext", "d_axn")}
    return CoefficientField(pick("d_ext"), pick("d_axn"), element_axons(poly), rates)


def diffusion_tensor(field: CoefficientField, k: int):
    a = field.axon[k]
    return field.d_ext[k] * np.eye(2) + field.d_axn[k] * np.outer(a, a)


def harmonic_average(vp, vm):
    if vp <= 0 or vm <= 0:
        raise ValueError("harmonic average needs positive arguments")
    return 2.0 * vp * vm / (vp + vm)


def _harmonic(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    s = a + b
    return np.divide(2.0 * a * b, s, out=np.zeros(np.broadcast(a, b).shape), where=s > 0)


@dataclass(frozen=True)
class PenaltySpec:
    eta0: float = 10.0


def reaction_scale(field: CoefficientField, model_kind: str):
    """Per-element reaction magnitude entering the penalty."""
    if model_kind == "heterodimer":
        r = field.rates
        return np.abs((1.0 + r["k12"]) * (r["k1"] + r["k1_tilde"]))
    if model_kind == "fk":
        return np.abs(field.rates["alpha"])
    raise ValueError(f"unknown model kind {model_kind!r}")


def pair_penalty(spec: PenaltySpec, space: DGSpace, field: CoefficientField, model_kind, plus, minus):
    d = field.max_diffusivity()
    kappa = reaction_scale(field, model_kind)
    h = space.poly.elem_diameter
    scale = np.maximum(_harmonic(d[plus], d[minus]), _harmonic(kappa[plus], kappa[minus]))
    return spec.eta0 * scale * space.degree**2 / _harmonic(h[plus], h[minus])


def face_penalty(spec: PenaltySpec, face: Face, space: DGSpace, field: CoefficientField, model_kind: str) -> float:
    if face.is_boundary:
        raise ValueError("penalty is defined on interior faces only")
    return float(pair_penalty(spec, space, field, model_kind, face.plus, face.minus))


def _element_data(space: DGSpace, k: int, order: int):
    rule = element_quadrature(space.poly, k, order)
    return rule, space.eval_basis(k, rule.points)


def _block_matrix(space: DGSpace, bi, bj, blocks):
    """Sum (n_local x n_local) blocks into a CSR matrix; duplicates add."""
    n = space.n_local
    bi = np.asarray(bi)
    bj = np.asarray(bj)
    blocks = np.asarray(blocks).reshape(-1, n, n)
    r = (bi[:, None, None] * n + np.arange(n)[None, :, None]) + np.zeros((1, 1, n), dtype=np.int64)
    c = (bj[:, None, None] * n + np.arange(n)[None, None, :]) + np.zeros((1, n, 1), dtype=np.int64)
    N = space.n_dofs
    A = sparse.coo_matrix((blocks.ravel(), (r.ravel(), c.ravel())), shape=(N, N)).tocsr()
    A.sum_duplicates()
    return A


def block_diagonal(space: DGSpace, blocks):
    n_elem, n = space.n_elements, space.n_local
    indptr = np.arange(n_elem + 1)
    indices = np.arange(n_elem)
    return sparse.bsr_matrix((np.asarray(blocks).reshape(n_elem, n, n), indices, indptr),
                             shape=(space.n_dofs, space.n_dofs)).tocsr()


_mass_cache: "weakref.WeakKeyDictionary[DGSpace, np.ndarray]" = weakref.WeakKeyDictionary()


def mass_blocks(space: DGSpace):
    if space not in _mass_cache:
        blocks = np.empty((space.n_elements, space.n_local, space.n_local))
        for k in range(space.n_elements):
            rule, phi = _element_data(space, k, 2 * space.degree)
            blocks[k] = phi.T @ (rule.weights[:, None] * phi)
        _mass_cache[space] = blocks
    return _mass_cache[space]


def assemble_mass(space: DGSpace):
    return block_diagonal(space, mass_blocks(space))


def _per_element(space, omega):
    omega = np.asarray(omega, dtype=float)
    if omega.ndim == 0:
        omega = np.full(space.n_elements, float(omega))
    if omega.shape != (space.n_elements,):
        raise ValueError(f"expected {space.n_elements} per-element values, got shape {omega.shape}")
    return omega


def assemble_reaction(space: DGSpace, omega):
    omega = _per_element(space, omega)
    return block_diagonal(space, omega[:, None, None] * mass_blocks(space))


def assemble_stiffness_sip(space: DGSpace, field: CoefficientField, spec: PenaltySpec = PenaltySpec(),
                           model_kind: str = "fk", *, parts=False):
    """SIP stiffness matrix.

    With `parts=True` returns the volume, consistency and penalty
    contributions separately (their sum is the stiffness matrix).
    """
    poly = space.poly
    ell = space.degree
    D = field.tensors()
    n = space.n_local
    vol = np.empty((poly.n_elements, n, n))
    for k in range(poly.n_elements):
        rule = element_quadrature(poly, k, 2 * ell)
        g = space.eval_basis_grad(k, rule.points)
        gd = g @ D[k]
        vol[k] = np.einsum("q,qia,qja->ij", rule.weights, gd, g)
    A_vol = block_diagonal(space, vol)

    segs, plus, minus, normal = poly.interior_edges
    bi, bj, cons, pen = [], [], [], []
    if len(segs):
        pair_key = plus * poly.n_elements + minus
        uniq, inverse = np.unique(pair_key, return_inverse=True)
        eta = pair_penalty(spec, space, field, model_kind, uniq // poly.n_elements, uniq % poly.n_elements)
        order = np.argsort(inverse, kind="stable")
        bounds = np.searchsorted(inverse[order], np.arange(len(uniq) + 1))
        for p in range(len(uniq)):
            sel = order[bounds[p]:bounds[p + 1]]
            kp, km = int(plus[sel[0]]), int(minus[sel[0]])
            rule = segment_rule(segs[sel], 2 * ell + 1)
            nq = len(rule.weights) // len(sel)
            nrm = np.repeat(normal[sel], nq, axis=0)
            w = rule.weights
            phi = {+1: space.eval_basis(kp, rule.points), -1: space.eval_basis(km, rule.points)}
            flux = {+1: np.einsum("qia,ab,qb->qi", space.eval_basis_grad(kp, rule.points), D[kp], nrm),
                    -1: np.einsum("qia,ab,qb->qi", space.eval_basis_grad(km, rule.points), D[km], nrm)}
            elem = {+1: kp, -1: km}
            for s in (+1, -1):
                for t in (+1, -1):
                    ws = w[:, None] * phi[s]
                    c = -0.5 * s * ws.T @ flux[t] - 0.5 * t * (w[:, None] * flux[s]).T @ phi[t]
                    bi.append(elem[s])
                    bj.append(elem[t])
                    cons.append(c)
                    pen.append(eta[p] * s * t * ws.T @ phi[t])
    if bi:
        A_cons = _block_matrix(space, bi, bj, cons)
        A_pen = _block_matrix(space, bi, bj, pen)
    else:
        A_cons = sparse.csr_matrix((space.n_dofs, space.n_dofs))
        A_pen = A_cons.copy()
    if parts:
        return A_vol, A_cons, A_pen
    A = (A_vol + A_cons + A_pen).tocsr()
    A.sum_duplicates()
    return A


_triple_cache: "weakref.WeakKeyDictionary[DGSpace, np.ndarray]" = weakref.WeakKeyDictionary()


def triple_products(space: DGSpace):
    """T[k, i, j, m] = int_K phi_i phi_j phi_m, integrated at order 3l."""
    if space not in _triple_cache:
        n = space.n_local
        T = np.empty((space.n_elements, n, n, n))
        for k in range(space.n_elements):
            rule, phi = _element_data(space, k, 3 * space.degree)
            pp = (phi[:, :, None] * phi[:, None, :]).reshape(len(phi), n * n)
            T[k] = (pp.T @ (rule.weights[:, None] * phi)).reshape(n, n, n)
        _triple_cache[space] = T
    return _triple_cache[space]


def nonlinear_blocks(space: DGSpace, omega, state):
    """Element blocks of the state-dependent reaction matrix."""
    state = np.asarray(state, dtype=float)
    if state.shape != (space.n_dofs,):
        raise ValueError(f"state has shape {state.shape}, expected ({space.n_dofs},)")
    omega = _per_element(space, omega)
    T = triple_products(space)
    local = state.reshape(space.n_elements, space.n_local)
    n = space.n_local
    blocks = np.matmul(T.reshape(space.n_elements, n * n, n), local[:, :, None]).reshape(-1, n, n)
    return omega[:, None, None] * blocks


def assemble_nonlinear_reaction(space: DGSpace, omega, state):
    return block_diagonal(space, nonlinear_blocks(space, omega, state))


def assemble_forcing(space: DGSpace, k0, t=None):
    """Load vector (f, phi_i).

    `k0` is a scalar, a per-element array, or a callable f(x, y) (or
    f(x, y, t) when `t` is given) evaluated at quadrature points.
    """
    F = np.zeros(space.n_dofs)
    if callable(k0):
        order = 2 * space.degree + 2
        for k in range(space.n_elements):
            rule, phi = _element_data(space, k, order)
            x, y = rule.points[:, 0], rule.points[:, 1]
            vals = k0(x, y) if t is None else k0(x, y, t)
            F[space.dofs(k)] = phi.T @ (rule.weights * np.broadcast_to(vals, x.shape))
        return F
    k0 = _per_element(space, k0)
    one = space.constant_one.reshape(space.n_elements, space.n_local)
    # (c, phi_i) = c * M @ one on each element
    F[:] = (k0[:, None] * np.einsum("kij,kj->ki", mass_blocks(space), one)).ravel()
    return F


def symmetry_defect(A):
    A = sparse.csr_matrix(A)
    amax = abs(A).max()
    if amax == 0:
        return 0.0
    return abs(A - A.T).max() / amax


TRIPLET_HEADER = "polyprion-triplets v1"


def write_triplets(A, path):
    """Dump a sparse matrix as `row col value` lines after a dimension header."""
    C = sparse.coo_matrix(A)
    order = np.lexsort((C.col, C.row))
    with open(path, "w") as fh:
        fh.write(f"{TRIPLET_HEADER}\n{C.shape[0]} {C.shape[1]} {C.nnz}\n")
        for i, j, v in zip(C.row[order], C.col[order], C.data[order]):
            fh.write(f"{i} {j} {float(v)!r}\n")


def read_triplets(path):
    with open(path) as fh:
        header = fh.readline().strip()
        if header != TRIPLET_HEADER:
            raise ValueError(f"{path}: expected header {TRIPLET_HEADER!r}")
        nr, nc, nnz = (int(x) for x in fh.readline().split())
        data = np.loadtxt(fh, ndmin=2) if nnz else np.zeros((0, 3))
    if len(data) != nnz:
        raise ValueError(f"{path}: expected {nnz} entries, found {len(data)}")
    return sparse.coo_matrix((data[:, 2], (data[:, 0].astype(np.int64), data[:, 1].astype(np.int64))),
                             shape=(nr, nc)).tocsr()
