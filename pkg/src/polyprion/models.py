"""Heterodimer and Fisher-Kolmogorov models and their Crank-Nicolson steppers.

Both steppers are semi-implicit: the state multiplying the nonlinear
reaction matrix is extrapolated as 3/2 x^{n-1} - 1/2 x^{n-2}, so each step is
one linear solve.  At the first step x^{-1} := x^0.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as spla

from . import assembly
from .assembly import CoefficientField, PenaltySpec
from .femspace import DGSpace, element_quadrature
from .mesh import MaterialLabel

log = logging.getLogger(__name__)


class NumericalError(RuntimeError):
    pass


class LinearSolveError(NumericalError):
    def __init__(self, msg, residual):
        super().__init__(f"{msg} (relative residual {residual:.3e})")
        self.residual = residual


def _exact(x):
    # parameters are decimal data; rational arithmetic keeps table identities exact
    return Fraction(repr(float(x)))


@dataclass(frozen=True)
class HeterodimerMatter:
    d_ext: float
    d_axn: float
    k0: float
    k12: float
    k1: float
    k1_tilde: float


@dataclass(frozen=True)
class FKMatter:
    d_ext: float
    d_axn: float
    alpha: float


def _matter_key(matter):
    if isinstance(matter, str):
        return MaterialLabel[matter.upper()]
    return MaterialLabel(matter)


@dataclass(frozen=True)
class HeterodimerParams:
    white: HeterodimerMatter
    grey: HeterodimerMatter

    @classmethod
    def defaults(cls):
        return cls(
            white=HeterodimerMatter(d_ext=8.0e-6, d_axn=8.0e-5, k0=6.0e-1, k12=1.0, k1=5.0e-1, k1_tilde=3.0e-1),
            grey=HeterodimerMatter(d_ext=8.0e-6, d_axn=0.0, k0=6.7e-2, k12=1.1e-1, k1=5.6e-2, k1_tilde=3.3e-2),
        )

    def matter(self, matter) -> HeterodimerMatter:
        return self.white if _matter_key(matter) == MaterialLabel.WHITE else self.grey

    def validate(self):
        for name, m in (("white", self.white), ("grey", self.grey)):
            for rate in ("k0", "k12", "k1", "k1_tilde"):
                if getattr(m, rate) <= 0:
                    raise ValueError(f"{name} {rate} must be positive")
            if m.d_ext <= 0 or m.d_axn < 0:
                raise ValueError(f"{name} diffusivities invalid")
        return self


@dataclass(frozen=True)
class FKParams:
    white: FKMatter
    grey: FKMatter

    @classmethod
    def defaults(cls):
        return cls(white=FKMatter(d_ext=8.0e-6, d_axn=8.0e-5, alpha=9.0e-1),
                   grey=FKMatter(d_ext=8.0e-6, d_axn=0.0, alpha=1.0e-2))

    @classmethod
    def from_heterodimer(cls, hd: HeterodimerParams):
        def conv(m):
            return FKMatter(m.d_ext, m.d_axn, derive_alpha(m))
        return cls(conv(hd.white), conv(hd.grey))

    def matter(self, matter) -> FKMatter:
        return self.white if _matter_key(matter) == MaterialLabel.WHITE else self.grey

    def validate(self):
        for name, m in (("white", self.white), ("grey", self.grey)):
            if m.alpha < 0:
                raise ValueError(f"{name} alpha must be non-negative")
            if m.d_ext <= 0 or m.d_axn < 0:
                raise ValueError(f"{name} diffusivities invalid")
        return self


def _hd_matter(params, matter):
    if isinstance(params, HeterodimerMatter):
        return params
    return params.matter(matter)


def derive_alpha(params, matter=None) -> float:
    """Conversion rate k12 k0 / k1 - k1_tilde."""
    m = _hd_matter(params, matter)
    if m.k1 == 0:
        raise ZeroDivisionError("k1 = 0: conversion rate undefined")
    return float(_exact(m.k12) * _exact(m.k0) / _exact(m.k1) - _exact(m.k1_tilde))


def reaction_terms(m: HeterodimerMatter, p, q):
    """Right-hand side of the heterodimer kinetics (no diffusion)."""
    dp = m.k0 - m.k1 * p - m.k12 * p * q
    dq = -m.k1_tilde * q + m.k12 * q * p
    return dp, dq


def equilibria_heterodimer(params, matter=None) -> dict:
    """Healthy and (when alpha > 0) diseased spatially uniform equilibria."""
    m = _hd_matter(params, matter)
    k0, k1, k1t, k12 = (_exact(v) for v in (m.k0, m.k1, m.k1_tilde, m.k12))
    out = {"healthy": (float(k0 / k1), 0.0)}
    if derive_alpha(m) > 0:
        out["diseased"] = (float(k1t / k12), float(k0 / k1t - k1 / k12))
    return out


def q_max(params, matter=None) -> float:
    """Misfolded concentration at the diseased equilibrium, k0/k1_tilde - k1/k12."""
    m = _hd_matter(params, matter)
    if derive_alpha(m) <= 0:
        raise ValueError("q_max needs a positive conversion rate")
    return float(_exact(m.k0) / _exact(m.k1_tilde) - _exact(m.k1) / _exact(m.k12))


def alpha_consistency_warnings(hd: HeterodimerParams, fk: FKParams, rtol=1e-6):
    """Warn where the FK conversion rate differs from the heterodimer-derived one."""
    msgs = []
    for name in ("white", "grey"):
        derived = derive_alpha(hd, name)
        given = fk.matter(name).alpha
        if abs(derived - given) > rtol * max(abs(derived), abs(given)):
            msgs.append(f"{name} alpha={given:g} differs from k12*k0/k1 - k1_tilde = {derived:.6g}")
    for msg in msgs:
        warnings.warn(msg, stacklevel=2)
    return msgs


def coefficient_field_for(poly, params) -> CoefficientField:
    if isinstance(params, HeterodimerParams):
        return assembly.coefficient_field(poly, asdict(params.white), asdict(params.grey)).validate("heterodimer")
    return assembly.coefficient_field(poly, asdict(params.white), asdict(params.grey)).validate("fk")


@dataclass(frozen=True)
class TimeGrid:
    dt: float
    T: float

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("time step must be positive")
        if self.T < 0:
            raise ValueError("final time must be non-negative")
        n = round(self.T / self.dt)
        if abs(n * self.dt - self.T) > 1e-12 * max(1.0, self.T):
            raise ValueError(f"T={self.T} is not a multiple of dt={self.dt}")

    @property
    def n_steps(self):
        return round(self.T / self.dt)

    def time(self, n):
        return n * self.dt


@dataclass
class SimState:
    """Coefficient vectors at step n and n-1, keyed by species name."""

    current: dict
    previous: dict
    time: float = 0.0
    step: int = 0

    @classmethod
    def initial(cls, **fields):
        cur = {k: np.asarray(v, dtype=float).copy() for k, v in fields.items()}
        return cls(cur, {k: v.copy() for k, v in cur.items()}, 0.0, 0)

    def __getitem__(self, name):
        return self.current[name]


def project_initial_condition(space: DGSpace, f, order=None):
    """Element-wise L2 projection of a pointwise function f(x, y)."""
    if order is None:
        order = 2 * space.degree + 2
    mass = assembly.mass_blocks(space)
    out = np.empty(space.n_dofs)
    for k in range(space.n_elements):
        rule = element_quadrature(space.poly, k, order)
        phi = space.eval_basis(k, rule.points)
        vals = np.broadcast_to(f(rule.points[:, 0], rule.points[:, 1]), rule.weights.shape)
        out[space.dofs(k)] = np.linalg.solve(mass[k], phi.T @ (rule.weights * vals))
    return out


def linear_solve(matrix, rhs, *, tol=1e-10, max_refine=5):
    """Sparse direct solve with iterative refinement; relative residual <= tol."""
    A = sparse.csc_matrix(matrix)
    b = np.asarray(rhs, dtype=float)
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return np.zeros_like(b)
    try:
        lu = spla.splu(A, permc_spec="MMD_AT_PLUS_A")
    except RuntimeError as exc:
        raise LinearSolveError(f"factorization failed: {exc}", np.inf) from exc
    x = lu.solve(b)
    for _ in range(max_refine + 1):
        r = b - A @ x
        res = np.linalg.norm(r) / bnorm
        if not np.isfinite(res):
            raise LinearSolveError("non-finite solution", res)
        if res <= tol:
            return x
        x = x + lu.solve(r)
    raise LinearSolveError("linear solve did not reach tolerance", res)


def _factor(A):
    return spla.splu(sparse.csc_matrix(A), permc_spec="MMD_AT_PLUS_A",
                     options=dict(SymmetricMode=True), diag_pivot_thresh=0.0)


def _preconditioned_solve(apply, b, x0, precond, n, tol):
    """Defect correction with a fixed preconditioner, GMRES when it stalls."""
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return np.zeros_like(b)
    x = x0.copy()
    r = b - apply(x)
    res = np.linalg.norm(r) / bnorm
    # aim below tol: the sweeps are cheap and errors would otherwise accumulate over steps
    goal = 1e-3 * tol
    for _ in range(12):
        if res <= goal:
            return x
        x = x + precond(r)
        r = b - apply(x)
        new = np.linalg.norm(r) / bnorm
        if not np.isfinite(new):
            raise LinearSolveError("non-finite iterate", new)
        stalled = new > 0.3 * res
        res = new
        if stalled:
            break
    if res <= tol:
        return x
    op = spla.LinearOperator((n, n), matvec=apply, dtype=float)
    pc = spla.LinearOperator((n, n), matvec=precond, dtype=float)
    x, _ = spla.gmres(op, b, x0=x, rtol=0.1 * tol, atol=0.0, M=pc, restart=60, maxiter=20)
    res = np.linalg.norm(b - apply(x)) / bnorm
    if res > tol:
        raise LinearSolveError("preconditioned GMRES did not reach tolerance", res)
    return x


@dataclass(eq=False)
class SystemOperators:
    """Assembled operators of one model on one space.

    `forcing` maps species to callables f(x, y, t); they are integrated at
    t_{n-1} and t_n and averaged, matching the trapezoidal time treatment.
    """

    space: DGSpace
    field: CoefficientField
    model_kind: str
    M: sparse.csr_matrix
    A: sparse.csr_matrix
    reaction: dict
    F_k0: np.ndarray
    penalty: PenaltySpec = PenaltySpec()
    forcing: dict = field(default_factory=dict)
    solver: str = "auto"
    tol: float = 1e-10
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_dofs(self):
        return self.space.n_dofs

    def nonlinear(self, rate, state):
        return assembly.nonlinear_blocks(self.space, self.field.rates[rate], state)

    def forcing_vector(self, species, t0, t1):
        f = self.forcing.get(species)
        if f is None:
            return 0.0
        return 0.5 * (assembly.assemble_forcing(self.space, f, t=t0) + assembly.assemble_forcing(self.space, f, t=t1))

    def use_direct(self):
        # "auto" factors the constant parts once and iterates on the coupling
        return self.solver == "direct"

    def linear_parts(self, dt, species):
        """(M/dt + B/2, M/dt - B/2) with B the linear operator of `species`."""
        key = ("parts", dt, species)
        if key not in self._cache:
            B = self.A + self.reaction[species]
            self._cache[key] = ((self.M / dt + 0.5 * B).tocsr(), (self.M / dt - 0.5 * B).tocsr())
        return self._cache[key]

    def factor(self, dt, species):
        key = ("lu", dt, species)
        if key not in self._cache:
            self._cache[key] = _factor(self.linear_parts(dt, species)[0])
        return self._cache[key]


def build_operators(space: DGSpace, field: CoefficientField, model_kind: str,
                    penalty: PenaltySpec = PenaltySpec(), forcing=None, solver="auto", tol=1e-10):
    if model_kind not in assembly.MODEL_KINDS:
        raise ValueError(f"unknown model kind {model_kind!r}")
    M = assembly.assemble_mass(space)
    A = assembly.assemble_stiffness_sip(space, field, penalty, model_kind)
    if model_kind == "heterodimer":
        reaction = {"p": assembly.assemble_reaction(space, field.rates["k1"]),
                    "q": assembly.assemble_reaction(space, field.rates["k1_tilde"])}
        F = assembly.assemble_forcing(space, field.rates["k0"])
    else:
        reaction = {"c": -assembly.assemble_reaction(space, field.rates["alpha"])}
        F = np.zeros(space.n_dofs)
    return SystemOperators(space, field, model_kind, M, A, reaction, F, penalty, dict(forcing or {}), solver, tol)


def _block_apply(blocks, x):
    n_elem, n, _ = blocks.shape
    return np.einsum("kij,kj->ki", blocks, x.reshape(n_elem, n)).ravel()


def _check_finite(state, step):
    for name, v in state.items():
        if not np.all(np.isfinite(v)):
            raise NumericalError(f"non-finite values in {name} at step {step}")


def cn_step_heterodimer(ops: SystemOperators, state: SimState, dt: float) -> SimState:
    P1, Q1 = state.current["p"], state.current["q"]
    P2, Q2 = state.previous["p"], state.previous["q"]
    p_star = 1.5 * P1 - 0.5 * P2
    q_star = 1.5 * Q1 - 0.5 * Q2
    NP = ops.nonlinear("k12", p_star)
    NQ = ops.nonlinear("k12", q_star)
    Lp, Rp = ops.linear_parts(dt, "p")
    Lq, Rq = ops.linear_parts(dt, "q")
    t0, t1 = state.time, (state.step + 1) * dt
    Fp = Rp @ P1 - 0.5 * _block_apply(NP, Q1) + ops.F_k0 + ops.forcing_vector("p", t0, t1)
    # Q^{n-1} (not P^{n-1}) in the explicit half of the q equation
    Fq = Rq @ Q1 + 0.5 * _block_apply(NQ, P1) + ops.forcing_vector("q", t0, t1)
    n = ops.n_dofs
    b = np.concatenate([Fp, Fq])

    if ops.use_direct():
        S = sparse.bmat([[Lp, 0.5 * assembly.block_diagonal(ops.space, NP)],
                         [-0.5 * assembly.block_diagonal(ops.space, NQ), Lq]], format="csc")
        x = linear_solve(S, b, tol=ops.tol)
    else:
        lup, luq = ops.factor(dt, "p"), ops.factor(dt, "q")

        def apply(x):
            P, Q = x[:n], x[n:]
            return np.concatenate([Lp @ P + 0.5 * _block_apply(NP, Q), Lq @ Q - 0.5 * _block_apply(NQ, P)])

        def precond(r):
            return np.concatenate([lup.solve(r[:n]), luq.solve(r[n:])])

        guess = np.concatenate([2.0 * P1 - P2, 2.0 * Q1 - Q2])
        x = _preconditioned_solve(apply, b, guess, precond, 2 * n, ops.tol)
    new = {"p": x[:n], "q": x[n:]}
    _check_finite(new, state.step + 1)
    return SimState(new, dict(state.current), t1, state.step + 1)


def cn_step_fk(ops: SystemOperators, state: SimState, dt: float) -> SimState:
    C1, C2 = state.current["c"], state.previous["c"]
    c_star = 1.5 * C1 - 0.5 * C2
    N = ops.nonlinear("alpha", c_star)
    L, R = ops.linear_parts(dt, "c")
    t0, t1 = state.time, (state.step + 1) * dt
    b = R @ C1 - 0.5 * _block_apply(N, C1) + ops.forcing_vector("c", t0, t1)
    if ops.use_direct():
        S = (L + 0.5 * assembly.block_diagonal(ops.space, N)).tocsc()
        x = linear_solve(S, b, tol=ops.tol)
    else:
        lu = ops.factor(dt, "c")
        x = _preconditioned_solve(lambda v: L @ v + 0.5 * _block_apply(N, v), b, 2.0 * C1 - C2,
                                  lu.solve, ops.n_dofs, ops.tol)
    new = {"c": x}
    _check_finite(new, state.step + 1)
    return SimState(new, dict(state.current), t1, state.step + 1)


def step(ops: SystemOperators, state: SimState, dt: float) -> SimState:
    if ops.model_kind == "heterodimer":
        return cn_step_heterodimer(ops, state, dt)
    return cn_step_fk(ops, state, dt)


def integrate(ops: SystemOperators, state: SimState, grid: TimeGrid, callback=None) -> SimState:
    """Advance `state` over the whole grid, calling callback(state) after each step."""
    for _ in range(grid.n_steps):
        state = step(ops, state, grid.dt)
        if callback is not None:
            callback(state)
    return state


__all__ = [
    "HeterodimerMatter", "FKMatter", "HeterodimerParams", "FKParams", "derive_alpha",
    "equilibria_heterodimer", "q_max", "reaction_terms", "alpha_consistency_warnings",
    "TimeGrid", "SimState", "SystemOperators", "build_operators", "project_initial_condition",
    "cn_step_heterodimer", "cn_step_fk", "step", "integrate", "linear_solve", "NumericalError",
    "LinearSolveError", "coefficient_field_for",
]
