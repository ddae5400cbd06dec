"""Independent reference solutions used by the tests and verification suites.

The 1D solvers use cell-centred finite differences with mirrored ghost cells
(homogeneous Neumann) and a fully implicit trapezoidal rule solved by Newton
iteration, so they share nothing with the DG stepping path.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial

import numpy as np
from scipy.linalg import solve_banded


def fisher_speed(alpha, d):
    """Minimal travelling-wave speed 2 sqrt(alpha d) of u_t = d u_xx + alpha u (1 - u)."""
    return 2.0 * np.sqrt(alpha * d)


@dataclass(frozen=True)
class FDResult:
    x: np.ndarray
    times: np.ndarray
    values: dict


def _laplacian_bands(n, h):
    lower = np.full(n, 1.0 / h**2)
    upper = np.full(n, 1.0 / h**2)
    diag = np.full(n, -2.0 / h**2)
    diag[0] = diag[-1] = -1.0 / h**2
    return lower, diag, upper


def _lap(u, h):
    g = np.concatenate([[u[0]], u, [u[-1]]])
    return (g[:-2] - 2 * g[1:-1] + g[2:]) / h**2


def _sample_steps(dt, T, every):
    n = int(round(T / dt))
    stride = max(1, int(round(every / dt))) if every else 1
    return n, stride


def fd1d_fk(alpha, d, length, n_cells, c0, dt, T, sample_every=None, newton_tol=1e-13):
    """Solve c_t = d c_xx + alpha c (1 - c) on (0, length), Neumann ends."""
    h = length / n_cells
    x = (np.arange(n_cells) + 0.5) * h
    c = np.asarray(c0(x) if callable(c0) else c0, dtype=float).copy()
    n, stride = _sample_steps(dt, T, sample_every)
    lo, di, up = _laplacian_bands(n_cells, h)
    times, frames = [0.0], [c.copy()]
    for step in range(1, n + 1):
        old_rhs = c + 0.5 * dt * (d * _lap(c, h) + alpha * c * (1 - c))
        u = c.copy()
        for _ in range(50):
            F = u - 0.5 * dt * (d * _lap(u, h) + alpha * u * (1 - u)) - old_rhs
            ab = np.zeros((3, n_cells))
            ab[0, 1:] = -0.5 * dt * d * up[:-1]
            ab[1] = 1.0 - 0.5 * dt * (d * di + alpha * (1 - 2 * u))
            ab[2, :-1] = -0.5 * dt * d * lo[1:]
            du = solve_banded((1, 1), ab, -F)
            u += du
            if np.max(np.abs(du)) <= newton_tol * max(1.0, np.max(np.abs(u))):
                break
        if not np.all(np.isfinite(u)):
            raise FloatingPointError(f"non-finite FD solution at step {step}")
        c = u
        if step % stride == 0 or step == n:
            times.append(step * dt)
            frames.append(c.copy())
    return FDResult(x, np.array(times), {"c": np.array(frames)})


def fd1d_heterodimer(m, length, n_cells, p0, q0, dt, T, sample_every=None, newton_tol=1e-13):
    """Two-species heterodimer kinetics with diffusion d_ext on (0, length)."""
    d = m.d_ext
    h = length / n_cells
    x = (np.arange(n_cells) + 0.5) * h
    p = np.asarray(p0(x) if callable(p0) else np.broadcast_to(p0, x.shape), dtype=float).copy()
    q = np.asarray(q0(x) if callable(q0) else np.broadcast_to(q0, x.shape), dtype=float).copy()
    n, stride = _sample_steps(dt, T, sample_every)
    lo, di, up = _laplacian_bands(n_cells, h)

    def rhs(p, q):
        return (d * _lap(p, h) + m.k0 - m.k1 * p - m.k12 * p * q,
                d * _lap(q, h) - m.k1_tilde * q + m.k12 * p * q)

    times, P, Q = [0.0], [p.copy()], [q.copy()]
    N = 2 * n_cells
    for step in range(1, n + 1):
        fp, fq = rhs(p, q)
        old_p = p + 0.5 * dt * fp
        old_q = q + 0.5 * dt * fq
        up_, uq = p.copy(), q.copy()
        for _ in range(50):
            gp, gq = rhs(up_, uq)
            F = np.empty(N)
            F[0::2] = up_ - 0.5 * dt * gp - old_p
            F[1::2] = uq - 0.5 * dt * gq - old_q
            # interleaved unknowns (p0, q0, p1, q1, ...): bandwidth 2
            ab = np.zeros((5, N))
            dpp = 1.0 - 0.5 * dt * (d * di - m.k1 - m.k12 * uq)
            dqq = 1.0 - 0.5 * dt * (d * di - m.k1_tilde + m.k12 * up_)
            dpq = 0.5 * dt * m.k12 * up_
            dqp = -0.5 * dt * m.k12 * uq
            ab[2, 0::2] = dpp
            ab[2, 1::2] = dqq
            ab[1, 1::2] = dpq          # row p_i, column q_i
            ab[3, 0::2] = dqp          # row q_i, column p_i
            off = -0.5 * dt * d / h**2
            ab[0, 2:] = off            # superdiagonal 2: same species, next cell
            ab[4, :-2] = off
            du = solve_banded((2, 2), ab, -F)
            up_ += du[0::2]
            uq += du[1::2]
            if np.max(np.abs(du)) <= newton_tol * max(1.0, np.max(np.abs(du) + np.abs(np.concatenate([up_, uq])))):
                break
        if not (np.all(np.isfinite(up_)) and np.all(np.isfinite(uq))):
            raise FloatingPointError(f"non-finite FD solution at step {step}")
        p, q = up_, uq
        if step % stride == 0 or step == n:
            times.append(step * dt)
            P.append(p.copy())
            Q.append(q.copy())
    return FDResult(x, np.array(times), {"p": np.array(P), "q": np.array(Q)})


def front_positions(x, frames, threshold):
    """Rightmost threshold crossing of each frame, linearly interpolated (nan if none)."""
    out = np.full(len(frames), np.nan)
    for i, u in enumerate(frames):
        above = np.flatnonzero(u > threshold)
        if not len(above) or above[-1] == len(u) - 1:
            continue
        j = above[-1]
        out[i] = x[j] + (u[j] - threshold) / (u[j] - u[j + 1]) * (x[j + 1] - x[j])
    return out


def logistic_cn_scalar(alpha, c0, dt, n_steps):
    """Spatially constant shadow of the semi-implicit FK Crank-Nicolson recurrence."""
    c = [float(c0)]
    prev = float(c0)
    for _ in range(n_steps):
        cur = c[-1]
        star = 1.5 * cur - 0.5 * prev
        lhs = 1.0 / dt + 0.5 * (-alpha + alpha * star)
        rhs = (1.0 / dt - 0.5 * (-alpha)) * cur - 0.5 * alpha * star * cur
        prev = cur
        c.append(rhs / lhs)
    return np.array(c)


def heterodimer_cn_scalar(m, p0, q0, dt, n_steps):
    """Spatially constant shadow of the heterodimer semi-implicit scheme."""
    p, q = [float(p0)], [float(q0)]
    pp, qp = float(p0), float(q0)
    for _ in range(n_steps):
        P1, Q1 = p[-1], q[-1]
        ps = 1.5 * P1 - 0.5 * pp
        qs = 1.5 * Q1 - 0.5 * qp
        a11 = 1 / dt + 0.5 * m.k1
        a12 = 0.5 * m.k12 * ps
        a21 = -0.5 * m.k12 * qs
        a22 = 1 / dt + 0.5 * m.k1_tilde
        b1 = (1 / dt - 0.5 * m.k1) * P1 - 0.5 * m.k12 * ps * Q1 + m.k0
        b2 = (1 / dt - 0.5 * m.k1_tilde) * Q1 + 0.5 * m.k12 * qs * P1
        det = a11 * a22 - a12 * a21
        pp, qp = P1, Q1
        p.append((b1 * a22 - a12 * b2) / det)
        q.append((a11 * b2 - a21 * b1) / det)
    return np.array(p), np.array(q)


def heterodimer_ode(m, p0, q0, times):
    """Kinetics-only heterodimer trajectory from a stiff ODE integrator."""
    from scipy.integrate import solve_ivp

    def f(_, y):
        p, q = y
        return [m.k0 - m.k1 * p - m.k12 * p * q, -m.k1_tilde * q + m.k12 * p * q]

    sol = solve_ivp(f, (times[0], times[-1]), [p0, q0], t_eval=times, method="Radau", rtol=1e-11, atol=1e-13)
    return sol.y


def monomial_integral_triangle(vertices, i, j):
    """Exact rational integral of x^i y^j over a triangle with rational vertices.

    Expands x, y in barycentric coordinates and uses
    int_T l0^a l1^b l2^c = a! b! c! 2|T| / (a + b + c + 2)!.
    """
    (x0, y0), (x1, y1), (x2, y2) = [(Fraction(a), Fraction(b)) for a, b in vertices]
    area2 = abs((x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0))

    def powers(c0, c1, c2, n):
        out = {}
        for a in range(n + 1):
            for b in range(n - a + 1):
                c = n - a - b
                coef = Fraction(factorial(n), factorial(a) * factorial(b) * factorial(c))
                out[(a, b, c)] = coef * c0**a * c1**b * c2**c
        return out

    total = Fraction(0)
    for (a1, b1, c1), cx in powers(x0, x1, x2, i).items():
        for (a2, b2, c2), cy in powers(y0, y1, y2, j).items():
            a, b, c = a1 + a2, b1 + b2, c1 + c2
            total += cx * cy * Fraction(factorial(a) * factorial(b) * factorial(c), factorial(a + b + c + 2))
    return total * area2


# ---------------------------------------------------------------------------
# manufactured solutions

def _sympy_forcing(model_kind, exact, D, rates, state):
    """Symbolic forcing making `exact` a steady solution of the linearized model.

    FK is linearized at c = 1:  -div(D grad u) + alpha u = f.
    The heterodimer system is linearized at the diseased equilibrium (pb, qb):
        -div(D grad p) + (k1 + k12 qb) p + k12 pb q = f_p
        -div(D grad q) + (k1_tilde - k12 pb) q - k12 qb p = f_q
    """
    import sympy as sp

    x, y = sp.symbols("x y")
    Dm = sp.Matrix(D)

    def div_flux(u):
        g = sp.Matrix([sp.diff(u, x), sp.diff(u, y)])
        fl = Dm * g
        return sp.diff(fl[0], x) + sp.diff(fl[1], y)

    out = {}
    if model_kind == "fk":
        u = exact["c"](x, y, sp)
        f = -div_flux(u) + rates["alpha"] * u
        out["c"] = sp.lambdify((x, y), f, "numpy")
    else:
        pb, qb = state
        p = exact["p"](x, y, sp)
        q = exact["q"](x, y, sp)
        fp = -div_flux(p) + (rates["k1"] + rates["k12"] * qb) * p + rates["k12"] * pb * q
        fq = -div_flux(q) + (rates["k1_tilde"] - rates["k12"] * pb) * q - rates["k12"] * qb * p
        out["p"] = sp.lambdify((x, y), fp, "numpy")
        out["q"] = sp.lambdify((x, y), fq, "numpy")
    return out


def cosine_family(kx=1, ky=1, shift=0.0):
    """Neumann-compatible exact solution cos(kx pi x) cos(ky pi y) + shift on the unit square."""
    def u(x, y, mod=np):
        return mod.cos(kx * mod.pi * x) * mod.cos(ky * mod.pi * y) + shift
    return u


@dataclass(frozen=True)
class ConvergenceTable:
    h: np.ndarray
    errors: dict
    orders: dict


def _observed_orders(h, err):
    h = np.asarray(h)
    err = np.asarray(err)
    return np.log(err[:-1] / err[1:]) / np.log(h[:-1] / h[1:])


def manufactured_run(model_kind, meshes, degree, *, d_ext=1.0, d_axn=0.5, axon=(1.0, 0.0),
                     rates=None, exact=None, penalty=10.0):
    """Steady linearized manufactured problems on a sequence of unit-square meshes.

    `meshes` are PolyMesh objects covering the unit square.  Returns L2 errors
    per species and observed orders between consecutive meshes.
    """
    from . import assembly
    from .femspace import build_space, element_quadrature
    from .models import linear_solve

    if rates is None:
        rates = {"k0": 0.6, "k12": 1.0, "k1": 0.5, "k1_tilde": 0.3, "alpha": 0.9}
    a = np.asarray(axon, dtype=float)
    D = (d_ext * np.eye(2) + d_axn * np.outer(a, a)).tolist()
    if model_kind == "fk":
        exact = exact or {"c": cosine_family(1, 1, shift=0.0)}
        state = None
    else:
        exact = exact or {"p": cosine_family(1, 1), "q": cosine_family(2, 1)}
        k0, k1, k1t, k12 = rates["k0"], rates["k1"], rates["k1_tilde"], rates["k12"]
        state = (k1t / k12, k0 / k1t - k1 / k12)
    forcing = _sympy_forcing(model_kind, exact, D, rates, state)

    hs, errs = [], {s: [] for s in exact}
    for poly in meshes:
        space = build_space(poly, degree)
        params = dict(d_ext=d_ext, d_axn=d_axn, **rates)
        field = assembly.coefficient_field(poly, params, params)
        field = assembly.CoefficientField(field.d_ext, field.d_axn, np.tile(a, (poly.n_elements, 1)), field.rates)
        A = assembly.assemble_stiffness_sip(space, field, assembly.PenaltySpec(penalty), model_kind)
        n = space.n_dofs
        if model_kind == "fk":
            one = space.constant_one
            L = A - assembly.assemble_reaction(space, rates["alpha"]) + \
                2.0 * assembly.assemble_nonlinear_reaction(space, rates["alpha"], one)
            b = assembly.assemble_forcing(space, lambda x, y: forcing["c"](x, y) + 0 * x)
            sol = {"c": linear_solve(L, b, tol=1e-10)}
        else:
            from scipy import sparse
            pb, qb = state
            one = space.constant_one
            NP = assembly.assemble_nonlinear_reaction(space, rates["k12"], pb * one)
            NQ = assembly.assemble_nonlinear_reaction(space, rates["k12"], qb * one)
            Mk1 = assembly.assemble_reaction(space, rates["k1"])
            Mk1t = assembly.assemble_reaction(space, rates["k1_tilde"])
            L = sparse.bmat([[A + Mk1 + NQ, NP], [-NQ, A + Mk1t - NP]], format="csc")
            bp = assembly.assemble_forcing(space, lambda x, y: forcing["p"](x, y) + 0 * x)
            bq = assembly.assemble_forcing(space, lambda x, y: forcing["q"](x, y) + 0 * x)
            x_ = linear_solve(L, np.concatenate([bp, bq]), tol=1e-10)
            sol = {"p": x_[:n], "q": x_[n:]}
        for s, coeffs in sol.items():
            err2 = 0.0
            for k in range(space.n_elements):
                rule = element_quadrature(poly, k, 2 * degree + 4)
                uh = space.evaluate(coeffs, k, rule.points)
                ue = exact[s](rule.points[:, 0], rule.points[:, 1])
                err2 += rule.weights @ (uh - ue) ** 2
            errs[s].append(np.sqrt(err2))
        hs.append(poly.elem_diameter.max())
    errors = {s: np.array(v) for s, v in errs.items()}
    return ConvergenceTable(np.array(hs), errors, {s: _observed_orders(hs, e) for s, e in errors.items()})


def self_convergence_orders(solutions, norm=None):
    """Orders log2(|u_k - u_{k+1}| / |u_{k+1} - u_{k+2}|) from dt-halving solutions."""
    if norm is None:
        norm = np.linalg.norm
    diffs = [norm(a - b) for a, b in zip(solutions[:-1], solutions[1:])]
    return np.log2(np.array(diffs[:-1]) / np.array(diffs[1:])), np.array(diffs)
