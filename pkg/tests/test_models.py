import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import sparse

from polyprion import assembly, oracle
from polyprion.femspace import build_space, element_quadrature
from polyprion.meshgen import square_polymesh
from polyprion.models import (FKMatter, FKParams, HeterodimerMatter, HeterodimerParams, LinearSolveError,
                              NumericalError, SimState, TimeGrid, alpha_consistency_warnings, build_operators,
                              cn_step_fk, cn_step_heterodimer, coefficient_field_for, derive_alpha,
                              equilibria_heterodimer, integrate, linear_solve, project_initial_condition, q_max,
                              reaction_terms)

HD = HeterodimerParams.defaults()
FK = FKParams.defaults()


def uniform(m):
    return HeterodimerParams(m, m) if isinstance(m, HeterodimerMatter) else FKParams(m, m)


@pytest.fixture(scope="module")
def sq():
    poly = square_polymesh(4)
    return poly, build_space(poly, 2)


def test_derive_alpha():
    assert derive_alpha(HD, "white") == 0.9
    assert derive_alpha(HD, "grey") == pytest.approx(0.0986071428571, rel=1e-10)
    m = HeterodimerMatter(1e-5, 0, k0=0.6, k12=1.0, k1=0.5, k1_tilde=1.2)
    assert derive_alpha(m) == 0
    with pytest.raises(ZeroDivisionError):
        derive_alpha(HeterodimerMatter(1e-5, 0, 0.6, 1.0, 0.0, 0.3))


def test_alpha_conflict_warns():
    with pytest.warns(UserWarning, match="grey"):
        msgs = alpha_consistency_warnings(HD, FK)
    assert len(msgs) == 1
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert alpha_consistency_warnings(HD, FKParams.from_heterodimer(HD)) == []


def test_equilibria():
    eq = equilibria_heterodimer(HD, "white")
    assert eq == {"healthy": (1.2, 0.0), "diseased": (0.3, 1.5)}
    g = equilibria_heterodimer(HD, "grey")
    assert g["healthy"][0] == pytest.approx(0.067 / 0.056)
    assert g["diseased"] == pytest.approx((0.3, 0.067 / 0.033 - 0.056 / 0.11))
    for m, e in ((HD.white, eq), (HD.grey, g)):
        for p, q in e.values():
            assert max(map(abs, reaction_terms(m, p, q))) <= 1e-14
    healthy_only = HeterodimerMatter(1e-5, 0, k0=0.6, k12=1.0, k1=0.5, k1_tilde=2.0)
    assert set(equilibria_heterodimer(healthy_only)) == {"healthy"}


def test_q_max():
    assert q_max(HD, "white") == 1.5
    assert q_max(HD, "grey") == pytest.approx(1.5212, abs=1e-4)


@given(st.floats(0.05, 2), st.floats(0.05, 2), st.floats(0.05, 2), st.floats(0.05, 2))
def test_diseased_equilibrium_zeroes_reaction(k0, k12, k1, k1t):
    m = HeterodimerMatter(1e-5, 0, k0, k12, k1, k1t)
    for p, q in equilibria_heterodimer(m).values():
        assert max(map(abs, reaction_terms(m, p, q))) <= 1e-12 * max(1, k0, k12 * p * q)


def test_time_grid():
    assert TimeGrid(0.01, 25.0).n_steps == 2500
    with pytest.raises(ValueError):
        TimeGrid(0.0, 1.0)
    with pytest.raises(ValueError):
        TimeGrid(0.3, 1.0)


def test_linear_solve_examples(rng):
    b = rng.standard_normal(5)
    assert np.allclose(linear_solve(sparse.eye(5), b), b)
    A = np.array([[4.0, 1.0], [1.0, 3.0]])
    assert np.allclose(linear_solve(A, [1.0, 2.0]), np.linalg.solve(A, [1.0, 2.0]), atol=1e-14)
    R = sparse.random(60, 60, density=0.05, random_state=3)
    S = (R @ R.T + sparse.eye(60)).tocsr()
    b = rng.standard_normal(60)
    x = linear_solve(S, b)
    assert np.linalg.norm(x - np.linalg.solve(S.toarray(), b)) <= 1e-10 * np.linalg.norm(x)
    with pytest.raises(LinearSolveError):
        linear_solve(sparse.csr_matrix((3, 3)), np.ones(3))


def test_heterodimer_equilibrium_is_fixed_point(sq):
    poly, space = sq
    ops = build_operators(space, coefficient_field_for(poly, uniform(HD.white)), "heterodimer")
    one = space.constant_one
    st_ = SimState.initial(p=0.3 * one, q=1.5 * one)
    for _ in range(3):
        st_ = cn_step_heterodimer(ops, st_, 0.01)
    assert np.abs(st_["p"] - 0.3 * one).max() < 1e-9
    assert np.abs(st_["q"] - 1.5 * one).max() < 1e-9


def test_decoupled_linear_case(sq):
    poly, space = sq
    m = HeterodimerMatter(0.01, 0.0, k0=0.5 * 1.1, k12=1e-300, k1=0.5, k1_tilde=0.3)
    ops = build_operators(space, coefficient_field_for(poly, uniform(m)), "heterodimer")
    one = space.constant_one
    dt = 0.05
    st_ = SimState.initial(p=1.1 * one, q=0.7 * one)
    factor = (1 - dt * 0.3 / 2) / (1 + dt * 0.3 / 2)
    for n in range(1, 6):
        st_ = cn_step_heterodimer(ops, st_, dt)
        assert np.allclose(st_["p"], 1.1 * one, atol=1e-12)
        assert np.allclose(st_["q"], 0.7 * factor**n * one, atol=1e-12)


def _dense_reference_step(space, m, P1, Q1, P2, Q2, dt):
    """Dense assembly of one heterodimer step from quadrature, independent of the sparse path."""
    poly = space.poly
    n = space.n_dofs
    M = np.zeros((n, n))
    Nhat = lambda state: np.zeros((n, n))  # noqa: E731
    NP, NQ = np.zeros((n, n)), np.zeros((n, n))
    Ps = 1.5 * P1 - 0.5 * P2
    Qs = 1.5 * Q1 - 0.5 * Q2
    F = np.zeros(n)
    for k in range(poly.n_elements):
        s = space.dofs(k)
        rule = element_quadrature(poly, k, 3 * space.degree)
        B = space.eval_basis(k, rule.points)
        w = rule.weights
        M[s, s] = B.T @ (w[:, None] * B)
        NP[s, s] = m.k12 * B.T @ ((w * (B @ Ps[s]))[:, None] * B)
        NQ[s, s] = m.k12 * B.T @ ((w * (B @ Qs[s]))[:, None] * B)
        F[s] = m.k0 * B.T @ w
    del Nhat
    field = coefficient_field_for(poly, uniform(m))
    A = assembly.assemble_stiffness_sip(space, field, assembly.PenaltySpec(10.0), "heterodimer").toarray()
    Lp = M / dt + 0.5 * (A + m.k1 * M)
    Lq = M / dt + 0.5 * (A + m.k1_tilde * M)
    Rp = M / dt - 0.5 * (A + m.k1 * M)
    Rq = M / dt - 0.5 * (A + m.k1_tilde * M)
    S = np.block([[Lp, 0.5 * NP], [-0.5 * NQ, Lq]])
    b = np.concatenate([Rp @ P1 - 0.5 * NP @ Q1 + F, Rq @ Q1 + 0.5 * NQ @ P1])
    x = np.linalg.solve(S, b)
    return x[:n], x[n:]


@pytest.mark.parametrize("solver", ["auto", "direct"])
def test_heterodimer_step_matches_dense_reference(sq, solver):
    poly, space = sq
    m = HeterodimerMatter(0.02, 0.01, 0.6, 1.0, 0.5, 0.3)
    ops = build_operators(space, coefficient_field_for(poly, uniform(m)), "heterodimer", solver=solver)
    P0 = project_initial_condition(space, lambda x, y: 1.2 + 0 * x)
    Q0 = project_initial_condition(space, lambda x, y: 0.15 * np.exp(-20 * ((x - 0.3) ** 2 + y**2)))
    st_ = SimState.initial(p=P0, q=Q0)
    nxt = cn_step_heterodimer(ops, st_, 0.01)
    p_ref, q_ref = _dense_reference_step(space, m, P0, Q0, P0, Q0, 0.01)
    assert np.abs(nxt["p"] - p_ref).max() < 1e-10
    assert np.abs(nxt["q"] - q_ref).max() < 1e-10
    # second step exercises the genuine two-level extrapolation
    nxt2 = cn_step_heterodimer(ops, nxt, 0.01)
    p_ref2, q_ref2 = _dense_reference_step(space, m, nxt["p"], nxt["q"], P0, Q0, 0.01)
    assert np.abs(nxt2["p"] - p_ref2).max() < 1e-10
    assert np.abs(nxt2["q"] - q_ref2).max() < 1e-10


def test_fk_fixed_points(sq):
    poly, space = sq
    ops = build_operators(space, coefficient_field_for(poly, uniform(FK.white)), "fk")
    one = space.constant_one
    st1 = integrate(ops, SimState.initial(c=one), TimeGrid(0.01, 0.05))
    assert np.abs(st1["c"] - one).max() < 1e-9
    st0 = integrate(ops, SimState.initial(c=np.zeros(space.n_dofs)), TimeGrid(0.01, 0.05))
    assert np.all(st0["c"] == 0)


@pytest.mark.parametrize("c0", [0.1, 0.55])
def test_fk_uniform_run_matches_scalar_recurrence(sq, c0):
    poly, space = sq
    ops = build_operators(space, coefficient_field_for(poly, uniform(FK.white)), "fk")
    ref = oracle.logistic_cn_scalar(0.9, c0, 0.01, 100)
    vals = []
    integrate(ops, SimState.initial(c=c0 * space.constant_one), TimeGrid(0.01, 1.0),
              lambda s: vals.append(space.sample_barycenters(s["c"])))
    got = np.array(vals)
    assert np.abs(got - ref[1:, None]).max() < 1e-10


def test_heterodimer_uniform_run_matches_scalar_recurrence(sq):
    poly, space = sq
    ops = build_operators(space, coefficient_field_for(poly, uniform(HD.white)), "heterodimer")
    p_ref, q_ref = oracle.heterodimer_cn_scalar(HD.white, 1.2, 0.01, 0.01, 200)
    one = space.constant_one
    st_ = integrate(ops, SimState.initial(p=1.2 * one, q=0.01 * one), TimeGrid(0.01, 2.0))
    assert np.abs(space.sample_barycenters(st_["p"]) - p_ref[-1]).max() < 1e-10
    assert np.abs(space.sample_barycenters(st_["q"]) - q_ref[-1]).max() < 1e-10


def test_linear_heterodimer_energy_decay(sq):
    poly, space = sq
    m = HeterodimerMatter(0.05, 0.02, k0=1e-300, k12=1e-300, k1=0.5, k1_tilde=0.3)
    ops = build_operators(space, coefficient_field_for(poly, uniform(m)), "heterodimer")
    rng = np.random.default_rng(0)
    st_ = SimState.initial(p=rng.standard_normal(space.n_dofs), q=rng.standard_normal(space.n_dofs))
    norms = []
    integrate(ops, st_, TimeGrid(0.1, 2.0), lambda s: norms.append(s["p"] @ ops.M @ s["p"] + s["q"] @ ops.M @ s["q"]))
    assert np.all(np.diff(norms) <= 1e-12 * norms[0])


def test_non_finite_state_raises(sq):
    poly, space = sq
    ops = build_operators(space, coefficient_field_for(poly, uniform(FK.white)), "fk")
    c = space.constant_one.copy()
    c[0] = np.nan
    with pytest.raises(NumericalError):
        cn_step_fk(ops, SimState.initial(c=c), 0.01)


def test_projection_preserves_mass(sq):
    poly, space = sq
    f = lambda x, y: np.exp(-30 * ((x - 0.4) ** 2 + (y - 0.5) ** 2))  # noqa: E731
    u = project_initial_condition(space, f)
    direct = 0.0
    for k in range(poly.n_elements):
        rule = element_quadrature(poly, k, 2 * space.degree + 2)
        direct += rule.integrate(f(rule.points[:, 0], rule.points[:, 1]))
    assert space.constant_one @ u == pytest.approx(direct, rel=1e-13)
