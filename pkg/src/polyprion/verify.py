"""Verification suites: measured values against tolerances, as JSON-ready reports."""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.linalg import eigh

from . import assembly, oracle, post
from .femspace import build_space
from .mesh import agglomerate
from .meshgen import square_polymesh, strip_polymesh, unit_square_trimesh
from .models import (FKMatter, FKParams, HeterodimerMatter, HeterodimerParams, SimState, TimeGrid,
                     alpha_consistency_warnings, build_operators, coefficient_field_for, derive_alpha,
                     equilibria_heterodimer, integrate, project_initial_condition, q_max, reaction_terms)


@dataclass
class Check:
    name: str
    value: object
    target: str
    passed: bool


@dataclass
class Report:
    suite: str
    checks: list = field(default_factory=list)

    def add(self, name, value, target, passed):
        if isinstance(value, np.generic):
            value = value.item()
        self.checks.append(Check(name, value, target, bool(passed)))
        return bool(passed)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def to_dict(self):
        return {"suite": self.suite, "passed": self.passed, "checks": [asdict(c) for c in self.checks]}

    def check(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


# ---------------------------------------------------------------------------

def suite_matrices(degree=2, seed=0) -> Report:
    """Symmetry, kernel and definiteness of the assembled operators on small meshes."""
    rep = Report("matrices")
    meshes = {"square": square_polymesh(3),
              "agglomerated": agglomerate(unit_square_trimesh(8, alternate=True), 10, seed=seed)}
    rng = np.random.default_rng(seed)
    hd = HeterodimerParams.defaults()
    for mname, poly in meshes.items():
        field_ = coefficient_field_for(poly, HeterodimerParams(
            HeterodimerMatter(0.3, 0.7, 0.6, 1.0, 0.5, 0.3), hd.grey))
        field_ = assembly.CoefficientField(field_.d_ext, field_.d_axn,
                                           np.tile([np.cos(0.4), np.sin(0.4)], (poly.n_elements, 1)), field_.rates)
        space = build_space(poly, degree)
        M = assembly.assemble_mass(space)
        A = assembly.assemble_stiffness_sip(space, field_, assembly.PenaltySpec(10.0), "heterodimer")
        A2 = assembly.assemble_stiffness_sip(space, field_, assembly.PenaltySpec(20.0), "heterodimer")
        Mw = assembly.assemble_reaction(space, field_.rates["k1"])
        phi = rng.standard_normal(space.n_dofs)
        Mh = assembly.assemble_nonlinear_reaction(space, field_.rates["k12"], phi)
        for name, mat in (("M", M), ("A", A), ("M_omega", Mw), ("M_hat", Mh)):
            d = assembly.symmetry_defect(mat)
            rep.add(f"{mname}: {name} symmetric", d, "<= 1e-12", d <= 1e-12)
        r = np.linalg.norm(A @ space.constant_one) / max(1.0, abs(A).max())
        rep.add(f"{mname}: A 1 = 0", r, "<= 1e-10", r <= 1e-10)
        inc = (A2 - A).toarray()
        ev = eigh(0.5 * (inc + inc.T), eigvals_only=True)
        rel = ev.min() / max(ev.max(), 1e-300)
        rep.add(f"{mname}: penalty increment PSD", rel, ">= -1e-10 (min/max eigenvalue)", rel >= -1e-10)
        B = (A + Mw).toarray()
        Md = M.toarray()
        ev = eigh(0.5 * (B + B.T), Md, eigvals_only=True)
        rep.add(f"{mname}: A + M_k1 positive definite", ev.min(), "> 0", ev.min() > 0)
        Aa = A.toarray()
        ev = eigh(0.5 * (Aa + Aa.T), Md, eigvals_only=True)
        rel = ev.min() / ev.max()
        rep.add(f"{mname}: A positive semidefinite", rel, ">= -1e-10 (min/max eigenvalue)", rel >= -1e-10)
    return rep


def uniform_heterodimer_run(T=25.0, dt=0.01, p0=1.2, q0=0.01, n=4):
    """Spatially uniform heterodimer run with default white-matter values on n x n square elements."""
    hd = HeterodimerParams.defaults()
    poly = square_polymesh(n)
    params = HeterodimerParams(hd.white, hd.white)
    space = build_space(poly, 2)
    ops = build_operators(space, coefficient_field_for(poly, params), "heterodimer")
    one = space.constant_one
    st = integrate(ops, SimState.initial(p=p0 * one, q=q0 * one), TimeGrid(dt, T))
    return space, st


def suite_equilibria() -> Report:
    rep = Report("equilibria")
    hd = HeterodimerParams.defaults()
    eq = equilibria_heterodimer(hd, "white")
    rep.add("healthy equilibrium", list(eq["healthy"]), "== (1.2, 0)", eq["healthy"] == (1.2, 0.0))
    rep.add("diseased equilibrium", list(eq["diseased"]), "== (0.3, 1.5)", eq["diseased"] == (0.3, 1.5))
    res = max(max(abs(v) for v in reaction_terms(hd.white, *e)) for e in eq.values())
    rep.add("reaction residual", res, "<= 1e-14", res <= 1e-14)
    rep.add("q_max white", q_max(hd, "white"), "== 1.5", q_max(hd, "white") == 1.5)
    space, st = uniform_heterodimer_run()
    s = np.array([space.sample_barycenters(st["p"]), space.sample_barycenters(st["q"])])
    err = float(max(np.abs(s[0] - 0.3).max(), np.abs(s[1] - 1.5).max()))
    rep.add("uniform run reaches (0.3, 1.5) by T=25", err, "<= 1e-2", err <= 1e-2)
    spread = float(max(np.ptp(s[0]), np.ptp(s[1])))
    rep.add("uniform run stays uniform", spread, "<= 1e-8", spread <= 1e-8)
    aw = derive_alpha(hd, "white")
    rep.add("alpha white", aw, "== 0.9", aw == 0.9)
    ag = derive_alpha(hd, "grey")
    rep.add("alpha grey", ag, "~= 0.0986", abs(ag - 0.0986) < 5e-5)
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        msgs = alpha_consistency_warnings(hd, FKParams.defaults())
    rep.add("grey alpha conflict warned", msgs, "one warning naming grey",
            len(msgs) == 1 and "grey" in msgs[0] and len(w) == 1)
    return rep


def suite_conservation(n_steps=1000, dt=0.01, degree=3) -> Report:
    """Zero-reaction FK runs on an agglomerated anisotropic mesh conserve mass."""
    rep = Report("conservation")
    poly = agglomerate(unit_square_trimesh(10, alternate=True), 14, seed=1)
    m = FKMatter(0.02, 0.05, 0.0)
    field_ = coefficient_field_for(poly, FKParams(m, m))
    field_ = assembly.CoefficientField(field_.d_ext, field_.d_axn,
                                       np.tile([np.cos(1.0), np.sin(1.0)], (poly.n_elements, 1)), field_.rates)
    space = build_space(poly, degree)
    for solver in ("auto", "direct"):
        ops = build_operators(space, field_, "fk", solver=solver)
        c0 = project_initial_condition(space, lambda x, y: np.exp(-30 * ((x - 0.3) ** 2 + (y - 0.6) ** 2)))
        one = space.constant_one
        m0 = one @ (ops.M @ c0)
        st = integrate(ops, SimState.initial(c=c0), TimeGrid(dt, n_steps * dt))
        drift = abs(one @ (ops.M @ st["c"]) - m0) / abs(m0)
        rep.add(f"mass drift over {n_steps} steps ({solver})", drift, "<= 1e-8", drift <= 1e-8)
    return rep


def spatial_convergence(kinds=("fk", "heterodimer"), degrees=(1, 2, 3), ns=(4, 8, 16, 32)):
    meshes = [square_polymesh(n) for n in ns]
    return {(k, l): oracle.manufactured_run(k, meshes, l) for k in kinds for l in degrees}


def _smoothstep(x):
    return 3 * x**2 - 2 * x**3


def temporal_study(kind, dts=(0.04, 0.02, 0.01, 0.005), T=1.0, degree=3, n=4):
    """Self-convergence orders of one stepper on a smooth problem.

    The initial state is a cubic with vanishing normal derivative on the unit
    square, exactly representable for degree >= 3, so no stiff initial layer
    is excited.
    """
    poly = square_polymesh(n)
    space = build_space(poly, degree)
    if kind == "fk":
        m = FKMatter(0.01, 0.005, 0.9)
        params = FKParams(m, m)
    else:
        m = HeterodimerMatter(0.01, 0.005, 0.6, 1.0, 0.5, 0.3)
        params = HeterodimerParams(m, m)
    ops = build_operators(space, coefficient_field_for(poly, params), kind)
    x0 = project_initial_condition(space, lambda x, y: 0.3 + 0.1 * _smoothstep(x) + 0.1 * _smoothstep(y))
    sols = []
    for dt in dts:
        st = SimState.initial(c=x0) if kind == "fk" else SimState.initial(p=1.2 * space.constant_one, q=x0)
        st = integrate(ops, st, TimeGrid(dt, T))
        sols.append(np.concatenate([st.current[s] for s in sorted(st.current)]))
    nd = space.n_dofs

    def norm(v):
        return np.sqrt(sum(v[i:i + nd] @ (ops.M @ v[i:i + nd]) for i in range(0, len(v), nd)))
    return oracle.self_convergence_orders(sols, norm)


def suite_convergence(degrees=(1, 2, 3)) -> Report:
    rep = Report("convergence")
    for (kind, l), tab in spatial_convergence(degrees=degrees).items():
        for s, orders in tab.orders.items():
            rep.add(f"{kind} l={l} {s} L2 order", float(orders[-1]), f">= {l + 1 - 0.2}", orders[-1] >= l + 1 - 0.2)
    for kind in ("fk", "heterodimer"):
        orders, _ = temporal_study(kind)
        rep.add(f"{kind} temporal orders", orders.tolist(), "2.0 +- 0.1", bool(np.all(np.abs(orders - 2) <= 0.1)))
    return rep


# ---------------------------------------------------------------------------
# strip experiments

STRIP_LENGTH = 0.16
STRIP_WIDTH = 0.002


def _strip_seed(x, y):
    return 0.5 * (1.0 - np.tanh((x - 0.01) / 0.002))


def strip_run(kind, params, x0_funcs, *, n_elements=32, degree=3, dt=0.01, T=25.0, every=0.25):
    """Run one model on the strip; return barycenter samples of the tracked species."""
    poly = strip_polymesh(STRIP_LENGTH, STRIP_WIDTH, n_elements, refine=160 // n_elements)
    space = build_space(poly, degree)
    ops = build_operators(space, coefficient_field_for(poly, params), kind)
    st = SimState.initial(**{s: project_initial_condition(space, f) for s, f in x0_funcs.items()})
    tracked = "c" if kind == "fk" else "q"
    stride = int(round(every / dt))
    times, states = [0.0], [st[tracked].copy()]

    def cb(s):
        if s.step % stride == 0:
            times.append(s.time)
            states.append(s[tracked].copy())
    integrate(ops, st, TimeGrid(dt, T), cb)
    return post.barycenter_samples(space, times, states)


def suite_wavespeed(window=(10.0, 25.0)) -> Report:
    rep = Report("wavespeed")
    fk = FKParams.defaults().white
    m = FKMatter(fk.d_ext, 0.0, fk.alpha)
    series = strip_run("fk", FKParams(m, m), {"c": _strip_seed})
    speed = post.front_speed_estimate(series, 0.5, window=window)
    c_star = oracle.fisher_speed(m.alpha, m.d_ext)
    rep.add("analytic speed 2 sqrt(alpha d_ext)", c_star, "~= 5.37e-3", abs(c_star - 5.37e-3) < 5e-6)
    rel = abs(speed / c_star - 1)
    rep.add("DG front speed vs analytic", speed, f"within 10% of {c_star:.4e}", rel <= 0.10)
    fd = oracle.fd1d_fk(m.alpha, m.d_ext, STRIP_LENGTH, 320, lambda x: _strip_seed(x, 0.0), 0.01, 25.0,
                        sample_every=0.25)
    pos = oracle.front_positions(fd.x, fd.values["c"], 0.5)
    ok = (fd.times >= window[0]) & (fd.times <= window[1]) & np.isfinite(pos)
    fd_speed = float(np.polyfit(fd.times[ok], pos[ok], 1)[0])
    rel = abs(speed / fd_speed - 1)
    rep.add("DG front speed vs fd1d_fk", fd_speed, f"within 5% of DG {speed:.4e}", rel <= 0.05)
    return rep


def suite_ordering() -> Report:
    """FK against heterodimer on the strip with white-matter table values."""
    rep = Report("ordering")
    hd = HeterodimerParams.defaults().white
    fk = FKParams.defaults().white
    hdm = HeterodimerMatter(hd.d_ext, 0.0, hd.k0, hd.k12, hd.k1, hd.k1_tilde)
    fkm = FKMatter(fk.d_ext, 0.0, fk.alpha)
    qm = q_max(hdm)
    p_eq = equilibria_heterodimer(hdm)["healthy"][0]
    q_series = strip_run("heterodimer", HeterodimerParams(hdm, hdm),
                         {"p": lambda x, y: p_eq + 0 * x, "q": lambda x, y: 0.1 * qm * _strip_seed(x, y)})
    c_series = strip_run("fk", FKParams(fkm, fkm), {"c": lambda x, y: 0.1 * _strip_seed(x, y)})
    t_hd = post.activation_time(q_series, 1.2).times
    t_fk = post.activation_time(c_series, 0.8).times
    either = np.isfinite(t_hd) | np.isfinite(t_fk)
    frac = float(np.mean(t_fk[either] <= t_hd[either]))
    rep.add("activated points", int(either.sum()), "> 0", either.sum() > 0)
    rep.add("FK activates no later than heterodimer", frac, ">= 0.95", frac >= 0.95)
    diff = post.rescale_and_diff(c_series.values, q_series.values, qm)
    dmax = float(diff.max())
    rep.add("max rescaled difference c - q/q_max", dmax, "in [0.1, 0.3]", 0.1 <= dmax <= 0.3)
    return rep


def suite_dofs() -> Report:
    from .meshgen import brain_slice_trimesh

    rep = Report("dofs")
    tri = brain_slice_trimesh()
    rep.add("parent triangles", tri.n_triangles, "== 43402", tri.n_triangles == 43402)
    poly = agglomerate(tri, 534)
    rep.add("elements", poly.n_elements, "== 534", poly.n_elements == 534)
    n = build_space(poly, 6).n_dofs
    rep.add("scalar dofs (l=6)", n, "== 14952", n == 14952)
    rep.add("heterodimer unknowns", 2 * n, "== 29904", 2 * n == 29904)
    rep.add("printed scalar count 14452 flagged inconsistent", f"534 x 28 = {n}", "!= 14452", 14452 != n)
    return rep


def brain_run(kind, poly=None, overrides=()):
    """Full-size brain-slice run with default settings; activation summary per matter."""
    from .config import load_config
    from .mesh import MaterialLabel
    from .simulation import DEFAULT_THRESHOLD, prepare, run_simulation

    cfg = load_config(overrides=[f"model.kind={kind}", *overrides])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = run_simulation(cfg, prepared=prepare(cfg, poly))
    act = post.activation_time(res.samples, DEFAULT_THRESHOLD[kind])
    white = res.samples.labels == MaterialLabel.WHITE
    return {"failed": res.failed, "final_time": res.final.time,
            "white_fraction": act.fraction(white), "grey_fraction": act.fraction(~white),
            "white_mean": act.mean(white), "grey_mean": act.mean(~white), "poly": res.prepared.poly}


def suite_brain(kinds=("heterodimer", "fk")) -> Report:
    rep = Report("brain")
    poly = None
    for kind in kinds:
        out = brain_run(kind, poly)
        poly = out["poly"]
        rep.add(f"{kind} run completes to T=25", out["final_time"], "== 25 without failure",
                out["failed"] is None and abs(out["final_time"] - 25.0) < 1e-9)
        rep.add(f"{kind} activated white matter", out["white_fraction"], ">= 0.99", out["white_fraction"] >= 0.99)
        rep.add(f"{kind} grey mean activation after white", [out["white_mean"], out["grey_mean"]],
                "grey > white", out["grey_mean"] > out["white_mean"])
    return rep


SUITES = {
    "matrices": suite_matrices,
    "equilibria": suite_equilibria,
    "conservation": suite_conservation,
    "convergence": suite_convergence,
    "wavespeed": suite_wavespeed,
    "ordering": suite_ordering,
    "dofs": suite_dofs,
    "brain": suite_brain,
}
