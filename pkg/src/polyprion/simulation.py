"""Config-driven simulation runs and their on-disk outputs."""

from __future__ import annotations

import json
import logging
import platform
import time as _time
import warnings
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import scipy

from . import __version__, post
from .assembly import PenaltySpec
from .config import SimulationConfig, dump_config
from .femspace import DGSpace, build_space
from .mesh import (MaterialLabel, PolyMesh, agglomerate, identity_polymesh, load_partition, load_trimesh,
                   partition_to_polymesh, summary)
from .meshgen import brain_slice_trimesh, cell_partition, entorhinal_seed, unit_square_trimesh
from .models import (HeterodimerParams, NumericalError, SimState, SystemOperators, TimeGrid,
                     alpha_consistency_warnings, build_operators, coefficient_field_for, derive_alpha,
                     equilibria_heterodimer, project_initial_condition, q_max, step)

log = logging.getLogger(__name__)

DEVIATION_FLAGS = {
    "fq_uses_q_previous": "explicit half of the q equation acts on Q^{n-1}",
    "first_step_history": "x^{-1} := x^0 in the first extrapolation",
    "q_max_diseased_equilibrium": "q_max = k0/k1_tilde - k1/k12",
    "synthetic_mesh_when_builtin": "builtin:brain is a synthetic slice, not the segmented MRI mesh",
}

DEFAULT_THRESHOLD = {"heterodimer": 1.2, "fk": 0.8}
TRACKED = {"heterodimer": "q", "fk": "c"}


def load_mesh(cfg: SimulationConfig) -> PolyMesh:
    mc = cfg.mesh
    spec = mc.trimesh
    if spec == "builtin:brain":
        tri = brain_slice_trimesh()
    elif spec.startswith("builtin:square:"):
        tri = unit_square_trimesh(int(spec.rsplit(":", 1)[1]))
    else:
        tri = load_trimesh(spec)
    if mc.partition == "cells":
        return partition_to_polymesh(tri, cell_partition(tri))
    if mc.partition:
        return load_partition(tri, mc.partition)
    if mc.n_target is None or mc.n_target >= tri.n_triangles:
        return identity_polymesh(tri)
    return agglomerate(tri, mc.n_target, preserve_labels=mc.preserve_labels, seed=mc.seed)


def seed_profile(center, radius, amplitude, width=None):
    """Smooth disc: amplitude inside `radius`, tanh edge of the given width."""
    cx, cy = center
    w = radius / 4 if width is None else width

    def f(x, y):
        r = np.hypot(x - cx, y - cy)
        return amplitude * 0.5 * (1.0 - np.tanh((r - radius) / w))
    return f


def initial_state(cfg: SimulationConfig, space: DGSpace, params) -> SimState:
    ini = cfg.initial
    center = ini.seed_center or entorhinal_seed()
    kind = cfg.model.kind
    if kind == "heterodimer":
        amp = 0.1 * q_max(params, "white") if ini.seed_amplitude is None else ini.seed_amplitude
    else:
        amp = 0.1 if ini.seed_amplitude is None else ini.seed_amplitude
    seed = seed_profile(center, ini.seed_radius, amp, ini.seed_width)
    tracked = project_initial_condition(space, lambda x, y: ini.q0 + seed(x, y))
    if kind == "fk":
        return SimState.initial(c=tracked)
    if ini.p0 == "healthy":
        one = space.constant_one.reshape(space.n_elements, -1)
        lab = space.poly.elem_label
        pw = equilibria_heterodimer(params, "white")["healthy"][0]
        pg = equilibria_heterodimer(params, "grey")["healthy"][0]
        p = (one * np.where(lab == MaterialLabel.WHITE, pw, pg)[:, None]).ravel()
    else:
        p = ini.p0 * space.constant_one
    return SimState.initial(p=p, q=tracked)


@dataclass
class Prepared:
    cfg: SimulationConfig
    poly: PolyMesh
    space: DGSpace
    ops: SystemOperators
    params: object
    state: SimState


def prepare(cfg: SimulationConfig, poly: PolyMesh | None = None) -> Prepared:
    params = cfg.params()
    if cfg.model.kind == "fk":
        alpha_consistency_warnings(HeterodimerParams.defaults(), params)
    poly = poly if poly is not None else load_mesh(cfg)
    space = build_space(poly, cfg.model.degree)
    field = coefficient_field_for(poly, params)
    ops = build_operators(space, field, cfg.model.kind, PenaltySpec(cfg.model.eta0),
                          solver=cfg.solver.method, tol=cfg.solver.tol)
    return Prepared(cfg, poly, space, ops, params, initial_state(cfg, space, params))


def q_max_samples(poly: PolyMesh, params):
    """Per-parent-triangle q_max (by the triangle's element label)."""
    lab = poly.elem_label[poly.elem_of_tri]
    return np.where(lab == MaterialLabel.WHITE, q_max(params, "white"), q_max(params, "grey"))


@dataclass
class SimulationResult:
    checkpoint_times: list
    checkpoints: list
    samples: post.SampleSeries
    log: post.ObservableLog
    final: SimState
    prepared: Prepared
    failed: str | None = None


def _steps_of(times, dt):
    return sorted({int(round(t / dt)) for t in times})


def run_simulation(cfg: SimulationConfig, out_dir=None, prepared: Prepared | None = None,
                   progress=None) -> SimulationResult:
    """Integrate to T, recording checkpoints, barycenter samples and a per-step log.

    When `out_dir` is given the run directory is written (also on failure,
    together with a FAILED marker) and NumericalError is re-raised.
    """
    pr = prepared or prepare(cfg)
    space, ops = pr.space, pr.ops
    kind = cfg.model.kind
    tracked = TRACKED[kind]
    dt = cfg.time.dt
    grid = TimeGrid(dt, cfg.time.T)
    threshold = cfg.output.threshold if cfg.output.threshold is not None else DEFAULT_THRESHOLD[kind]
    ck_steps = set(_steps_of(cfg.time.checkpoint_times(), dt))
    stride = int(round(cfg.time.sample_interval / dt))
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "FAILED").unlink(missing_ok=True)
        (out / "resolved.ini").write_text(dump_config(cfg))

    state = pr.state
    obs = post.ObservableLog()
    ck_t, ck = [], []
    s_t, s_v = [], []

    def record(st: SimState):
        obs.append(post.observables(space, ops.M, st.time, st.current, {tracked: threshold}))
        if st.step in ck_steps:
            ck_t.append(st.time)
            ck.append({k: v.copy() for k, v in st.current.items()})
        if st.step % stride == 0 or st.step == grid.n_steps:
            s_t.append(st.time)
            s_v.append(space.sample_barycenters(st.current[tracked]))

    record(state)
    failed = None
    t0 = _time.perf_counter()
    try:
        for n in range(1, grid.n_steps + 1):
            state = step(ops, state, dt)
            record(state)
            if progress is not None:
                progress(state)
            if n % 100 == 0:
                log.info("step %d/%d t=%.2f %s_max=%.4f (%.1fs)", n, grid.n_steps, state.time, tracked,
                         obs.rows[-1][obs.columns.index(f"{tracked}_max")], _time.perf_counter() - t0)
    except NumericalError as exc:
        failed = str(exc)
        log.error("simulation aborted: %s", exc)

    tri = space.poly.tri
    samples = post.SampleSeries(np.array(s_t), np.array(s_v).reshape(len(s_t), tri.n_triangles),
                                tri.centroids, tri.areas, tri.tri_label.copy())
    result = SimulationResult(ck_t, ck, samples, obs, state, pr, failed)
    if out is not None:
        write_outputs(result, out)
        if failed:
            np.savez(out / "failure_state.npz", time=state.time, step=state.step, **state.current)
            (out / "FAILED").write_text(failed + "\n")
            raise NumericalError(failed)
    return result


def metadata(pr: Prepared) -> dict:
    cfg = pr.cfg
    params = pr.params
    meta = {
        "model": cfg.model.kind,
        "degree": cfg.model.degree,
        "n_dofs": pr.space.n_dofs,
        "n_unknowns": pr.space.n_dofs * (2 if cfg.model.kind == "heterodimer" else 1),
        "parameters": asdict(params),
        "mesh": summary(pr.poly),
        "deviation_flags": DEVIATION_FLAGS if cfg.mesh.trimesh == "builtin:brain" else
        {k: v for k, v in DEVIATION_FLAGS.items() if k != "synthetic_mesh_when_builtin"},
        "versions": {"polyprion": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
        "tracked_species": TRACKED[cfg.model.kind],
        "threshold": cfg.output.threshold if cfg.output.threshold is not None else DEFAULT_THRESHOLD[cfg.model.kind],
    }
    if cfg.model.kind == "heterodimer":
        meta["q_max"] = {m: q_max(params, m) for m in ("white", "grey")}
        meta["derived_alpha"] = {m: derive_alpha(params, m) for m in ("white", "grey")}
    else:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            meta["alpha_warnings"] = alpha_consistency_warnings(HeterodimerParams.defaults(), params)
    return meta


def write_outputs(res: SimulationResult, out: Path):
    pr = res.prepared
    cfg = pr.cfg
    space = pr.space
    (out / "metadata.json").write_text(json.dumps(metadata(pr), indent=2, sort_keys=True, default=str) + "\n")
    post.export_csv(res.log, out / "log.csv")
    if cfg.output.svg and len(res.log):
        tr = TRACKED[cfg.model.kind]
        post.export_svg_lineplot(out / f"{tr}_range.svg", res.log.column("time"),
                                 {f"{tr} min": res.log.column(f"{tr}_min"), f"{tr} max": res.log.column(f"{tr}_max")},
                                 ylabel=tr, title=f"{cfg.model.kind}: {tr} range")
        post.export_svg_lineplot(out / "activated_fraction.svg", res.log.column("time"),
                                 {"activated area": res.log.column(f"{tr}_active")}, ylabel="fraction",
                                 title=f"{cfg.model.kind}: activated area fraction")
    if cfg.output.vtk:
        for t, fields in zip(res.checkpoint_times, res.checkpoints):
            post.export_vtk(out / f"state_t{t:07.3f}.vtk", space, fields, title=f"{cfg.model.kind} t={t!r}")
    ck = {f"{k}_{i}": v for i, f in enumerate(res.checkpoints) for k, v in f.items()}
    np.savez(out / "states.npz", times=np.array(res.checkpoint_times), **ck)
    s = res.samples
    extra = {}
    if cfg.model.kind == "heterodimer":
        extra["q_max"] = q_max_samples(pr.poly, pr.params)
    np.savez(out / "samples.npz", times=s.times, values=s.values, points=s.points, weights=s.weights,
             labels=s.labels, species=np.array(TRACKED[cfg.model.kind]), model=np.array(cfg.model.kind), **extra)


def load_samples(run_dir):
    """(SampleSeries, metadata dict, q_max per sample or None) of a run directory."""
    run_dir = Path(run_dir)
    with np.load(run_dir / "samples.npz") as z:
        series = post.SampleSeries(z["times"], z["values"], z["points"], z["weights"], z["labels"])
        qm = z["q_max"] if "q_max" in z.files else None
    meta = json.loads((run_dir / "metadata.json").read_text())
    return series, meta, qm
