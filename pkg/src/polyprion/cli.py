"""Command-line entry point: agglomerate, run, compare, verify.

Exit codes: 0 ok, 1 verification failure, 2 usage or input error,
3 numerical failure.  POLYPRION_LOG sets the log level (default WARNING).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import warnings
from contextlib import nullcontext
from pathlib import Path

import numpy as np

from . import post
from .config import ConfigError, load_config
from .mesh import MaterialLabel, MeshError, summary, write_partition, write_trimesh
from .models import NumericalError

log = logging.getLogger("polyprion")

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _threads(n):
    if not n:
        return nullcontext()
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=n)


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=str) + "\n")


def cmd_agglomerate(args):
    overrides = list(args.override)
    if args.mesh:
        overrides.append(f"mesh.trimesh={args.mesh}")
    if args.partition:
        overrides.append(f"mesh.partition={args.partition}")
    if args.n_target is not None:
        overrides.append(f"mesh.n_target={args.n_target}")
    if args.seed is not None:
        overrides.append(f"mesh.seed={args.seed}")
    if args.no_preserve_labels:
        overrides.append("mesh.preserve_labels=false")
    cfg = load_config(args.config, overrides)
    from .simulation import load_mesh

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        poly = load_mesh(cfg)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.mesh.trimesh.startswith("builtin:"):
        write_trimesh(poly.tri, out / "mesh.tri")
    write_partition(poly, out / "mesh.part")
    info = summary(poly)
    info["advisory"] = int(bool(info["advisories"]))
    _write_json(out / "summary.json", info)
    print(f"elements: {info['n_elements']} (white {info['n_white']}, grey {info['n_grey']})")
    print(f"label purity: {'pure' if info['labels_pure'] else 'mixed'}")
    print(f"h_K: min {info['h_min']:.6g} max {info['h_max']:.6g}")
    if info["advisories"]:
        print(f"advisories: {len(info['advisories'])}")
    return EXIT_OK


def cmd_run(args):
    overrides = list(args.override)
    if args.out:
        overrides.append(f"output.dir={args.out}")
    if args.threads is not None:
        overrides.append(f"solver.threads={args.threads}")
    cfg = load_config(args.config, overrides)
    cfg.output.dir = str(Path(cfg.output.dir).resolve())
    from .simulation import run_simulation

    with _threads(cfg.threads()):
        res = run_simulation(cfg, out_dir=cfg.output.dir)
    last = res.log.rows[-1]
    print(f"run complete: {len(res.log) - 1} steps, t={last[0]!r}, outputs in {cfg.output.dir}")
    return EXIT_OK


def _load_run(run_dir):
    """Raw tracked samples, metadata and the per-sample rescaling (q_max or 1)."""
    from .simulation import load_samples

    series, meta, qm = load_samples(run_dir)
    return series, meta, (qm if qm is not None else np.ones(series.values.shape[1]))


def cmd_compare(args):
    a, meta_a, qa = _load_run(args.run_a)
    b, meta_b, qb = _load_run(args.run_b)
    if a.points.shape != b.points.shape or not np.array_equal(a.points, b.points):
        raise UsageError("runs were computed on different meshes")
    common, ia, ib = np.intersect1d(np.round(a.times, 9), np.round(b.times, 9), return_indices=True)
    if not len(common):
        raise UsageError("runs share no sample times")
    thr_a = args.threshold_a if args.threshold_a is not None else meta_a["threshold"]
    thr_b = args.threshold_b if args.threshold_b is not None else meta_b["threshold"]
    act_a = post.activation_time(a, thr_a)
    act_b = post.activation_time(b, thr_b)
    # c - q/q_max generalised: each run's tracked field divided by its own scale
    diff = a.values[ia] / qa - b.values[ib] / qb
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "activation.csv", "w") as fh:
        fh.write("x,y,label,t_a,t_b\n")
        for (x, y), lab, ta, tb in zip(a.points.tolist(), a.labels.tolist(), act_a.times.tolist(),
                                       act_b.times.tolist()):
            fh.write(f"{x!r},{y!r},{int(lab)},{ta!r},{tb!r}\n")
    np.savez(out / "difference.npz", times=common, diff=diff, points=a.points)
    white = a.labels == MaterialLabel.WHITE
    either = act_a.activated() | act_b.activated()
    stats = {
        "models": [meta_a["model"], meta_b["model"]],
        "thresholds": [thr_a, thr_b],
        "max_abs_diff": float(np.abs(diff).max()),
        "max_diff": float(diff.max()),
        "min_diff": float(diff.min()),
        "fraction_a_not_later": float(np.mean(act_a.times[either] <= act_b.times[either])) if either.any() else 1.0,
        "mean_activation": {
            "a": {"white": act_a.mean(white), "grey": act_a.mean(~white)},
            "b": {"white": act_b.mean(white), "grey": act_b.mean(~white)},
        },
        "activated_fraction": {
            "a": {"white": act_a.fraction(white), "grey": act_a.fraction(~white)},
            "b": {"white": act_b.fraction(white), "grey": act_b.fraction(~white)},
        },
    }
    _write_json(out / "summary.json", stats)
    post.export_svg_lineplot(out / "difference.svg", common,
                             {"max diff": diff.max(axis=1), "min diff": diff.min(axis=1)},
                             ylabel="rescaled difference", title="run a - run b")
    print(f"max |diff| = {stats['max_abs_diff']:.4g}; a not later than b at "
          f"{100 * stats['fraction_a_not_later']:.1f}% of activated points")
    return EXIT_OK


def cmd_verify(args):
    from .verify import SUITES

    names = args.suites or ["matrices", "equilibria", "conservation"]
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise UsageError(f"unknown suite(s) {', '.join(unknown)}; choose from {', '.join(SUITES)}")
    with _threads(args.threads):
        reports = [SUITES[n]().to_dict() for n in names]
    ok = all(r["passed"] for r in reports)
    for r in reports:
        for c in r["checks"]:
            print(f"{'PASS' if c['passed'] else 'FAIL'} {r['suite']}: {c['name']} = {c['value']} ({c['target']})")
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        _write_json(Path(args.out) / "verify.json", {"passed": ok, "reports": reports})
    return EXIT_OK if ok else EXIT_VERIFY


def build_parser():
    p = argparse.ArgumentParser(prog="polyprion", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_default=None):
        sp.add_argument("--config", type=str, default=None, help="simulation config file")
        sp.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                        help="section.key=value, repeatable; wins over the file")
        sp.add_argument("--threads", type=int, default=None, help="thread count for numeric kernels")
        sp.add_argument("--out", type=str, default=out_default, help="output directory")

    a = sub.add_parser("agglomerate", help="build a polygonal mesh and write its partition")
    common(a, "mesh_out")
    a.add_argument("--mesh", help="tri mesh file or builtin:brain / builtin:square:N")
    a.add_argument("--partition", help="partition file, or 'cells'")
    a.add_argument("--n-target", type=int)
    a.add_argument("--seed", type=int)
    a.add_argument("--no-preserve-labels", action="store_true")
    a.set_defaults(func=cmd_agglomerate)

    r = sub.add_parser("run", help="run a simulation from a config file")
    common(r)
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="activation times and rescaled differences of two runs")
    common(c, "compare_out")
    c.add_argument("run_a")
    c.add_argument("run_b")
    c.add_argument("--threshold-a", type=float)
    c.add_argument("--threshold-b", type=float)
    c.set_defaults(func=cmd_compare)

    v = sub.add_parser("verify", help="run verification suites")
    common(v)
    v.add_argument("suites", nargs="*", help="matrices, equilibria, conservation, convergence, wavespeed, ...")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None):
    level = os.environ.get("POLYPRION_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, MeshError, FileNotFoundError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
