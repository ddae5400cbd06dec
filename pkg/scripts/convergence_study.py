"""Spatial (manufactured) and temporal (self-convergence) rates for both models.

species_index: 0 c, 1 p, 2 q.

Writes spatial.csv, temporal.csv and log-log SVG plots to --out.
"""

import argparse
from pathlib import Path

import numpy as np

from polyprion import post, verify


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/convergence")
    ap.add_argument("--degrees", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--ns", type=int, nargs="+", default=[4, 8, 16, 32])
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    log = post.ObservableLog()
    curves = {}
    for (kind, l), tab in verify.spatial_convergence(degrees=args.degrees, ns=args.ns).items():
        for s, err in tab.errors.items():
            curves[f"{kind} {s} l={l}"] = np.log10(err)
            for i, (h, e) in enumerate(zip(tab.h, err)):
                order = tab.orders[s][i - 1] if i else np.nan
                log.append({"is_fk": kind == "fk", "degree": l, "species_index": "cpq".index(s), "h": h, "l2_error": e,
                            "order": order})
            print(f"{kind:12s} l={l} {s}: errors {np.array2string(err, precision=3)} orders "
                  f"{np.array2string(tab.orders[s], precision=2)}")
    post.export_csv(log, out / "spatial.csv")
    h = np.log10(tab.h)
    post.export_svg_lineplot(out / "spatial.svg", h, curves, xlabel="log10 h", ylabel="log10 L2 error",
                             title="manufactured solutions")

    dts = (0.04, 0.02, 0.01, 0.005)
    tlog = post.ObservableLog()
    tcurves = {}
    for kind in ("fk", "heterodimer"):
        orders, diffs = verify.temporal_study(kind, dts=dts)
        tcurves[kind] = np.log10(diffs)
        for dt, d in zip(dts[1:], diffs):
            tlog.append({"is_fk": kind == "fk", "dt": dt, "successive_difference": d})
        print(f"{kind:12s} temporal orders {np.array2string(orders, precision=3)}")
    post.export_csv(tlog, out / "temporal.csv")
    post.export_svg_lineplot(out / "temporal.svg", np.log10(dts[1:]), tcurves, xlabel="log10 dt",
                             ylabel="log10 successive difference", title="Crank-Nicolson self-convergence")


if __name__ == "__main__":
    main()
