"""FK against heterodimer on a homogeneous white-matter strip.

Measures the FK front speed against 2 sqrt(alpha d) and the finite-difference
oracle, and the activation-time ordering and rescaled difference c - q/q_max.
"""

import argparse
from pathlib import Path

import numpy as np

from polyprion import oracle, post, verify
from polyprion.models import FKMatter, FKParams, HeterodimerMatter, HeterodimerParams, equilibria_heterodimer, q_max


def fronts(series, thr):
    return np.array([post.front_position(series.points[:, 0], v, thr) for v in series.values])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/strip")
    ap.add_argument("--elements", type=int, default=32)
    ap.add_argument("--degree", type=int, default=3)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    hd = HeterodimerParams.defaults().white
    fk = FKParams.defaults().white
    hdm = HeterodimerMatter(hd.d_ext, 0.0, hd.k0, hd.k12, hd.k1, hd.k1_tilde)
    fkm = FKMatter(fk.d_ext, 0.0, fk.alpha)
    qm = q_max(hdm)
    p_eq = equilibria_heterodimer(hdm)["healthy"][0]
    seed = verify._strip_seed
    kw = dict(n_elements=args.elements, degree=args.degree)
    c = verify.strip_run("fk", FKParams(fkm, fkm), {"c": lambda x, y: 0.1 * seed(x, y)}, **kw)
    q = verify.strip_run("heterodimer", HeterodimerParams(hdm, hdm),
                         {"p": lambda x, y: p_eq + 0 * x, "q": lambda x, y: 0.1 * qm * seed(x, y)}, **kw)
    c_star = oracle.fisher_speed(fkm.alpha, fkm.d_ext)
    s_fk = post.front_speed_estimate(c, 0.5, window=(10, 25))
    s_hd = post.front_speed_estimate(q.scaled(1 / qm), 0.5, window=(10, 25))
    print(f"Fisher speed {c_star:.4e}; FK {s_fk:.4e} ({s_fk / c_star:.3f}); heterodimer {s_hd:.4e}")

    t_fk = post.activation_time(c, 0.8).times
    t_hd = post.activation_time(q, 1.2).times
    either = np.isfinite(t_fk) | np.isfinite(t_hd)
    diff = post.rescale_and_diff(c.values, q.values, qm)
    print(f"FK not later at {100 * np.mean(t_fk[either] <= t_hd[either]):.1f}% of activated points; "
          f"max c - q/q_max = {diff.max():.3f} at t = {c.times[diff.max(axis=1).argmax()]:.2f}")

    log = post.ObservableLog()
    pf, ph = fronts(c, 0.5), fronts(q.scaled(1 / qm), 0.5)
    for t, a, b, d in zip(c.times, pf, ph, diff.max(axis=1)):
        log.append({"time": t, "front_fk": a, "front_heterodimer": b, "max_rescaled_difference": d})
    post.export_csv(log, out / "fronts.csv")
    post.export_svg_lineplot(out / "fronts.svg", c.times, {"FK": pf, "heterodimer": ph},
                             ylabel="front position (m)", title="half-level front on the strip")
    post.export_svg_lineplot(out / "difference.svg", c.times, {"max c - q/q_max": diff.max(axis=1)},
                             ylabel="rescaled difference", title="FK minus heterodimer")


if __name__ == "__main__":
    main()
