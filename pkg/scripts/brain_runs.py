"""Both models on the synthetic brain slice, then an activation-time comparison.

Equivalent to two `polyprion run` calls and one `polyprion compare`; the
agglomerated mesh is built once and shared.
"""

import argparse
import logging
from pathlib import Path

from polyprion import cli, post
from polyprion.config import load_config
from polyprion.mesh import MaterialLabel
from polyprion.simulation import DEFAULT_THRESHOLD, prepare, run_simulation

HERE = Path(__file__).resolve().parent.parent / "configs"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/brain")
    ap.add_argument("--T", type=float, default=25.0)
    ap.add_argument("--override", action="append", default=[])
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    out = Path(args.out)
    poly = None
    for kind in ("heterodimer", "fk"):
        cfg = load_config(HERE / f"brain_{kind}.ini", [f"time.T={args.T}", *args.override])
        pr = prepare(cfg, poly)
        poly = pr.poly
        res = run_simulation(cfg, out_dir=out / kind, prepared=pr)
        act = post.activation_time(res.samples, DEFAULT_THRESHOLD[kind])
        white = res.samples.labels == MaterialLabel.WHITE
        print(f"{kind}: activated white {act.fraction(white):.3f}, grey {act.fraction(~white):.3f}; "
              f"mean activation white {act.mean(white):.2f}, grey {act.mean(~white):.2f}")
    cli.main(["compare", str(out / "fk"), str(out / "heterodimer"), "--out", str(out / "compare")])


if __name__ == "__main__":
    main()
