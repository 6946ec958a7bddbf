"""How tight is the distance bound (d/4) I_N?

Part one: LP maximum of the distance over the nonsignaling polytope for a grid
of I_N caps. Part two: the smallest slack seen over a corpus of sampled boxes.
"""

import argparse
import csv
from pathlib import Path

import numpy as np

from chainbell.nonsignaling import lp_curve, sample_nonsignaling, theorem1_check

LP_CASES = [(2, 2, 1), (2, 2, 2), (2, 3, 2), (3, 2, 1)]


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--points", type=int, default=9)
    p.add_argument("--boxes", type=int, default=1000)
    p.add_argument("--out", default="results")
    args = p.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "lp_curve.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["d", "N", "z", "i_cap", "max_delta", "bound"])
        for d, n, z in LP_CASES:
            caps = np.linspace(0.0, n * (d - 1), args.points)
            for cap, delta, bound in lp_curve(d, n, z, caps):
                w.writerow([d, n, z, repr(float(cap)), repr(delta), repr(bound)])
            print(f"LP curve d={d} N={n} z={z} done")

    combos = [(d, n, z) for d in (2, 3) for n in (2, 3) for z in (1, 2, 3)]
    slack = {c: np.inf for c in combos}
    for seed in range(args.boxes):
        c = combos[seed % len(combos)]
        box = sample_nonsignaling(*c, seed=seed)
        slack[c] = min(slack[c], min(r.slack for r in theorem1_check(box)))
    for c, s in slack.items():
        print(f"d={c[0]} N={c[1]} z={c[2]}: smallest slack {s:.3e}")


if __name__ == "__main__":
    main()
