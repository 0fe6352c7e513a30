"""Write fidelity-gain curves for both schemes on a fine grid of f.

Output: one CSV with f, fhat_original_n and fhat_modified_n for n = 1..3,
plus the initialised chain (F3, G3). Plot it with any tool you like.
"""
import argparse
import csv

import numpy as np

from purecav import purify


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="fidelity_curves.csv")
    ap.add_argument("--points", type=int, default=91)
    ap.add_argument("--rounds", type=int, default=3)
    args = ap.parse_args()

    fs = np.linspace(0.55, 1.0, args.points)
    header = ["f"]
    for scheme in purify.SCHEMES:
        header += [f"fhat_{scheme}_{n}" for n in range(1, args.rounds + 1)]
    header += ["init_F3", "init_G3"]
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for f in fs:
            row = [f]
            for scheme in purify.SCHEMES:
                row += [purify.fhat(scheme, f, n) for n in range(1, args.rounds + 1)]
            row += [purify.init_F3_closed_form(f), purify.init_G3_closed_form(f)]
            w.writerow([f"{x:.12g}" for x in row])
    print(f"wrote {len(fs)} rows to {args.out}")


if __name__ == "__main__":
    main()
