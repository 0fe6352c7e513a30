"""Full versus effective dynamics along a detuning ladder, both reductions."""
import argparse
import warnings

from purecav import physlayer


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ladder", default="1,2,4")
    ap.add_argument("--which", default="A,C")
    args = ap.parse_args()
    mults = [float(s) for s in args.ladder.split(",")]
    for which in args.which.split(","):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            reps = physlayer.ladder(which, mults)
        print(f"model {which}")
        print("  mult  trace_distance  max P(e)   gate/run time")
        for r in reps:
            print(f"  {r.multiplier:4g}  {r.trace_distance:.3e}      {r.excited_population_max:.2e}  {r.gate_time:.4g}")
        for w in caught:
            print(f"  warning: {w.message}")


if __name__ == "__main__":
    main()
