"""How fast the two-node fusion output approaches its large-amplitude limit.

For each |alpha_ss| the exact no-photon map is applied node by node and the
result compared with the limiting fused state. With ``--lindblad`` one node is
also integrated in time and compared with its analytic steady state.
"""
import argparse
import time

from purecav import fusion
from purecav.acceptance import node_lindblad_distance
from purecav.qcore import trace_distance
from purecav.states import fused_state_appB


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--f", type=float, default=0.75)
    ap.add_argument("--alphas", default="1,1.5,2,2.5,3,3.5,4,5")
    ap.add_argument("--lindblad", action="store_true")
    args = ap.parse_args()

    target = fused_state_appB(args.f)
    print("alpha  distance    P(no photon)  limit")
    for a in (float(s) for s in args.alphas.split(",")):
        model = fusion.LindbladModel(a / 2, 1.0, n_max=1)
        state, p = fusion.sequential_fusion(args.f, model)
        print(f"{a:5.2f}  {trace_distance(state, target):.3e}   {p:.6f}      {fusion.limit_probability(args.f):.6f}")

    if args.lindblad:
        for a in (2.0, 3.0):
            t0 = time.perf_counter()
            d, r = node_lindblad_distance(a, args.f)
            print(f"node integration |alpha| = {a:g}: distance {d:.2e}, residual {r:.1e}, "
                  f"{time.perf_counter() - t0:.1f} s, n_max = {fusion.default_n_max(a)}")


if __name__ == "__main__":
    main()
