"""Command-line entry point: ``purecav <subcommand> [flags]``.

Exit codes: 0 success, 1 a tolerance or assertion check failed, 2 usage error.
"""
from __future__ import annotations

import argparse
import os
import sys
import warnings

import numpy as np

from . import acceptance, fusion, physlayer, resources
from .config import ConfigError, env_overrides, normalize_key, parse_bool, read_config
from .qcore import trace_distance
from .states import fused_state_appB
from .sweep import SweepConfig, fmt, write_sweep

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def seed_type(text: str) -> int:
    try:
        v = int(text, 10)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be a decimal integer, got {text!r}")
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def float_list(text: str) -> list[float]:
    items = [s for s in text.replace(" ", "").split(",") if s]
    try:
        return [float(s) for s in items]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=None, help="write CSV output to this path")
    common.add_argument("--seed", type=seed_type, default=0, help="RNG seed (unsigned 64-bit decimal)")
    common.add_argument("--config", default=None, help="flat key=value file with flag defaults")

    parser = argparse.ArgumentParser(prog="purecav", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    p = sub.add_parser("sweep", parents=[common], help="fidelity after each round over a grid of f")
    p.add_argument("--scheme", choices=("original", "modified"), default="modified")
    p.add_argument("--f-min", type=float, default=0.55)
    p.add_argument("--f-max", type=float, default=1.0)
    p.add_argument("--f-step", type=float, default=0.05)
    p.add_argument("--rounds", type=int, default=3)
    p.add_argument("--n", type=int, default=0, help="gate schedule index")
    p.add_argument("--init", action="store_true", help="start from the initialisation round")
    subs["sweep"] = p

    p = sub.add_parser("fusion", parents=[common], help="fusion block report against the limiting fused state")
    p.add_argument("--j2", type=float, default=2.0)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--f", type=float, default=0.75)
    p.add_argument("--t-final", type=float, default=None, help="integration time (default 20/kappa)")
    p.add_argument("--method", choices=("closed", "lindblad"), default="closed")
    p.add_argument("--min-ratio", type=float, default=1.0, help="strong-coupling guard on j2/kappa")
    p.add_argument("--tol", type=float, default=None, help="fail if the trace distance exceeds this")
    subs["fusion"] = p

    p = sub.add_parser("verify-appendix", parents=[common], help="full vs effective Hamiltonian ladder")
    p.add_argument("--which", choices=("A", "C", "a", "c"), default="C")
    p.add_argument("--ladder", type=float_list, default="1,2,4")
    p.add_argument("--g", type=float, default=None)
    p.add_argument("--omega", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--delta-l", type=float, default=None)
    p.add_argument("--n-max", type=int, default=None)
    subs["verify-appendix"] = p

    p = sub.add_parser("resources", parents=[common], help="expected temporary pairs per successful chain")
    p.add_argument("--f", type=float, default=0.8)
    p.add_argument("--rounds", type=int, default=4, help="stages in the chain, initialisation round included")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--scheme", choices=("original", "modified"), default="modified")
    p.add_argument("--restart-from", choices=resources.POLICIES, default="init")
    p.add_argument("--fusion-alpha", type=float, default=None, help="enable fusion failures at this |alpha_ss|")
    p.add_argument("--force-p", type=float, default=None, help="debug: force every success probability")
    p.add_argument("--n", type=int, default=0)
    subs["resources"] = p

    p = sub.add_parser("selftest", parents=[common], help="run the acceptance checks")
    p.add_argument("--only", type=str, default="", help="comma-separated criterion numbers")
    subs["selftest"] = p
    return parser, subs


def _apply_overrides(parser, subs, argv) -> argparse.Namespace:
    pre, _ = parser.parse_known_args(argv)
    sub = subs[pre.command]
    actions = {a.dest: a for a in sub._actions if a.dest != "help"}
    all_dests = {a.dest for s in subs.values() for a in s._actions}

    layers = []
    cfg_path = pre.config or os.environ.get("PURECAV_CONFIG")
    if cfg_path:
        file_values = read_config(cfg_path)
        unknown = sorted(k for k in file_values if k not in all_dests)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        layers.append(file_values)
    layers.append(env_overrides())

    defaults = {}
    for layer in layers:
        for key, value in layer.items():
            key = normalize_key(key)
            action = actions.get(key)
            if action is None or key == "config":
                continue
            if action.nargs == 0:
                defaults[key] = parse_bool(value)
            elif action.type is not None:
                try:
                    defaults[key] = action.type(value)
                except (argparse.ArgumentTypeError, ValueError) as exc:
                    raise ConfigError(f"bad value for {key}: {exc}")
            else:
                defaults[key] = value
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_sweep(args) -> int:
    try:
        cfg = SweepConfig(args.scheme, args.f_min, args.f_max, args.f_step, args.rounds, args.n, args.init, args.out, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc))
    text = write_sweep(cfg)
    if not args.out:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_fusion(args) -> int:
    if not (0.5 < args.f <= 1.0):
        raise UsageError("f must lie in (0.5, 1]")
    if args.kappa <= 0 or args.j2 <= 0:
        raise UsageError("j2 and kappa must be positive")
    model = fusion.LindbladModel(args.j2, args.kappa, min_ratio=args.min_ratio)
    if not model.strong_coupling:
        print(
            f"warning: strong-coupling assumption violated (j2/kappa = {model.ratio:.4g} < {args.min_ratio:g})",
            file=sys.stderr,
        )
    state, prob = fusion.sequential_fusion(args.f, model, method=args.method, t_final=args.t_final)
    dist = trace_distance(state, fused_state_appB(args.f))
    lines = [
        f"# purecav fusion j2={args.j2:g} kappa={args.kappa:g} f={args.f:g} method={args.method} seed={args.seed}",
        "alpha_abs,no_photon_probability,trace_distance,limit_probability",
        ",".join(fmt(v) for v in (abs(model.alpha_ss), prob, dist, fusion.limit_probability(args.f))),
    ]
    text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    if args.out:
        print(f"|alpha_ss| = {abs(model.alpha_ss):.6g}  P(no photon) = {prob:.6g}  trace distance = {dist:.3e}")
    if args.tol is not None and dist > args.tol:
        print(f"FAIL: trace distance {dist:.3e} exceeds {args.tol:g}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_verify_appendix(args) -> int:
    which = args.which.upper()
    if not args.ladder:
        raise UsageError("ladder must contain at least one multiplier")
    if which == "A":
        base = physlayer.DriveParams.appendix_a()
        kw = dict(g=args.g, omega=args.omega, delta=args.delta)
        base = physlayer.DriveParams.appendix_a(**{k: v if v is not None else getattr(base, k) for k, v in kw.items()})
    else:
        base = physlayer.DriveParams.appendix_c()
        kw = dict(g=args.g, omega=args.omega, delta_l=args.delta_l, delta=args.delta)
        base = physlayer.DriveParams.appendix_c(**{k: v if v is not None else getattr(base, k) for k, v in kw.items()})
    if which == "A" and not physlayer.strong_driving(base):
        print(f"warning: omega/g = {base.omega / base.g:.3g} is below the strong-driving guard "
              f"{physlayer.STRONG_DRIVE_RATIO:g}", file=sys.stderr)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            reports = physlayer.ladder(which, args.ladder, base, args.n_max)
    except physlayer.ParameterError as exc:
        raise UsageError(str(exc))
    lines = [f"# purecav verify-appendix which={which} seed={args.seed}",
             "multiplier,trace_distance,excited_population_max,gate_time"]
    for r in reports:
        lines.append(",".join(fmt(v) for v in (r.multiplier, r.trace_distance, r.excited_population_max, r.gate_time)))
    _emit("\n".join(lines) + "\n", args.out)
    d = [r.trace_distance for r in reports]
    e = [r.excited_population_max for r in reports]
    ok = all(np.diff(d) < 0) and all(np.diff(e) < 0)
    if not ok:
        print("FAIL: trace distance or excited population does not strictly decrease", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_resources(args) -> int:
    if args.trials < 100:
        raise UsageError("trials must be at least 100")
    if not (0.5 < args.f <= 1.0):
        raise UsageError("f must lie in (0.5, 1]")
    if args.rounds < 1:
        raise UsageError("rounds must be at least 1")
    if args.force_p is not None and not 0 < args.force_p <= 1:
        raise UsageError("force-p must lie in (0, 1]")
    chain = resources.build_chain(args.f, args.rounds, args.scheme, args.restart_from,
                                  args.fusion_alpha, args.force_p, args.n)
    est = resources.monte_carlo(chain, args.trials, args.seed)
    header = {"f": f"{args.f:g}", "rounds": args.rounds, "scheme": args.scheme,
              "restart_from": args.restart_from, "seed": args.seed}
    _emit(resources.render_csv(est, header), args.out)
    if est.deviation_in_half_widths > 3:
        print("FAIL: Monte Carlo and analytic expectation differ by more than 3 half-widths", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_selftest(args) -> int:
    only = [int(s) for s in args.only.split(",") if s.strip()] if args.only else None
    results = acceptance.run_all(only)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


COMMANDS = {
    "sweep": cmd_sweep,
    "fusion": cmd_fusion,
    "verify-appendix": cmd_verify_appendix,
    "resources": cmd_resources,
    "selftest": cmd_selftest,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subs = build_parser()
    try:
        args = _apply_overrides(parser, subs, argv)
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        print(f"purecav: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
