"""Command-line entry point: ``onebit {generate,solve,bench}``.

Exit codes follow sysexits: 0 success, 2 solve did not converge,
64 usage error, 74 I/O or instance-format error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from onebit.exceptions import InstanceFormatError, InvalidArgumentError, SolverError
from onebit.harness import BenchmarkConfig, aggregate, emit_csv, run_trials, tau_sensitivity
from onebit.model import generate_instance, load_instance, save_instance
from onebit.solver import SolverConfig, solve

EXIT_OK = 0
EXIT_NONCONVERGED = 2
EXIT_USAGE = 64
EXIT_IOERR = 74


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _mode_list(text):
    modes = [v.strip() for v in text.split(",") if v.strip()]
    for mode in modes:
        if mode not in ("gauss", "l1"):
            raise argparse.ArgumentTypeError(f"unknown mode {mode!r}; choose gauss or l1")
    return modes


def _init(text):
    if text == "matched" or text.startswith("random:"):
        return text
    raise argparse.ArgumentTypeError(f"init must be 'matched' or 'random:SEED', got {text!r}")


def _add_solver_flags(p, with_mode=True):
    if with_mode:
        p.add_argument("--mode", choices=("gauss", "l1"), required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=0.5)
    p.add_argument("--outer-tol", type=float, default=None)
    p.add_argument("--max-outer", type=int, default=None)
    p.add_argument("--newton-tol", type=float, default=None)
    p.add_argument("--max-newton", type=int, default=None)
    p.add_argument("--prune", type=float, default=None, help="relative pruning threshold")


def _solver_overrides(args):
    names = {"outer_tol": "outer_tol", "max_outer": "max_outer", "newton_tol": "newton_tol",
             "max_newton": "max_newton", "prune": "prune_threshold"}
    return {field: getattr(args, attr) for attr, field in names.items()
            if getattr(args, attr) is not None}


def build_parser():
    parser = _Parser(prog="onebit", description="Sparse recovery from one-bit measurements.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("generate", help="write a random problem instance")
    gen.add_argument("--m", type=int, required=True)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--k", type=int, required=True)
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--out", required=True)

    sol = sub.add_parser("solve", help="recover one signal")
    sol.add_argument("--instance")
    sol.add_argument("--m", type=int)
    sol.add_argument("--n", type=int)
    sol.add_argument("--k", type=int)
    sol.add_argument("--seed", type=int)
    _add_solver_flags(sol)
    sol.add_argument("--init", type=_init, default="matched")
    sol.add_argument("--out", help="write the result as JSON")

    bench = sub.add_parser("bench", help="Monte-Carlo support-recovery sweep")
    bench.add_argument("--m", type=int, default=100)
    bench.add_argument("--n", type=int, default=50)
    bench.add_argument("--k", type=_int_list, default=[2, 4, 6, 8, 10, 12])
    bench.add_argument("--trials", type=int, default=300)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--modes", type=_mode_list, default=["gauss", "l1"])
    _add_solver_flags(bench, with_mode=False)
    bench.add_argument("--tau", type=float, default=1e-2)
    bench.add_argument("--tau-report", type=_float_list, default=None,
                       help="also print rates rescored at these thresholds")
    bench.add_argument("--timing", action="store_true",
                       help="record wall times (output is then not reproducible)")
    bench.add_argument("--workers", type=int, default=1)
    bench.add_argument("--csv", required=True)
    return parser


def _fmt_vec(v):
    return "[" + ", ".join(format(x, ".9g") for x in v) + "]"


def cmd_generate(args):
    instance = generate_instance(args.m, args.n, args.k, args.seed)
    save_instance(instance, args.out)
    print(f"wrote instance m={instance.m} n={instance.n} K={args.k} seed={args.seed} to {args.out}")
    return EXIT_OK


def cmd_solve(args):
    params = (args.m, args.n, args.k, args.seed)
    if args.instance is not None:
        if any(p is not None for p in params):
            raise UsageError("use either --instance or --m/--n/--k/--seed, not both")
        instance = load_instance(args.instance)
    elif all(p is not None for p in params):
        instance = generate_instance(*params)
    else:
        raise UsageError("need --instance PATH or all of --m --n --k --seed")

    cfg = SolverConfig(mode=args.mode, lam=args.lam, init=args.init, **_solver_overrides(args))
    result = solve(instance, cfg)
    print(f"mode: {cfg.mode.value}  lambda: {cfg.lam:g}")
    print(f"converged: {str(result.converged).lower()}  outer_iterations: {result.outer_iterations}")
    print(f"support: {sorted(result.support)}")
    if instance.truth is not None:
        print(f"true_support: {sorted(instance.truth.support)}")
    print(f"estimate: {_fmt_vec(result.estimate)}")
    print(f"objective_trace: {_fmt_vec(result.objective_trace)}")
    if args.out:
        doc = {
            "mode": cfg.mode.value,
            "lambda": cfg.lam,
            "converged": result.converged,
            "outer_iterations": result.outer_iterations,
            "support": sorted(result.support),
            "estimate": result.estimate.tolist(),
            "objective_trace": list(result.objective_trace),
            "trace_active_sizes": list(result.trace_active_sizes),
            "wall_time_s": result.wall_time,
        }
        if instance.truth is not None:
            doc["true_support"] = sorted(instance.truth.support)
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")
    return EXIT_OK if result.converged else EXIT_NONCONVERGED


def cmd_bench(args):
    cfg = BenchmarkConfig(
        m=args.m, n=args.n, k_values=tuple(args.k), trials=args.trials, lam=args.lam,
        master_seed=args.seed, algorithms=tuple(args.modes), tau=args.tau,
        solver=_solver_overrides(args), timing=args.timing, workers=args.workers,
    )
    outcomes = run_trials(cfg)
    records = aggregate(cfg, outcomes)
    emit_csv(records, args.csv)
    for r in records:
        flag = "  FLAGGED" if r.flagged else ""
        print(f"K={r.k:<3d} {r.algorithm:<6s} false_alarm={r.mean_false_alarm_rate:.4f} "
              f"miss={r.mean_miss_rate:.4f} support={r.mean_support_size:.2f}{flag}")
    if args.tau_report:
        print("tau,K,algorithm,false_alarm_rate,miss_rate")
        for tau, k, alg, fa, miss in tau_sensitivity(outcomes, args.tau_report, cfg.n):
            print(f"{tau:g},{k},{alg},{fa:.9g},{miss:.9g}")
    print(f"wrote {len(records)} rows to {args.csv}")
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "solve": cmd_solve, "bench": cmd_bench}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, InvalidArgumentError) as exc:
        print(f"onebit: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InstanceFormatError as exc:
        path = getattr(args, "instance", None)
        print(f"onebit: {path}: {exc}", file=sys.stderr)
        return EXIT_IOERR
    except OSError as exc:
        print(f"onebit: I/O error: {exc}", file=sys.stderr)
        return EXIT_IOERR
    except SolverError as exc:
        print(f"onebit: solver failed: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED


if __name__ == "__main__":
    sys.exit(main())
