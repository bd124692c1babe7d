"""Command line interface.

Subcommands: ``simulate`` (trajectory export), ``converge`` (convergence
study with slope fits), ``krylov-bound`` (error-vs-bound table) and
``expm-bench`` (Pade parameter selection).  All numeric output is printed
with 17 significant digits.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import bench, expm
from .errors import SpinMagnusError


def _parse_methods(spec: str, default_rule: str):
    pairs = []
    for token in spec.split(","):
        token = token.strip()
        if not token:
            continue
        for sep in (":", "+"):
            if sep in token:
                method, rule = token.split(sep, 1)
                break
        else:
            method, rule = token, default_rule
        pairs.append((method.strip(), rule.strip()))
    if not pairs:
        raise SpinMagnusError("no methods given")
    return pairs


def _cmd_simulate(args):
    config = bench.load_config(args.config)
    _, table, labels = bench.run_simulation(config)
    out_path = args.output or config.output_path
    bench.write_trajectory_csv(table, labels, out_path)
    print(f"wrote {table.shape[0]} rows to {out_path}")
    return 0


def _cmd_converge(args):
    config = bench.load_config(args.config)
    methods = _parse_methods(args.methods, config.rule)
    report = bench.run_convergence(config, args.k_min, args.k_max, args.reference_k,
                                   methods, fit_max_error=args.fit_max_error)
    os.makedirs(args.output_dir, exist_ok=True)
    csv_path = os.path.join(args.output_dir, "convergence.csv")
    gp_path = os.path.join(args.output_dir, "convergence.gp")
    bench.write_convergence_csv(report, csv_path)
    bench.write_gnuplot_script(report, "convergence.csv", gp_path)
    for series in report.series:
        slope = bench.fmt17(series.slope) if series.slope is not None else "n/a"
        print(f"{series.method}+{series.rule}: fitted slope {slope} "
              f"({series.fit_rows} rows)")
    print(f"wrote {csv_path} and {gp_path}")
    return 0


def _cmd_krylov_bound(args):
    m_values = bench.krylov_valid_m_range(args.rho, args.t, args.m_max)
    rows = bench.run_krylov_bound_check(args.rho, args.t, args.dim, m_values,
                                        placement=args.placement)
    lines = ["m,error,bound,passed"]
    for row in rows:
        lines.append(f"{row['m']},{bench.fmt17(row['error'])},"
                     f"{bench.fmt17(row['bound'])},{int(row['passed'])}")
    text = "\n".join(lines) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
        print(f"wrote {len(rows)} rows to {args.output}")
    else:
        sys.stdout.write(text)
    n_fail = sum(1 for row in rows if not row["passed"])
    if n_fail:
        print(f"note: {n_fail} of {len(rows)} m values exceed the bound "
              "(double-precision error floor)", file=sys.stderr)
    return 0


def _cmd_expm_bench(args):
    params = expm.pade_select_params(args.norm, args.eps)
    bound = expm.pade_backward_bound(args.norm, params.q, params.j)
    print(f"q={params.q} j={params.j} backward_error_bound={bench.fmt17(bound)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spinmagnus",
                                     description="Quantum spin system simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="propagate a configured system, export CSV")
    p_sim.add_argument("--config", required=True)
    p_sim.add_argument("--output", help="override the config output path")
    p_sim.set_defaults(func=_cmd_simulate)

    p_conv = sub.add_parser("converge", help="convergence study over dyadic step sizes")
    p_conv.add_argument("--config", required=True)
    p_conv.add_argument("--k-min", type=int, required=True, dest="k_min")
    p_conv.add_argument("--k-max", type=int, required=True, dest="k_max")
    p_conv.add_argument("--reference-k", type=int, default=20, dest="reference_k")
    p_conv.add_argument("--methods", required=True,
                        help="comma list of method[:rule] tokens, e.g. magnus1:midpoint,magnus2:gl3")
    p_conv.add_argument("--fit-max-error", type=float, default=None, dest="fit_max_error",
                        help="exclude rows with error above this from slope fits")
    p_conv.add_argument("--output-dir", default=".", dest="output_dir")
    p_conv.set_defaults(func=_cmd_converge)

    p_kry = sub.add_parser("krylov-bound", help="Krylov error against the spectral bound")
    p_kry.add_argument("--rho", type=float, default=10.0)
    p_kry.add_argument("--t", type=float, default=1.0)
    p_kry.add_argument("--dim", type=int, default=1001)
    p_kry.add_argument("--m-max", type=int, default=60, dest="m_max")
    p_kry.add_argument("--placement", choices=("equal", "random"), default="equal")
    p_kry.add_argument("--output", help="write CSV here instead of stdout")
    p_kry.set_defaults(func=_cmd_krylov_bound)

    p_expm = sub.add_parser("expm-bench", help="Pade parameter selection for a norm/tolerance")
    p_expm.add_argument("--norm", type=float, required=True)
    p_expm.add_argument("--eps", type=float, required=True)
    p_expm.set_defaults(func=_cmd_expm_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SpinMagnusError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
