"""Command-line front end.

Subcommands: ``run`` (simulate a scenario and write CSV metrics), ``oracle``
(exact optimum of a small instance), ``export-dot`` (occupation graph) and
``bench`` (compiled-vs-interpreted kernel check).  The default output
directory comes from ``--out`` or the ``ANTROUTE_OUT`` environment variable.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

from . import _kernel
from .ants import AntSimulation
from .baselines import BudgetExceededError, UnroutableError, exhaustive_optimum, spf_routes
from .exports import export_dot, run_metrics_csv, summary_csv
from .harness import (
    ScenarioError,
    apply_overrides,
    build_instance,
    convergence_iterations,
    load_scenario,
    preset_names,
    replicate,
    run_prune_compare,
    run_scenario,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BUDGET = 3


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, FileNotFoundError, UnroutableError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def _build_parser():
    parser = argparse.ArgumentParser(prog="antroute")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate a scenario and write metrics")
    _common(run)
    run.add_argument("--reps", type=int, default=None, help="override replication count")
    run.add_argument("--out", default=None, help="output directory (default $ANTROUTE_OUT or '.')")
    run.set_defaults(func=cmd_run)

    oracle = sub.add_parser("oracle", help="exact optimum of a small instance")
    _common(oracle)
    oracle.add_argument("--max-states", type=int, default=250_000)
    oracle.add_argument(
        "--compare-power", type=float, default=None,
        help="print the ratio of this power value to the optimum",
    )
    oracle.set_defaults(func=cmd_oracle)

    dot = sub.add_parser("export-dot", help="write a DOT occupation graph")
    _common(dot)
    dot.add_argument("--routing", choices=("spf", "ant"), default="ant")
    dot.add_argument("--out", default=None, help="output file (default stdout)")
    dot.set_defaults(func=cmd_export_dot)

    bench = sub.add_parser("bench", help="compare compiled and interpreted kernels")
    _common(bench)
    bench.set_defaults(func=cmd_bench)

    presets = sub.add_parser("presets", help="list bundled scenario presets")
    presets.set_defaults(func=lambda args: print("\n".join(preset_names())) or EXIT_OK)
    return parser


def _common(p):
    p.add_argument("--scenario", required=True, help="preset name or scenario file")
    p.add_argument("--seed", type=int, default=None, help="override the base seed")
    p.add_argument("--iterations", type=int, default=None, help="override the iteration count")
    p.add_argument(
        "--param", action="append", default=[], metavar="KEY=VALUE",
        help="override a scenario or algorithm parameter (repeatable)",
    )


def _load(args):
    s = load_scenario(args.scenario)
    overrides = {}
    for item in args.param:
        if "=" not in item:
            raise ScenarioError(f"--param needs KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key] = value
    if overrides:
        s = apply_overrides(s, overrides)
    if args.seed is not None:
        s = s.updated(seed=args.seed)
    if args.iterations is not None:
        s = s.updated(iterations=args.iterations)
    if getattr(args, "reps", None) is not None:
        s = s.updated(replications=args.reps)
    return s


def cmd_run(args) -> int:
    s = _load(args)
    out_dir = args.out or os.environ.get("ANTROUTE_OUT", ".")
    os.makedirs(out_dir, exist_ok=True)

    if s.mode == "prune":
        cmp = run_prune_compare(s)
        print(f"scenario           {s.name}")
        print(f"links kept         {cmp.n_links_after}/{cmp.n_links_before}")
        print(f"baseline power     {cmp.spf_power:.6g}")
        print(f"pruned power       {cmp.pruned_power:.6g}")
        print(f"power ratio        {cmp.ratio:.4f}  (increase {cmp.increase * 100:.2f}%)")
        path = os.path.join(out_dir, f"{s.name}-prune.csv")
        with open(path, "w") as fh:
            fh.write("metric,value\n")
            fh.write(f"spf_power,{cmp.spf_power:.10g}\n")
            fh.write(f"pruned_power,{cmp.pruned_power:.10g}\n")
            fh.write(f"ratio,{cmp.ratio:.10g}\n")
        print(f"wrote {path}")
        return EXIT_OK

    runs, summary = replicate(s)
    for r in runs:
        path = os.path.join(out_dir, f"{s.name}-seed{r.seed}.csv")
        with open(path, "w") as fh:
            fh.write(run_metrics_csv(r))
    agg_path = os.path.join(out_dir, f"{s.name}-aggregate.csv")
    with open(agg_path, "w") as fh:
        fh.write(summary_csv(summary))

    def fmt(pair, scale=1.0, unit=""):
        mean, half = pair
        if mean is None:
            return "n/a"
        if half is None:
            return f"{mean * scale:.2f}{unit}"
        return f"{mean * scale:.2f}{unit} ± {half * scale:.2f}"

    print(f"scenario           {s.name}")
    print(f"replications       {summary.n_reps} x {s.iterations} iterations")
    print(f"energy savings     {fmt(summary.savings, 100.0, '%')}")
    print(f"mean path length   {fmt(summary.path_len)}")
    print(f"length increment   {fmt(summary.length_increment, 100.0, '%')}")
    print(f"iterations to 90%  {fmt(summary.conv90)}")
    print(f"iterations to 99%  {fmt(summary.conv99)}")
    print(f"wrote {summary.n_reps} run files and {agg_path}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    s = _load(args)
    net, flows = build_instance(s)
    try:
        table, power = exhaustive_optimum(net, flows, max_states=args.max_states)
    except BudgetExceededError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    print(f"optimum power      {power:.9g}")
    for flow in flows:
        nodes = table.path_for(flow).nodes()
        names = "->".join(net.nodes[v].name for v in nodes)
        print(f"flow {flow.id:<4d} rate {flow.rate:g}: {names}")
    if args.compare_power is not None:
        print(f"comparison power   {args.compare_power:.9g}"
              f"  (x{args.compare_power / power:.4f} of optimum)")
    return EXIT_OK


def cmd_export_dot(args) -> int:
    s = _load(args)
    net, flows = build_instance(s)
    if args.routing == "spf":
        table = spf_routes(net, flows, tie=s.spf_tie)
    else:
        sim = AntSimulation(net, flows, s.params, seed=s.seed)
        sim.run(s.iterations)
        table = sim.flow_table()
    text = export_dot(table, net)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_bench(args) -> int:
    """Run the scenario on the active kernel and the pure-Python one and
    compare speed; outputs must match bit for bit."""
    s = _load(args)
    iters = min(s.iterations, 200)
    s = s.updated(iterations=iters, replications=1)

    t0 = time.perf_counter()
    active = run_scenario(s)
    t_active = time.perf_counter() - t0

    from . import kernel_variants

    pure = kernel_variants.pure_kernel()
    if pure is _kernel:
        print("compiled kernel not built; nothing to compare against")
        print(f"interpreted run: {t_active:.3f}s for {iters} iterations")
        return EXIT_OK
    with kernel_variants.use_kernel(pure):
        t0 = time.perf_counter()
        reference = run_scenario(s)
        t_pure = time.perf_counter() - t0

    same = (
        (active.power == reference.power).all()
        and (active.avg_path_len == reference.avg_path_len).all()
        and (active.adoptions == reference.adoptions).all()
    )
    print(f"scenario            {s.name} ({iters} iterations)")
    print(f"compiled kernel     {t_active:.3f}s")
    print(f"interpreted kernel  {t_pure:.3f}s")
    print(f"speedup             x{t_pure / t_active:.1f}")
    print(f"bit-identical       {'yes' if same else 'NO'}")
    return EXIT_OK if same else 1


if __name__ == "__main__":
    sys.exit(main())
