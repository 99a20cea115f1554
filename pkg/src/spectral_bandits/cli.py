"""Command-line entry point: ``spectral-bandits <command> ...``.

Exit status is 0 on success, 2 for usage or configuration errors and 3 when
a run fails.
"""
from __future__ import annotations

import argparse
import os
import sys

from . import harness
from .errors import ConfigError, InvalidArgument, ParseError, SpectralBanditsError
from .graph import save_edge_list

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spectral-bandits", description="Spectral bandits on graphs.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-graph", help="generate a graph and write it as an edge list")
    p.add_argument("--graph", required=True, help="e.g. ba:n=500,m=3,seed=0")
    p.add_argument("--out", help="output directory (writes graph.edges); stdout if omitted")

    p = sub.add_parser("effdim", help="effective dimension over a range of horizons")
    p.add_argument("--graph", required=True)
    p.add_argument("--lambda", dest="lambda_reg", type=float, default=0.01)
    p.add_argument("--tmin", type=_positive_int, default=1)
    p.add_argument("--tmax", type=_positive_int, default=250)
    p.add_argument("--out", help="output directory (writes effdim.csv); stdout if omitted")
    p.add_argument("--no-plots", action="store_true", help="skip effdim.png")

    for name, helptext in (
        ("run", "run an experiment and write traces and a summary"),
        ("compare", "run an experiment (or read a summary) and rank the policies"),
    ):
        p = sub.add_parser(name, help=helptext)
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--config", help="experiment config file")
        if name == "compare":
            src.add_argument("--summary", help="existing summary.csv to rank")
        p.add_argument("--out", help="output directory" + (" (required)" if name == "run" else ""))
        p.add_argument("--jobs", type=_positive_int, default=None, help=f"parallel runs (default ${harness.JOBS_ENV} or 1)")
        p.add_argument("--no-plots", action="store_true", help="skip regret.png")
    return parser


def _cmd_gen_graph(args):
    graph = harness.GraphSpec.parse(args.graph).build()
    if args.out is None:
        save_edge_list(graph, sys.stdout)
    else:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "graph.edges")
        save_edge_list(graph, path)
        print(f"wrote {path} ({graph.n} nodes, {graph.n_edges} edges)", file=sys.stderr)


def _cmd_effdim(args):
    spec = harness.GraphSpec.parse(args.graph)
    rows = harness.effdim_report(spec, args.lambda_reg, args.tmax, args.tmin)
    if args.out is None:
        harness.write_effdim(rows, sys.stdout)
        return
    os.makedirs(args.out, exist_ok=True)
    harness.write_effdim(rows, os.path.join(args.out, "effdim.csv"))
    if not args.no_plots:
        from .plotting import plot_effdim

        plot_effdim(rows, os.path.join(args.out, "effdim.png"), spec.get("n"))


def _run(args):
    cfg = harness.load_config(args.config)
    jobs = args.jobs if args.jobs is not None else harness.default_jobs()
    base_dir = os.path.dirname(os.path.abspath(args.config))
    return harness.run_experiment(cfg, args.out, jobs=jobs, base_dir=base_dir, plots=not args.no_plots)


def _cmd_run(args):
    if args.out is None:
        raise ConfigError("run needs --out")
    result = _run(args)
    for row in result.summary:
        print(f"{row.policy}: mean final regret {row.mean_final_regret:.4f} over {row.replicates} replicates")


def _cmd_compare(args):
    rows = harness.read_summary(args.summary) if args.summary else _run(args).summary
    print("rank,policy,mean_final_regret,std_final_regret")
    for rank, row in enumerate(harness.ranking(rows), start=1):
        print(f"{rank},{row.policy},{row.mean_final_regret:.6g},{row.std_final_regret:.6g}")


_COMMANDS = {
    "gen-graph": _cmd_gen_graph,
    "effdim": _cmd_effdim,
    "run": _cmd_run,
    "compare": _cmd_compare,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    try:
        _COMMANDS[args.command](args)
    except harness.StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        # bad input files surface as config errors even when found mid-setup
        if isinstance(exc.cause, (ConfigError, ParseError)):
            return EXIT_CONFIG
        return EXIT_RUNTIME
    except (ConfigError, InvalidArgument, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SpectralBanditsError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
