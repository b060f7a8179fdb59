"""Command line: ``csrnbrw {ingest,detect,bench,stats,synth}``.

Every command writes ``config.json`` into its output directory; passing that
file back with ``--config`` replays the run.
Environment: ``CSRNBRW_WORKERS`` (walk threads), ``CSRNBRW_OUT`` (default
output directory).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import pipeline
from .louvain import MIN_GAIN
from .rnbrw import WALKS_PER_EDGE, default_workers
from .synth import InfeasibleSpecError, PlantedSpec

EXIT_INPUT, EXIT_EMPTY, EXIT_ATTRS = 2, 3, 4

# arguments that describe where outputs go rather than what is computed
_NOT_RECORDED = {"out", "config", "command", "verbose", "func"}


def _int_list(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        if "-" in part.strip("-"):
            a, b = part.split("-", 1)
            out.extend(range(int(a), int(b) + 1))
        elif part:
            out.append(int(part))
    return out


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x]


def _abs(path):
    return None if path is None else str(Path(path).resolve())


def _default_out(name: str) -> str:
    return str(Path(os.environ.get("CSRNBRW_OUT", "runs")) / name)


def _save_config(args, out: Path) -> None:
    cfg = {k: v for k, v in vars(args).items() if k not in _NOT_RECORDED}
    cfg["command"] = args.command
    out.mkdir(parents=True, exist_ok=True)
    pipeline.dump_json(cfg, out / "config.json")


def cmd_ingest(args) -> int:
    out = Path(args.out)
    args.commits = _abs(args.commits)
    args.countries = _abs(args.countries)
    args.languages = _abs(args.languages)
    report = pipeline.ingest(args.commits, out, countries=args.countries, languages=args.languages,
                             drop_bots=args.no_bots, international=args.international, repo_cap=args.repo_cap)
    _save_config(args, out)
    net = report.get("network", {})
    print(f"ingest: {net.get('nodes', 0)} users, {net.get('edges', 0)} edges "
          f"({report['rows_skipped']} rows skipped, {report['bot_users_removed']} bots removed, "
          f"{report['isolates_removed']} isolates removed) -> {out}")
    return 0


def cmd_detect(args) -> int:
    out = Path(args.out)
    args.graph = _abs(args.graph)
    g = pipeline.load_graph(args.graph)
    d = pipeline.detect(g, seed=args.seed, walks_per_edge=args.walks_per_edge, min_gain=args.min_gain,
                        workers=args.workers, runs=args.best_of)
    report = pipeline.write_detection(d, out, args.seed, args.min_gain)
    _save_config(args, out)
    plain, weighted = report["louvain"], report["csrnbrw_louvain"]
    print(f"detect: Louvain {plain['communities']} communities, CSRNBRW+Louvain {weighted['communities']} "
          f"(size-set similarity {report['comparison']['size_set_similarity']:.3f}) -> {out}")
    return 0


def cmd_bench(args) -> int:
    out = Path(args.out)
    mus = args.mu
    if args.tune:
        mu = pipeline.tune_mu(args.n[0], args.degrees[0], target=args.target, k=args.k)
        print(f"bench: tuned mu = {mu}")
        mus = [mu]
        args.mu = mus
        args.tune = False
    rows = pipeline.run_bench(args.n, args.degrees, mus, args.seeds, k=args.k,
                              walks_per_edge=args.walks_per_edge, min_gain=args.min_gain, workers=args.workers)
    result = pipeline.write_bench(rows, out)
    _save_config(args, out)
    print(f"{'n':>8} {'d':>7} {'mu':>6} {'Louvain':>16} {'RNBRW+Louvain':>16}")
    for s in result["summary"]:
        print(f"{s['n']:>8} {s['avg_degree']:>7.2f} {s['mu']:>6.3f} "
              f"{s['nmi_louvain_mean']:>8.3f}±{s['nmi_louvain_sd']:.3f} "
              f"{s['nmi_rnbrw_louvain_mean']:>8.3f}±{s['nmi_rnbrw_louvain_sd']:.3f}")
    return 0


def cmd_stats(args) -> int:
    out = Path(args.out)
    args.ingest = _abs(args.ingest)
    args.detect = _abs(args.detect)
    part = Path(args.detect) / f"partition_{args.method}.txt"
    report = pipeline.run_stats(Path(args.ingest), part, out, rules=args.rules,
                                bonferroni_m=args.bonferroni_m, top_k=args.top_k, chi_rule=args.chi_rule)
    n_tests = len(report["wilcoxon"]["tests"])
    print(f"stats: {len(report['rules'])} rule(s), {n_tests} pairwise Wilcoxon test(s) -> {out}")
    return 0


def cmd_synth(args) -> int:
    out = Path(args.out)
    if args.degree is not None:
        spec = PlantedSpec(args.n, args.k or max(2, args.n // 100), args.degree, args.mu, args.seed)
    else:
        spec = PlantedSpec.log_degree(args.n, args.degree_multiple, args.mu, args.k, args.seed)
    g, truth = pipeline.synth(spec, out)
    _save_config(args, out)
    print(f"synth: {g.node_count} nodes, {g.edge_count} edges, {truth.community_count} blocks -> {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="csrnbrw", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    parser.subcommands = sub.choices

    def common(p, name):
        p.add_argument("--out", default=_default_out(name), help="output directory")
        p.add_argument("--config", help="replay a config.json written by an earlier run")

    p = sub.add_parser("ingest", help="commit table -> collaboration graph")
    p.add_argument("--commits", required=False, help="CSV: repo,login,date,added,deleted")
    p.add_argument("--countries", help="CSV: login,country_code")
    p.add_argument("--languages", help="CSV: repo,language,bytes")
    p.add_argument("--no-bots", action="store_true", help="drop users whose login ends in 'bot'")
    p.add_argument("--international", action="store_true", help="keep only users with one valid country")
    p.add_argument("--repo-cap", type=int, default=10_000, help="skip repos with more contributors")
    common(p, "ingest")
    p.set_defaults(func=cmd_ingest)

    def detection_opts(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--min-gain", type=float, default=MIN_GAIN)
        p.add_argument("--workers", type=int, default=default_workers())

    p = sub.add_parser("detect", help="Louvain vs CSRNBRW+Louvain on a graph")
    p.add_argument("--graph", required=False, help="edge list, or an ingest output directory")
    p.add_argument("--walks-per-edge", type=float, default=WALKS_PER_EDGE)
    p.add_argument("--best-of", type=int, default=1, help="keep the best of k Louvain runs")
    detection_opts(p)
    common(p, "detect")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("bench", help="NMI benchmark on planted-partition graphs")
    p.add_argument("--n", type=_int_list, default=[10_000])
    p.add_argument("--degrees", type=_float_list, default=[1.0, 2.0, 3.0],
                   help="mean degree as multiples of ln n")
    p.add_argument("--mu", type=_float_list, default=[0.45], help="mixing fraction(s)")
    p.add_argument("--k", type=int, default=None, help="blocks (default n/100)")
    p.add_argument("--seeds", type=_int_list, default=list(range(10)))
    p.add_argument("--walks-per-edge", type=float, default=pipeline.BENCH_WALKS_PER_EDGE)
    p.add_argument("--tune", action="store_true", help="bisect mu so plain Louvain scores --target")
    p.add_argument("--target", type=float, default=0.74)
    detection_opts(p)
    common(p, "bench")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("stats", help="language / country analyses of detected communities")
    p.add_argument("--ingest", required=False, help="ingest output directory")
    p.add_argument("--detect", required=False, help="detect output directory")
    p.add_argument("--method", choices=["csrnbrw", "louvain"], default="csrnbrw")
    p.add_argument("--rules", type=_int_list, default=[1, 2, 3, 4])
    p.add_argument("--bonferroni-m", type=int, default=None,
                   help="number of comparisons (default: pairwise tests run)")
    p.add_argument("--top-k", type=int, default=10, help="languages tested for country homogeneity")
    p.add_argument("--chi-rule", type=int, default=None, help="rule defining languages for chi-square")
    common(p, "stats")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("synth", help="write a planted-partition graph and its ground truth")
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--degree", type=float, default=None, help="mean degree (overrides --degree-multiple)")
    p.add_argument("--degree-multiple", type=float, default=1.0, help="mean degree as a multiple of ln n")
    p.add_argument("--mu", type=float, default=0.45)
    p.add_argument("--seed", type=int, default=0)
    common(p, "synth")
    p.set_defaults(func=cmd_synth)
    return parser


_REQUIRED = {"ingest": ["commits"], "detect": ["graph"], "stats": ["ingest", "detect"]}


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            parser.exit(EXIT_INPUT, f"csrnbrw: cannot read config {args.config}: {exc}\n")
        if cfg.get("command") != args.command:
            parser.exit(EXIT_INPUT, f"csrnbrw: config is for '{cfg.get('command')}', not '{args.command}'\n")
        parser.subcommands[args.command].set_defaults(**{k: v for k, v in cfg.items() if k != "command"})
        args = parser.parse_args(argv)
    missing = [f"--{k}" for k in _REQUIRED.get(args.command, []) if getattr(args, k) is None]
    if missing:
        parser.exit(EXIT_INPUT, f"csrnbrw {args.command}: missing {', '.join(missing)}\n")
    return args


def main(argv=None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except pipeline.InputError as exc:
        print(f"csrnbrw: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except pipeline.EmptyGraphError as exc:
        print(f"csrnbrw: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except pipeline.MissingAttributesError as exc:
        print(f"csrnbrw: {exc}", file=sys.stderr)
        return EXIT_ATTRS
    except InfeasibleSpecError as exc:
        print(f"csrnbrw: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
