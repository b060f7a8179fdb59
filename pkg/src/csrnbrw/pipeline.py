"""End-to-end stages behind the command line: ingest, detect, bench, stats."""

from __future__ import annotations

import csv
import json
import logging
import zlib
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import analysis, attributes, stats
from .graph import Graph, read_edgelist, read_node_names, summary, write_edgelist, write_node_names
from .ingest import (InputFormatError, filter_bots, parse_commits, parse_countries, parse_repo_languages, project_collaboration,
                     subset_international, unique_countries)
from .louvain import MIN_GAIN, best_of, modularity, nmi
from .partition import Partition, read_partition, write_partition
from .rnbrw import EdgeWeights, csrnbrw_weights, retrace_probabilities, run_walks, write_weights
from .synth import PlantedSpec, planted_partition

log = logging.getLogger(__name__)

BENCH_WALKS_PER_EDGE = 50


class InputError(Exception):
    """Unreadable or malformed input (exit code 2)."""


class EmptyGraphError(Exception):
    """Graph has no usable edges (exit code 3)."""


class MissingAttributesError(Exception):
    """Attribute tables needed for the statistics are absent (exit code 4)."""


def derive_seed(seed: int, stage: str) -> int:
    """Per-stage seed derived from the top-level seed and the stage name."""
    ss = np.random.SeedSequence([int(seed), zlib.crc32(stage.encode())])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def dump_json(obj, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")


def _jsonable(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def _open_input(path):
    try:
        return open(path, "rb")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


# ---------------------------------------------------------------------------
# ingest


def ingest(commits: str | Path, out: Path, countries: str | Path | None = None,
           languages: str | Path | None = None, drop_bots: bool = False,
           international: bool = False, repo_cap: int = 10_000) -> dict:
    """Commit table -> collaboration graph (+ attribute tables) under ``out``."""
    if international and countries is None:
        raise InputError("--international needs a country table")
    for p in (commits, countries, languages):
        if p is not None and not Path(p).is_file():
            raise InputError(f"cannot read {p}")

    try:
        with _open_input(commits) as fh:
            records, parse_report = parse_commits(fh)
        country_rows = None
        if countries is not None:
            with _open_input(countries) as fh:
                country_rows = parse_countries(fh)
        lang_rows = None
        if languages is not None:
            with _open_input(languages) as fh:
                lang_rows = parse_repo_languages(fh)
    except InputFormatError as exc:
        raise InputError(str(exc)) from None

    bots = 0
    if drop_bots:
        records, bots = filter_bots(records)
    users = {r.user_login for r in records}
    g = project_collaboration(records, repo_cap=repo_cap)
    report = {
        "rows": parse_report.rows,
        "rows_skipped": parse_report.skipped,
        "skip_examples": parse_report.problems,
        "bot_users_removed": bots,
        "users": len(users),
        "repos": len({r.repo_name for r in records}),
        "isolates_removed": len(users) - g.node_count,
    }
    if international:
        full_nodes = g.node_count
        g = subset_international(g, country_rows)
        report["international_nodes_removed"] = full_nodes - g.node_count
    if g.node_count:
        report["network"] = summary(g)

    out.mkdir(parents=True, exist_ok=True)
    write_edgelist(g, out / "graph.edges", header="u v shared_repositories")
    write_node_names(g, out / "nodes.tsv")
    names = list(g.names or ())
    if country_rows is not None:
        mapped = unique_countries(country_rows)
        with open(out / "countries.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["login", "country_code"])
            for u in names:
                if u in mapped:
                    w.writerow([u, mapped[u]])
        report["country_coverage"] = sum(u in mapped for u in names) / max(len(names), 1)
    if lang_rows is not None:
        single = attributes.single_language_repos(lang_rows)
        maps = attributes.assign_all(records, single)
        in_graph = set(names)
        maps = {rid: attributes.UserLanguageMap({u: l for u, l in m.languages.items() if u in in_graph}, rid)
                for rid, m in maps.items()}
        attributes.write_language_csv(maps.values(), out / "languages.csv")
        report["single_language_repo_fraction"] = single.fraction
        report["language_coverage"] = {str(rid): len(m) / max(len(names), 1) for rid, m in maps.items()}
    dump_json(report, out / "ingest_report.json")
    return report


def load_graph(path: str | Path) -> Graph:
    """Edge list file, or an ingest directory holding graph.edges + nodes.tsv."""
    path = Path(path)
    names = None
    if path.is_dir():
        if (path / "nodes.tsv").is_file():
            names = read_node_names(path / "nodes.tsv")
        path = path / "graph.edges"
    elif path.with_name("nodes.tsv").is_file():
        names = read_node_names(path.with_name("nodes.tsv"))
    if not path.is_file():
        raise InputError(f"cannot read graph {path}")
    try:
        return read_edgelist(path, names=names)
    except ValueError as exc:
        raise InputError(str(exc)) from None


# ---------------------------------------------------------------------------
# detect


@dataclass
class Detection:
    graph: Graph
    plain: Partition
    weighted: Partition
    pi: EdgeWeights
    weighted_graph: Graph


def detect(g: Graph, seed: int = 0, walks_per_edge: float = 10, min_gain: float = MIN_GAIN,
           workers: int | None = None, runs: int = 1) -> Detection:
    """Plain Louvain and CSRNBRW+Louvain on the same graph."""
    if g.edge_count == 0 or g.total_weight() <= 0:
        raise EmptyGraphError("graph has no weighted edges")
    plain = best_of(g, runs, seed=derive_seed(seed, "louvain"), min_gain=min_gain)
    walks = max(1, int(round(walks_per_edge * g.edge_count)))
    counts = run_walks(g, walks, seed=derive_seed(seed, "rnbrw"), workers=workers)
    pi = retrace_probabilities(counts)
    wg = g.with_weights(csrnbrw_weights(pi, g).values)
    if wg.total_weight() <= 0:
        # no cycles anywhere: every node is its own community
        weighted = Partition.singletons(g.node_count)
    else:
        weighted = best_of(wg, runs, seed=derive_seed(seed, "louvain-csrnbrw"), min_gain=min_gain)
    return Detection(g, plain, weighted, pi, wg)


def _method_report(g: Graph, scored: Graph, p: Partition) -> dict:
    hist = analysis.community_sizes(p)
    cnet = analysis.community_network(g, p)
    degrees = cnet.degree()
    degrees = degrees[degrees > 0]
    try:
        fit = analysis.fit_power_law(degrees).to_dict()
    except analysis.FitError as exc:
        fit = {"error": str(exc)}
    rep = {
        "communities": p.community_count,
        "largest_community_fraction": float(p.sizes().max() / p.node_count),
        "size_histogram": {str(k): v for k, v in hist.items()},
        "dunbar_coverage": analysis.dunbar_coverage(p),
        "resolution_audit": analysis.resolution_audit(g, p),
        "modularity_on_shared_repo_weights": modularity(g, p),
        "community_network": {"nodes": cnet.node_count, "edges": cnet.edge_count,
                              "degree_power_law": fit},
    }
    if scored.total_weight() > 0:
        rep["modularity_on_own_weights"] = modularity(scored, p)
    return rep


def detection_report(d: Detection) -> dict:
    plain = _method_report(d.graph, d.graph, d.plain)
    weighted = _method_report(d.graph, d.weighted_graph, d.weighted)
    return {
        "network": summary(d.graph),
        "louvain": plain,
        "csrnbrw_louvain": weighted,
        "comparison": {
            "size_set_similarity": analysis.size_set_similarity(analysis.community_sizes(d.plain),
                                                                analysis.community_sizes(d.weighted)),
            "nmi_between_methods": nmi(d.plain, d.weighted),
            "community_counts": [d.plain.community_count, d.weighted.community_count],
        },
    }


def write_detection(d: Detection, out: Path, seed: int, min_gain: float) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    report = detection_report(d)
    for tag, p, key in (("louvain", d.plain, "modularity_on_shared_repo_weights"),
                        ("csrnbrw", d.weighted, None)):
        q = report["louvain"][key] if key else report["csrnbrw_louvain"].get("modularity_on_own_weights")
        write_partition(p, out / f"partition_{tag}.txt",
                        header={"method": tag, "seed": seed, "min_gain": repr(min_gain),
                                "modularity": repr(q)})
        analysis.write_histogram_csv(analysis.community_sizes(p), out / f"sizes_{tag}.csv")
        cnet = analysis.community_network(d.graph, p)
        analysis.write_histogram_csv(analysis.degree_histogram(cnet), out / f"community_degree_{tag}.csv",
                                     columns=("degree", "count"))
    write_weights(d.graph, d.pi, out / "weights.txt")
    dump_json(report, out / "summary.json")
    return report


# ---------------------------------------------------------------------------
# bench


def bench_one(spec: PlantedSpec, walks_per_edge: float = BENCH_WALKS_PER_EDGE,
              min_gain: float = MIN_GAIN, workers: int | None = None) -> dict:
    g, truth = planted_partition(spec)
    d = detect(g, seed=spec.seed, walks_per_edge=walks_per_edge, min_gain=min_gain, workers=workers)
    a_plain = analysis.resolution_audit(g, d.plain)
    a_w = analysis.resolution_audit(g, d.weighted)
    return {
        "n": spec.n, "k": spec.k, "avg_degree": spec.avg_degree, "mu": spec.mu, "seed": spec.seed,
        "edges": g.edge_count,
        "nmi_louvain": nmi(d.plain, truth),
        "nmi_rnbrw_louvain": nmi(d.weighted, truth),
        "communities_louvain": d.plain.community_count,
        "communities_rnbrw_louvain": d.weighted.community_count,
        "above_node_threshold_frac_louvain": a_plain["above_node_threshold"] / d.plain.community_count,
        "above_node_threshold_frac_rnbrw_louvain": a_w["above_node_threshold"] / d.weighted.community_count,
    }


def aggregate_bench(rows: Sequence[dict]) -> list[dict]:
    groups: dict[tuple, list[dict]] = {}
    for r in rows:
        groups.setdefault((r["n"], r["avg_degree"], r["mu"]), []).append(r)
    out = []
    for (n, deg, mu), rs in groups.items():
        a = np.array([r["nmi_louvain"] for r in rs])
        b = np.array([r["nmi_rnbrw_louvain"] for r in rs])
        out.append({
            "n": n, "avg_degree": deg, "mu": mu, "runs": len(rs),
            "nmi_louvain_mean": float(a.mean()), "nmi_louvain_sd": float(a.std(ddof=1)) if len(rs) > 1 else 0.0,
            "nmi_rnbrw_louvain_mean": float(b.mean()),
            "nmi_rnbrw_louvain_sd": float(b.std(ddof=1)) if len(rs) > 1 else 0.0,
            "rnbrw_wins": int((b > a).sum()),
        })
    return out


def run_bench(ns: Iterable[int], degree_multiples: Iterable[float], mus: Iterable[float],
              seeds: Iterable[int], k: int | None = None, walks_per_edge: float = BENCH_WALKS_PER_EDGE,
              min_gain: float = MIN_GAIN, workers: int | None = None) -> list[dict]:
    rows = []
    seeds = list(seeds)
    for n in ns:
        for mult in degree_multiples:
            for mu in mus:
                for s in seeds:
                    spec = PlantedSpec.log_degree(n, mult, mu=mu, k=k, seed=s)
                    row = bench_one(spec, walks_per_edge, min_gain, workers)
                    row["degree_multiple"] = mult
                    log.info("bench n=%d d=%.2f mu=%.3f seed=%d: %.3f vs %.3f", n, spec.avg_degree, mu, s,
                             row["nmi_louvain"], row["nmi_rnbrw_louvain"])
                    rows.append(row)
    return rows


def plain_louvain_nmi(spec: PlantedSpec, min_gain: float = MIN_GAIN) -> float:
    g, truth = planted_partition(spec)
    return nmi(best_of(g, 1, seed=derive_seed(spec.seed, "louvain"), min_gain=min_gain), truth)


def tune_mu(n: int, degree_multiple: float = 1.0, target: float = 0.74, seeds: Sequence[int] = (0, 1),
            k: int | None = None, lo: float = 0.05, hi: float = 0.75, iterations: int = 8) -> float:
    """Bisect the mixing level at which plain Louvain's mean NMI hits ``target``."""
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        score = float(np.mean([plain_louvain_nmi(PlantedSpec.log_degree(n, degree_multiple, mid, k, s))
                               for s in seeds]))
        log.info("tune mu=%.4f -> plain NMI %.3f", mid, score)
        if score > target:
            lo = mid
        else:
            hi = mid
    return round(0.5 * (lo + hi), 4)


BENCH_COLUMNS = ["n", "k", "degree_multiple", "avg_degree", "mu", "seed", "edges", "nmi_louvain",
                 "nmi_rnbrw_louvain", "communities_louvain", "communities_rnbrw_louvain",
                 "above_node_threshold_frac_louvain", "above_node_threshold_frac_rnbrw_louvain"]


def write_bench(rows: Sequence[dict], out: Path) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "bench.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=BENCH_COLUMNS, lineterminator="\n", extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    result = {"runs": list(rows), "summary": aggregate_bench(rows)}
    dump_json(result, out / "bench.json")
    return result


# ---------------------------------------------------------------------------
# stats


def _read_countries(path: Path) -> dict[str, str]:
    with open(path, newline="", encoding="utf-8") as fh:
        return {row["login"]: row["country_code"] for row in csv.DictReader(fh)}


def attribute_stats(p: Partition, names: Sequence[str], maps: dict[int, attributes.UserLanguageMap],
                    countries: dict[str, str] | None = None, bonferroni_m: int | None = None,
                    top_k: int = 10, chi_rule: int | None = None) -> dict:
    """Language proportions, distinct-language histograms, pairwise
    Wilcoxon tests between rules, and country-homogeneity chi-square tests."""
    rules = sorted(maps)
    report: dict = {"rules": rules, "proportions": {}, "distinct_languages": {}}
    counts = {}
    for rid in rules:
        m = maps[rid]
        report["proportions"][str(rid)] = attributes.language_proportions(m) if len(m) else {}
        c, unlabeled = attributes.distinct_languages_per_community(p, m, names)
        counts[rid] = (c, unlabeled)
        vals, freq = np.unique(c[~unlabeled], return_counts=True)
        report["distinct_languages"][str(rid)] = {
            "histogram": {str(int(v)): int(f) for v, f in zip(vals, freq)},
            "unlabeled_communities": int(unlabeled.sum()),
        }

    pairs = list(combinations(rules, 2))
    m = bonferroni_m if bonferroni_m is not None else len(pairs)
    tests = []
    for a, b in pairs:
        keep = ~(counts[a][1] & counts[b][1])
        entry = {"rules": [a, b]}
        try:
            res = stats.wilcoxon_signed_rank(counts[a][0][keep], counts[b][0][keep])
            entry.update(statistic=res.statistic, n=res.n, z=res.zstat, p=res.pvalue)
        except stats.InsufficientDataError as exc:
            entry.update(statistic=None, n=0, p=None, error=str(exc))
        tests.append(entry)
    raw = [t["p"] for t in tests if t["p"] is not None]
    adj = iter(stats.bonferroni(raw, max(m, len(raw))).tolist()) if raw else iter(())
    for t in tests:
        t["p_adjusted"] = next(adj) if t["p"] is not None else None
    report["wilcoxon"] = {"bonferroni_m": m, "tests": tests}

    if countries is not None:
        rid = chi_rule if chi_rule is not None else rules[0]
        langs = maps[rid].languages
        users = [i for i, u in enumerate(names) if u in langs and u in countries]
        popular = {}
        for i in users:
            popular[langs[names[i]]] = popular.get(langs[names[i]], 0) + 1
        top = sorted(popular, key=lambda lang: (-popular[lang], lang))[:top_k]
        chi = []
        for lang in top:
            members = [i for i in users if langs[names[i]] == lang]
            table = stats.ContingencyTable.from_pairs([countries[names[i]] for i in members],
                                                      [int(p.labels[i]) for i in members])
            entry = {"language": lang, "users": len(members)}
            try:
                res = stats.chi_square_homogeneity(table)
                entry.update(statistic=res.statistic, dof=res.dof, p=res.pvalue,
                             low_expected_fraction=res.low_expected_fraction)
            except stats.DegenerateTableError as exc:
                entry.update(statistic=None, dof=None, p=None, error=str(exc))
            chi.append(entry)
        report["chi_square"] = {"rule": rid, "tests": chi}
    return report


def run_stats(ingest_dir: Path, partition_path: Path, out: Path, rules: Sequence[int] = (1, 2, 3, 4),
              bonferroni_m: int | None = None, top_k: int = 10, chi_rule: int | None = None) -> dict:
    lang_path = ingest_dir / "languages.csv"
    if not lang_path.is_file():
        raise MissingAttributesError(f"no language table at {lang_path} (run ingest with --languages)")
    if not (ingest_dir / "nodes.tsv").is_file():
        raise InputError(f"no node index at {ingest_dir / 'nodes.tsv'}")
    if not partition_path.is_file():
        raise InputError(f"cannot read partition {partition_path}")
    names = read_node_names(ingest_dir / "nodes.tsv")
    p = read_partition(partition_path)
    if p.node_count != len(names):
        raise InputError(f"partition has {p.node_count} nodes, node index has {len(names)}")
    all_maps = attributes.read_language_csv(lang_path)
    missing = [r for r in rules if r not in all_maps]
    if missing:
        raise MissingAttributesError(f"language table lacks rule(s) {missing}")
    maps = {r: all_maps[r] for r in rules}
    countries = _read_countries(ingest_dir / "countries.csv") if (ingest_dir / "countries.csv").is_file() else None
    report = attribute_stats(p, names, maps, countries, bonferroni_m, top_k, chi_rule)

    out.mkdir(parents=True, exist_ok=True)
    dump_json(report, out / "stats.json")
    with open(out / "language_proportions.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["language"] + [f"rule{r}" for r in maps])
        langs = sorted({lang for r in maps for lang in report["proportions"][str(r)]})
        for lang in langs:
            w.writerow([lang] + [repr(report["proportions"][str(r)].get(lang, 0.0)) for r in maps])
    with open(out / "distinct_languages.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rule_id", "distinct_languages", "communities"])
        for r in maps:
            for k, v in report["distinct_languages"][str(r)]["histogram"].items():
                w.writerow([r, k, v])
    return report


def synth(spec: PlantedSpec, out: Path) -> tuple[Graph, Partition]:
    g, truth = planted_partition(spec)
    out.mkdir(parents=True, exist_ok=True)
    write_edgelist(g, out / "graph.edges", header=f"planted partition {json.dumps(spec.to_dict(), sort_keys=True)}")
    write_partition(truth, out / "truth.txt", header={"ground_truth": "planted blocks"})
    return g, truth

