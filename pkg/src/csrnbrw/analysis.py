"""Post-detection analytics: size histograms, the community network,
power-law fits, resolution-limit audit, Dunbar-range coverage."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import zeta

from .graph import Graph, graph_from_arrays
from .partition import Partition

MIN_FIT_SAMPLES = 50


class FitError(ValueError):
    pass


def community_sizes(p: Partition) -> dict[int, int]:
    """Map community size -> number of communities of that size."""
    sizes, counts = np.unique(p.sizes(), return_counts=True)
    return {int(s): int(c) for s, c in zip(sizes, counts)}


def community_network(g: Graph, p: Partition) -> Graph:
    """Quotient graph: one node per community, edge weight = total weight of
    original edges running between the two communities."""
    if p.node_count != g.node_count:
        raise ValueError("partition does not cover the graph")
    cu = p.labels[g.src]
    cv = p.labels[g.dst]
    cross = (cu != cv) & (g.weight > 0)
    return graph_from_arrays(cu[cross], cv[cross], g.weight[cross], node_count=p.community_count)


@dataclass(frozen=True)
class PowerLawFit:
    alpha: float
    xmin: int
    ks_distance: float
    n_tail: int
    n: int

    def to_dict(self) -> dict:
        return asdict(self)


def _discrete_mle(log_sum: float, n_tail: int, xmin: int) -> float:
    """Maximise  -n ln zeta(a, xmin) - a sum(ln x)  over a > 1."""
    guess = 1.0 + n_tail / (log_sum - n_tail * math.log(xmin - 0.5))

    def nll(a):
        return n_tail * math.log(zeta(a, xmin)) + a * log_sum

    hi = max(guess * 2.0, 6.0)
    res = minimize_scalar(nll, bounds=(1.0 + 1e-6, hi), method="bounded",
                          options={"xatol": 1e-7})
    return float(res.x)


def fit_power_law(samples: Sequence[int], xmin: int | None = None) -> PowerLawFit:
    """Discrete power-law fit.

    For each candidate lower cutoff the exponent is the discrete maximum
    likelihood estimate (Hurwitz-zeta normalisation, started from the
    ``1 + n / sum ln(x / (xmin - 1/2))`` approximation); the cutoff kept is the
    one whose fitted tail is closest to the empirical tail in Kolmogorov-Smirnov
    distance. Candidate cutoffs must leave at least 50 samples in the tail.
    """
    x = np.sort(np.asarray(samples, dtype=np.int64))
    if x.shape[0] < MIN_FIT_SAMPLES:
        raise FitError(f"power-law fit needs at least {MIN_FIT_SAMPLES} samples, got {x.shape[0]}")
    if (x < 1).any():
        raise FitError("samples must be positive integers")
    if x[0] == x[-1]:
        raise FitError(f"all {x.shape[0]} samples equal {x[0]}; no exponent to fit")

    n = x.shape[0]
    uniq, first = np.unique(x, return_index=True)
    logs = np.log(x)
    # suffix sums of ln x starting at each unique value
    tail_log = np.cumsum(logs[::-1])[::-1]

    if xmin is not None:
        cands = [int(np.searchsorted(uniq, xmin))]
    else:
        cands = [i for i in range(uniq.shape[0] - 1) if n - first[i] >= MIN_FIT_SAMPLES]
        if not cands:
            cands = [0]

    best = None
    for ci in cands:
        xm = int(uniq[ci])
        start = int(first[ci])
        n_tail = n - start
        alpha = _discrete_mle(float(tail_log[start]), n_tail, xm)
        vals = uniq[ci:]
        # empirical and fitted P(X >= v) on the tail's support
        emp = (n - first[ci:]) / n_tail
        fit = zeta(alpha, vals) / zeta(alpha, xm)
        # CDF jumps at each support point; compare both sides of each jump
        emp_next = np.append(emp[1:], 0.0)
        fit_next = zeta(alpha, vals + 1) / zeta(alpha, xm)
        ks = float(max(np.abs(emp - fit).max(), np.abs(emp_next - fit_next).max()))
        if best is None or ks < best.ks_distance:
            best = PowerLawFit(alpha, xm, ks, n_tail, n)
    return best


def resolution_audit(g: Graph, p: Partition) -> dict:
    """Count communities beyond the resolution-limit scales
    sqrt(|E|/2) nodes and sqrt(2|E|) internal edges."""
    m = g.edge_count
    node_thr = math.sqrt(m / 2)
    edge_thr = math.sqrt(2 * m)
    sizes = p.sizes()
    same = p.labels[g.src] == p.labels[g.dst]
    internal = np.bincount(p.labels[g.src][same], minlength=p.community_count)
    c = max(p.community_count, 1)
    above_nodes = int((sizes > node_thr).sum())
    above_edges = int((internal > edge_thr).sum())
    return {
        "edges": m,
        "communities": p.community_count,
        "node_threshold": node_thr,
        "edge_threshold": edge_thr,
        "above_node_threshold": above_nodes,
        "above_edge_threshold": above_edges,
        "above_node_threshold_pct": 100.0 * above_nodes / c,
        "above_edge_threshold_pct": 100.0 * above_edges / c,
    }


def size_set_similarity(a: Mapping[int, int], b: Mapping[int, int]) -> float:
    """Multiset Jaccard between two size histograms."""
    keys = set(a) | set(b)
    top = sum(min(a.get(s, 0), b.get(s, 0)) for s in keys)
    bottom = sum(max(a.get(s, 0), b.get(s, 0)) for s in keys)
    return 1.0 if bottom == 0 else top / bottom


def dunbar_coverage(p: Partition, lo: int = 3, hi: int = 150) -> float:
    """Fraction of nodes sitting in communities with lo <= size <= hi."""
    if lo > hi:
        raise ValueError(f"lo={lo} exceeds hi={hi}")
    if p.node_count == 0:
        return 0.0
    sizes = p.sizes()[p.labels]
    return float(((sizes >= lo) & (sizes <= hi)).sum() / p.node_count)


def write_histogram_csv(hist: Mapping[int, int], path: str | Path,
                        columns: tuple[str, str] = ("size", "count")) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for k in sorted(hist):
            w.writerow([k, hist[k]])


def degree_histogram(g: Graph) -> dict[int, int]:
    deg, counts = np.unique(g.degree(), return_counts=True)
    return {int(d): int(c) for d, c in zip(deg, counts)}
