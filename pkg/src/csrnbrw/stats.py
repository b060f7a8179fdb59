"""Wilcoxon signed-rank, chi-square homogeneity, Bonferroni."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np
from scipy.stats import chi2, norm, rankdata

MIN_PAIRS = 6


class InsufficientDataError(ValueError):
    pass


class DegenerateTableError(ValueError):
    pass


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float
    pvalue: float
    n: int
    zstat: float


EXACT_MAX_N = 25


def _signed_rank_null_cdf(n: int) -> np.ndarray:
    """P(W+ <= w) for w = 0..n(n+1)/2 under the null, integer ranks 1..n."""
    top = n * (n + 1) // 2
    ways = np.zeros(top + 1)
    ways[0] = 1.0
    for r in range(1, n + 1):
        ways[r:] = ways[r:] + ways[:-r].copy()
    return np.cumsum(ways) / 2.0 ** n


def wilcoxon_signed_rank(x, y, method: str = "auto") -> WilcoxonResult:
    """Two-sided Wilcoxon signed-rank test of paired samples.

    Zero differences are discarded and tied |d| get midranks; W = min(W+, W-).
    ``method="approx"`` uses the normal approximation with tie-corrected
    variance and a 0.5 continuity correction. ``"exact"`` uses the exact null
    distribution and needs tie-free |d|. ``"auto"`` picks exact for tie-free
    samples of at most 25 pairs, the approximation otherwise.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError("paired samples differ in length")
    d = x - y
    d = d[d != 0]
    n = d.shape[0]
    if n < MIN_PAIRS:
        raise InsufficientDataError(f"{n} non-zero differences; need at least {MIN_PAIRS}")
    ranks = rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    w = min(w_plus, w_minus)

    mean = n * (n + 1) / 4.0
    _, ties = np.unique(np.abs(d), return_counts=True)
    tied = bool((ties > 1).any())
    var = n * (n + 1) * (2 * n + 1) / 24.0 - float((ties ** 3 - ties).sum()) / 48.0
    if var <= 0:
        raise InsufficientDataError("zero variance in signed ranks")
    z = min(0.0, w - mean + 0.5) / math.sqrt(var)

    if method == "auto":
        method = "exact" if (not tied and n <= EXACT_MAX_N) else "approx"
    if method == "exact":
        if tied:
            raise ValueError("exact signed-rank p-values need tie-free |differences|")
        p = min(1.0, 2.0 * float(_signed_rank_null_cdf(n)[int(w)]))
    elif method == "approx":
        p = min(1.0, 2.0 * float(norm.cdf(z)))
    else:
        raise ValueError(f"unknown method {method!r}")
    return WilcoxonResult(w, p, n, z)


@dataclass
class ContingencyTable:
    rows: list
    columns: list
    counts: np.ndarray

    @classmethod
    def from_pairs(cls, categories: Sequence[Hashable], groups: Sequence[Hashable]) -> "ContingencyTable":
        """Cross-tabulate paired observations (e.g. country, community)."""
        rows = sorted(set(categories), key=str)
        cols = sorted(set(groups), key=str)
        ri = {r: i for i, r in enumerate(rows)}
        ci = {c: i for i, c in enumerate(cols)}
        counts = np.zeros((len(rows), len(cols)), dtype=np.int64)
        for a, b in zip(categories, groups):
            counts[ri[a], ci[b]] += 1
        return cls(rows, cols, counts)

    def pruned(self) -> "ContingencyTable":
        keep_r = np.flatnonzero(self.counts.sum(axis=1) > 0)
        keep_c = np.flatnonzero(self.counts.sum(axis=0) > 0)
        return ContingencyTable([self.rows[i] for i in keep_r], [self.columns[j] for j in keep_c],
                                self.counts[np.ix_(keep_r, keep_c)])


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    dof: int
    pvalue: float
    low_expected_fraction: float  # share of cells with expected count < 5


def chi_square_homogeneity(t: ContingencyTable | np.ndarray) -> ChiSquareResult:
    if not isinstance(t, ContingencyTable):
        arr = np.asarray(t)
        t = ContingencyTable(list(range(arr.shape[0])), list(range(arr.shape[1])), arr)
    t = t.pruned()
    obs = t.counts.astype(np.float64)
    r, c = obs.shape
    if r < 2 or c < 2:
        raise DegenerateTableError(f"table is {r}x{c} after dropping empty rows/columns")
    expected = np.outer(obs.sum(axis=1), obs.sum(axis=0)) / obs.sum()
    stat = float(((obs - expected) ** 2 / expected).sum())
    dof = (r - 1) * (c - 1)
    return ChiSquareResult(stat, dof, float(chi2.sf(stat, dof)), float((expected < 5).mean()))


def bonferroni(p_values, m: int | None = None) -> np.ndarray:
    p = np.asarray(p_values, dtype=np.float64)
    m = p.shape[0] if m is None else m
    if m < p.shape[0]:
        raise ValueError(f"m={m} is smaller than the number of p-values ({p.shape[0]})")
    return np.minimum(1.0, p * m)
