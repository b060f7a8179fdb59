"""Balanced planted-partition graphs with a single mixing parameter."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .graph import Graph, graph_from_arrays
from .partition import Partition


class InfeasibleSpecError(ValueError):
    pass


@dataclass(frozen=True)
class PlantedSpec:
    n: int
    k: int
    avg_degree: float
    mu: float
    seed: int = 0

    def __post_init__(self):
        if not (self.n >= self.k >= 2):
            raise InfeasibleSpecError(f"need n >= k >= 2, got n={self.n}, k={self.k}")
        if not (0 < self.avg_degree < self.n):
            raise InfeasibleSpecError(f"avg_degree must lie in (0, n), got {self.avg_degree}")
        if not (0 <= self.mu < 1):
            raise InfeasibleSpecError(f"mu must lie in [0, 1), got {self.mu}")

    @classmethod
    def log_degree(cls, n: int, multiple: float = 1.0, mu: float = 0.3,
                   k: int | None = None, seed: int = 0) -> "PlantedSpec":
        """Spec with mean degree ``multiple * ln n`` and ~100-node blocks by default."""
        return cls(n, k or max(2, n // 100), multiple * math.log(n), mu, seed)

    def block_sizes(self) -> np.ndarray:
        base, extra = divmod(self.n, self.k)
        return np.array([base + 1] * extra + [base] * (self.k - extra), dtype=np.int64)

    def probabilities(self) -> tuple[float, float]:
        """(p_in, p_out) giving expected intra-degree d(1-mu), inter-degree d*mu."""
        s = self.n / self.k
        p_in = self.avg_degree * (1 - self.mu) / (s - 1)
        p_out = self.avg_degree * self.mu / (self.n - s)
        if p_in > 1 or p_out > 1:
            raise InfeasibleSpecError(f"edge probability above 1 (p_in={p_in:.3f}, p_out={p_out:.3f})")
        return p_in, p_out

    def to_dict(self) -> dict:
        return asdict(self)


def _distinct_pairs(rng, count, draw, accept, n):
    """``count`` distinct unordered pairs from ``draw``, keeping those passing ``accept``."""
    keys: dict[int, None] = {}
    while len(keys) < count:
        need = count - len(keys)
        a, b = draw(max(2 * need, 64))
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        ok = (lo != hi) & accept(lo, hi)
        for key in (lo[ok] * n + hi[ok]).tolist():
            if key not in keys:
                keys[key] = None
                if len(keys) == count:
                    break
    arr = np.fromiter(keys, dtype=np.int64, count=len(keys))
    return arr // n, arr % n


def planted_partition(spec: PlantedSpec) -> tuple[Graph, Partition]:
    """Sample a planted-partition graph (unit weights) and its ground truth.

    Blocks are contiguous node ranges. Each block receives a binomial number of
    distinct uniformly chosen internal pairs, and the graph a binomial number
    of distinct uniformly chosen cross-block pairs, which is equivalent to
    independent Bernoulli edges with ``p_in`` / ``p_out``.
    """
    p_in, p_out = spec.probabilities()
    rng = np.random.default_rng(spec.seed)
    n = spec.n
    sizes = spec.block_sizes()
    starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    block = np.repeat(np.arange(spec.k), sizes)

    us, vs = [], []
    for b in range(spec.k):
        s, off = int(sizes[b]), int(starts[b])
        pairs = s * (s - 1) // 2
        m_b = int(rng.binomial(pairs, p_in))
        if m_b == 0:
            continue
        if m_b > pairs // 2:
            # dense block: enumerate every pair and choose
            iu, ju = np.triu_indices(s, 1)
            pick = rng.choice(pairs, size=m_b, replace=False)
            us.append(iu[pick] + off)
            vs.append(ju[pick] + off)
            continue
        u, v = _distinct_pairs(
            rng, m_b, lambda size, s=s, off=off: (rng.integers(0, s, size) + off, rng.integers(0, s, size) + off),
            lambda lo, hi: np.ones(lo.shape[0], dtype=bool), n)
        us.append(u)
        vs.append(v)

    cross_pairs = n * (n - 1) // 2 - int((sizes * (sizes - 1) // 2).sum())
    m_out = int(rng.binomial(cross_pairs, p_out)) if p_out > 0 else 0
    if m_out:
        if m_out > cross_pairs // 2:
            raise InfeasibleSpecError("cross-block density too high for sparse sampling")
        u, v = _distinct_pairs(
            rng, m_out, lambda size: (rng.integers(0, n, size), rng.integers(0, n, size)),
            lambda lo, hi: block[lo] != block[hi], n)
        us.append(u)
        vs.append(v)

    u = np.concatenate(us) if us else np.zeros(0, dtype=np.int64)
    v = np.concatenate(vs) if vs else np.zeros(0, dtype=np.int64)
    g = graph_from_arrays(u, v, np.ones(u.shape[0]), node_count=n)
    return g, Partition(block)
