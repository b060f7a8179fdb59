"""Renewal non-backtracking random walks (RNBRW).

Each walk starts on a uniformly random directed edge and keeps stepping to a
uniformly random neighbour other than the one it just came from. The first
time it steps onto a node it has already visited, the edge used for that
step closed a cycle: it is credited one retrace and the walk ends. Dead ends
and over-long walks end without credit.

Normalised retrace counts estimate each edge's retracing probability; the
collaboration weighting multiplies that by the shared-repository count.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numba
import numpy as np

from .graph import Graph, GraphError, format_weight

log = logging.getLogger(__name__)

WALKS_PER_EDGE = 10


@dataclass(frozen=True)
class RetraceCounts:
    tally: np.ndarray
    total_walks: int
    completed_cycles: int

    def __post_init__(self):
        if int(self.tally.sum()) != self.completed_cycles:
            raise ValueError("tally does not sum to completed_cycles")
        if self.completed_cycles > self.total_walks:
            raise ValueError("more completed cycles than walks")

    def merge(self, other: "RetraceCounts") -> "RetraceCounts":
        return RetraceCounts(self.tally + other.tally,
                             self.total_walks + other.total_walks,
                             self.completed_cycles + other.completed_cycles)


@dataclass(frozen=True)
class EdgeWeights:
    values: np.ndarray
    kind: str  # "pi" or "csrnbrw"

    def __len__(self):
        return int(self.values.shape[0])


@numba.njit(nogil=True, cache=True)
def _walk_kernel(indptr, nbr, eid, src, dst, n_walks, seed, max_steps, tally):
    np.random.seed(seed)
    n = indptr.shape[0] - 1
    m = src.shape[0]
    stamp = np.zeros(n, dtype=np.int64)
    completed = 0
    for t in range(n_walks):
        mark = t + 1
        e = np.random.randint(0, m)
        if np.random.randint(0, 2) == 0:
            prev, cur = src[e], dst[e]
        else:
            prev, cur = dst[e], src[e]
        stamp[prev] = mark
        stamp[cur] = mark
        steps = 1
        while steps < max_steps:
            lo = indptr[cur]
            deg = indptr[cur + 1] - lo
            if deg < 2:
                break  # dead end: the only neighbour is where we came from
            while True:
                k = lo + np.random.randint(0, deg)
                if nbr[k] != prev:
                    break
            nxt = nbr[k]
            steps += 1
            if stamp[nxt] == mark:
                tally[eid[k]] += 1
                completed += 1
                break
            stamp[nxt] = mark
            prev = cur
            cur = nxt
    return completed


def worker_seeds(seed: int, workers: int) -> list[int]:
    """Independent 32-bit stream seeds, one per worker, from one master seed."""
    children = np.random.SeedSequence(seed).spawn(workers)
    return [int(c.generate_state(1, dtype=np.uint32)[0]) for c in children]


def default_workers() -> int:
    return int(os.environ.get("CSRNBRW_WORKERS", "1"))


def run_walks(g: Graph, total_walks: int | None = None, seed: int = 0,
              max_steps: int | None = None, workers: int | None = None) -> RetraceCounts:
    """Run ``total_walks`` RNBRW walks and tally the cycle-closing edges.

    The walk budget is split across ``workers`` threads, each with its own
    seeded stream; results depend only on ``(seed, workers)``.
    """
    if g.edge_count == 0:
        raise GraphError("random walks need at least one edge")
    if total_walks is None:
        total_walks = WALKS_PER_EDGE * g.edge_count
    if total_walks < 1:
        raise ValueError("total_walks must be >= 1")
    if max_steps is None:
        max_steps = g.node_count
    workers = workers or default_workers()
    workers = max(1, min(workers, total_walks))

    shares = [total_walks // workers + (1 if i < total_walks % workers else 0)
              for i in range(workers)]
    seeds = worker_seeds(seed, workers)
    tallies = [np.zeros(g.edge_count, dtype=np.int64) for _ in range(workers)]

    def job(i):
        return _walk_kernel(g.indptr, g.nbr, g.eid, g.src, g.dst,
                            shares[i], seeds[i], max_steps, tallies[i])

    if workers == 1:
        completed = [job(0)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            completed = list(pool.map(job, range(workers)))

    counts = RetraceCounts(np.sum(tallies, axis=0), total_walks, int(sum(completed)))
    log.debug("rnbrw: %d walks, %d cycles closed", total_walks, counts.completed_cycles)
    return counts


def retrace_probabilities(c: RetraceCounts) -> EdgeWeights:
    if c.completed_cycles == 0:
        return EdgeWeights(np.zeros(c.tally.shape[0]), "pi")
    return EdgeWeights(c.tally / c.completed_cycles, "pi")


def csrnbrw_weights(pi: EdgeWeights, g: Graph) -> EdgeWeights:
    """Retracing probability times collaboration strength, edge by edge."""
    if pi.kind != "pi":
        raise ValueError(f"expected retracing probabilities, got {pi.kind!r} weights")
    if len(pi) != g.edge_count:
        raise GraphError(f"{len(pi)} retracing weights for a graph with {g.edge_count} edges")
    return EdgeWeights(pi.values * g.weight, "csrnbrw")


def csrnbrw_graph(g: Graph, total_walks: int | None = None, seed: int = 0,
                  workers: int | None = None) -> tuple[Graph, EdgeWeights]:
    """Reweight ``g`` (carrying shared-repo counts) with CSRNBRW weights."""
    pi = retrace_probabilities(run_walks(g, total_walks, seed, workers=workers))
    return g.with_weights(csrnbrw_weights(pi, g).values), pi


def write_weights(g: Graph, pi: EdgeWeights, path: str | Path) -> None:
    """Audit dump: ``u v pi sc csrnbrw`` per edge."""
    cs = csrnbrw_weights(pi, g).values
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# u v pi sc csrnbrw\n")
        for e, (u, v, sc) in enumerate(g.edges()):
            fh.write(f"{u} {v} {repr(float(pi.values[e]))} {format_weight(sc)} {repr(float(cs[e]))}\n")
