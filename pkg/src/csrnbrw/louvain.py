"""Weighted modularity, the two-phase Louvain heuristic, and NMI."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Graph, UndefinedMetricError
from .partition import Partition

MIN_GAIN = 1e-7
_TIE = 1e-15


def modularity(g: Graph, p: Partition) -> float:
    if p.node_count != g.node_count:
        raise ValueError(f"partition covers {p.node_count} nodes, graph has {g.node_count}")
    m = g.total_weight()
    if m <= 0:
        raise UndefinedMetricError("modularity is undefined for zero total edge weight")
    lab = p.labels
    intra = float(g.weight[lab[g.src] == lab[g.dst]].sum())
    tot = np.bincount(lab, weights=g.strength(), minlength=p.community_count)
    return intra / m - float((tot ** 2).sum()) / (4.0 * m * m)


@dataclass
class Network:
    """Weighted graph that may carry self-loops, as produced by aggregation.

    ``adj[i]`` maps neighbour -> weight (no self entries); ``loops[i]`` is the
    diagonal adjacency entry, i.e. twice the weight folded into node ``i``.
    """

    adj: list[dict[int, float]]
    loops: np.ndarray

    @property
    def node_count(self) -> int:
        return len(self.adj)

    @classmethod
    def from_graph(cls, g: Graph) -> "Network":
        adj: list[dict[int, float]] = [{} for _ in range(g.node_count)]
        for u, v, w in g.edges():
            adj[u][v] = w
            adj[v][u] = w
        return cls(adj, np.zeros(g.node_count))

    def strength(self) -> np.ndarray:
        return np.array([sum(a.values()) for a in self.adj]) + self.loops

    def modularity(self, labels) -> float:
        labels = np.asarray(labels)
        k = self.strength()
        two_m = float(k.sum())
        if two_m <= 0:
            raise UndefinedMetricError("modularity is undefined for zero total edge weight")
        inside = float(self.loops.sum())
        for i, a in enumerate(self.adj):
            li = labels[i]
            inside += sum(w for j, w in a.items() if labels[j] == li)
        tot = np.bincount(labels, weights=k)
        return inside / two_m - float((tot ** 2).sum()) / (two_m * two_m)


def aggregate(net: Network, labels) -> Network:
    """Collapse each community of ``labels`` (dense ids) into one node."""
    labels = np.asarray(labels)
    c = int(labels.max()) + 1 if labels.size else 0
    adj: list[dict[int, float]] = [{} for _ in range(c)]
    loops = np.zeros(c)
    np.add.at(loops, labels, net.loops)
    for i, a in enumerate(net.adj):
        ci = int(labels[i])
        row = adj[ci]
        for j, w in a.items():
            cj = int(labels[j])
            if cj == ci:
                loops[ci] += w  # visited from both endpoints: lands as 2x internal weight
            else:
                row[cj] = row.get(cj, 0.0) + w
    return Network(adj, loops)


def _one_level(net: Network, rng: np.random.Generator, min_gain: float):
    """Local-move phase. Returns (dense community labels, modularity gain)."""
    n = net.node_count
    k = net.strength()
    two_m = float(k.sum())
    # normalise so that 2m == 1; gains below are in those units
    k = (k / two_m).tolist()
    adj = [{j: w / two_m for j, w in a.items()} for a in net.adj]
    comm = list(range(n))
    tot = list(k)
    total_gain = 0.0

    while True:
        sweep_gain = 0.0
        moved = False
        for i in rng.permutation(n).tolist():
            ki = k[i]
            ci = comm[i]
            links: dict[int, float] = {}
            for j, w in adj[i].items():
                cj = comm[j]
                links[cj] = links.get(cj, 0.0) + w
            tot[ci] -= ki
            best_c = ci
            best = links.get(ci, 0.0) - ki * tot[ci]
            stay = best
            for c in sorted(links):
                gain = links[c] - ki * tot[c]
                if gain > best + _TIE:
                    best, best_c = gain, c
            tot[best_c] += ki
            if best_c != ci:
                comm[i] = best_c
                moved = True
                sweep_gain += 2.0 * (best - stay)
        total_gain += sweep_gain
        if not moved or sweep_gain < min_gain:
            break

    return Partition(comm).labels, total_gain


def louvain(g: Graph, seed: int = 0, min_gain: float = MIN_GAIN) -> Partition:
    """Louvain modularity optimisation on the edge weights of ``g``.

    Node visiting order is a fresh seeded shuffle each sweep; a node moves to
    the neighbouring community with the largest strictly positive gain (lowest
    community id on ties). Phases of local moves and aggregation repeat until a
    phase gains less than ``min_gain``. Zero-strength nodes never move.
    """
    if g.total_weight() <= 0:
        raise UndefinedMetricError("louvain needs positive total edge weight")
    rng = np.random.default_rng(seed)
    net = Network.from_graph(g)
    membership = np.arange(g.node_count)
    while True:
        labels, gain = _one_level(net, rng, min_gain)
        if labels.max() + 1 < net.node_count:
            membership = labels[membership]
            net = aggregate(net, labels)
        if gain < min_gain or net.node_count == 1:
            break
    return Partition(membership)


def best_of(g: Graph, runs: int, seed: int = 0, min_gain: float = MIN_GAIN) -> Partition:
    """Highest-modularity partition over ``runs`` seeded Louvain runs."""
    seeds = np.random.SeedSequence(seed).generate_state(runs, dtype=np.uint32).tolist()
    best, best_q = None, -np.inf
    for s in ([seed] if runs == 1 else seeds):
        p = louvain(g, seed=s, min_gain=min_gain)
        q = modularity(g, p)
        if q > best_q:
            best, best_q = p, q
    return best


def nmi(a: Partition, b: Partition) -> float:
    """Normalised mutual information, 2 I(A;B) / (H(A) + H(B))."""
    if a.node_count != b.node_count:
        raise ValueError(f"partitions cover {a.node_count} and {b.node_count} nodes")
    n = a.node_count
    if a == b:
        return 1.0
    pairs, counts = np.unique(np.stack([a.labels, b.labels]), axis=1, return_counts=True)
    pa = np.bincount(a.labels) / n
    pb = np.bincount(b.labels) / n
    ha = -float((pa * np.log(pa)).sum())
    hb = -float((pb * np.log(pb)).sum())
    if ha + hb == 0:
        return 1.0
    pab = counts / n
    mi = float((pab * np.log(pab / (pa[pairs[0]] * pb[pairs[1]]))).sum())
    return min(1.0, max(0.0, 2.0 * mi / (ha + hb)))
