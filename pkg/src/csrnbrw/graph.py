"""Undirected weighted sparse graph plus the descriptive metrics used on
collaboration networks (density, transitivity, components)."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .partition import Partition


class GraphError(ValueError):
    """Invalid graph input (self-loops, bad endpoints, malformed files)."""


class UndefinedMetricError(ValueError):
    """A metric was requested on a graph where it has no meaning."""


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable undirected graph in CSR form.

    ``src[e] < dst[e]`` for every edge ``e``; ``weight[e]`` holds whatever the
    current pipeline stage puts there (shared-repo counts, retracing
    probabilities or their product). ``indptr``/``nbr``/``eid`` give, for
    node ``u``, its neighbours ``nbr[indptr[u]:indptr[u+1]]`` and the matching
    edge ids.
    """

    node_count: int
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray
    indptr: np.ndarray = field(repr=False)
    nbr: np.ndarray = field(repr=False)
    eid: np.ndarray = field(repr=False)
    names: tuple[str, ...] | None = None

    @property
    def edge_count(self) -> int:
        return int(self.src.shape[0])

    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    def strength(self) -> np.ndarray:
        """Weighted degree of every node."""
        s = np.zeros(self.node_count)
        np.add.at(s, self.src, self.weight)
        np.add.at(s, self.dst, self.weight)
        return s

    def neighbors(self, u: int) -> np.ndarray:
        return self.nbr[self.indptr[u]:self.indptr[u + 1]]

    def total_weight(self) -> float:
        return float(self.weight.sum())

    def with_weights(self, weight: np.ndarray) -> "Graph":
        """Same topology, new edge weights."""
        weight = np.asarray(weight, dtype=np.float64)
        if weight.shape != self.weight.shape:
            raise GraphError(
                f"weight vector has {weight.shape[0]} entries, graph has {self.edge_count} edges"
            )
        if (weight < 0).any():
            raise GraphError("edge weights must be non-negative")
        return _freeze(
            Graph(self.node_count, self.src, self.dst, weight.copy(),
                  self.indptr, self.nbr, self.eid, self.names)
        )

    def label(self, u: int) -> str:
        return self.names[u] if self.names is not None else str(u)

    def edges(self) -> Iterable[tuple[int, int, float]]:
        for u, v, w in zip(self.src.tolist(), self.dst.tolist(), self.weight.tolist()):
            yield u, v, w


def _freeze(g: Graph) -> Graph:
    for arr in (g.src, g.dst, g.weight, g.indptr, g.nbr, g.eid):
        arr.setflags(write=False)
    return g


def build_graph(edge_list: Iterable[Sequence], node_count: int | None = None,
                names: Sequence[str] | None = None) -> Graph:
    """Build a graph from ``(u, v, w)`` triples.

    Duplicate pairs (in either orientation) are merged by summing their
    weights. ``node_count`` defaults to ``max id + 1``.
    """
    triples = [tuple(t) for t in edge_list]
    if triples:
        arr_u = np.fromiter((int(t[0]) for t in triples), dtype=np.int64, count=len(triples))
        arr_v = np.fromiter((int(t[1]) for t in triples), dtype=np.int64, count=len(triples))
        arr_w = np.fromiter((float(t[2]) if len(t) > 2 else 1.0 for t in triples),
                            dtype=np.float64, count=len(triples))
    else:
        arr_u = arr_v = np.zeros(0, dtype=np.int64)
        arr_w = np.zeros(0, dtype=np.float64)
    return graph_from_arrays(arr_u, arr_v, arr_w, node_count=node_count, names=names)


def graph_from_arrays(u: np.ndarray, v: np.ndarray, w: np.ndarray | None = None,
                      node_count: int | None = None,
                      names: Sequence[str] | None = None) -> Graph:
    u = np.asarray(u, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    w = np.ones(u.shape[0]) if w is None else np.asarray(w, dtype=np.float64)
    if not (u.shape == v.shape == w.shape):
        raise GraphError("endpoint and weight arrays differ in length")

    loops = np.flatnonzero(u == v)
    if loops.size:
        node = int(u[loops[0]])
        raise GraphError(f"self-loop on node {node}")
    if u.size and min(u.min(), v.min()) < 0:
        raise GraphError("negative node id")
    if (w < 0).any() or not np.isfinite(w).all():
        raise GraphError("edge weights must be finite and non-negative")

    if node_count is None:
        node_count = int(max(u.max(), v.max())) + 1 if u.size else 0
    elif u.size and max(u.max(), v.max()) >= node_count:
        raise GraphError(f"edge endpoint out of range for {node_count} nodes")
    if names is not None:
        names = tuple(names)
        if len(names) != node_count:
            raise GraphError(f"{len(names)} names for {node_count} nodes")

    lo = np.minimum(u, v)
    hi = np.maximum(u, v)
    if lo.size:
        key = lo * node_count + hi
        uniq, inverse = np.unique(key, return_inverse=True)
        merged = np.zeros(uniq.shape[0])
        np.add.at(merged, inverse, w)
        lo, hi, w = uniq // node_count, uniq % node_count, merged

    # CSR: each edge appears twice, once per endpoint
    m = lo.shape[0]
    heads = np.concatenate([lo, hi])
    tails = np.concatenate([hi, lo])
    ids = np.concatenate([np.arange(m), np.arange(m)])
    order = np.lexsort((tails, heads))
    indptr = np.zeros(node_count + 1, dtype=np.int64)
    np.add.at(indptr, heads + 1, 1)
    indptr = np.cumsum(indptr)
    return _freeze(Graph(node_count, lo.astype(np.int64), hi.astype(np.int64), w.astype(np.float64),
                         indptr, tails[order].astype(np.int64), ids[order].astype(np.int64), names))


def empty_graph(n: int) -> Graph:
    return build_graph([], node_count=n)


def density(g: Graph) -> float:
    n = g.node_count
    if n < 2:
        raise UndefinedMetricError(f"density needs at least 2 nodes, graph has {n}")
    return 2.0 * g.edge_count / (n * (n - 1))


def triangle_count(g: Graph) -> int:
    """Count triangles by intersecting forward neighbour sets (u < v < w)."""
    fwd = [set(int(x) for x in g.neighbors(u) if x > u) for u in range(g.node_count)]
    total = 0
    for u in range(g.node_count):
        for v in fwd[u]:
            total += len(fwd[u] & fwd[v])
    return total


def transitivity(g: Graph) -> float:
    deg = g.degree().astype(np.float64)
    triplets = float((deg * (deg - 1) / 2).sum())
    if triplets == 0:
        return 0.0
    return 3.0 * triangle_count(g) / triplets


def connected_components(g: Graph) -> Partition:
    """Label nodes by component, components numbered in order of their
    smallest node id."""
    labels = np.full(g.node_count, -1, dtype=np.int64)
    comp = 0
    for start in range(g.node_count):
        if labels[start] >= 0:
            continue
        labels[start] = comp
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for x in g.neighbors(u):
                if labels[x] < 0:
                    labels[x] = comp
                    queue.append(int(x))
        comp += 1
    return Partition(labels)


def remove_isolates(g: Graph) -> tuple[Graph, np.ndarray]:
    """Drop zero-degree nodes.

    Returns the reduced graph and ``remap`` with ``remap[new_id] = old_id``.
    """
    keep = np.flatnonzero(g.degree() > 0)
    return induced_subgraph(g, keep)


def induced_subgraph(g: Graph, nodes: np.ndarray) -> tuple[Graph, np.ndarray]:
    """Subgraph on ``nodes`` (relabelled in ascending old-id order)."""
    nodes = np.unique(np.asarray(nodes, dtype=np.int64))
    new_id = np.full(g.node_count, -1, dtype=np.int64)
    new_id[nodes] = np.arange(nodes.shape[0])
    mask = (new_id[g.src] >= 0) & (new_id[g.dst] >= 0)
    names = None if g.names is None else [g.names[i] for i in nodes.tolist()]
    sub = graph_from_arrays(new_id[g.src[mask]], new_id[g.dst[mask]], g.weight[mask],
                            node_count=nodes.shape[0], names=names)
    return sub, nodes


# ---------------------------------------------------------------------------
# edge-list text format: "u v w" per line, '#' comments


def read_edgelist(path: str | Path, node_count: int | None = None,
                  names: Sequence[str] | None = None) -> Graph:
    """Read ``u v [w]`` lines. A leading ``# nodes N`` comment (as written by
    :func:`write_edgelist`) fixes the node count so isolates survive."""
    us, vs, ws = [], [], []
    declared = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                head = line[1:].split()
                if declared is None and len(head) >= 2 and head[0] == "nodes" and head[1].isdigit():
                    declared = int(head[1])
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise GraphError(f"{path}:{lineno}: expected 'u v [w]', got {line!r}")
            try:
                us.append(int(parts[0]))
                vs.append(int(parts[1]))
                ws.append(float(parts[2]) if len(parts) == 3 else 1.0)
            except ValueError as exc:
                raise GraphError(f"{path}:{lineno}: {exc}") from None
    if node_count is None:
        node_count = declared if names is None else len(names)
    return graph_from_arrays(np.array(us, dtype=np.int64), np.array(vs, dtype=np.int64),
                             np.array(ws, dtype=np.float64), node_count=node_count, names=names)


def format_weight(w: float) -> str:
    return str(int(w)) if float(w).is_integer() else repr(float(w))


def write_edgelist(g: Graph, path: str | Path, header: str | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# nodes {g.node_count} edges {g.edge_count}\n")
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        for u, v, w in g.edges():
            fh.write(f"{u} {v} {format_weight(w)}\n")


def read_node_names(path: str | Path) -> list[str]:
    """Read a ``node_id<TAB>login`` table written by :func:`write_node_names`."""
    names: dict[int, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip() or line.startswith("#"):
                continue
            idx, name = line.rstrip("\n").split("\t", 1)
            names[int(idx)] = name
    if sorted(names) != list(range(len(names))):
        raise GraphError(f"{path}: node ids are not contiguous")
    return [names[i] for i in range(len(names))]


def write_node_names(g: Graph, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# node_id\tlogin\n")
        for i in range(g.node_count):
            fh.write(f"{i}\t{g.label(i)}\n")


def summary(g: Graph) -> dict:
    """Descriptive statistics of a collaboration network."""
    comps = connected_components(g)
    sizes = np.bincount(comps.labels) if g.node_count else np.zeros(0, dtype=np.int64)
    out = {
        "nodes": g.node_count,
        "edges": g.edge_count,
        "density": density(g) if g.node_count >= 2 else None,
        "transitivity": transitivity(g),
        "average_degree": 2.0 * g.edge_count / g.node_count if g.node_count else 0.0,
        "components": comps.community_count,
        "largest_component_fraction": float(sizes.max() / g.node_count) if g.node_count else 0.0,
    }
    return out
