from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np


class Partition:
    """Node -> community labelling.

    Labels are renumbered densely in order of first appearance, so two
    partitions that group nodes identically compare equal regardless of the
    ids they were built with.
    """

    __slots__ = ("labels", "community_count")

    def __init__(self, labels: Sequence[int] | np.ndarray):
        raw = np.asarray(labels, dtype=np.int64)
        if raw.ndim != 1:
            raise ValueError("labels must be one-dimensional")
        _, first, inverse = np.unique(raw, return_index=True, return_inverse=True)
        # rank communities by the first node carrying them
        rank = np.empty(first.shape[0], dtype=np.int64)
        rank[np.argsort(first, kind="stable")] = np.arange(first.shape[0])
        self.labels = rank[inverse.reshape(-1)]
        self.labels.setflags(write=False)
        self.community_count = int(first.shape[0])

    @classmethod
    def singletons(cls, n: int) -> "Partition":
        return cls(np.arange(n))

    @property
    def node_count(self) -> int:
        return int(self.labels.shape[0])

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.community_count)

    def members(self) -> list[np.ndarray]:
        order = np.argsort(self.labels, kind="stable")
        bounds = np.cumsum(self.sizes())[:-1]
        return np.split(order, bounds) if self.community_count else []

    def groups(self, names: Sequence[str] | None = None) -> list[frozenset]:
        """Communities as frozensets (of node ids, or of ``names``)."""
        out = []
        for block in self.members():
            ids = block.tolist()
            out.append(frozenset(names[i] for i in ids) if names is not None else frozenset(ids))
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Partition):
            return NotImplemented
        return np.array_equal(self.labels, other.labels)

    def __hash__(self) -> int:
        return hash(self.labels.tobytes())

    def __len__(self) -> int:
        return self.node_count

    def __repr__(self) -> str:
        return f"Partition(nodes={self.node_count}, communities={self.community_count})"


def write_partition(p: Partition, path: str | Path, header: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in (header or {}).items():
            fh.write(f"# {key} {value}\n")
        for node, comm in enumerate(p.labels.tolist()):
            fh.write(f"{node} {comm}\n")


def read_partition(path: str | Path) -> Partition:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip() or line.startswith("#"):
                continue
            node, comm = line.split()
            pairs.append((int(node), int(comm)))
    pairs.sort()
    if [p[0] for p in pairs] != list(range(len(pairs))):
        raise ValueError(f"{path}: node ids are not contiguous from 0")
    return Partition([p[1] for p in pairs])
