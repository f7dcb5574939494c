"""Directed, weighted agent communication graph and subgraph views.

Agent indices are 0-based everywhere in the Python API.  Configuration files
and reports use 1-based agent numbers (v_1 .. v_n); conversion happens only at
those boundaries.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

Edge = tuple[int, int]


class TopologyError(ValueError):
    """Raised for malformed adjacency matrices or invalid subgraphs."""


class Topology:
    """Dense adjacency ``a[i, j]`` = linking intensity of edge i -> j.

    Entries may be negative.  The matrix is copied and frozen on construction,
    so a ``Topology`` can be shared between concurrent runs.
    """

    def __init__(self, adjacency):
        a = np.array(adjacency, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise TopologyError(f"adjacency must be a non-empty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise TopologyError("adjacency contains non-finite entries")
        diag = np.flatnonzero(np.diag(a))
        if diag.size:
            raise TopologyError(f"adjacency diagonal must be zero (agents {[int(k) + 1 for k in diag]})")
        a.setflags(write=False)
        self.adjacency = a

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @cached_property
    def edges(self) -> tuple[Edge, ...]:
        """All (i, j) with a_ij != 0, row-major order."""
        return tuple((int(i), int(j)) for i, j in zip(*np.nonzero(self.adjacency)))

    @cached_property
    def _rows(self) -> tuple[tuple[tuple[int, float], ...], ...]:
        a = self.adjacency
        return tuple(
            tuple((j, float(a[i, j])) for j in range(self.n) if a[i, j] != 0.0)
            for i in range(self.n)
        )

    @cached_property
    def _cols(self) -> tuple[tuple[tuple[int, float], ...], ...]:
        a = self.adjacency
        return tuple(
            tuple((j, float(a[j, i])) for j in range(self.n) if a[j, i] != 0.0)
            for i in range(self.n)
        )

    def _check_index(self, i: int) -> None:
        if not 0 <= i < self.n:
            raise IndexError(f"agent index {i} out of range for n={self.n}")

    def neighbors(self, i: int) -> list[tuple[int, float]]:
        """Out-neighbours ``(j, a_ij)`` of agent ``i`` in ascending ``j``."""
        self._check_index(i)
        return list(self._rows[i])

    def in_neighbors(self, i: int) -> list[tuple[int, float]]:
        """``(j, a_ji)`` for every j with a_ji != 0, ascending ``j``."""
        self._check_index(i)
        return list(self._cols[i])

    def weight(self, i: int, j: int) -> float:
        return float(self.adjacency[i, j])

    def coupled_input(self, i: int, u: Sequence[float]) -> float:
        """Effective input of agent ``i``: u_i + sum_j a_ji * u_j.

        Note the transposed index: the sum runs down column ``i``.
        """
        self._check_index(i)
        if len(u) != self.n:
            raise ValueError(f"control vector has length {len(u)}, expected {self.n}")
        total = u[i]
        for j, a_ji in self._cols[i]:
            total += a_ji * u[j]
        return total

    def full_subgraph(self) -> Subgraph:
        return Subgraph(self, frozenset(range(self.n)), frozenset(self.edges))

    def __repr__(self) -> str:
        return f"Topology(n={self.n}, edges={len(self.edges)})"


@dataclass(frozen=True)
class Subgraph:
    """Members and retained edges of a subgraph of ``parent``."""

    parent: Topology = field(repr=False, compare=False)
    members: frozenset[int]
    retained_edges: frozenset[Edge]

    def __post_init__(self):
        self.check()

    def check(self) -> None:
        """Raise ``TopologyError`` if the structural invariants are broken."""
        n = self.parent.n
        bad = [m for m in self.members if not 0 <= m < n]
        if bad:
            raise TopologyError(f"members out of range: {sorted(bad)}")
        parent_edges = set(self.parent.edges)
        for i, j in self.retained_edges:
            if (i, j) not in parent_edges:
                raise TopologyError(f"edge ({i}, {j}) is not an edge of the parent graph")
            if i not in self.members or j not in self.members:
                raise TopologyError(f"edge ({i}, {j}) connects a non-member")

    @property
    def size(self) -> int:
        return len(self.members)

    def neighbors(self, i: int) -> list[tuple[int, float]]:
        """Retained out-neighbours of ``i`` (empty for non-members)."""
        if i not in self.members:
            return []
        return [(j, a) for j, a in self.parent.neighbors(i) if (i, j) in self.retained_edges]

    def sorted_edges(self) -> list[Edge]:
        return sorted(self.retained_edges)

    def without_edge(self, edge: Edge) -> Subgraph:
        return Subgraph(self.parent, self.members, self.retained_edges - {edge})

    def without_member(self, i: int) -> Subgraph:
        edges = frozenset(e for e in self.retained_edges if i not in e)
        return Subgraph(self.parent, self.members - {i}, edges)

    def to_dict(self) -> dict:
        """1-based JSON view."""
        return {
            "members": [m + 1 for m in sorted(self.members)],
            "edges": [[i + 1, j + 1, self.parent.weight(i, j)] for i, j in self.sorted_edges()],
        }


def subgraph(parent: Topology, members: Iterable[int], edges: Iterable[Edge]) -> Subgraph:
    return Subgraph(parent, frozenset(members), frozenset(edges))
