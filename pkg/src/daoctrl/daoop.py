"""Critical-agent subgraph extraction (the "operation on the DAO").

Given per-agent ECE values ``r``, the tolerance of agent ``i`` for a subgraph
is the consensus pressure it loses through removed edges::

    W_i = sum_{j in N} a_ij |r_i - r_j|  -  sum_{(i, j) retained} a_ij |r_i - r_j|

A feasible subgraph has at most ``phi`` members and ``W_i <= psi`` for every
agent.  Excluded agents are held to the same bound: they are the agents whose
edges were all cut, so their loss is the full first sum.

``operate`` is the randomized greedy heuristic; ``brute_force`` enumerates
exhaustively and is only meant for small graphs.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .rng import SplitMix64
from .topology import Edge, Subgraph, Topology

BRUTE_FORCE_MAX_N = 12


class CapacityError(ValueError):
    """Raised when an exhaustive search is requested on a graph that is too large."""


@dataclass(frozen=True)
class OperationParams:
    phi: int = 4
    psi: float = 2.0
    max_outer_iterations: int = 200
    rng_seed: int = 0

    def __post_init__(self):
        if self.phi < 1:
            raise ValueError("phi must be >= 1")
        if not self.psi >= 0:
            raise ValueError("psi must be >= 0")
        if self.max_outer_iterations < 1:
            raise ValueError("max_outer_iterations must be >= 1")


@dataclass
class OperationResult:
    found: bool
    subgraph: Optional[Subgraph]
    removed_edge_count: int
    iterations_used: int

    def to_dict(self) -> dict:
        return {
            "found": self.found,
            "subgraph": self.subgraph.to_dict() if self.subgraph is not None else None,
            "edge_count": len(self.subgraph.retained_edges) if self.subgraph is not None else None,
            "removed_edge_count": self.removed_edge_count,
            "iterations_used": self.iterations_used,
        }


@dataclass
class ConstraintReport:
    tolerances: dict[int, float]
    member_count: int
    phi: int
    psi: float
    violating_members: list[int] = field(default_factory=list)
    violating_excluded: list[int] = field(default_factory=list)

    @property
    def capacity_ok(self) -> bool:
        return self.member_count <= self.phi

    @property
    def ok(self) -> bool:
        return self.capacity_ok and not self.violating_members and not self.violating_excluded

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "capacity_ok": self.capacity_ok,
            "member_count": self.member_count,
            "phi": self.phi,
            "psi": self.psi,
            "tolerances": {str(i + 1): w for i, w in sorted(self.tolerances.items())},
            "violating_members": [i + 1 for i in self.violating_members],
            "violating_excluded": [i + 1 for i in self.violating_excluded],
        }


def edge_score(full: Topology, r: Sequence[float], i: int, j: int) -> float:
    """Signed removal score a_ij |r_i - r_j|."""
    return full.weight(i, j) * abs(r[i] - r[j])


def tolerance(i: int, full: Topology, sub: Subgraph, r: Sequence[float]) -> float:
    """Consensus pressure agent ``i`` loses through edges missing from ``sub``."""
    lost = 0.0
    for j, a in full.neighbors(i):
        if (i, j) not in sub.retained_edges:
            lost += a * abs(r[i] - r[j])
    return lost


def validate(full: Topology, sub: Subgraph, r: Sequence[float], params: OperationParams) -> ConstraintReport:
    """Check the capacity bound and the tolerance bound for every agent."""
    tol = {i: tolerance(i, full, sub, r) for i in range(full.n)}
    report = ConstraintReport(tol, sub.size, params.phi, params.psi)
    for i, w in tol.items():
        if w > params.psi:
            (report.violating_members if i in sub.members else report.violating_excluded).append(i)
    return report


def _lost(full: Topology, r: Sequence[float], i: int, retained: set[Edge]) -> float:
    # same summation order as tolerance()
    lost = 0.0
    for j, a in full.neighbors(i):
        if (i, j) not in retained:
            lost += a * abs(r[i] - r[j])
    return lost


def operate(full: Topology, r: Sequence[float], params: OperationParams,
            rng: Optional[SplitMix64] = None) -> OperationResult:
    """Randomized greedy edge removal until at most ``phi`` agents remain.

    Each pass starts from the full graph.  A randomly drawn member with no
    retained incident edge (in or out) is dropped; otherwise its cheapest
    incident edge by signed score ``a_pq |r_p - r_q|`` is removed, provided both
    endpoints stay within ``psi``.  Equal scores go to the lowest neighbour
    index.  A rejected removal ends the pass and the next pass restarts from
    the full graph with fresh draws.  Passing ``rng`` continues a caller's
    random stream.
    """
    if len(r) != full.n:
        raise ValueError(f"r has length {len(r)}, expected {full.n}")
    if rng is None:
        rng = SplitMix64(params.rng_seed)
    total_edges = len(full.edges)
    if full.n <= params.phi:
        return OperationResult(True, full.full_subgraph(), 0, 0)

    incident_all = {i: [e for e in full.edges if i in e] for i in range(full.n)}
    scores = {e: edge_score(full, r, *e) for e in full.edges}

    def key(i: int, e: Edge):
        other = e[1] if e[0] == i else e[0]
        return (scores[e], other, e[0] != i)

    for outer in range(1, params.max_outer_iterations + 1):
        members = list(range(full.n))
        retained = set(full.edges)
        feasible = True
        while len(members) > params.phi:
            i = members[rng.randbelow(len(members))]
            incident = [e for e in incident_all[i] if e in retained]
            if not incident:
                members.remove(i)
                continue
            p, q = min(incident, key=lambda e: key(i, e))
            retained.discard((p, q))
            if _lost(full, r, p, retained) <= params.psi and _lost(full, r, q, retained) <= params.psi:
                continue
            retained.add((p, q))
            feasible = False
            break
        if feasible:
            sub = Subgraph(full, frozenset(members), frozenset(retained))
            return OperationResult(True, sub, total_edges - len(retained), outer)
    return OperationResult(False, None, 0, params.max_outer_iterations)


def _best_out_edges(full: Topology, r: Sequence[float], i: int, members: frozenset[int],
                    psi: float) -> Optional[tuple[Edge, ...]]:
    """Smallest (then lexicographically first) retained out-edge set of ``i`` within ``psi``."""
    out = [(j, a * abs(r[i] - r[j])) for j, a in full.neighbors(i)]
    candidates = [j for j, _ in out if j in members] if i in members else []
    for k in range(len(candidates) + 1):
        for combo in itertools.combinations(candidates, k):
            # same summation order as tolerance()
            lost = 0.0
            for j, c in out:
                if j not in combo:
                    lost += c
            if lost <= psi:
                return tuple((i, j) for j in combo)
    return None


def brute_force(full: Topology, r: Sequence[float], phi: int, psi: float) -> Optional[Subgraph]:
    """Exhaustive minimum-edge feasible subgraph, or ``None`` when none exists.

    Ties prefer more members, then the lexicographically smallest sorted edge
    list.  Tolerances separate by source agent, so for every member set the
    retained out-edges of each agent are enumerated independently.
    """
    n = full.n
    if n > BRUTE_FORCE_MAX_N:
        raise CapacityError(f"brute force is limited to n <= {BRUTE_FORCE_MAX_N}, got {n}")
    if len(r) != n:
        raise ValueError(f"r has length {len(r)}, expected {n}")
    best_key = None
    best = None
    for size in range(min(phi, n), -1, -1):
        for combo in itertools.combinations(range(n), size):
            members = frozenset(combo)
            edges: list[Edge] = []
            for i in range(n):
                chosen = _best_out_edges(full, r, i, members, psi)
                if chosen is None:
                    break
                edges.extend(chosen)
            else:
                key = (len(edges), -size, sorted(edges))
                if best_key is None or key < best_key:
                    best_key = key
                    best = Subgraph(full, members, frozenset(edges))
    return best

