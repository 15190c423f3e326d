"""Merged graph-state variant: one qubit per node, Bell pairs by measurement.

All qubits of a node are merged, giving a graph state on the full nested
graph.  Extracting a Bell pair between ``u`` and ``v`` measures out every
qubit on a shortest alive path and every alive neighbour of those qubits;
the endpoints keep the pair and leave the resource too.  Only the
consumed-set bookkeeping is simulated, not the stabilizer state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .experiments import aggregate, derive_rng, run_tasks
from .routing import lexmin_shortest_path
from .topology import Topology, build_nested

MAX_CONSECUTIVE_FAILURES = 50


class GraphStateError(ValueError):
    pass


class _DeadNodes:
    """Membership view: a node is blocked unless it is alive."""

    __slots__ = ("alive",)

    def __init__(self, alive: set[int]):
        self.alive = alive

    def __contains__(self, z) -> bool:
        return z not in self.alive


@dataclass
class GraphStateResource:
    base: Topology
    alive: set[int] = field(default=None)

    def __post_init__(self):
        if self.alive is None:
            self.alive = set(self.base.surviving)
        elif not self.alive <= set(self.base.nodes):
            raise GraphStateError("alive set contains unknown nodes")

    @classmethod
    def fresh(cls, d: int) -> "GraphStateResource":
        return cls(build_nested(d))


@dataclass(frozen=True)
class ExtractionRecord:
    endpoints: tuple[int, int]
    path: tuple[int, ...]
    consumed: frozenset[int]

    @property
    def measured_count(self) -> int:
        return len(self.consumed) - 2

    @property
    def path_length(self) -> int:
        return len(self.path) - 1


def extract_pair(res: GraphStateResource, u: int, v: int) -> ExtractionRecord | None:
    """Extract a Bell pair between ``u`` and ``v``; None (nothing consumed) if no alive path."""
    if u == v:
        raise GraphStateError("endpoints coincide")
    for z in (u, v):
        if z not in res.alive:
            raise GraphStateError(f"endpoint {z} is not alive")
    adj = res.base.nested_adjacency
    path = lexmin_shortest_path(adj, u, v, blocked_nodes=_DeadNodes(res.alive))
    if path is None:
        return None
    consumed = set(path)
    for z in path:
        consumed.update(w for w in adj[z] if w in res.alive)
    res.alive -= consumed
    return ExtractionRecord((u, v), path, frozenset(consumed))


def capacity_simulation(
    d: int,
    rng: np.random.Generator,
    max_consecutive_failures: int = MAX_CONSECUTIVE_FAILURES,
    records: list | None = None,
) -> int:
    """Number of Bell pairs extracted by random sequential demand on a fresh resource.

    Uniformly random alive pairs are attempted until fewer than two nodes
    remain alive or ``max_consecutive_failures`` attempts in a row find no
    path.  Successful extractions are appended to ``records`` if given.
    """
    if d < 2:
        raise GraphStateError(f"capacity simulation needs d >= 2, got {d}")
    res = GraphStateResource.fresh(d)
    served = 0
    misses = 0
    while len(res.alive) >= 2 and misses < max_consecutive_failures:
        pool = sorted(res.alive)
        i, j = rng.choice(len(pool), size=2, replace=False)
        rec = extract_pair(res, pool[i], pool[j])
        if rec is None:
            misses += 1
            continue
        misses = 0
        served += 1
        if records is not None:
            records.append(rec)
    return served


def theoretical_capacity(n: int) -> float:
    """``n / log2(n)**2``."""
    if n < 4:
        raise GraphStateError(f"n={n} must be >= 4")
    return n / math.log2(n) ** 2


@dataclass(frozen=True)
class CapacityRow:
    n: int
    mean_S: float
    stderr: float
    theoretical: float
    trials: int


def _capacity_trial(args) -> int:
    d, seed, trial = args
    return capacity_simulation(d, derive_rng(seed, "graphstate", d, trial))


def capacity_sweep(d_range, trials: int, seed: int, workers: int = 1) -> list[CapacityRow]:
    """Mean extracted-pair count per dimension, with the ``n/log2(n)**2`` reference."""
    if trials < 1:
        raise GraphStateError(f"trials must be >= 1, got {trials}")
    rows = []
    for d in d_range:
        counts = run_tasks(_capacity_trial, [(d, seed, i) for i in range(trials)], workers)
        mean, err = aggregate(counts)
        n = 1 << d
        rows.append(CapacityRow(n, mean, err, theoretical_capacity(n), trials))
    return rows
