"""Nested switch topology and its hypercube spanning subgraph.

Nodes are the integers ``0..n-1`` with ``n = 2**d``.  Node ``z`` shares a
Bell pair with ``z +/- 2**k (mod n)`` for ``k = 0..d-1``; the antipodal
distance ``2**(d-1)`` yields a single edge, so every node has degree
``2d - 1``.  The hypercube ``Q_d`` (``z <-> z ^ 2**k``) is a spanning
subgraph of that graph and is what routing runs on.

Failures are a mask on an otherwise immutable topology.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable


class TopologyError(ValueError):
    """Invalid dimension, node, edge or size."""


class EdgeKind(str, enum.Enum):
    NESTED = "nested"
    HYPERCUBE = "hypercube"


@dataclass(frozen=True, order=True)
class Edge:
    """Undirected edge stored canonically with ``u < v``.

    ``k`` is the level: nested edges join nodes ``2**k`` apart (cyclically),
    hypercube edges join nodes differing in bit ``k``.
    """

    u: int
    v: int
    kind: EdgeKind
    k: int

    def __post_init__(self):
        if self.u == self.v:
            raise TopologyError(f"self-loop at node {self.u}")
        if self.u > self.v:
            a, b = self.v, self.u
            object.__setattr__(self, "u", a)
            object.__setattr__(self, "v", b)

    @property
    def pair(self) -> tuple[int, int]:
        return (self.u, self.v)


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


def dimension_of(n: int) -> int:
    """Return ``d`` with ``2**d == n``; raise if ``n`` is not a power of two >= 2."""
    if not isinstance(n, (int,)) or n < 2 or not _is_power_of_two(n):
        raise TopologyError(f"n={n} is not a power of two >= 2")
    return n.bit_length() - 1


@dataclass(frozen=True)
class Topology:
    """Nested switch on ``2**d`` nodes with an optional failure mask."""

    d: int
    nested_edges: frozenset[Edge]
    hypercube_edges: frozenset[Edge]
    failed: frozenset[int] = field(default_factory=frozenset)

    @property
    def n(self) -> int:
        return 1 << self.d

    @property
    def nodes(self) -> range:
        return range(self.n)

    @cached_property
    def surviving(self) -> frozenset[int]:
        return frozenset(z for z in self.nodes if z not in self.failed)

    def _alive(self, e: Edge) -> bool:
        return e.u not in self.failed and e.v not in self.failed

    @cached_property
    def surviving_nested_edges(self) -> frozenset[Edge]:
        return frozenset(e for e in self.nested_edges if self._alive(e))

    @cached_property
    def surviving_hypercube_edges(self) -> frozenset[Edge]:
        return frozenset(e for e in self.hypercube_edges if self._alive(e))

    @cached_property
    def hypercube_adjacency(self) -> tuple[tuple[int, ...], ...]:
        """Sorted surviving hypercube neighbours per node (empty for failed nodes)."""
        return _adjacency(self.n, self.surviving_hypercube_edges)

    @cached_property
    def nested_adjacency(self) -> tuple[tuple[int, ...], ...]:
        """Sorted surviving nested neighbours per node (empty for failed nodes)."""
        return _adjacency(self.n, self.surviving_nested_edges)

    def nested_degree(self, z: int) -> int:
        return len(self.nested_adjacency[z])

    def hypercube_degree(self, z: int) -> int:
        return len(self.hypercube_adjacency[z])

    def to_edge_list(self, include_hypercube: bool = False) -> str:
        """Serialise as the ``nested-switch v1`` edge-list text format.

        One ``u v kind k`` line per physical (nested) edge; the logical
        hypercube edges follow only if ``include_hypercube``.  Failed nodes'
        edges are omitted.
        """
        lines = [f"nested-switch v1 d={self.d}"]
        edges = sorted(self.surviving_nested_edges)
        if include_hypercube:
            edges += sorted(self.surviving_hypercube_edges)
        for e in edges:
            lines.append(f"{e.u} {e.v} {e.kind.value} {e.k}")
        return "\n".join(lines) + "\n"


def _adjacency(n: int, edges: Iterable[Edge]) -> tuple[tuple[int, ...], ...]:
    adj: list[list[int]] = [[] for _ in range(n)]
    for e in edges:
        adj[e.u].append(e.v)
        adj[e.v].append(e.u)
    return tuple(tuple(sorted(a)) for a in adj)


def build_nested(d: int) -> Topology:
    """Build the nested switch of dimension ``d`` together with its hypercube subgraph."""
    if not isinstance(d, int) or d < 1:
        raise TopologyError(f"invalid dimension d={d!r}; need an integer >= 1")
    n = 1 << d
    nested = set()
    hypercube = set()
    for z in range(n):
        for k in range(d):
            step = 1 << k
            nested.add(Edge(z, (z + step) % n, EdgeKind.NESTED, k))
            nested.add(Edge(z, (z - step) % n, EdgeKind.NESTED, k))
            hypercube.add(Edge(z, z ^ step, EdgeKind.HYPERCUBE, k))
    return Topology(d=d, nested_edges=frozenset(nested), hypercube_edges=frozenset(hypercube))


def map_hypercube_edge(e: Edge, n: int) -> Edge:
    """Return the nested edge realising hypercube edge ``e`` in a switch of ``n`` nodes.

    Flipping bit ``k`` of ``z`` either adds ``2**k`` (bit was 0) or subtracts
    it (bit was 1), so the endpoints are always ``2**k`` apart on the ring.
    """
    d = dimension_of(n)
    diff = e.u ^ e.v
    if not (0 <= e.u < n and 0 <= e.v < n) or not _is_power_of_two(diff):
        raise TopologyError(f"({e.u}, {e.v}) is not a hypercube edge for n={n}")
    k = diff.bit_length() - 1
    if k >= d:
        raise TopologyError(f"bit {k} out of range for n={n}")
    step = 1 << k
    z = e.u
    partner = z + step if not z & step else z - step
    return Edge(z, partner % n, EdgeKind.NESTED, k)


def apply_failures(t: Topology, failed: Iterable[int]) -> Topology:
    """Return a view of ``t`` with ``failed`` nodes (and their edges) masked out."""
    failed = frozenset(failed)
    bad = [z for z in failed if not (isinstance(z, int) and 0 <= z < t.n)]
    if bad:
        raise TopologyError(f"unknown node(s) {sorted(bad)} for n={t.n}")
    if failed <= t.failed:
        return t
    return replace(t, failed=t.failed | failed)


class Architecture(str, enum.Enum):
    CENTRALIZED = "centralized"
    ALL_TO_ALL_BELL = "all-to-all"
    GHZ = "ghz"
    NESTED = "nested"


@dataclass(frozen=True)
class ResourceCount:
    architecture: Architecture
    total: int
    per_node_memory: int


def resource_count(arch: Architecture | str, n: int) -> ResourceCount:
    """Total entanglement resource and per-node memory of a switch design.

    ``total`` counts Bell pairs, except for GHZ where it counts entangled
    qubits.  For the centralized hub ``per_node_memory`` is the hub's memory.
    """
    arch = Architecture(arch)
    if not isinstance(n, int) or n < 2 or n % 2:
        raise TopologyError(f"n={n} must be an even integer >= 2")
    if arch is Architecture.CENTRALIZED:
        return ResourceCount(arch, n, n)
    if arch is Architecture.ALL_TO_ALL_BELL:
        return ResourceCount(arch, n * (n - 1) // 2, n - 1)
    if arch is Architecture.GHZ:
        # n/2 GHZ states of sizes n, n-1, ..., n/2 + 1; a node holds at most one qubit of each
        return ResourceCount(arch, n * (3 * n + 2) // 8, n // 2)
    d = dimension_of(n)
    return ResourceCount(arch, n * d - n // 2, 2 * d - 1)
