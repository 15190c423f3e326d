"""Connection requests: perfect matchings (fixed-point-free involutions)."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple

import numpy as np

MAX_ENUMERATION_NODES = 12


class RequestError(ValueError):
    pass


@dataclass(frozen=True)
class Matching:
    """A set of disjoint node pairs, each stored as ``(min, max)``.

    ``pairs`` keeps the order in which the pairs were produced; equality and
    hashing ignore it.  ``unpaired`` is the node left over when a random
    matching is drawn on an odd number of nodes.
    """

    pairs: tuple[tuple[int, int], ...]
    unpaired: int | None = None

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, int]], unpaired: int | None = None) -> "Matching":
        return cls(tuple((min(u, v), max(u, v)) for u, v in pairs), unpaired)

    @property
    def nodes(self) -> list[int]:
        return [z for p in self.pairs for z in p]

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __eq__(self, other):
        if not isinstance(other, Matching):
            return NotImplemented
        return frozenset(self.pairs) == frozenset(other.pairs)

    def __hash__(self):
        return hash(frozenset(self.pairs))

    def to_text(self) -> str:
        return "".join(f"{u} {v}\n" for u, v in self.pairs)

    @classmethod
    def from_text(cls, text: str) -> "Matching":
        """Parse one ``u v`` pair per line; blank lines and ``#`` comments are skipped."""
        pairs = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            fields = line.split()
            if len(fields) != 2:
                raise RequestError(f"line {lineno}: expected 'u v', got {line!r}")
            try:
                pairs.append((int(fields[0]), int(fields[1])))
            except ValueError as exc:
                raise RequestError(f"line {lineno}: {exc}") from None
        return cls.from_pairs(pairs)


def random_perfect_matching(nodes: Iterable[int], rng: np.random.Generator) -> Matching:
    """Uniformly random perfect matching on ``nodes``.

    A uniform shuffle paired off consecutively is uniform over matchings.
    With an odd node count the last shuffled node (itself uniform) is left
    unpaired.
    """
    nodes = sorted(nodes)
    if len(nodes) < 2:
        raise RequestError(f"need at least 2 nodes for a request, got {len(nodes)}")
    order = rng.permutation(len(nodes))
    shuffled = [nodes[i] for i in order]
    unpaired = shuffled.pop() if len(shuffled) % 2 else None
    pairs = zip(shuffled[0::2], shuffled[1::2])
    return Matching.from_pairs(pairs, unpaired)


def count_matchings(n: int) -> int:
    """Number of perfect matchings on ``n`` labelled nodes, ``(n-1)!!``."""
    if n < 2 or n % 2:
        raise RequestError(f"n={n} must be even and >= 2")
    total = 1
    for k in range(1, n // 2 + 1):
        total *= 2 * k - 1
    return total


def _matchings(nodes: list[int]) -> Iterator[list[tuple[int, int]]]:
    if not nodes:
        yield []
        return
    first, rest = nodes[0], nodes[1:]
    for i, partner in enumerate(rest):
        for tail in _matchings(rest[:i] + rest[i + 1:]):
            yield [(first, partner)] + tail


def enumerate_matchings(nodes: Iterable[int]) -> Iterator[Matching]:
    """Yield every perfect matching of ``nodes`` once; the smallest node is paired first."""
    nodes = sorted(set(nodes))
    if len(nodes) % 2:
        raise RequestError(f"cannot perfectly match {len(nodes)} nodes")
    if len(nodes) > MAX_ENUMERATION_NODES:
        raise RequestError(f"refusing to enumerate matchings on {len(nodes)} > {MAX_ENUMERATION_NODES} nodes")
    for pairs in _matchings(nodes):
        yield Matching.from_pairs(pairs)


class Violation(NamedTuple):
    kind: str  # "duplicate-node", "self-pair" or "failed-node"
    node: int


def validate_matching(m: Matching | Iterable[tuple[int, int]], surviving: Iterable[int]) -> list[Violation]:
    """Return the violations of ``m``; an empty list means the request is valid."""
    pairs = m.pairs if isinstance(m, Matching) else tuple(m)
    surviving = set(surviving)
    seen: set[int] = set()
    out: list[Violation] = []
    for u, v in pairs:
        if u == v:
            out.append(Violation("self-pair", u))
        for z in (u, v) if u != v else (u,):
            if z in seen:
                out.append(Violation("duplicate-node", z))
            seen.add(z)
            if z not in surviving:
                out.append(Violation("failed-node", z))
    return out
