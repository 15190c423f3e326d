"""Capacity-constrained k-shortest-path routing on the hypercube subgraph.

Each requested pair scans its ``k`` shortest loopless paths, ordered by
(hop count, node sequence), and takes the first one whose edges all have
spare capacity.  Greedy first-fit; nothing is ever re-routed.
"""
from __future__ import annotations

import heapq
from collections import Counter
from dataclasses import dataclass, field
from itertools import islice
from typing import Iterator, Sequence

import numpy as np

from .requests import Matching, validate_matching
from .topology import Topology

Path = tuple[int, ...]
EdgeKey = tuple[int, int]

MAX_BRUTE_FORCE_NODES = 16
_UNSEEN = -1


class RoutingError(ValueError):
    pass


def edge_key(u: int, v: int) -> EdgeKey:
    return (u, v) if u < v else (v, u)


def path_edges(path: Sequence[int]) -> list[EdgeKey]:
    return [edge_key(a, b) for a, b in zip(path, path[1:])]


def _bfs_from(adj, target: int, blocked_nodes, blocked_edges) -> list[int]:
    dist = [_UNSEEN] * len(adj)
    dist[target] = 0
    frontier = [target]
    while frontier:
        nxt = []
        for u in frontier:
            du = dist[u] + 1
            for w in adj[u]:
                if dist[w] == _UNSEEN and w not in blocked_nodes:
                    if blocked_edges and edge_key(u, w) in blocked_edges:
                        continue
                    dist[w] = du
                    nxt.append(w)
        frontier = nxt
    return dist


def lexmin_shortest_path(adj, source, target, rank=None, blocked_nodes=frozenset(), blocked_edges=frozenset()):
    """Shortest path whose node sequence is smallest under ``rank``, or None.

    ``rank`` maps node -> sort key; None means the node labels themselves.
    """
    if source in blocked_nodes or target in blocked_nodes:
        return None
    dist = _bfs_from(adj, target, blocked_nodes, blocked_edges)
    if dist[source] == _UNSEEN:
        return None
    path = [source]
    u = source
    while u != target:
        want = dist[u] - 1
        best = None
        for w in adj[u]:
            if dist[w] != want or (blocked_edges and edge_key(u, w) in blocked_edges):
                continue
            if rank is None:
                best = w  # adjacency is sorted by label
                break
            if best is None or rank[w] < rank[best]:
                best = w
        path.append(best)
        u = best
    return tuple(path)


def iter_shortest_paths(adj, s: int, t: int, rank: Sequence[int] | None = None) -> Iterator[Path]:
    """Lazily yield all simple ``s``-``t`` paths ordered by (hops, ranked node sequence).

    Yen's algorithm.  Each spur path is the rank-smallest shortest path of
    the restricted graph, which is exactly what Yen needs for this order,
    so the output is a deterministic total order.  ``rank`` defaults to the
    node labels.
    """
    first = lexmin_shortest_path(adj, s, t, rank)
    if first is None:
        return
    if rank is None:
        def key(p):
            return (len(p), p)
    else:
        def key(p):
            return (len(p), tuple(rank[v] for v in p))
    accepted = [first]
    seen = {first}
    candidates: list = []
    yield first
    while True:
        last = accepted[-1]
        for i in range(len(last) - 1):
            root = last[: i + 1]
            blocked_edges = {edge_key(p[i], p[i + 1]) for p in accepted if len(p) > i + 1 and p[: i + 1] == root}
            spur = lexmin_shortest_path(adj, last[i], t, rank, frozenset(root[:-1]), blocked_edges)
            if spur is None:
                continue
            cand = root[:-1] + spur
            if cand not in seen:
                seen.add(cand)
                heapq.heappush(candidates, (key(cand), cand))
        if not candidates:
            return
        _, best = heapq.heappop(candidates)
        accepted.append(best)
        yield best


def _check_endpoints(topology: Topology, s: int, t: int):
    for z in (s, t):
        if not 0 <= z < topology.n or z in topology.failed:
            raise RoutingError(f"endpoint {z} is not a surviving node")
    if s == t:
        raise RoutingError("source and target coincide")


def k_shortest_paths(
    topology: Topology, s: int, t: int, k: int, rank: Sequence[int] | None = None
) -> list[Path]:
    """Up to ``k`` loopless paths from ``s`` to ``t`` on the surviving hypercube.

    Ordered by hop count, then by node sequence compared under ``rank``
    (node labels by default).  An empty list means ``t`` is unreachable.
    """
    if k < 1:
        raise RoutingError(f"k must be >= 1, got {k}")
    _check_endpoints(topology, s, t)
    if rank is not None and len(rank) != topology.n:
        raise RoutingError(f"rank must have one entry per node ({topology.n})")
    return list(islice(iter_shortest_paths(topology.hypercube_adjacency, s, t, rank), k))


@dataclass
class RoutePlan:
    """Outcome of routing one request.

    ``paths`` maps each requested pair to its node sequence, or ``None`` if
    the pair was not served.  ``order`` is the processing order.  ``edges``
    lists every usable hypercube edge so zero-load edges can be counted.
    """

    pairs: tuple[tuple[int, int], ...]
    order: tuple[tuple[int, int], ...]
    paths: dict[tuple[int, int], Path | None]
    load: Counter
    R: int | None
    k: int
    edges: tuple[EdgeKey, ...] = field(repr=False, default=())

    @property
    def served(self) -> list[tuple[int, int]]:
        return [p for p in self.pairs if self.paths[p] is not None]

    def to_dict(self) -> dict:
        return {
            "R": self.R,
            "k": self.k,
            "pairs": [list(p) for p in self.pairs],
            "order": [list(p) for p in self.order],
            "paths": [
                {"pair": list(p), "served": self.paths[p] is not None,
                 "path": list(self.paths[p]) if self.paths[p] is not None else None}
                for p in self.pairs
            ],
            "loads": [[u, v, self.load[(u, v)]] for u, v in sorted(self.load)],
        }


class _Candidates:
    """Per-pair candidate paths, materialised lazily and kept for reuse."""

    def __init__(self, adj, s: int, t: int, rank, k: int):
        self._gen = iter_shortest_paths(adj, s, t, rank)
        self._paths: list[tuple[Path, list[EdgeKey]]] = []
        self._k = k

    def __iter__(self):
        i = 0
        while i < self._k:
            if i == len(self._paths):
                path = next(self._gen, None)
                if path is None:
                    self._k = i
                    return
                self._paths.append((path, path_edges(path)))
            yield self._paths[i]
            i += 1


def _prepare(topology: Topology, m: Matching, R, k, rng):
    if R is not None and R < 1:
        raise RoutingError(f"capacity R must be >= 1, got {R}")
    if k < 1:
        raise RoutingError(f"k must be >= 1, got {k}")
    violations = validate_matching(m, topology.surviving)
    if violations:
        raise RoutingError(f"invalid request: {violations}")
    pairs = tuple(m.pairs)
    adj = topology.hypercube_adjacency
    if rng is None:
        order = pairs
        ranks = [None] * len(pairs)
    else:
        order = tuple(pairs[i] for i in rng.permutation(len(pairs)))
        ranks = [rng.permutation(topology.n).tolist() for _ in order]
    candidates = [_Candidates(adj, s, t, rank, k) for (s, t), rank in zip(order, ranks)]
    return pairs, order, candidates


def _first_fit(order, candidates, R, stop_on_failure=False):
    load: Counter = Counter()
    paths: dict = {}
    for pair, cands in zip(order, candidates):
        chosen = None
        for path, keys in cands:
            if R is None or all(load[e] < R for e in keys):
                chosen = path
                for e in keys:
                    load[e] += 1
                break
        if chosen is None and stop_on_failure:
            return None
        paths[pair] = chosen
    return paths, load


def route_matching(
    topology: Topology,
    m: Matching,
    R: int | None,
    k: int,
    rng: np.random.Generator | None = None,
) -> RoutePlan:
    """Greedily route ``m`` with per-edge capacity ``R`` (``None`` = unbounded).

    With ``rng`` the pairs are processed in a random order and each pair
    breaks ties between equal-length candidates with its own random node
    ranking; without it, request order and plain label order are used.
    Candidates ignore current loads; only the capacity check reads them.
    """
    pairs, order, candidates = _prepare(topology, m, R, k, rng)
    paths, load = _first_fit(order, candidates, R)
    edges = tuple(sorted(e.pair for e in topology.surviving_hypercube_edges))
    return RoutePlan(pairs=pairs, order=order, paths=paths, load=load, R=R, k=k, edges=edges)


def required_load(topology: Topology, m: Matching, k: int, rng: np.random.Generator) -> tuple[int, RoutePlan]:
    """Per-edge Bell-pair demand of routing all of ``m`` without a capacity cap.

    Same candidates, order and tie-breaking as :func:`route_matching`, but
    every pair is served: it takes the first of its ``k`` candidates whose
    most loaded edge is least loaded.  Returns the resulting maximum edge
    load and the plan.
    """
    pairs, order, candidates = _prepare(topology, m, None, k, rng)
    load: Counter = Counter()
    paths = {}
    for pair, cands in zip(order, candidates):
        best = None
        for path, keys in cands:
            bottleneck = max(load[e] for e in keys)
            if best is None or bottleneck < best[0]:
                best = (bottleneck, path, keys)
                if bottleneck == 0:
                    break
        if best is None:
            raise RoutingError(f"pair {pair} is disconnected")
        paths[pair] = best[1]
        for e in best[2]:
            load[e] += 1
    edges = tuple(sorted(e.pair for e in topology.surviving_hypercube_edges))
    plan = RoutePlan(pairs=pairs, order=order, paths=paths, load=load, R=None, k=k, edges=edges)
    return max(load.values(), default=0), plan


@dataclass(frozen=True)
class PlanMetrics:
    requested: int
    served: int
    served_fraction: float
    mean_path_length: float | None
    edge_load_histogram: dict[int, int]
    max_edge_load: int


def plan_metrics(plan: RoutePlan) -> PlanMetrics:
    served = [plan.paths[p] for p in plan.pairs if plan.paths[p] is not None]
    hist = Counter(plan.load.get(e, 0) for e in plan.edges)
    requested = len(plan.pairs)
    return PlanMetrics(
        requested=requested,
        served=len(served),
        served_fraction=len(served) / requested if requested else 0.0,
        mean_path_length=sum(len(p) - 1 for p in served) / len(served) if served else None,
        edge_load_histogram=dict(sorted(hist.items())),
        max_edge_load=max(plan.load.values(), default=0),
    )


def _all_simple_paths(adj, s: int, t: int) -> list[Path]:
    out = []
    stack = [(s, (s,))]
    while stack:
        u, path = stack.pop()
        for w in adj[u]:
            if w == t:
                out.append(path + (w,))
            elif w not in path:
                stack.append((w, path + (w,)))
    out.sort(key=lambda p: (len(p), p))
    return out


def brute_force_route(topology: Topology, m: Matching, R: int, *, return_paths: bool = False):
    """Exact maximum number of pairs of ``m`` routable together under capacity ``R``.

    Exhaustive branch and bound over all simple paths of every pair.  With
    ``return_paths`` the optimal assignment (pair -> path or None) is
    returned alongside the count.
    """
    if len(topology.surviving) > MAX_BRUTE_FORCE_NODES:
        raise RoutingError(
            f"brute force limited to {MAX_BRUTE_FORCE_NODES} surviving nodes, got {len(topology.surviving)}"
        )
    violations = validate_matching(m, topology.surviving)
    if violations:
        raise RoutingError(f"invalid request: {violations}")
    adj = topology.hypercube_adjacency
    pairs = list(m.pairs)
    raw = {p: _all_simple_paths(adj, *p) for p in pairs}
    options = {p: [path_edges(q) for q in raw[p]] for p in pairs}
    # fewest alternatives first: fails fast
    pairs.sort(key=lambda p: len(options[p]))
    load: Counter = Counter()
    chosen: dict = {}
    best = {"count": -1, "paths": {}}

    def search(i: int, served: int):
        if served + (len(pairs) - i) <= best["count"]:
            return
        if i == len(pairs):
            best["count"] = served
            best["paths"] = dict(chosen)
            return
        p = pairs[i]
        for idx, keys in enumerate(options[p]):
            if all(load[e] < R for e in keys):
                for e in keys:
                    load[e] += 1
                chosen[p] = raw[p][idx]
                search(i + 1, served + 1)
                for e in keys:
                    load[e] -= 1
                del chosen[p]
                if best["count"] == len(pairs):
                    return
        search(i + 1, served)

    search(0, 0)
    count = max(best["count"], 0)
    if return_paths:
        return count, {p: best["paths"].get(p) for p in m.pairs}
    return count
