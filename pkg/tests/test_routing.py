import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nestedswitch.requests import Matching, enumerate_matchings, random_perfect_matching
from nestedswitch.routing import (
    RoutingError,
    brute_force_route,
    k_shortest_paths,
    lexmin_shortest_path,
    path_edges,
    plan_metrics,
    required_load,
    route_matching,
)
from nestedswitch.topology import apply_failures, build_nested

ANTIPODAL = Matching.from_pairs([(0, 7), (1, 6), (2, 5), (3, 4)])


def exhaustive_paths(topo, s, t):
    """All simple s-t paths on the surviving hypercube, via networkx, in (length, labels) order."""
    g = nx.Graph(e.pair for e in topo.surviving_hypercube_edges)
    if s not in g or t not in g:
        return []
    return sorted((tuple(p) for p in nx.all_simple_paths(g, s, t)), key=lambda p: (len(p), p))


def is_path(topo, path):
    adj = topo.hypercube_adjacency
    return len(set(path)) == len(path) and all(b in adj[a] for a, b in zip(path, path[1:]))


# --- k shortest paths ---------------------------------------------------------


def test_adjacent_first_path():
    paths = k_shortest_paths(build_nested(3), 0, 1, 5)
    assert paths[0] == (0, 1)


def test_q3_antipode_six_shortest_first():
    paths = k_shortest_paths(build_nested(3), 0, 7, 20)
    assert [len(p) - 1 for p in paths[:6]] == [3] * 6
    assert len({p for p in paths[:6]}) == 6
    assert all(len(p) - 1 > 3 for p in paths[6:])
    assert len(paths) == 18  # every simple 0-7 path in Q3


def test_damaged_q3_isolates_source():
    # removing all three neighbours of 0 cuts it off
    topo = apply_failures(build_nested(3), {1, 2, 4})
    assert k_shortest_paths(topo, 0, 7, 20) == []


def test_damaged_q3_long_detour():
    topo = apply_failures(build_nested(3), {1, 3})
    paths = k_shortest_paths(topo, 0, 7, 20)
    assert paths == exhaustive_paths(topo, 0, 7)
    assert len(paths[0]) - 1 == 3


def test_k_paths_errors():
    topo = apply_failures(build_nested(3), {5})
    with pytest.raises(RoutingError):
        k_shortest_paths(topo, 5, 0, 3)
    with pytest.raises(RoutingError):
        k_shortest_paths(topo, 0, 0, 3)
    with pytest.raises(RoutingError):
        k_shortest_paths(topo, 0, 1, 0)


@settings(max_examples=60, deadline=None)
@given(st.integers(3, 4), st.data())
def test_yen_matches_exhaustive_oracle(d, data):
    topo = build_nested(d)
    failed = data.draw(st.sets(st.integers(0, topo.n - 1), max_size=topo.n // 3))
    alive = sorted(set(topo.nodes) - failed)
    if len(alive) < 2:
        return
    s, t = data.draw(st.lists(st.sampled_from(alive), min_size=2, max_size=2, unique=True))
    k = data.draw(st.integers(1, 40))
    damaged = apply_failures(topo, failed)
    expected = exhaustive_paths(damaged, s, t)[:k]
    assert k_shortest_paths(damaged, s, t, k) == expected


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_ranked_order_is_a_reordering_within_lengths(seed):
    topo = build_nested(4)
    rng = np.random.default_rng(seed)
    rank = rng.permutation(topo.n).tolist()
    s, t = (int(z) for z in rng.choice(topo.n, 2, replace=False))
    got = k_shortest_paths(topo, s, t, 200, rank=rank)
    every = exhaustive_paths(topo, s, t)
    assert len(got) == min(200, len(every))
    # sorted by length, then by the node sequence mapped through rank
    assert got == sorted(got, key=lambda p: (len(p), [rank[z] for z in p]))
    assert set(got) <= set(every)


def test_lexmin_shortest_path_respects_blocks():
    adj = build_nested(3).hypercube_adjacency
    assert lexmin_shortest_path(adj, 0, 7) == (0, 1, 3, 7)
    assert lexmin_shortest_path(adj, 0, 7, blocked_nodes={1}) == (0, 2, 3, 7)
    assert lexmin_shortest_path(adj, 0, 7, blocked_edges={(0, 1), (0, 2)}) == (0, 4, 5, 7)
    assert lexmin_shortest_path(adj, 0, 7, blocked_nodes={1, 2, 4}) is None


# --- greedy routing -----------------------------------------------------------


def test_single_pair():
    plan = route_matching(build_nested(3), Matching.from_pairs([(0, 1)]), 1, 20)
    m = plan_metrics(plan)
    assert m.served_fraction == 1
    assert m.mean_path_length == 1


def test_antipodal_served_for_some_orders():
    topo = build_nested(3)
    full = 0
    for seed in range(40):
        plan = route_matching(topo, ANTIPODAL, 1, 20, np.random.default_rng(seed))
        met = plan_metrics(plan)
        if met.served_fraction == 1:
            full += 1
            assert met.mean_path_length == 3
            assert met.max_edge_load == 1
    assert full > 0


def test_antipodal_decomposition_exists():
    count, paths = brute_force_route(build_nested(3), ANTIPODAL, 1, return_paths=True)
    assert count == 4
    used = [e for p in paths.values() for e in path_edges(p)]
    assert len(used) == len(set(used)) == 12
    assert all(len(p) - 1 == 3 for p in paths.values())


def check_plan(topo, m, plan, R):
    assert set(plan.paths) == set(m.pairs)
    recount = {}
    for (s, t), path in plan.paths.items():
        if path is None:
            continue
        assert path[0] == s and path[-1] == t
        assert is_path(topo, path)
        for e in path_edges(path):
            recount[e] = recount.get(e, 0) + 1
    assert recount == {e: c for e, c in plan.load.items() if c}
    if R is not None:
        assert max(recount.values(), default=0) <= R


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(1, 3), st.integers(1, 20), st.integers(0, 2**32 - 1), st.data())
def test_plan_valid_and_within_capacity(d, R, k, seed, data):
    topo = build_nested(d)
    failed = data.draw(st.sets(st.integers(0, topo.n - 1), max_size=topo.n // 4))
    damaged = apply_failures(topo, failed)
    if len(damaged.surviving) < 2:
        return
    rng = np.random.default_rng(seed)
    m = random_perfect_matching(damaged.surviving, rng)
    plan = route_matching(damaged, m, R, k, rng)
    check_plan(damaged, m, plan, R)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 2))
def test_heuristic_never_beats_brute_force(seed, R):
    topo = build_nested(3)
    rng = np.random.default_rng(seed)
    failed = {int(z) for z in rng.choice(8, int(rng.integers(0, 3)), replace=False)}
    damaged = apply_failures(topo, failed)
    m = random_perfect_matching(damaged.surviving, rng)
    plan = route_matching(damaged, m, R, 20, rng)
    assert len(plan.served) <= brute_force_route(damaged, m, R)


def test_deterministic_for_same_seed():
    topo = build_nested(6)
    m = random_perfect_matching(topo.surviving, np.random.default_rng(3))
    a = route_matching(topo, m, 1, 20, np.random.default_rng(11))
    b = route_matching(topo, m, 1, 20, np.random.default_rng(11))
    assert a.to_dict() == b.to_dict()


def test_unbounded_serves_everything_connected():
    topo = build_nested(5)
    m = random_perfect_matching(topo.surviving, np.random.default_rng(0))
    plan = route_matching(topo, m, None, 20, np.random.default_rng(0))
    assert plan_metrics(plan).served_fraction == 1


def test_invalid_request_rejected():
    topo = apply_failures(build_nested(3), {0})
    with pytest.raises(RoutingError):
        route_matching(topo, Matching.from_pairs([(0, 1)]), 1, 5)
    with pytest.raises(RoutingError):
        route_matching(build_nested(3), Matching.from_pairs([(0, 1)]), 0, 5)


def test_required_load_serves_all_and_bounds_greedy():
    topo = build_nested(5)
    for seed in range(5):
        m = random_perfect_matching(topo.surviving, np.random.default_rng(seed))
        req, plan = required_load(topo, m, 20, np.random.default_rng(seed))
        check_plan(topo, m, plan, None)
        assert len(plan.served) == len(m)
        assert req == plan_metrics(plan).max_edge_load >= 1


# --- metrics ------------------------------------------------------------------


def test_empty_plan_metrics():
    topo = build_nested(3)
    plan = route_matching(topo, Matching.from_pairs([]), 1, 5)
    met = plan_metrics(plan)
    assert met.served_fraction == 0
    assert met.mean_path_length is None
    assert met.edge_load_histogram == {0: 12}


def test_single_pair_histogram():
    plan = route_matching(build_nested(3), Matching.from_pairs([(0, 7)]), 1, 5)
    assert plan_metrics(plan).edge_load_histogram == {0: 9, 1: 3}


# --- brute force oracle -------------------------------------------------------


def test_brute_force_single_pair():
    assert brute_force_route(build_nested(3), Matching.from_pairs([(0, 1)]), 1) == 1


def test_q2_diagonals_conflict_at_unit_capacity():
    # each diagonal of the 4-cycle needs two edges, and any two such paths share one
    topo = build_nested(2)
    m = Matching.from_pairs([(0, 3), (1, 2)])
    assert brute_force_route(topo, m, 1) == 1
    assert brute_force_route(topo, m, 2) == 2
    paths = {p: exhaustive_paths(topo, *p) for p in m.pairs}
    assert all(
        set(path_edges(a)) & set(path_edges(b)) for a, b in itertools.product(*paths.values())
    )


def test_q2_all_matchings_routable_at_two():
    topo = build_nested(2)
    assert [brute_force_route(topo, m, 2) for m in enumerate_matchings(range(4))] == [2, 2, 2]


def test_brute_force_size_guard():
    with pytest.raises(RoutingError):
        brute_force_route(build_nested(5), Matching.from_pairs([(0, 1)]), 1)


def test_capacity_monotone_for_optimum():
    topo = build_nested(3)
    for m in itertools.islice(enumerate_matchings(range(8)), 0, 105, 7):
        assert brute_force_route(topo, m, 1) <= brute_force_route(topo, m, 2)


def test_greedy_served_non_decreasing_in_capacity_on_sample():
    # first-fit is not provably monotone in R; this checks a fixed sample of damaged instances
    for d in (3, 4, 5):
        base = build_nested(d)
        for seed in range(150):
            rng = np.random.default_rng(seed)
            failed = rng.choice(base.n, int(rng.integers(0, base.n // 3)), replace=False).tolist()
            topo = apply_failures(base, failed)
            if len(topo.surviving) < 2:
                continue
            m = random_perfect_matching(topo.surviving, rng)
            k = int(rng.integers(1, 20))
            served = [len(route_matching(topo, m, R, k, np.random.default_rng(seed + 1)).served) for R in (1, 2, 3)]
            assert served == sorted(served)
