import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from nestedswitch.experiments import (
    ConfigError,
    ExperimentConfig,
    aggregate,
    derive_rng,
    failure_sweep,
    failure_sweep_csv,
    load_distribution,
    load_distribution_csv,
    run_trial,
    scaling_csv,
    scaling_sweep,
    to_csv,
)


def test_aggregate_examples():
    assert aggregate([1, 1, 1]) == (1.0, 0.0)
    mean, err = aggregate([0, 1])
    assert mean == 0.5
    assert err == pytest.approx(0.5)  # std 0.7071 / sqrt(2)
    assert aggregate([4.0]) == (4.0, 0.0)
    with pytest.raises(ValueError):
        aggregate([])


@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=50))
def test_aggregate_matches_textbook(xs):
    mean, err = aggregate(xs)
    m = math.fsum(xs) / len(xs)
    var = math.fsum((x - m) ** 2 for x in xs) / (len(xs) - 1)
    assert mean == pytest.approx(m, abs=1e-6)
    assert err == pytest.approx(math.sqrt(var / len(xs)), rel=1e-6, abs=1e-6)


def test_streams_are_independent_and_reproducible():
    a = derive_rng(7, "matching", 0, 3).integers(0, 2**62, 4)
    assert (a == derive_rng(7, "matching", 0, 3).integers(0, 2**62, 4)).all()
    assert (a != derive_rng(7, "routing", 0, 3).integers(0, 2**62, 4)).any()
    assert (a != derive_rng(8, "matching", 0, 3).integers(0, 2**62, 4)).any()


@pytest.mark.parametrize(
    "kwargs",
    [dict(d=0), dict(d=3, R=0), dict(d=3, k=0), dict(d=3, trials=0), dict(d=3, x_values=(7,)), dict(d=3, x_values=(-1,))],
)
def test_config_errors(kwargs):
    with pytest.raises(ConfigError):
        ExperimentConfig(**kwargs)


def test_trial_respects_failures():
    cfg = ExperimentConfig(d=5, R=2, trials=3, x_values=(6,), seed=1)
    rec = run_trial(cfg, 6, 0)
    assert len(rec.failed) == 6 == len(set(rec.failed))
    assert not set(rec.matching.nodes) & set(rec.failed)
    assert rec.metrics.requested == (32 - 6) // 2


def test_failure_sweep_small():
    cfg = ExperimentConfig(d=4, R=2, trials=20, x_values=(0, 2, 4), seed=3)
    rows = failure_sweep(cfg)
    assert [r.x for r in rows] == [0, 2, 4]
    assert all(0 <= r.mean_served <= 1 and r.M == 20 for r in rows)
    assert rows[0].mean_hops >= 1


def test_load_distribution_normalised_and_capped():
    cfg = ExperimentConfig(d=5, R=2, trials=10, seed=4)
    dist = load_distribution(cfg)
    assert sum(dist.values()) == pytest.approx(1)
    assert max(dist) <= 2


def test_single_pair_load_distribution():
    # with d=1 the request is one pair over one edge
    cfg = ExperimentConfig(d=1, R=1, trials=3, seed=0)
    assert load_distribution(cfg) == {1: 1.0}


def test_scaling_small():
    rows = scaling_sweep([3, 4], trials=5, seed=0)
    assert [r.n for r in rows] == [8, 16]
    assert all(1 <= r.mean_max_load <= r.worst_max_load for r in rows)
    with pytest.raises(ConfigError):
        scaling_sweep([11], trials=1, seed=0)


def test_csv_layout():
    text = to_csv("hello", ("a", "b"), [(1, 0.1), (2, float("nan"))])
    assert text.splitlines() == ["# hello", "a,b", "1,0.1", "2,nan"]


def test_csv_identical_across_worker_counts():
    cfg = ExperimentConfig(d=4, R=1, trials=12, x_values=(0, 3), seed=9)
    assert failure_sweep_csv(cfg, failure_sweep(cfg, 1)) == failure_sweep_csv(cfg, failure_sweep(cfg, 2))
    assert load_distribution_csv(cfg, load_distribution(cfg, 0, 1)) == load_distribution_csv(
        cfg, load_distribution(cfg, 0, 2)
    )
    one = scaling_csv([3, 4], 6, 9, 20, scaling_sweep([3, 4], 6, 9, workers=1))
    two = scaling_csv([3, 4], 6, 9, 20, scaling_sweep([3, 4], 6, 9, workers=2))
    assert one == two
    assert one.startswith("# max-load-scaling")


def test_different_seed_changes_results():
    a = ExperimentConfig(d=5, R=1, trials=10, seed=1)
    b = ExperimentConfig(d=5, R=1, trials=10, seed=2)
    assert failure_sweep_csv(a, failure_sweep(a)).splitlines()[2] != failure_sweep_csv(b, failure_sweep(b)).splitlines()[2]
