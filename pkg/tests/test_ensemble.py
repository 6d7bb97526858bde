import math
from fractions import Fraction

import pytest
from hypothesis import given, settings

from erft import corpus
from erft.circuit import PI, Circuit, Detect, Phase, Source
from erft.ensemble import (
    InvalidCircuit,
    OutcomeDistribution,
    condition,
    convergence_experiment,
    enumerate_exact,
    headline,
    random_bit_count,
    run_ensemble,
    run_exact,
    run_trial,
    trial_bits,
    tv_distance,
)
from erft.ontology import DomainError

from conftest import valid_circuits

Q = Fraction


def test_run_exact_examples():
    assert run_exact(corpus.load("mz_phi0")).as_labels() == {"D_a": 1}
    assert run_exact(corpus.load("mz_phiPi")).as_labels() == {"D_b": 1}
    assert run_exact(corpus.load("mz_measure_nd")).as_labels() == {
        "b=0,D_a": Q(1, 4),
        "b=0,D_b": Q(1, 4),
        "b=1,D_a": Q(1, 4),
        "b=1,D_b": Q(1, 4),
    }


def test_invalid_circuit_rejected():
    c = Circuit("x", ("a",), (Source("a"), Phase("a", PI / 2), Detect(("a",))))
    with pytest.raises(InvalidCircuit, match="unsupported phase"):
        run_exact(c)
    with pytest.raises(InvalidCircuit):
        enumerate_exact(c)


@pytest.mark.parametrize("name", corpus.NAMES)
def test_epistemic_evolution_equals_enumeration(name):
    c = corpus.load(name)
    assert run_exact(c) == enumerate_exact(c)
    assert run_exact(c).total() == 1


@settings(max_examples=80, deadline=None)
@given(valid_circuits(max_modes=3, max_elements=6))
def test_epistemic_evolution_equals_enumeration_random(c):
    exact = run_exact(c)
    assert exact == enumerate_exact(c)
    assert exact.is_dyadic() and exact.total() == 1


def test_trial_examples():
    c = corpus.load("mz_phi0")
    for i in range(50):
        assert run_trial(c, i, 1).terminal == "D_a"
    r1, r2 = run_trial(corpus.load("mz_block"), 3, 9), run_trial(corpus.load("mz_block"), 3, 9)
    assert r1 == r2 and r1.to_dict() == r2.to_dict()
    assert len(r1.trajectory) == len(corpus.load("mz_block").elements)
    assert len(r1.transcript) == 2


def test_trial_bits_keyed():
    assert trial_bits(5, 0, 70) == trial_bits(5, 0, 70)
    assert trial_bits(5, 0, 64) != trial_bits(5, 1, 64)
    assert trial_bits(5, 0, 64) != trial_bits(6, 0, 64)
    assert len(trial_bits(1, 2, 130)) == 130
    with pytest.raises(DomainError):
        trial_bits(-1, 0, 3)


def test_random_bit_count():
    assert random_bit_count(corpus.load("mz_measure_nd")) == 3
    assert random_bit_count(corpus.load("mz_mirror_removed")) == 3


def test_run_ensemble_point_mass():
    d = run_ensemble(corpus.load("mz_phi0"), 1000, 4)
    assert d.as_labels() == {"D_a": 1.0}
    assert d.kind == "estimated" and d.trials == 1000


def test_run_ensemble_single_trial():
    d = run_ensemble(corpus.load("mz_measure_nd"), 1, 0)
    assert len(d) == 1 and d.total() == 1.0
    with pytest.raises(DomainError):
        run_ensemble(corpus.load("mz_measure_nd"), 0, 0)


def test_blocked_arm_frequencies():
    n = 100_000
    d = run_ensemble(corpus.load("mz_block"), n, 2024).summary()
    for label, p in {"absorbed@b": 0.5, "D_a": 0.25, "D_b": 0.25}.items():
        assert abs(d[label] - p) <= 3 * math.sqrt(p * (1 - p) / n)


def test_parallel_matches_serial():
    c = corpus.load("mz_block")
    assert run_ensemble(c, 3000, 8, workers=1).counts == run_ensemble(c, 3000, 8, workers=3).counts


def test_condition_examples():
    d = run_exact(corpus.load("mz_measure_nd"))
    assert condition(d, {0: "b=0"}).terminal().as_labels() == {"D_a": Q(1, 2), "D_b": Q(1, 2)}
    assert condition(d, {}) == d
    blocked = run_exact(corpus.load("mz_block"))
    assert condition(blocked, {0: "absorbed@b"}).as_labels() == {"absorbed@b,none": 1}
    with pytest.raises(DomainError):
        condition(blocked, {0: "absorbed@b", 1: "D_a"})


@settings(max_examples=60, deadline=None)
@given(valid_circuits(max_modes=3, max_elements=6))
def test_condition_idempotent_and_commutes_with_marginal(c):
    d = run_exact(c)
    k = next(iter(d.entries))
    pattern = {len(k) - 1: k[-1]}
    once = condition(d, pattern)
    assert condition(once, pattern) == once
    # marginalizing away the first instrument entry first gives the same terminal law
    if len(k) > 1:
        kept = [i for i in range(1, len(k))]
        left = condition(d, pattern).marginal(kept)
        right = condition(d.marginal(kept), {len(kept) - 1: k[-1]})
        assert left == right


def test_condition_estimated_keeps_counts():
    d = run_ensemble(corpus.load("mz_measure_nd"), 400, 1)
    c = condition(d, {0: "b=1"})
    assert c.trials == sum(c.counts.values()) < 400
    assert abs(c.total() - 1) < 1e-12


def test_tv_distance():
    p = OutcomeDistribution({("x",): Q(1, 2), ("y",): Q(1, 2)})
    q = OutcomeDistribution({("x",): Q(1)})
    assert tv_distance(p, q) == Q(1, 2)
    assert tv_distance(p, p) == 0


def test_headline():
    assert headline(("pass@b", "D_a")) == "D_a"
    assert headline(("absorbed@b", "none")) == "absorbed@b"
    assert headline(("w=0", "none")) == "none"


def test_convergence_examples():
    rep = convergence_experiment(corpus.load("mz_phi0"), [10, 100, 1000], 3)
    assert rep.tv == (0.0, 0.0, 0.0)
    rep = convergence_experiment(corpus.load("mz_measure_nd"), [100, 1000, 10_000, 100_000], 5)
    assert rep.tv[-1] <= 3 * math.sqrt(4 / 100_000)
    assert rep.tv[-1] < rep.tv[0]
    assert rep.to_dict()["rows"][0]["trials"] == 100
    with pytest.raises(DomainError):
        convergence_experiment(corpus.load("mz_phi0"), [], 0)
    with pytest.raises(DomainError):
        convergence_experiment(corpus.load("mz_phi0"), [100, 10], 0)
