import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings

from erft.dynamics import (
    PI,
    Beamsplitter,
    Identity,
    Instrument,
    MultiExcitationWarning,
    PhaseShift,
    apply_transformation_ontic,
    measure_destructive_epistemic,
    measure_destructive_ontic,
    measure_epistemic,
    measure_nondestructive_epistemic,
    measure_nondestructive_ontic,
    measure_ontic,
    pushforward,
)
from erft.ensemble import reachable_states
from erft.ontology import (
    DomainError,
    EpistemicState,
    JointOnticState,
    make_source_state,
    make_vacuum_state,
    marginal,
    validate_epistemic,
)

from conftest import valid_circuits

Q = Fraction
BS_AB = Beamsplitter(0, 1)


def J(*pairs):
    return JointOnticState.of(*pairs)


def ontic_space(k):
    return [J(*zip(ns, ss)) for ns in itertools.product((0, 1), repeat=k) for ss in itertools.product((1, -1), repeat=k)]


def all_transformations(k):
    ts = [Identity()]
    ts += [Beamsplitter(i, j) for i in range(k) for j in range(k) if i != j]
    ts += [PhaseShift(m, phi) for m in range(k) for phi in (0, PI)]
    return ts


# Rule table for the one-excitation sector, written out by hand:
# stays when s_a*s_b = +1, hops when -1, phases untouched.
BS_TABLE = {
    ((1, 1), (0, 1)): ((1, 1), (0, 1)),
    ((1, -1), (0, -1)): ((1, -1), (0, -1)),
    ((1, 1), (0, -1)): ((0, 1), (1, -1)),
    ((1, -1), (0, 1)): ((0, -1), (1, 1)),
    ((0, 1), (1, 1)): ((0, 1), (1, 1)),
    ((0, -1), (1, -1)): ((0, -1), (1, -1)),
    ((0, 1), (1, -1)): ((1, 1), (0, -1)),
    ((0, -1), (1, 1)): ((1, -1), (0, 1)),
}


@pytest.mark.parametrize("src,dst", BS_TABLE.items())
def test_beamsplitter_rule_table(src, dst):
    assert apply_transformation_ontic(J(*src), BS_AB) == J(*dst)


def test_beamsplitter_examples():
    assert apply_transformation_ontic(J((1, 1), (0, 1)), BS_AB) == J((1, 1), (0, 1))
    assert apply_transformation_ontic(J((1, 1), (0, -1)), BS_AB) == J((0, 1), (1, -1))


def test_beamsplitter_vacuum_and_double_sectors():
    for x in ontic_space(2):
        if x.occ(0) + x.occ(1) == 0:
            assert apply_transformation_ontic(x, BS_AB) == x
    with pytest.warns(MultiExcitationWarning):
        assert apply_transformation_ontic(J((1, 1), (1, -1)), BS_AB) == J((1, 1), (1, -1))


def test_phase_shift():
    assert apply_transformation_ontic(J((1, 1), (0, -1)), PhaseShift(0, PI)) == J((1, -1), (0, -1))
    assert apply_transformation_ontic(J((1, 1), (0, -1)), PhaseShift(0, 0)) == J((1, 1), (0, -1))
    with pytest.raises(DomainError):
        PhaseShift(0, PI / 2)
    with pytest.raises(DomainError):
        Beamsplitter(1, 1)
    with pytest.raises(DomainError):
        apply_transformation_ontic(J((1, 1)), PhaseShift(3, PI))


@pytest.mark.filterwarnings("ignore::erft.dynamics.MultiExcitationWarning")
def test_beamsplitter_bijection_and_involution_16_states():
    space = ontic_space(2)
    assert len(space) == 16
    image = [apply_transformation_ontic(x, BS_AB) for x in space]
    assert sorted(image) == sorted(space)
    assert all(apply_transformation_ontic(y, BS_AB) == x for x, y in zip(space, image))


@pytest.mark.filterwarnings("ignore::erft.dynamics.MultiExcitationWarning")
@pytest.mark.parametrize("k", [1, 2, 3])
def test_occupation_conservation_and_non_disturbance(k):
    for t in all_transformations(k):
        for x in ontic_space(k):
            y = apply_transformation_ontic(x, t)
            assert sum(m.n for m in y) == sum(m.n for m in x)
            for m in set(range(k)) - set(t.modes):
                assert y.modes[m] == x.modes[m]


def test_pushforward_examples():
    p = pushforward(make_source_state(2, 0), BS_AB)
    assert len(p) == 4 and set(p.weights.values()) == {Q(1, 4)}
    for x in p.weights:
        assert x.occ(0) == (1 if x.phase(0) * x.phase(1) == 1 else 0)
    assert pushforward(p, Identity()) == p
    assert pushforward(p, BS_AB) == make_source_state(2, 0)


def test_pushforward_involution_exhaustive():
    # every distribution on the one-excitation sector with dyadic weights 1/8 or 1/4
    sector = [J(*s) for s in BS_TABLE]
    for support in itertools.combinations(sector, 4):
        p = EpistemicState({x: Q(1, 4) for x in support})
        assert pushforward(pushforward(p, BS_AB), BS_AB) == p


def test_nondestructive_ontic_examples():
    x = J((1, -1), (0, 1))
    assert measure_nondestructive_ontic(x, 0, 0) == (1, J((1, 1), (0, 1)))
    y = J((1, 1), (0, 1))
    assert measure_nondestructive_ontic(y, 1, 1) == (0, J((1, 1), (0, -1)))


@pytest.mark.parametrize("measure", [measure_nondestructive_ontic, measure_destructive_ontic])
def test_other_modes_untouched_exhaustive(measure):
    for x in ontic_space(2):
        for m in (0, 1):
            for coin in (0, 1):
                outcome, y = measure(x, m, coin)
                assert outcome == x.occ(m)
                assert y.modes[1 - m] == x.modes[1 - m]
                assert y.phase(m) == (1 if coin == 0 else -1)


def test_destructive_ontic():
    assert measure_destructive_ontic(J((0, 1), (1, 1)), 1, 0) == (1, J((0, 1), (0, 1)))
    assert measure_destructive_ontic(J((0, 1), (0, 1)), 1, 1) == (0, J((0, 1), (0, -1)))
    with pytest.raises(DomainError):
        measure_destructive_ontic(J((0, 1)), 1, 0)
    with pytest.raises(DomainError):
        measure_nondestructive_ontic(J((0, 1)), 0, 2)


def test_nondestructive_epistemic_after_bs():
    p = pushforward(make_source_state(2, 0), BS_AB)
    results = measure_nondestructive_epistemic(p, 1)
    assert {r.outcome: r.probability for r in results} == {0: Q(1, 2), 1: Q(1, 2)}
    for r in results:
        assert validate_epistemic(r.post_state).ok
        assert marginal(r.post_state, 1) == {k: Q(1, 2) for k in marginal(r.post_state, 1)}


def test_vacuum_measurement_single_branch():
    (r,) = measure_nondestructive_epistemic(make_vacuum_state(2), 0)
    assert (r.outcome, r.probability) == (0, 1)


def test_block_after_bs():
    p = pushforward(make_source_state(2, 0), BS_AB)
    results = measure_destructive_epistemic(p, 1)
    assert {r.outcome: r.probability for r in results} == {0: Q(1, 2), 1: Q(1, 2)}
    absorbed = next(r for r in results if r.outcome == 1)
    assert all(x.occ(1) == 0 and x.occ(0) == 0 for x in absorbed.post_state.weights)


def _mixture_of_ontic(p, inst):
    """Brute-force branch: push every state through both coins, split by outcome."""
    acc = {}
    for x, w in p.items():
        for coin in (0, 1):
            o, y = measure_ontic(x, inst, coin)
            acc.setdefault(o, {})
            acc[o][y] = acc[o].get(y, 0) + w / 2
    out = {}
    for o, ws in acc.items():
        mass = sum(ws.values())
        out[o] = (mass, EpistemicState({y: w / mass for y, w in ws.items()}))
    return out


@settings(max_examples=60, deadline=None)
@given(valid_circuits(max_modes=3, max_elements=6))
def test_epistemic_branch_equals_coin_mixture(c):
    for _, _, state in reachable_states(c):
        for m in range(state.mode_count):
            for destructive in (False, True):
                inst = Instrument(m, destructive)
                brute = _mixture_of_ontic(state, inst)
                got = {r.outcome: (r.probability, r.post_state) for r in measure_epistemic(state, inst)}
                assert got == brute


@settings(max_examples=100, deadline=None)
@given(valid_circuits(max_modes=4, max_elements=8))
def test_reachable_states_normalized_with_uniform_phases(c):
    for _, _, state in reachable_states(c):
        r = validate_epistemic(state)
        assert r.normalized
        assert all(r.phase_marginals_uniform)


@settings(max_examples=100, deadline=None)
@given(valid_circuits(max_modes=2, max_elements=8, allow_divert=False))
def test_two_mode_reachable_states_fully_valid(c):
    for _, _, state in reachable_states(c):
        assert validate_epistemic(state).ok


def test_three_mode_measurement_exceeds_knowledge_bound():
    # Measuring c after a two-stage split pins s_a*s_b; the posterior is also
    # non-dyadic (probability-3/4 conditioning).  Documented limit of the
    # surrogates, not a bug in the update rule.
    p = make_source_state(3, 0)
    p = pushforward(pushforward(p, Beamsplitter(0, 1)), Beamsplitter(0, 2))
    results = {r.outcome: r for r in measure_nondestructive_epistemic(p, 2)}
    assert results[0].probability == Q(3, 4)
    assert results[1].probability == Q(1, 4)
    report = validate_epistemic(results[1].post_state)
    assert report.normalized and all(report.phase_marginals_uniform)
    assert not report.max_weight_bound_ok
    assert max(results[1].post_state.weights.values()) == Q(1, 4)
    assert not validate_epistemic(results[0].post_state).dyadic
