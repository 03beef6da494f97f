import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finmem import chain
from finmem.bounds import ergodic_converse_bound, randomized_lower_bound
from finmem.builders import last_bit_machine, run_machine
from finmem.errors import InvalidArgument, UnsupportedStructure
from finmem.model import H0, H1, HypothesisPair, Machine, relabel

from machines import (
    PAIRS,
    brute_force_decisions_pe,
    cesaro_error,
    eig_stationary,
    hitting_probability,
    random_irreducible,
    random_machine,
    random_two_absorber,
)

PARITY = Machine(((0, 1), (1, 0)), (H0, H1), 0)
CYCLE3 = Machine(((0, 1), (1, 2), (2, 0)), (H0, H0, H1), 0)


def test_transition_matrix_examples():
    np.testing.assert_allclose(chain.transition_matrix(last_bit_machine(), 0.9), [[0.1, 0.9], [0.1, 0.9]])
    loops = Machine(((0, 0), (1, 1), (2, 2)), (0, 0, 0), 0)
    np.testing.assert_array_equal(chain.transition_matrix(loops, 0.3), np.eye(3))
    P = chain.transition_matrix(run_machine(3, 2), 0.9)
    np.testing.assert_allclose(P[1], [0.1, 0.0, 0.9])
    with pytest.raises(InvalidArgument):
        chain.transition_matrix(loops, 1.0)


@given(st.integers(1, 8), st.integers(0, 2**32 - 1), st.floats(0.01, 0.99))
@settings(max_examples=100, deadline=None)
def test_transition_matrix_row_stochastic(S, seed, theta):
    m = random_machine(np.random.default_rng(seed), S)
    P = chain.transition_matrix(m, theta)
    assert np.max(np.abs(P.sum(axis=1) - 1.0)) <= 1e-12
    allowed = {theta, 1 - theta, 1.0}
    for row in P:
        nz = row[row > 0]
        assert len(nz) <= 2
        assert all(any(abs(x - a) <= 1e-15 for a in allowed) for x in nz)


def test_classify_examples():
    st5 = chain.classify(run_machine(5, 3))
    assert st5.recurrent_classes == ((0,), (4,)) and st5.transient == (1, 2, 3)
    lb = chain.classify(last_bit_machine())
    assert lb.recurrent_classes == ((0, 1),) and lb.transient == ()
    loops = chain.classify(Machine(((0, 0), (1, 1), (2, 2)), (0, 0, 0), 0))
    assert loops.K == 3 and loops.transient == ()


@given(st.integers(1, 9), st.integers(0, 2**32 - 1))
@settings(max_examples=200, deadline=None)
def test_classify_partition_and_closure(S, seed):
    m = random_machine(np.random.default_rng(seed), S)
    s = chain.classify(m)
    members = [x for c in s.recurrent_classes for x in c]
    assert sorted(members + list(s.transient)) == list(range(S))
    assert len(set(members)) == len(members)
    for c in s.recurrent_classes:
        assert all(t in c for i in c for t in m.transitions[i])
    # every transient state can leave its SCC, so it reaches some class
    assert s.K >= 1


def test_stationary_examples():
    np.testing.assert_allclose(chain.stationary(chain.transition_matrix(last_bit_machine(), 0.9), [0, 1]), [0.1, 0.9])
    np.testing.assert_allclose(chain.stationary(chain.transition_matrix(PARITY, 0.8), [0, 1]), [0.5, 0.5])
    np.testing.assert_allclose(chain.stationary(chain.transition_matrix(CYCLE3, 0.37), [0, 1, 2]), [1 / 3] * 3)


@given(st.integers(1, 8), st.integers(0, 2**32 - 1), st.floats(0.01, 0.99))
@settings(max_examples=100, deadline=None)
def test_stationary_matches_eigenvector(S, seed, theta):
    m = random_irreducible(np.random.default_rng(seed), S)
    P = chain.transition_matrix(m, theta)
    mu = chain.stationary(P, range(S))
    assert np.max(np.abs(mu @ P - mu)) <= 1e-10
    assert abs(mu.sum() - 1) <= 1e-10
    np.testing.assert_allclose(mu, eig_stationary(P), atol=1e-9)


def test_absorption_examples():
    np.testing.assert_allclose(chain.absorption(run_machine(4, 2), 0.9), [0.19, 0.81], atol=1e-14)
    absorbing_start = Machine(((0, 0), (0, 1)), (H1, H0), 0)
    np.testing.assert_array_equal(chain.absorption(absorbing_start, 0.4), [1.0])
    a = chain.absorption(run_machine(6, 3), 0.9)
    # (1 - 0.9^3) / (1 + 0.9^2 / 0.1 - 0.9^2)
    assert a[0] == pytest.approx(0.271 / 8.29, abs=1e-12)
    assert round(a[0], 6) == 0.032690


def test_error_probability_examples():
    pair = HypothesisPair(0.9, 0.1)
    rep = chain.error_probability(last_bit_machine(), pair)
    assert rep.pe == pytest.approx(0.1, abs=1e-12)
    assert rep.pe_given_h0 == pytest.approx(0.1, abs=1e-12)
    for p, q in PAIRS:
        pr = HypothesisPair(p, q)
        assert chain.error_probability(PARITY, pr, optimal=True).pe == pytest.approx(0.5, abs=1e-12)
    rep = chain.error_probability(run_machine(6, 3), pair)
    assert rep.pe == pytest.approx(0.5 * (0.002108768035516095 + 0.03268998793727382), abs=1e-12)
    assert round(rep.pe, 6) == 0.017399


def test_error_report_json_fields():
    d = chain.error_probability(run_machine(5, 3), HypothesisPair(0.8, 0.3)).to_dict()
    assert {"pe", "pe_h0", "pe_h1", "per_state_min", "classes"} <= set(d)
    assert len(d["classes"]) == 2


@given(st.integers(1, 6), st.integers(0, 2**32 - 1), st.sampled_from(PAIRS))
@settings(max_examples=150, deadline=None)
def test_error_matches_cesaro_oracle(S, seed, pq):
    m = random_machine(np.random.default_rng(seed), S)
    pair = HypothesisPair(*pq)
    rep = chain.error_probability(m, pair)
    assert abs(rep.pe - 0.5 * (rep.pe_given_h0 + rep.pe_given_h1)) <= 1e-12
    # Cesaro average over 2^40 steps; transient bias is O(E[absorption time] / 2^40)
    assert rep.pe == pytest.approx(cesaro_error(m, pair), abs=1e-6)


def test_optimal_decision_examples():
    pair = HypothesisPair(0.9, 0.1)
    assert chain.optimal_decision(last_bit_machine(), pair) == (H1, H0)
    # identical weights at every state -> H1 everywhere
    assert chain.optimal_decision(PARITY, pair) == (H1, H1)
    dec = chain.optimal_decision(run_machine(7, 4), pair)
    assert dec[0] == H1 and dec[6] == H0


@given(st.integers(1, 5), st.integers(0, 2**32 - 1), st.sampled_from(PAIRS))
@settings(max_examples=80, deadline=None)
def test_optimal_decision_beats_every_labelling(S, seed, pq):
    m = random_machine(np.random.default_rng(seed), S)
    pair = HypothesisPair(*pq)
    best = chain.error_probability(m, pair, optimal=True).pe
    assert best == pytest.approx(brute_force_decisions_pe(m, pair), abs=1e-12)
    assert 0 <= best <= 0.5 + 1e-12


@given(st.integers(1, 8), st.integers(0, 2**32 - 1), st.sampled_from(PAIRS))
@settings(max_examples=150, deadline=None)
def test_irreducible_lemmas(S, seed, pq):
    rng = np.random.default_rng(seed)
    m = random_irreducible(rng, S)
    pair = HypothesisPair(*pq)
    mu_p = chain.stationary(chain.transition_matrix(m, pair.p), range(S))
    mu_q = chain.stationary(chain.transition_matrix(m, pair.q), range(S))
    pe = chain.error_probability(m, pair, optimal=True).pe
    assert abs(pe - 0.5 * np.minimum(mu_p, mu_q).sum()) <= 1e-12
    srt = np.sort(mu_p)[::-1]
    assert np.all(srt[1:] >= srt[:-1] * min(pair.p, 1 - pair.p) - 1e-12)
    assert pe >= randomized_lower_bound(S, pair) - 1e-12
    if S >= 2:
        assert pe >= ergodic_converse_bound(S, pair) - 1e-12


@given(st.integers(1, 7), st.integers(0, 2**32 - 1), st.sampled_from(PAIRS))
@settings(max_examples=150, deadline=None)
def test_any_machine_respects_randomized_bound(S, seed, pq):
    m = random_machine(np.random.default_rng(seed), S)
    pair = HypothesisPair(*pq)
    assert chain.optimal_pe(m, pair) >= randomized_lower_bound(S, pair) - 1e-12


@given(st.integers(1, 7), st.integers(0, 2**32 - 1), st.data())
@settings(max_examples=100, deadline=None)
def test_error_invariant_under_relabeling(S, seed, data):
    m = random_machine(np.random.default_rng(seed), S)
    perm = data.draw(st.permutations(range(S)))
    pair = HypothesisPair(0.7, 0.2)
    assert abs(chain.error_probability(m, pair).pe - chain.error_probability(relabel(m, perm), pair).pe) <= 1e-12


def test_periodic_class_uses_stationary_vector():
    # Input-independent 3-cycle: the error is the fraction of H1-labelled states.
    m = Machine(((1, 1), (2, 2), (0, 0)), (H0, H1, H1), 0)
    rep = chain.error_probability(m, HypothesisPair(0.9, 0.1))
    assert rep.pe_given_h0 == pytest.approx(2 / 3, abs=1e-12)
    assert rep.pe_given_h1 == pytest.approx(1 / 3, abs=1e-12)


def test_diagnostics_run_machine():
    pair = HypothesisPair(0.9, 0.1)
    for S in range(3, 9):
        for s in range(2, S):
            d = chain.structural_diagnostics(run_machine(S, s), pair)
            assert d.td[s - 1] == S - 1
            assert d.occ[s - 1] == 1.0
    assert chain.structural_diagnostics(run_machine(5, 3), pair).td[2] == 4


def test_diagnostics_rejects_other_structures():
    pair = HypothesisPair(0.9, 0.1)
    with pytest.raises(UnsupportedStructure):
        chain.structural_diagnostics(last_bit_machine(), pair)
    same = Machine(((0, 0), (0, 2), (2, 2)), (H0, H0, H0), 1)
    with pytest.raises(UnsupportedStructure):
        chain.structural_diagnostics(same, pair)


@given(st.integers(3, 8), st.integers(0, 2**32 - 1), st.sampled_from(PAIRS))
@settings(max_examples=60, deadline=None)
def test_diagnostics_random_two_absorber(S, seed, pq):
    m = random_two_absorber(np.random.default_rng(seed), S)
    pair = HypothesisPair(*pq)
    d = chain.structural_diagnostics(m, pair)
    u = d.witness
    assert d.td[u] <= S
    assert d.occ[u] >= (1 - max(d.p0, d.p1)) / S - 1e-12
    for v in range(S):
        oracle = min(hitting_probability(m, pair.p, v), hitting_probability(m, pair.q, v))
        assert d.occ[v] == pytest.approx(oracle, abs=1e-9)
    rep = chain.error_probability(m, pair)
    assert 0.5 * (d.p0 + d.p1) == pytest.approx(rep.pe, abs=1e-12)
    assert not math.isinf(d.td[m.initial])


def test_diagnostics_needs_both_targets_reachable():
    # initial state 1 can only fall into state 0
    m = Machine(((0, 0), (0, 1), (2, 2)), (H1, H1, H0), 1)
    with pytest.raises(UnsupportedStructure):
        chain.structural_diagnostics(m, HypothesisPair(0.9, 0.1))
