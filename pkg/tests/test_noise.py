import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import naive_asymmetric_signal, naive_biased_uniform, naive_readout_noise, readout_HK
from xebstats.errors import DimensionError, DomainError, NoAcceptanceError
from xebstats.noise import (
    Basic,
    GeneralP,
    ReadoutAsymmetric,
    ReadoutSymmetric,
    Sample,
    asymmetric_signal_vector,
    biased_uniform,
    draw_sample,
    draw_sample_with_rejection,
    readout_constants,
    readout_noise_vector,
    sample_model,
    sampling_probs,
)
from xebstats.probmodel import ProbabilityVector, SeedSpec, gen_porter_thomas, moments

seeds = st.integers(0, 2**32)


def test_model_invariants():
    for bad in (lambda: Basic(1.2), lambda: Basic(-0.1),
                lambda: ReadoutSymmetric(0.7, 0.4, 0.1),
                lambda: ReadoutSymmetric(0.3, 0.2, 0.0),
                lambda: ReadoutSymmetric(0.3, 0.2, 1.0),
                lambda: ReadoutAsymmetric(1.1, 0.1, 0.1),
                lambda: ReadoutAsymmetric(0.5, 0.0, 0.1)):
        with pytest.raises(DomainError):
            bad()
    pv3, pv4 = ProbabilityVector.uniform(3), ProbabilityVector.uniform(4)
    with pytest.raises(DomainError):
        GeneralP((0.5, 0.6), (pv3, pv3))
    with pytest.raises(DimensionError):
        GeneralP((0.5, 0.5), (pv3, pv4))
    assert ReadoutSymmetric(0.3862, 0.2286, 0.038).phi_g == pytest.approx(0.6148)


def test_readout_vector_single_qubit_swaps():
    pv = ProbabilityVector(1, np.array([0.3, 0.7]))
    v = readout_noise_vector(pv, 0.2)
    assert np.allclose(v.weights, [0.7, 0.3], atol=1e-15)


def test_readout_vector_of_uniform_is_uniform():
    pv = ProbabilityVector.uniform(9)
    assert np.allclose(readout_noise_vector(pv, 0.038).weights, 1 / 512, rtol=1e-12)


@given(st.integers(1, 8), seeds, st.floats(0.001, 0.999))
@settings(max_examples=40, deadline=None)
def test_readout_vector_matches_naive_sum(n, seed, q):
    pv = gen_porter_thomas(n, SeedSpec(seed))
    fast = readout_noise_vector(pv, q).weights
    slow = naive_readout_noise(pv.weights, n, q)
    assert np.max(np.abs(fast - slow)) <= 1e-12


@given(st.integers(1, 7), seeds, st.floats(0.001, 0.999), st.floats(0.001, 0.999))
@settings(max_examples=40, deadline=None)
def test_asymmetric_signal_matches_naive_sum(n, seed, q1, q2):
    pv = gen_porter_thomas(n, SeedSpec(seed))
    fast = asymmetric_signal_vector(pv, q1, q2).weights
    assert np.max(np.abs(fast - naive_asymmetric_signal(pv.weights, n, q1, q2))) <= 1e-12


def test_asymmetric_equal_rates_recombine_symmetric_parts():
    n, q = 8, 0.07
    pv = gen_porter_thomas(n, SeedSpec(3))
    keep = (1 - q) ** n
    expected = (1 - keep) * readout_noise_vector(pv, q).weights + keep * pv.weights
    assert np.allclose(asymmetric_signal_vector(pv, q, q).weights, expected, atol=1e-15)


def test_asymmetric_single_qubit_row():
    pv = ProbabilityVector(1, np.array([1.0, 0.0]))
    assert np.allclose(asymmetric_signal_vector(pv, 0.055, 0.023).weights, [0.977, 0.023])
    pv = ProbabilityVector(1, np.array([0.0, 1.0]))
    assert np.allclose(asymmetric_signal_vector(pv, 0.055, 0.023).weights, [0.055, 0.945])


def test_readout_q_out_of_range():
    pv = ProbabilityVector.uniform(3)
    for q in (0.0, 1.0, -0.1):
        with pytest.raises(DomainError):
            readout_noise_vector(pv, q)
        with pytest.raises(DomainError):
            readout_constants(3, q)


def test_biased_uniform_matches_enumeration():
    assert np.allclose(biased_uniform(6, 0.3), naive_biased_uniform(6, 0.3), rtol=1e-13)


def test_sampling_probs_trivial_cases():
    pv = gen_porter_thomas(6, SeedSpec(1))
    assert np.allclose(sampling_probs(Basic(0.0), pv).weights, 1 / 64, rtol=1e-14)
    other = gen_porter_thomas(6, SeedSpec(2))
    pi = sampling_probs(GeneralP((1.0, 0.0), (pv, other)))
    assert np.allclose(pi.weights, pv.weights, rtol=1e-14)


def test_asymmetric_uniform_bias_value():
    assert ReadoutAsymmetric(0.6, 0.055, 0.023).uniform_bias == pytest.approx(0.484, abs=1e-12)


def test_asymmetric_probs_equal_channel_of_basic_mixture():
    # the readout channel acts on both the ideal and the uniform part
    n = 6
    pv = gen_porter_thomas(n, SeedSpec(4))
    model = ReadoutAsymmetric(0.6, 0.055, 0.023)
    mixed = 0.6 * pv.weights + 0.4 / 64
    expected = naive_asymmetric_signal(mixed, n, 0.055, 0.023)
    assert np.allclose(sampling_probs(model, pv).weights, expected, atol=1e-15)


@given(
    st.integers(1, 8),
    seeds,
    st.floats(0, 1),
    st.floats(0, 1),
    st.floats(0.001, 0.999),
    st.floats(0.001, 0.999),
)
@settings(max_examples=40, deadline=None)
def test_sampling_probs_is_always_a_distribution(n, seed, a, b, q, q2):
    pv = gen_porter_thomas(n, SeedSpec(seed))
    phi, phi_ro = a * (1 - b), a * b
    for model in (Basic(a), ReadoutSymmetric(phi, phi_ro, q), ReadoutAsymmetric(a, q, q2)):
        pi = sampling_probs(model, pv)
        assert np.all(pi.weights >= 0)
        assert abs(pi.weights.sum() - 1) < 1e-12


def test_readout_constants_closed_forms():
    c = readout_constants(1, 0.2)
    assert c.D == pytest.approx(0.2)
    assert c.G == pytest.approx(2 / 3 * 2 * 0.04)
    assert c.G / c.D ** 2 == pytest.approx(2 * 2 / 3)
    c = readout_constants(12, 0.038)
    assert c.D == pytest.approx(1 - 0.962 ** 12, rel=1e-14)
    assert abs(c.D - 0.3718) < 1e-4
    assert 0 < c.D < 1 and c.G > 0


@given(st.integers(1, 12), st.floats(0.001, 0.999))
@settings(max_examples=40, deadline=None)
def test_readout_constants_match_enumerated_h_k(n, q):
    c = readout_constants(n, q)
    H, K = readout_HK(n, q)
    M = 1 << n
    assert c.H == pytest.approx(H, rel=1e-11, abs=1e-14)
    assert c.K == pytest.approx(K, rel=1e-11, abs=1e-14)
    assert abs(c.G - M / (M + 1) * (2 * c.H + c.K)) <= 1e-14


def test_noise_vector_weakly_correlated_with_ideal():
    n = 12
    M = 1 << n
    vals = []
    for i in range(200):
        pv = gen_porter_thomas(n, SeedSpec(21, i))
        v = readout_noise_vector(pv, 0.038)
        vals.append(float(pv.weights @ v.weights))
    se = np.std(vals, ddof=1) / math.sqrt(len(vals))
    assert abs(np.mean(vals) - 1 / (M + 1)) < 3 * se


def test_point_mass_sample():
    pi = ProbabilityVector.point_mass(4, 7)
    s = draw_sample(pi, pi, None, 100, SeedSpec(0))
    assert s.counts == {7: 100}
    assert s.total == 100 and len(s.sampled_w) == 100


def test_uniform_counts_concentrate():
    pi = ProbabilityVector.uniform(4)
    N = 10 ** 6
    s = draw_sample(pi, pi, None, N, SeedSpec(8))
    c = s.dense_counts()
    sd = math.sqrt(N / 16 * (1 - 1 / 16))
    assert np.all(np.abs(c - N / 16) < 5 * sd)
    assert c.sum() == N


def test_sample_invariants_and_determinism():
    pv = gen_porter_thomas(10, SeedSpec(1))
    pi = sampling_probs(Basic(0.4), pv)
    a = draw_sample(pi, pv, None, 5000, SeedSpec(3, 2))
    b = draw_sample(pi, pv, None, 5000, SeedSpec(3, 2))
    assert np.array_equal(a.draws, b.draws)
    assert sum(a.counts.values()) == a.total == len(a.sampled_w)
    assert np.array_equal(a.sampled_w, pv.weights[a.draws])
    assert a.draws.max() < 1024
    with pytest.raises(DimensionError):
        Sample(3, np.array([8]))
    with pytest.raises(DomainError):
        draw_sample(pi, pv, None, 0, SeedSpec(0))


def test_zero_probability_states_never_drawn():
    w = np.zeros(256)
    w[::3] = 1.0
    pi = ProbabilityVector(8, w / w.sum())
    s = draw_sample(pi, None, None, 200_000, SeedSpec(5))
    assert np.all(s.draws % 3 == 0)


def test_sample_frequencies_follow_pi():
    # chi-square-free check: every cell within 5 SD of its binomial mean
    pv = gen_porter_thomas(6, SeedSpec(9))
    pi = sampling_probs(Basic(0.5), pv)
    N = 400_000
    c = draw_sample(pi, None, None, N, SeedSpec(10)).dense_counts()
    p = pi.weights
    assert np.all(np.abs(c - N * p) <= 5 * np.sqrt(N * p * (1 - p)) + 1)


def test_rejection_with_full_acceptance_reproduces_plain_draws():
    pv = gen_porter_thomas(8, SeedSpec(2))
    pi = sampling_probs(Basic(0.3), pv)
    a = draw_sample(pi, pv, None, 3000, SeedSpec(4))
    b = draw_sample_with_rejection(pi, np.ones(256), 3000, SeedSpec(4), pv)
    assert np.array_equal(a.draws, b.draws)


def test_rejection_keeps_only_accepted_states():
    n = 8
    pv = gen_porter_thomas(n, SeedSpec(2))
    pi = sampling_probs(Basic(0.3), pv)
    tau = (np.arange(256) % 2).astype(float)
    s = draw_sample_with_rejection(pi, tau, 5000, SeedSpec(4), pv)
    assert s.total == 5000
    assert np.all(s.draws % 2 == 1)


def test_rejection_acceptance_rate_matches_constant_tau():
    pv = ProbabilityVector.uniform(6)
    c, N = 0.25, 20_000
    s = draw_sample_with_rejection(pv, np.full(64, c), N, SeedSpec(7))
    assert s.total == N
    # N-th success of Bernoulli(c) trials: attempts is negative binomial
    sd = math.sqrt(N * (1 - c)) / c
    assert abs(s.attempts - N / c) < 5 * sd


def test_rejection_errors():
    pv = ProbabilityVector.uniform(3)
    with pytest.raises(NoAcceptanceError):
        draw_sample_with_rejection(pv, np.zeros(8), 10, SeedSpec(0))
    with pytest.raises(DomainError):
        draw_sample_with_rejection(pv, np.full(8, 1.5), 10, SeedSpec(0))
    with pytest.raises(DimensionError):
        draw_sample_with_rejection(pv, np.ones(4), 10, SeedSpec(0))
    tiny = np.zeros(8)
    tiny[0] = 1e-9
    with pytest.raises(NoAcceptanceError):
        draw_sample_with_rejection(pv, tiny, 10, SeedSpec(0))


def test_sample_model_fills_v_for_symmetric_readout():
    pv = gen_porter_thomas(8, SeedSpec(1))
    s = sample_model(ReadoutSymmetric(0.4, 0.2, 0.05), pv, 1000, SeedSpec(2))
    v = readout_noise_vector(pv, 0.05)
    assert np.array_equal(s.sampled_v, v.weights[s.draws])
