import math

import pytest
from hypothesis import given, settings, strategies as st

from xebstats.errors import DomainError
from xebstats.prediction import (
    REFERENCE_TABLE,
    CircuitErrorProfile,
    fidelity_formula77,
    fidelity_simple,
    reference_fidelity,
    total_gate_fidelity,
)

rates = st.lists(st.floats(0.0, 0.999), max_size=30)


def test_empty_profile_is_one():
    assert fidelity_formula77(CircuitErrorProfile()) == 1.0
    assert fidelity_simple(0, 0, 0) == 1.0


def test_single_half_error():
    assert fidelity_formula77(CircuitErrorProfile(e_g2=(0.5,), e_g1=(0.0, 0.0))) == pytest.approx(0.5, rel=1e-15)


def test_homogeneous_profile_matches_simple_form():
    p = CircuitErrorProfile.homogeneous(1113, 430, 53)
    assert fidelity_formula77(p) == pytest.approx(fidelity_simple(1113, 430, 53), rel=1e-13)


def test_supremacy_circuit_fidelity_above_one_in_a_thousand():
    f = fidelity_simple(1113, 430, 53)
    assert 0.0010 < f < 0.0020
    naive = (1 - 0.0016) ** 1113 * (1 - 0.0062) ** 430 * (1 - 0.038) ** 53
    assert f == pytest.approx(naive, rel=1e-12)


def test_reference_table_constants():
    assert reference_fidelity(12) == 0.3862
    assert reference_fidelity(14) == 0.3320
    assert reference_fidelity(26) == 0.1024
    assert sorted(REFERENCE_TABLE) == list(range(12, 27, 2))
    assert REFERENCE_TABLE[20] == (0.1875, 0.2184, 0.3210)


def test_total_gate_fidelity():
    phi_g, phi_ro = total_gate_fidelity(0.3862, 12)
    assert round(phi_g, 4) == 0.6148
    assert round(phi_ro, 4) == 0.2286
    assert total_gate_fidelity(0.3, 0) == (0.3, 0.0)
    with pytest.raises(DomainError):
        total_gate_fidelity(0.9, 12)


def test_profile_validation():
    with pytest.raises(DomainError):
        CircuitErrorProfile(e_q=(1.0,))
    with pytest.raises(DomainError):
        CircuitErrorProfile.from_dict({"e_g3": [0.1]})


@given(rates, rates, rates, st.integers(0, 29), st.floats(0.0, 0.5))
@settings(max_examples=100)
def test_monotone_in_every_entry(g1, g2, q, pos, bump):
    p = CircuitErrorProfile(tuple(g1), tuple(g2), tuple(q))
    entries = list(p.e_g1 + p.e_g2 + p.e_q)
    if not entries:
        return
    k = pos % len(entries)
    entries[k] = min(entries[k] + bump, 0.999)
    worse = CircuitErrorProfile(tuple(entries), (), ())
    assert fidelity_formula77(worse) <= fidelity_formula77(p) * (1 + 1e-12)


@given(rates, rates, rates, rates)
@settings(max_examples=100)
def test_log_fidelity_additive(a1, a2, b1, b2):
    pa = CircuitErrorProfile(tuple(a1), tuple(a2), ())
    pb = CircuitErrorProfile(tuple(b1), (), tuple(b2))
    both = CircuitErrorProfile(tuple(a1) + tuple(b1), tuple(a2), tuple(b2))
    assert both.log_fidelity() == pytest.approx(pa.log_fidelity() + pb.log_fidelity(), rel=1e-12, abs=1e-12)
