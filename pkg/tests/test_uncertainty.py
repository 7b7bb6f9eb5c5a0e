import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import simpson_integral
from xebstats.errors import DegenerateDenominatorError, DomainError
from xebstats.estimators import Method
from xebstats.probmodel import ProbabilityVector, SeedSpec, gen_porter_thomas, moments
from xebstats import uncertainty as unc


def test_var_U_uniform_limit():
    M, N = 2 ** 16, 1000
    assert unc.var_U_conditional(0.0, M, N, 2 / M, 6 / M ** 2) == pytest.approx(1 / N)


def test_var_U_large_M_limit():
    M, N = 2 ** 20, 1
    w2, w3 = 2 / (M + 1), 6 / ((M + 1) * (M + 2))
    for phi in (0.1, 0.4, 0.9):
        assert unc.var_U_conditional(phi, M, N, w2, w3) == pytest.approx(2 * phi - phi ** 2 + 1, rel=0.01)
        assert unc.var_V_conditional(phi, M, N, w2, w3) == pytest.approx(2 * phi - phi ** 2 + 1, rel=0.01)


def test_var_V_unit_denominator_and_degenerate():
    M = 64
    w2 = 2 / M
    assert unc.var_V_conditional(0.3, M, 10, w2, 5 / M ** 2) == unc.var_U_conditional(0.3, M, 10, w2, 5 / M ** 2)
    with pytest.raises(DegenerateDenominatorError):
        unc.var_V_conditional(0.3, M, 10, 1 / M, 1 / M ** 2)


def test_var_U_negative_is_domain_error():
    with pytest.raises(DomainError):
        unc.var_U_conditional(0.5, 64, 10, 0.5 / 64, 0.0)


def test_unconditional_values():
    N = 1000
    assert unc.var_unconditional("U", 0.0, 4096, N) == pytest.approx(1 / N)
    assert unc.var_unconditional("V", 0.0, 4096, N) == pytest.approx(1 / N)
    assert unc.var_unconditional("LogU", 0.0, 4096, N) == pytest.approx(1.6449 / N, rel=1e-4)


def test_log_crossover_at_032():
    M = 2 ** 40
    diff = lambda p: unc.var_unconditional(Method.LogU, p, M, 1) - unc.var_unconditional(Method.V, p, M, 1)
    from scipy.optimize import brentq

    root = brentq(diff, 0.0, 1.0)
    assert root == pytest.approx((math.pi ** 2 / 6 - 1) / 2, abs=1e-12)
    assert round(root, 2) == 0.32


def test_sample_size_saving_of_V():
    M, phi = 2 ** 18, 0.15
    target = unc.var_unconditional(Method.U, phi, M, 500_000)
    N_v = (2 * phi - phi ** 2 + 1) / target
    assert abs(N_v - 299_000) < 1000


@given(st.floats(0.0, 0.99))
@settings(max_examples=50, deadline=None)
def test_mle_more_efficient_than_V(phi):
    assert unc.mle_asymptotic_var(phi, 1) <= unc.var_unconditional(Method.V, phi, 1, 1) + 1e-9


@given(st.floats(0.0, 1.0), st.integers(1, 10 ** 7))
@settings(max_examples=50, deadline=None)
def test_U_variance_dominates_V(phi, M):
    u = unc.var_unconditional("U", phi, M, 100)
    v = unc.var_unconditional("V", phi, M, 100)
    assert u >= v
    if phi == 0:
        assert u == v
    elif phi > 1e-6:
        assert u > v


def test_fisher_info_trivial():
    pv = gen_porter_thomas(8, SeedSpec(1))
    assert unc.fisher_info(0.0, pv) == pytest.approx(256 * moments(pv).w2 - 1, rel=1e-12)
    assert unc.fisher_info(0.4, ProbabilityVector.uniform(8)) == 0.0
    with pytest.raises(DomainError):
        unc.fisher_info(1.0, pv)


def test_fisher_info_decreasing_then_convex():
    # sum a^2/(phi a + 1/M) has second derivative 2 sum a^4/(...)^3 >= 0, and its
    # minimum sits near phi = 0.37, so it only decreases on the lower range
    low = np.linspace(0, 0.3, 31)
    full = np.linspace(0, 0.9, 91)
    for k in range(20):
        pv = gen_porter_thomas(6 + k % 5, SeedSpec(k))
        assert np.all(np.diff([unc.fisher_info(p, pv) for p in low]) <= 1e-12)
        vals = np.array([unc.fisher_info(p, pv) for p in full])
        assert np.all(np.diff(vals, 2) >= -1e-9)


def test_mle_asymptotic_var_phi_zero():
    assert unc.mle_asymptotic_var(0.0, 1000) == pytest.approx(1e-3, abs=1e-12)


def test_mle_quadrature_against_independent_rule():
    for phi in (0.1, 0.5, 0.9):
        f = lambda z: (z - 1) ** 2 / (phi * z + 1 - phi) * np.exp(-z)
        ref = simpson_integral(f, 0.0, 60.0, 200_000)
        assert unc.mle_information_integral(phi) == pytest.approx(ref, abs=1e-9)


def test_mle_quadrature_is_step_stable():
    from scipy import integrate

    phi = 0.5
    f = lambda z: (z - 1) ** 2 / (phi * z + 1 - phi) * math.exp(-z)
    halves = sum(integrate.quad(f, a, a + 5.0, epsabs=1e-14)[0] for a in np.arange(0.0, 40.0, 5.0))
    assert unc.mle_information_integral(phi) == pytest.approx(halves, abs=1e-9)


def test_mle_asymptotic_var_domain():
    with pytest.raises(DomainError):
        unc.mle_asymptotic_var(1.0, 10)


def test_ci_single_and_degenerate():
    ci = unc.ci_conditional_single(0.3, 0.0)
    assert ci.lower == ci.upper == 0.3
    ci = unc.ci_conditional_single(0.3, 0.01)
    assert ci.half_width == pytest.approx(0.0196)
    assert ci.to_dict()["kind"] == "ConditionalSingle" and ci.level == 0.95
    with pytest.raises(DomainError):
        unc.ci_conditional_single(0.3, -1.0)


def test_ci_combined():
    ci = unc.ci_conditional_combined([0.1, 0.2, 0.3], [0.05, 0.05, 0.05])
    assert ci.center == pytest.approx(0.2)
    sig = np.linspace(0.01, 0.03, 10)
    ci = unc.ci_conditional_combined(np.full(10, 0.3), sig)
    assert ci.half_width < 1.96 * sig.min()
    with pytest.raises(DomainError):
        unc.ci_conditional_combined([0.1, 0.2], [0.1, 0.0])


def test_ci_combined_V_plugs_in_average_once():
    M = 4096
    mom = [(M, 2.0 / M, 6.0 / M ** 2), (M, 2.1 / M, 6.5 / M ** 2)]
    vals = [0.35, 0.41]
    ci = unc.ci_conditional_combined_V(vals, 10_000, mom)
    sig = [math.sqrt(unc.var_V_conditional(0.38, M, 10_000, w2, w3)) for _, w2, w3 in mom]
    ref = unc.ci_conditional_combined(vals, sig)
    assert ci.center == pytest.approx(ref.center) and ci.half_width == pytest.approx(ref.half_width)


def test_ci_unconditional_trivial_and_scaling():
    N, M = 10_000, 4096
    for m in ("U", "V", "MLE"):
        ci = unc.ci_unconditional(m, 0.0, 0.0, 1, N, M)
        assert ci.half_width == pytest.approx(1.96 / math.sqrt(N), rel=1e-9)
    for m in ("V", "MLE"):
        a = unc.ci_unconditional(m, 0.3, 0.3, 1, N, M).half_width
        b = unc.ci_unconditional(m, 0.3, 0.3, 10, N, M).half_width
        assert a / b == pytest.approx(math.sqrt(10), rel=1e-12)
    a = unc.ci_unconditional("U", 0.3, 0.3, 1, N, M).half_width
    b = unc.ci_unconditional("U", 0.3, 0.3, 10, N, M).half_width
    assert a / b == pytest.approx(math.sqrt(10), rel=1e-12)
    u = unc.ci_unconditional("U", 0.3862, 0.3862, 10, 500_000, M)
    mle = unc.ci_unconditional("MLE", 0.3862, 0.3862, 10, 500_000, M)
    assert u.half_width > mle.half_width
    with pytest.raises(DomainError):
        unc.ci_unconditional("V", 0.3, 0.3, 0, N, M)


def test_variance_report_serialises():
    r = unc.VarianceReport(Method.V, conditional=1e-6, inputs={"phi": 0.3, "M": 64})
    d = r.to_dict()
    assert d["method"] == "V" and d["conditional"] == 1e-6
    with pytest.raises(DomainError):
        unc.VarianceReport(Method.U, conditional=-1.0)
