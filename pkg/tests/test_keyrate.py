"""Tests for the closed-form key-rate engine.

High-precision expectations are computed with mpmath oracles written
directly from the formulas, then frozen as literals next to the oracle
call so a regression in either side is caught.
"""

import math

import mpmath as mp
import numpy as np
import pytest

from dicka import (
    CLASSICAL_BOUND,
    DomainError,
    EpsilonBudget,
    NoiseModel,
    RateParams,
    TSIRELSON_BOUND,
    asymptotic_rate_cka,
    asymptotic_rate_diqkd,
    binary_entropy,
    completeness_bound,
    depolarize_each,
    finite_key_length,
    honest_settings,
    leak_ec_bounds,
    make_ghz,
    min_tradeoff_fhat,
    min_tradeoff_slope,
    pdep_to_qber,
    pexp_formula,
    qber_to_pdep,
    quantum_win_probability,
    tangent_f,
    v_tilde,
)

mp.mp.dps = 50


def _budget(**overrides):
    values = dict(smooth=1e-8, pa=1e-8, ea=1e-8, ec_prime=1e-8, ec_tilde=1e-8)
    values.update(overrides)
    values.setdefault("ec", values["ec_prime"] + values["ec_tilde"])
    return EpsilonBudget(**values)


def _params(**overrides):
    values = dict(n_parties=3, mu=0.05, delta=0.80, qber=0.0, n_rounds=10**6, eps=_budget())
    values.update(overrides)
    return RateParams(**values)


# --- mpmath oracles --------------------------------------------------------

def _mp_h(x):
    if x == 0 or x == 1:
        return mp.mpf(0)
    return -x * mp.log(x, 2) - (1 - x) * mp.log(1 - x, 2)


def _mp_fhat(p_w, mu):
    s = 4 * p_w - 2
    x = (1 + mp.sqrt(s * s - 1)) / 2
    return (1 - mu / 2) * (1 - _mp_h(x))


def _mp_vtilde(p_opt, mu, eps, eps_ea, variant):
    s = 4 * p_opt / mu - 2
    g = mp.sqrt(s * s - 1)
    x = (1 + g) / 2
    slope = (1 - mu / 2) * mp.log(x / (1 - x), 2) * (2 / mu) * (s / g)
    term = slope / mu + 1 if variant == "main" else slope + 1
    eta = 1 - mp.sqrt(1 - (eps / 4) ** 2)
    return 2 * (mp.log(13, 2) + term) * mp.sqrt(1 - 2 * mp.log(eps * eps_ea, 2)) + 2 * mp.log(
        7, 2
    ) * mp.sqrt(-mp.log(eps_ea**2 * eta, 2))


def test_binary_entropy_endpoints_and_half():
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(1.0) == 0.0
    assert abs(binary_entropy(0.5) - 1.0) < 1e-15


def test_binary_entropy_high_precision_value():
    oracle = float(_mp_h(mp.mpf("0.11")))
    assert abs(oracle - 0.4999159581645280) < 1e-15
    assert abs(binary_entropy(0.11) - oracle) < 1e-14


def test_binary_entropy_domain():
    with pytest.raises(DomainError):
        binary_entropy(-0.1)
    with pytest.raises(DomainError):
        binary_entropy(1.1)


def test_min_tradeoff_boundary_values():
    assert min_tradeoff_fhat(0.75, 0.05) == 0.0
    # at the quantum maximum the certified entropy saturates the prefactor
    for mu in (0.05, 0.3, 1.0):
        assert abs(min_tradeoff_fhat(TSIRELSON_BOUND, mu) / (1 - mu / 2) - 1.0) < 1e-12


def test_min_tradeoff_subclassical_clamp_and_domain():
    assert min_tradeoff_fhat(0.6, 0.1) == 0.0
    assert min_tradeoff_fhat(0.0, 0.1) == 0.0
    with pytest.raises(DomainError):
        min_tradeoff_fhat(TSIRELSON_BOUND + 1e-9, 0.1)
    with pytest.raises(DomainError):
        min_tradeoff_fhat(-0.01, 0.1)


def test_min_tradeoff_high_precision_value():
    oracle = float(_mp_fhat(mp.mpf("0.83"), mp.mpf("0.01")))
    assert abs(oracle - 0.6339327563587329) < 1e-15
    got = min_tradeoff_fhat(0.83, 0.01)
    assert 0.0 < got < 1.0
    assert abs(got - oracle) < 1e-13


def test_tangent_touches_curve_at_popt():
    for mu in (0.01, 0.05, 0.5):
        for d_opt in (0.76, 0.8, 0.84):
            p_opt = mu * d_opt
            assert abs(tangent_f(p_opt, p_opt, mu) - min_tradeoff_fhat(d_opt, mu)) < 1e-12


def test_tangent_is_support_line():
    rng = np.random.default_rng(41)
    for mu in (0.02, 0.05, 0.5):
        lo, hi = mu * CLASSICAL_BOUND, mu * TSIRELSON_BOUND
        grid = np.linspace(lo, hi, 1000)
        for _ in range(20):
            d_opt = float(rng.uniform(0.751, TSIRELSON_BOUND - 1e-4))
            p_opt = mu * d_opt
            for q1 in grid:
                q1 = float(min(max(q1, lo + 1e-15), mu))
                assert tangent_f(q1, p_opt, mu) <= min_tradeoff_fhat(q1 / mu, mu) + 1e-10


def test_slope_matches_finite_differences():
    for mu in (0.01, 0.05, 0.3):
        width = mu * (TSIRELSON_BOUND - CLASSICAL_BOUND)
        h = 1e-6 * width
        for d_opt in (0.77, 0.80, 0.84):
            p_opt = mu * d_opt
            analytic = min_tradeoff_slope(p_opt, mu)
            fd = (
                min_tradeoff_fhat((p_opt + h) / mu, mu) - min_tradeoff_fhat((p_opt - h) / mu, mu)
            ) / (2 * h)
            assert abs(analytic - fd) / abs(fd) < 1e-6


def test_tangent_domain_errors():
    with pytest.raises(DomainError):
        tangent_f(0.01, 0.05 * 0.75, 0.05)  # p_opt at the closed boundary
    with pytest.raises(DomainError):
        tangent_f(0.06, 0.04, 0.05)  # q1 above mu


def test_v_tilde_positive_and_monotone_in_ea():
    previous = 0.0
    for eps_ea in (1e-2, 1e-4, 1e-6, 1e-8, 1e-10):
        value = v_tilde(0.04, 0.05, 1e-8, eps_ea)
        assert value > 0
        assert value > previous
        previous = value


def test_v_tilde_high_precision_values():
    oracle_main = float(_mp_vtilde(mp.mpf("0.04"), mp.mpf("0.05"), mp.mpf("1e-6"), mp.mpf("1e-6"), "main"))
    oracle_app = float(_mp_vtilde(mp.mpf("0.04"), mp.mpf("0.05"), mp.mpf("1e-6"), mp.mpf("1e-6"), "appendix"))
    assert abs(oracle_main - 58573.469651355426) < 1e-6
    assert abs(oracle_app - 3058.0126434488644) < 1e-9
    assert abs(v_tilde(0.04, 0.05, 1e-6, 1e-6, "main") - oracle_main) / oracle_main < 1e-12
    assert abs(v_tilde(0.04, 0.05, 1e-6, 1e-6, "appendix") - oracle_app) / oracle_app < 1e-12


def test_leak_bounds_limits():
    # Q = 0: Alice's linear term collapses to the test fraction, same as a Bob's
    la, lb = leak_ec_bounds(_params(qber=0.0, mu=0.05))
    assert abs(la - lb) < 1e-6
    # mu = 1: every round is disclosed, linear term is n
    params = _params(mu=1.0, delta=0.8, qber=0.1)
    la1, _ = leak_ec_bounds(params)
    n = params.n_rounds
    et = params.eps.ec_tilde
    corr = 4 * math.log2(2 * math.sqrt(2) + 1) * math.sqrt(2 * (3 - 2 * math.log2(et))) * math.sqrt(n)
    const = math.log2(8 / et**2 + 2 / (2 - et))
    assert abs(la1 - (n + corr + const)) < 1e-6


def test_leak_bounds_high_precision_values():
    params = _params(qber=0.05, mu=0.05, n_rounds=10**6)
    la, lb = leak_ec_bounds(params)
    et = mp.mpf("1e-8")
    n = mp.mpf(10) ** 6
    corr = mp.sqrt(n) * 4 * mp.log(2 * mp.sqrt(2) + 1, 2) * mp.sqrt(2 * mp.log(8 / et**2, 2))
    const = mp.log(8 / et**2 + 2 / (2 - et), 2)
    mu = mp.mpf("0.05")
    oracle_a = float(n * ((1 - mu) * _mp_h(mp.mpf("0.05")) + mu) + corr + const)
    oracle_b = float(n * mu + corr + const)
    assert abs(oracle_a - 404230.2288501161) < 1e-6
    assert abs(oracle_b - 132153.11958995776) < 1e-6
    assert abs(la - oracle_a) / oracle_a < 1e-12
    assert abs(lb - oracle_b) / oracle_b < 1e-12


def test_finite_key_length_zero_at_full_testing():
    bd = finite_key_length(_params(mu=1.0, delta=0.8))
    assert bd.key_length == 0
    assert bd.raw_length < 0


def test_finite_key_breakdown_identity():
    bd = finite_key_length(_params(n_rounds=10**10, mu=0.1, delta=0.82, qber=0.01))
    resummed = (
        bd.entropy_term
        - bd.second_order
        + bd.smoothing_term
        - bd.pa_term
        - bd.leak_alice
        - bd.leak_bobs
    )
    assert abs(resummed - bd.raw_length) < 1e-9
    if bd.raw_length >= 0:
        assert bd.key_length == math.floor(bd.raw_length)
    assert CLASSICAL_BOUND < bd.p_opt_chosen / 0.1 < TSIRELSON_BOUND


def test_finite_key_convergence_toward_asymptotic_rate():
    # mu = n^(-1/10), delta at the honest expectation; the ratio climbs
    # toward the asymptotic rate from below
    qber = 0.01
    target = asymptotic_rate_cka(3, qber)
    delta = pexp_formula(3, qber)
    previous = -1.0
    for n in (10**6, 10**8, 10**10, 10**12):
        mu = n ** (-0.1)
        bd = finite_key_length(_params(n_rounds=n, mu=mu, delta=delta, qber=qber))
        ratio = bd.key_length / n
        assert ratio >= previous
        assert ratio <= target
        previous = ratio
    assert previous > 0


def test_key_length_monotone_in_qber_and_eps():
    base = dict(n_rounds=10**10, mu=0.1, delta=0.78)
    lengths = [
        finite_key_length(_params(qber=q, **base)).key_length for q in (0.0, 0.01, 0.02, 0.03)
    ]
    assert all(a >= b for a, b in zip(lengths, lengths[1:]))
    for name in ("smooth", "pa", "ea", "ec_tilde"):
        loose = finite_key_length(_params(eps=_budget(**{name: 1e-4}), **base)).key_length
        tight = finite_key_length(_params(eps=_budget(**{name: 1e-12}), **base)).key_length
        assert tight <= loose


def test_completeness_bound_value_and_limits():
    params = _params(n_rounds=10**5, mu=0.05, delta=0.79)
    p_exp = 0.84
    got = completeness_bound(params, p_exp)
    gap = mp.mpf("0.84") - mp.mpf("0.79")
    oracle = float(
        2 * (2 * mp.mpf("2e-8") + mp.mpf("1e-8"))
        + (1 - mp.mpf("0.05") * (1 - mp.exp(-2 * gap**2))) ** (10**5)
    )
    assert abs(oracle - 1.0001473620132920e-07) < 1e-21
    assert abs(got - oracle) / oracle < 1e-12
    # threshold at the expectation: the tail term approaches one
    close = completeness_bound(_params(n_rounds=10**5, mu=0.05, delta=0.79), 0.79 + 1e-9)
    assert close > 0.999
    # huge n: the tail term vanishes
    large = completeness_bound(_params(n_rounds=10**9, mu=0.05, delta=0.79), 0.84)
    assert large < 1e-7 + 1e-12


def test_completeness_bound_precondition():
    with pytest.raises(DomainError):
        completeness_bound(_params(delta=0.8), 0.8)


def test_qber_pdep_round_trip():
    assert qber_to_pdep(0.0) == 0.0
    for q in (0.0, 0.01, 0.1, 0.3, 0.49):
        assert abs(pdep_to_qber(qber_to_pdep(q)) - q) < 1e-14
    assert qber_to_pdep(0.499999) > 0.998
    with pytest.raises(DomainError):
        qber_to_pdep(0.5)


def test_pexp_limits():
    for n in (2, 3, 5, 7):
        assert abs(pexp_formula(n, 0.0) - TSIRELSON_BOUND) < 1e-15
        assert abs(pexp_formula(n, 0.4999999) - 0.5) < 1e-3


def test_pexp_matches_exact_simulation():
    for n in (2, 3, 4, 5, 6):
        settings = honest_settings(n)
        for qber in (0.0, 0.01, 0.03, 0.05):
            state = depolarize_each(make_ghz(n), NoiseModel(qber_to_pdep(qber)))
            sim = quantum_win_probability(state, settings)
            assert abs(sim - pexp_formula(n, qber)) < 1e-9


def test_asymptotic_rates_at_zero_noise():
    for n in (2, 3, 4, 5, 6, 7):
        assert abs(asymptotic_rate_cka(n, 0.0) - 1.0) < 1e-12
        assert abs(asymptotic_rate_diqkd(n, 0.0) - 1.0 / (n - 1)) < 1e-12


def test_rate_ordering_and_crossover():
    for n in (3, 4, 5, 6, 7):
        assert asymptotic_rate_cka(n, 0.0) > asymptotic_rate_diqkd(n, 0.0)
    # crossover within the plotted noise range for three parties
    diffs = [asymptotic_rate_cka(3, q) - asymptotic_rate_diqkd(3, q) for q in np.arange(0.0, 0.0501, 0.001)]
    assert diffs[0] > 0
    assert min(diffs) < 0


def test_rate_monotone_decreasing():
    grid = np.linspace(0.0, 0.04, 81)
    values = [asymptotic_rate_cka(3, float(q)) for q in grid]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_rate_zero_roots_regression():
    # bisection to 1e-10; the roots are regression constants for this code base
    expected = {
        3: 0.059248088298,
        4: 0.051030296837,
        5: 0.045041084406,
        6: 0.040440131582,
        7: 0.036773011692,
    }
    for n, root in expected.items():
        lo, hi = 1e-6, 0.25
        assert asymptotic_rate_cka(n, lo) > 0 > asymptotic_rate_cka(n, hi)
        while hi - lo > 1e-12:
            mid = (lo + hi) / 2
            if asymptotic_rate_cka(n, mid) > 0:
                lo = mid
            else:
                hi = mid
        assert abs((lo + hi) / 2 - root) < 1e-9


def test_rate_clamps_below_classical_violation():
    # far beyond the root the certified violation is sub-classical: rate = -h(Q)
    q = 0.2
    assert abs(asymptotic_rate_cka(3, q) - (-binary_entropy(q))) < 1e-12


def test_budget_validation():
    with pytest.raises(DomainError):
        EpsilonBudget(smooth=1e-8, pa=1e-8, ea=1e-8, ec=1e-8, ec_prime=1e-8, ec_tilde=1e-8)
    with pytest.raises(DomainError):
        _params(delta=0.75)
    with pytest.raises(DomainError):
        _params(delta=TSIRELSON_BOUND)
    with pytest.raises(DomainError):
        _params(qber=0.5)
    with pytest.raises(DomainError):
        _params(variant="footnote")
