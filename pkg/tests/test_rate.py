import math

import numpy as np
import pytest

import oracles
from qwrng.rate import (
    RateInputs,
    asymptotic_rate,
    default_n_grid,
    key_length,
    rate_curve,
    resolve_m_rule,
)
from qwrng.sampling import SamplingParams
from qwrng.walk import gamma_scan

# frozen high-precision reference values (mpmath, 50 digits)
RAW_SPOT_POSITIVE = 1155328.5234978257  # N=1e6 m=1e3 eps=1e-6 P=51 gamma=0.05 wq=0.05
RAW_SPOT_NEGATIVE = -136276.35912855532  # N=1e5 m=400 eps=1e-9 P=5 gamma=0.3 wq=0.1
ASYM_51_015_G005 = 2.0650668535250884


def make_inputs(N, m, eps, P, gamma, wq):
    return RateInputs(sampling=SamplingParams(N=N, m=m, epsilon=eps), P=P, gamma=gamma, wq=wq)


def test_rate_inputs_validation():
    sp = SamplingParams(N=100, m=10, epsilon=1e-6)
    for bad in (0.0, -0.1, 1.1):
        with pytest.raises(ValueError):
            RateInputs(sampling=sp, P=5, gamma=bad, wq=0.1)
    for bad in (-0.1, 1.1):
        with pytest.raises(ValueError):
            RateInputs(sampling=sp, P=5, gamma=0.5, wq=bad)
    with pytest.raises(ValueError):
        RateInputs(sampling=sp, P=1, gamma=0.5, wq=0.1)


def test_gamma_one_gives_zero_key():
    report = key_length(make_inputs(10**4, 100, 1e-9, 5, gamma=1.0, wq=0.01))
    assert report.min_entropy_bits == 0.0
    assert report.raw_ell <= 0.0
    assert report.ell == 0


def test_saturated_weight_gives_zero_key():
    # wq + delta beyond 1 - 1/(2P): penalty saturates at n*log2(2P)
    report = key_length(make_inputs(10**4, 100, 1e-9, 5, gamma=0.2, wq=0.9))
    n = 10**4 - 100
    assert abs(report.entropy_penalty_bits - n * math.log2(10)) < 1e-6
    assert report.ell == 0


def test_eta_clamps_at_zero():
    # delta alone exceeds 1 here, so 1 - wq - delta < 0
    report = key_length(make_inputs(1000, 1, 1e-40, 5, gamma=0.2, wq=0.5))
    assert report.eta_q == 0.0
    assert report.min_entropy_bits == 0.0
    assert report.ell == 0
    assert report.raw_ell < 0.0


def test_frozen_positive_spot():
    report = key_length(make_inputs(10**6, 10**3, 1e-6, 51, gamma=0.05, wq=0.05))
    assert abs(report.raw_ell - RAW_SPOT_POSITIVE) < 1e-3
    assert report.ell == 1155328
    assert report.ell == math.floor(report.raw_ell)


def test_frozen_negative_spot_preserves_raw():
    report = key_length(make_inputs(10**5, 400, 1e-9, 5, gamma=0.3, wq=0.1))
    assert abs(report.raw_ell - RAW_SPOT_NEGATIVE) < 1e-3
    assert report.ell == 0


def test_security_constants():
    eps = 1e-36
    report = key_length(make_inputs(10**6, 10**3, eps, 5, gamma=0.3, wq=0.1))
    assert abs(report.failure_probability - 1e-12) < 1e-18
    assert abs(report.security_distance - (5e-36 + 4e-12)) < 1e-18


def test_term_breakdown_sums_to_raw():
    rng = np.random.default_rng(21)
    for _ in range(50):
        N = int(rng.integers(100, 10**6))
        m = int(rng.integers(1, N // 2 + 1))
        eps = float(10.0 ** rng.uniform(-36, -3))
        P = int(rng.integers(2, 102))
        gamma = float(rng.uniform(1.0 / (2 * P), 1.0))
        wq = float(rng.uniform(0.0, 1.0))
        r = key_length(make_inputs(N, m, eps, P, gamma, wq))
        total = r.min_entropy_bits - r.entropy_penalty_bits - r.epsilon_bits - r.subset_cost_bits
        assert abs(total - r.raw_ell) < 1e-6
        assert r.ell == max(0, math.floor(r.raw_ell))
        assert r.ell >= 0


def test_key_length_matches_oracle_mini_grid():
    rng = np.random.default_rng(33)
    for _ in range(60):
        N = int(10 ** rng.uniform(3, 10))
        m = max(1, min(N // 2, int(10 ** rng.uniform(0, math.log10(max(N // 2, 2))))))
        eps = float(10.0 ** rng.uniform(-40, -3))
        P = int(rng.integers(2, 102))
        gamma = float(10.0 ** rng.uniform(math.log10(1.0 / (2 * P)), 0.0))
        gamma = min(gamma, 1.0)
        wq = float(rng.uniform(0.0, 1.0))
        raw_hp, ell_hp = oracles.key_length_hp(N, m, eps, P, gamma, wq)
        report = key_length(make_inputs(N, m, eps, P, gamma, wq))
        assert abs(report.raw_ell - raw_hp) < 1.0, (N, m, eps, P, gamma, wq)
        assert abs(report.ell - ell_hp) <= 1


def test_monotone_in_wq():
    raws = [
        key_length(make_inputs(10**6, 10**3, 1e-9, 11, gamma=0.2, wq=w)).raw_ell
        for w in np.linspace(0.0, 0.6, 13)
    ]
    assert all(b <= a + 1e-9 for a, b in zip(raws, raws[1:]))


def test_monotone_in_gamma():
    raws = [
        key_length(make_inputs(10**6, 10**3, 1e-9, 11, gamma=g, wq=0.05)).raw_ell
        for g in np.linspace(0.05, 1.0, 13)
    ]
    assert all(b <= a + 1e-9 for a, b in zip(raws, raws[1:]))


def test_monotone_as_epsilon_shrinks():
    # smaller epsilon inflates both delta and the epsilon term
    raws = [
        key_length(make_inputs(10**6, 10**3, eps, 11, gamma=0.2, wq=0.05)).raw_ell
        for eps in (1e-3, 1e-6, 1e-12, 1e-24, 1e-36)
    ]
    assert all(b < a for a, b in zip(raws, raws[1:]))


def test_resolve_m_rule():
    assert resolve_m_rule("sqrt")(10**6) == 1000
    assert resolve_m_rule("sqrt")(10) == 3
    assert resolve_m_rule("fixed:17")(10**6) == 17
    rule = resolve_m_rule(lambda N: N // 4)
    assert rule(100) == 25
    for bad in ("fixed:0", "fixed:x", "cube"):
        with pytest.raises(ValueError):
            resolve_m_rule(bad)


def test_default_n_grid():
    grid = default_n_grid()
    assert grid[0] == 10**4
    assert grid[-1] == 10**12
    assert all(b > a for a, b in zip(grid, grid[1:]))
    with pytest.raises(ValueError):
        default_n_grid(count=0)
    with pytest.raises(ValueError):
        default_n_grid(start=100, stop=10)


def test_rate_curve_basic_fields():
    grid = [10**4, 10**5, 10**6]
    pts = rate_curve(11, 0.1, 1e-9, grid, gamma=0.2)
    assert [p.N for p in pts] == grid
    for p in pts:
        assert p.m == math.isqrt(p.N)
        assert p.wq == 0.1  # paper-compat default
        assert p.rate == p.ell / p.N
    exact = rate_curve(11, 0.1, 1e-9, grid, gamma=0.2, paper_compat=False)
    assert all(abs(p.wq - 0.1 * (1 - 1 / 22)) < 1e-15 for p in exact)


def test_rate_curve_validation():
    with pytest.raises(ValueError):
        rate_curve(11, 0.1, 1e-9, [100, 100], gamma=0.2)
    with pytest.raises(ValueError):
        rate_curve(11, 1.0, 1e-9, [100, 200], gamma=0.2)
    with pytest.raises(ValueError):
        rate_curve(11, 0.1, 1e-9, [100, 200], gamma=None)
    with pytest.raises(ValueError):
        # fixed m-rule violates m <= N/2 at the first grid point
        rate_curve(11, 0.1, 1e-9, [1000, 2000], m_rule="fixed:600", gamma=0.2)


def test_rate_curve_saturated_noise_is_flat_zero():
    pts = rate_curve(5, 0.95, 1e-36, [10**5, 10**7, 10**9], gamma=0.2)
    assert all(p.ell == 0 and p.rate == 0.0 for p in pts)


def test_rate_curve_non_decreasing_and_ordered():
    grid = [10**5, 10**6, 10**8, 10**10, 10**12]
    curves = {}
    for P in (5, 11, 51):
        g_star = gamma_scan(P, 2000)[1]
        pts = rate_curve(P, 0.15, 1e-36, grid, gamma=g_star)
        rates = [p.rate for p in pts]
        assert all(b >= a for a, b in zip(rates, rates[1:])), P
        curves[P] = rates
    for r5, r11, r51 in zip(curves[5], curves[11], curves[51]):
        assert r51 >= r11 >= r5


def test_asymptotic_rate_anchors():
    assert abs(asymptotic_rate(5, 0.0, 0.25) - 2.0) < 1e-12
    assert abs(asymptotic_rate(51, 0.15, 0.05) - ASYM_51_015_G005) < 1e-12
    # beyond the entropy peak the penalty saturates
    P, Q, g = 5, 0.95, 0.15
    want = max(0.0, (1 - Q) * (-math.log2(g)) - math.log2(10))
    assert asymptotic_rate(P, Q, g) == want
    assert asymptotic_rate(5, 0.5, 0.9) == 0.0
    with pytest.raises(ValueError):
        asymptotic_rate(5, 1.0, 0.2)
    with pytest.raises(ValueError):
        asymptotic_rate(5, 0.1, 0.0)


def test_rate_curve_converges_to_asymptote_from_below():
    g_star = gamma_scan(51, 5000)[1]
    limit = asymptotic_rate(51, 0.15, g_star)
    pts = rate_curve(51, 0.15, 1e-36, [10**6, 10**8, 10**10, 10**12, 10**13], gamma=g_star)
    gaps = [(limit - p.rate) / limit for p in pts]
    assert all(p.rate <= limit + 1e-12 for p in pts)
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    # the 5% band is reached at N = 1e13 (at 1e12 the gap is still ~8%)
    assert gaps[-1] < 0.05
