import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gwising import OffspringPmf, PmfError, zero_truncated_binomial, ztb_mixture


def test_constructor_rejects_bad_input():
    with pytest.raises(PmfError):
        OffspringPmf(np.array([1, 2]), np.array([0.5, 0.6]))  # sums to 1.1
    with pytest.raises(PmfError):
        OffspringPmf(np.array([2, 1]), np.array([0.5, 0.5]))  # not increasing
    with pytest.raises(PmfError):
        OffspringPmf(np.array([1, 2]), np.array([1.5, -0.5]))  # negative mass
    with pytest.raises(PmfError):
        OffspringPmf(np.array([-1]), np.array([1.0]))


def test_normalization_tolerance_is_tight():
    OffspringPmf(np.array([1]), np.array([1.0 + 9e-13]))
    with pytest.raises(PmfError):
        OffspringPmf(np.array([1]), np.array([1.0 + 2e-12]))


def test_mean_examples(rng):
    assert OffspringPmf.dirac(2).mean() == 2.0
    assert OffspringPmf.from_dict({1: 0.5, 3: 0.5}).mean() == 2.0
    pmf = OffspringPmf.from_dict({1: 0.25, 2: 0.5, 4: 0.25})
    assert pmf.mean() == 2.25
    draws = pmf.sample_many(rng, 10**6)
    se = draws.std() / 1000.0
    assert abs(draws.mean() - 2.25) < 3 * se


def test_q_moment_examples(rng):
    assert OffspringPmf.dirac(2).q_moment(2.0) == 4.0
    assert OffspringPmf.from_dict({1: 0.5, 2: 0.5}).q_moment(2.0) == 2.5
    pmf = OffspringPmf.from_dict({1: 0.5, 3: 0.5})
    expected = (1 + 3**1.5) / 2
    assert pmf.q_moment(1.5) == pytest.approx(expected, abs=1e-14)
    draws = pmf.sample_many(rng, 10**6).astype(float) ** 1.5
    assert abs(draws.mean() - expected) < 3 * draws.std() / 1000.0


def test_q_variance_examples():
    for q in (1.5, 2.0):
        assert OffspringPmf.dirac(5).q_variance(q) == 0.0
    assert OffspringPmf.from_dict({1: 0.5, 3: 0.5}).q_variance(2.0) == pytest.approx(1.0)
    pmf = OffspringPmf.from_dict({1: 0.25, 2: 0.75})
    assert pmf.q_variance(1.5) == pytest.approx(pmf.q_moment(1.5) - 1.75**1.5)


@pytest.mark.parametrize("q", [0.5, 1.0, 2.5, 3.0])
def test_fractional_order_outside_window_rejected(q):
    pmf = OffspringPmf.from_dict({1: 0.5, 2: 0.5})
    with pytest.raises(ValueError):
        pmf.q_moment(q)
    with pytest.raises(ValueError):
        pmf.q_variance(q)


def test_generating_function_examples():
    assert OffspringPmf.dirac(2).gf(0.5) == 0.25
    assert OffspringPmf.from_dict({1: 0.5, 2: 0.5}).gf(0.4) == pytest.approx(0.28)
    for pmf in (OffspringPmf.dirac(3), OffspringPmf.from_dict({1: 0.2, 5: 0.8})):
        assert pmf.gf(1.0) == pytest.approx(1.0, abs=1e-15)


def test_generating_function_convex_nondecreasing(half13):
    s = np.linspace(0, 1, 101)
    g = half13.gf(s)
    assert np.all(np.diff(g) >= 0)
    assert np.all(np.diff(g, 2) >= -1e-14)


def test_sampling_examples(rng):
    assert OffspringPmf.dirac(3).sample(rng) == 3
    assert OffspringPmf.from_dict({1: 1.0}).sample(rng) == 1
    draws = OffspringPmf.from_dict({1: 0.5, 2: 0.5}).sample_many(rng, 10**6)
    assert abs((draws == 1).mean() - 0.5) < 0.002


def test_sampling_skips_zero_mass_degrees(rng):
    pmf = OffspringPmf(np.array([1, 2, 3]), np.array([0.5, 0.0, 0.5]))
    draws = pmf.sample_many(rng, 20000)
    assert set(np.unique(draws)) == {1, 3}


def test_sampling_consumes_one_uniform_per_draw():
    pmf = OffspringPmf.from_dict({1: 0.3, 2: 0.7})
    a = np.random.default_rng(5)
    b = np.random.default_rng(5)
    pmf.sample_many(a, 7)
    b.random(7)
    assert a.random() == b.random()


def test_zero_truncated_binomial_examples():
    assert zero_truncated_binomial(1, 0.3) == OffspringPmf.dirac(1)
    ztb = zero_truncated_binomial(2, 0.5)
    assert np.allclose(ztb.probs, [2 / 3, 1 / 3])
    raw = np.array([3 * 0.25 * 0.75**2, 3 * 0.25**2 * 0.75, 0.25**3])
    ztb3 = zero_truncated_binomial(3, 0.25)
    assert np.allclose(ztb3.probs, raw / raw.sum(), atol=1e-15)
    assert ztb3.probs.sum() == pytest.approx(1.0, abs=1e-12)
    assert ztb3.mass(0) == 0.0


def test_zero_truncated_binomial_rejects_null_conditioning():
    with pytest.raises(ValueError):
        zero_truncated_binomial(3, 0.0)
    with pytest.raises(ValueError):
        zero_truncated_binomial(0, 0.5)


def test_ztb_mixture_examples():
    assert ztb_mixture(OffspringPmf.dirac(1), 0.37) == OffspringPmf.dirac(1)
    mix = ztb_mixture(OffspringPmf.dirac(2), 0.5)
    assert np.allclose(mix.probs, [2 / 3, 1 / 3], atol=1e-15)


def test_ztb_mixture_against_outcome_enumeration():
    # X ~ {1: .5, 2: .5}, each child kept with prob .5, conditioned on >= 1
    # survivor: P(alive, d=1) = .5*.5 + .5*.5 = .5, P(alive, d=2) = .5*.25,
    # P(alive) = .625, so the law is {1: 0.8, 2: 0.2}.
    mix = ztb_mixture(OffspringPmf.from_dict({1: 0.5, 2: 0.5}), 0.5)
    assert np.allclose(mix.probs, [0.8, 0.2], atol=1e-14)


@pytest.mark.parametrize("p", [0.05, 0.3, 0.8, 1.0])
def test_ztb_mixture_mean_formula(half13, p):
    mix = ztb_mixture(half13, p)
    nu = half13.mean()
    expected = nu * p / (1.0 - half13.gf(1.0 - p))
    assert mix.mean() == pytest.approx(expected, abs=1e-12)


def test_ztb_mixture_rejects_zero_mass_trial_law():
    with pytest.raises(PmfError):
        ztb_mixture(OffspringPmf.from_dict({0: 0.5, 2: 0.5}), 0.5)


def test_g_bounds(half13, dirac2, half12):
    # 1 + nu(s-1) <= G(s) <= 1 + nu(s-1) + c_q m_q (1-s)^q with a fitted
    # c_q <= 10, and the same fit transfers to the F(t) = 1 - G(1-t) bounds.
    from gwising.pruned_law import fit_g_upper_constant
    s = np.linspace(0, 1, 501)
    for pmf in (half13, dirac2, half12):
        nu = pmf.mean()
        g = pmf.gf(s)
        assert np.all(g >= 1 + nu * (s - 1) - 1e-12)
        for q in (1.5, 2.0):
            c_q = fit_g_upper_constant(pmf, q)
            assert c_q <= 10.0
            m_q = pmf.q_moment(q)
            assert np.all(g <= 1 + nu * (s - 1) + c_q * m_q * (1 - s) ** q + 1e-12)
            # F bounds: upper exact, lower via C_mu = c_q m_q / nu
            t = 1.0 - s
            f = pmf.one_minus_gf_at_one_minus(t)
            assert np.all(f <= nu * t + 1e-12)
            c_mu = c_q * m_q / nu
            assert np.all(f >= nu * t * (1 - c_mu * t ** (q - 1)) - 1e-12)


def test_g_bounds_at_minimal_degree(half13, dirac2):
    # mu(d0) s^d0 <= G(s) <= mu(d0) s^d0 + s^{d0+1}
    s = np.linspace(0, 1, 301)
    for pmf in (half13, dirac2):
        d0 = pmf.min_degree
        m0 = pmf.mass(d0)
        g = pmf.gf(s)
        assert np.all(g >= m0 * s**d0 - 1e-15)
        assert np.all(g <= m0 * s**d0 + s ** (d0 + 1) + 1e-15)


def test_log_gf_matches_linear_and_survives_underflow(half13):
    assert half13.log_gf(math.log(0.3)) == pytest.approx(math.log(half13.gf(0.3)), abs=1e-12)
    tiny = -800.0  # log s below double underflow for s
    assert half13.log_gf(tiny) == pytest.approx(math.log(0.5) + tiny, abs=1e-9)


def test_stable_one_minus_gf(half12):
    # F(t) ~ nu t for tiny t, with full relative accuracy (naive 1 - G(1-t)
    # would cancel); F(1) = 1 for a no-zero law.
    t = 1e-12
    assert half12.one_minus_gf_at_one_minus(t) == pytest.approx(1.5 * t, rel=1e-9)
    assert half12.one_minus_gf_at_one_minus(1.0) == pytest.approx(1.0)


def test_json_round_trip(half13):
    data = half13.to_json_dict()
    assert data == {"entries": [[1, 0.5], [3, 0.5]]}
    assert OffspringPmf.from_json_dict(data) == half13


def test_truncated_family_reports_tail():
    pmf, tail = OffspringPmf.truncated(lambda d: 0.5 ** (d + 1), cutoff=10)
    assert tail == pytest.approx(0.5**11, rel=1e-12)
    assert pmf.probs.sum() == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.dictionaries(st.integers(min_value=1, max_value=9),
                       st.floats(min_value=1e-3, max_value=1.0),
                       min_size=1, max_size=5),
       st.floats(min_value=0.01, max_value=1.0))
def test_ztb_mixture_properties(masses, p):
    total = sum(masses.values())
    pmf = OffspringPmf.from_dict({d: w / total for d, w in masses.items()})
    mix = ztb_mixture(pmf, p)
    assert mix.mass(0) == 0.0
    assert abs(mix.probs.sum() - 1.0) <= 1e-12
    assert mix.max_degree <= pmf.max_degree
    expected = pmf.mean() * p / (1.0 - pmf.gf(1.0 - p))
    assert mix.mean() == pytest.approx(expected, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.dictionaries(st.integers(min_value=0, max_value=12),
                       st.floats(min_value=1e-3, max_value=1.0),
                       min_size=1, max_size=6))
def test_random_pmf_invariants(masses):
    total = sum(masses.values())
    pmf = OffspringPmf.from_dict({d: w / total for d, w in masses.items()})
    assert abs(pmf.probs.sum() - 1.0) <= 1e-12
    assert pmf.gf(1.0) == pytest.approx(1.0, abs=1e-12)
    for q in (1.5, 2.0):
        assert pmf.q_variance(q) >= -1e-12
    grid = np.linspace(0, 1, 33)
    g = pmf.gf(grid)
    assert np.all((g >= -1e-15) & (g <= 1 + 1e-12))
