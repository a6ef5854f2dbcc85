from __future__ import annotations

import io
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ewagg.core import Correlated, sym_sqrt, DiscreteBounded, Gaussian, Rademacher, SharedMagnitudeSymmetric, Uniform
from ewagg.errors import ConfigurationError, UnsupportedNoiseError
from ewagg.prior import PriorConfig, kl_shift_bound
from ewagg.sampler import DiscreteDictionary, LmcConfig
from ewagg.theory import (
    EtaSpec,
    RiskReport,
    Scenario,
    convolved_density,
    convolved_stein_constant,
    density_law,
    mcewa_identity_check,
    oracle_rhs_discrete,
    point_mass_rhs,
    reports_to_csv,
    skorokhod_check,
    stein_constant,
    stein_profile,
    symmetric_beta,
    temperature_threshold,
    theorem5_rhs,
    triangular,
    verify_theorem,
    verify_theorem5,
)
from ewagg.theory.scenarios import build_scenario, library, library_path, load_scenario
from ewagg.theory.stein import second_moment_from_profile, variance_of

# -- Stein profiles ---------------------------------------------------------


def test_uniform_profile_at_zero():
    prof = stein_profile(Uniform(1.0), [0.0])
    assert prof.g_values[0] == 0.5 and prof.G == 0.5
    assert prof.m_values[0] == pytest.approx(0.25)


def test_gaussian_profile_is_flat():
    grid = np.linspace(-6, 6, 49)
    prof = stein_profile(Gaussian(2.0), grid)
    np.testing.assert_allclose(prof.g_values, 4.0, atol=1e-8)
    assert prof.G == pytest.approx(4.0, abs=1e-8)


def test_numeric_profiles_match_closed_forms():
    grid = np.linspace(-0.99, 0.99, 41)
    num = stein_profile(density_law(Uniform(1.0)), grid)
    ana = stein_profile(Uniform(1.0), grid)
    np.testing.assert_allclose(num.g_values, ana.g_values, atol=1e-8)
    g = stein_profile(density_law(Gaussian(2.0)), np.linspace(-5, 5, 21))
    np.testing.assert_allclose(g.g_values, 4.0, atol=1e-6)


def test_triangular_obeys_unimodal_bound():
    prof = stein_profile(triangular(1.0), np.linspace(-0.999, 0.999, 201))
    assert prof.G <= 0.5 * (1 + 1e-9)
    # g(x) = (1 - |x|)(1 + 2|x|)/6 on [-1, 1], maximal at |x| = 1/4
    assert prof.G == pytest.approx(0.1875, abs=1e-6)


def test_triangular_value_at_zero():
    # density 1 - |x| on [-1, 1]: m(0) = int_0^1 x(1 - x) dx = 1/6, p(0) = 1
    prof = stein_profile(triangular(1.0), [0.0])
    assert prof.m_values[0] == pytest.approx(1 / 6, abs=1e-10)


@pytest.mark.parametrize("alpha", [1.0, 1.5, 2.0, 4.0])
def test_beta_family_respects_bound(alpha):
    b = 1.3
    prof = stein_profile(symmetric_beta(alpha, b), np.linspace(-b * 0.999, b * 0.999, 101))
    assert np.all(prof.g_values >= -1e-12)
    assert np.all(prof.m_values >= -1e-12)
    assert prof.G <= b * b / 2 * (1 + 1e-9)


def test_discrete_laws_are_rejected():
    for law in (Rademacher(1.0), DiscreteBounded((-1.0, 1.0), (0.5, 0.5))):
        with pytest.raises(UnsupportedNoiseError):
            stein_profile(law, [0.0])
        with pytest.raises(UnsupportedNoiseError):
            stein_constant(law)


def test_closed_form_constants():
    assert stein_constant(Uniform(3.0)) == 4.5
    assert stein_constant(Gaussian(0.5)) == 0.25


def test_convolved_constant():
    assert convolved_stein_constant(1.0) == 2.0
    assert convolved_stein_constant(0.5) == 0.5
    with pytest.raises(ConfigurationError):
        convolved_stein_constant(0.0)


def test_convolved_numeric_cross_check():
    law = convolved_density(Rademacher(1.0), 1.0)
    prof = stein_profile(law, np.linspace(-1.999, 1.999, 801))
    assert 1.99 <= prof.G <= 2.0 + 1e-9


def test_convolved_discrete_below_bound():
    base = DiscreteBounded((-1.0, -0.5, 0.5, 1.0), (0.25, 0.25, 0.25, 0.25))
    prof = stein_profile(convolved_density(base, 1.0), np.linspace(-1.999, 1.999, 401))
    assert prof.G <= 2.0 * (1 + 1e-9)


def test_second_moment_identity():
    law = density_law(Uniform(1.5))
    assert second_moment_from_profile(law) == pytest.approx(1.5**2 / 3, abs=1e-9)
    tri = triangular(1.0)
    assert second_moment_from_profile(tri) == pytest.approx(variance_of(tri), abs=1e-9)


# -- eta / Skorokhod --------------------------------------------------------


def test_eta_half():
    spec = EtaSpec(0.5)
    assert spec.values == (1, -3.0)
    assert spec.probs == (0.75, 0.25)


@given(st.fractions(min_value=Fraction(1, 1000), max_value=Fraction(1000)))
def test_eta_mean_exactly_zero(gamma):
    spec = EtaSpec(gamma)
    assert spec.mean() == 0
    p = spec.probs
    assert 0 < p[0] < 1 and 0 < p[1] < 1 and p[0] + p[1] == 1


def test_eta_sample_mean(rng):
    x = EtaSpec(0.5).sample(200_000, rng)
    assert set(np.unique(x)) == {1.0, -3.0}
    assert abs(x.mean()) < 4 * x.std() / math.sqrt(x.size)


@pytest.mark.parametrize("gamma", [0.1, 0.5, 2.0])
def test_rademacher_two_point_identity(gamma):
    # enumerate xi in {-1, 1} and eta in its two values
    spec = EtaSpec(Fraction(gamma).limit_denominator())
    g = spec.gamma
    mass = {}
    for xi in (-1, 1):
        for eta, p in zip(spec.values, spec.probs):
            v = xi * (1 + 2 * g * eta)
            mass[v] = mass.get(v, 0) + Fraction(1, 2) * p
    # (1 + 2 g eta) is 1 + 2g or -1 - 2g: the law is symmetric on +-(1 + 2g)
    assert mass == {1 + 2 * g: Fraction(1, 2), -(1 + 2 * g): Fraction(1, 2)}


def test_skorokhod_gaussian_small(rng):
    rep = skorokhod_check(Gaussian(1.0), 0.25, 200_000, rng)
    assert rep.cdf_distance < 0.01
    assert rep.max_conditional_z < 4.5
    assert len(rep.conditional_means) == 20


def test_skorokhod_uniform(rng):
    rep = skorokhod_check(Uniform(2.0), 0.7, 200_000, rng)
    assert rep.cdf_distance < 0.01


def test_skorokhod_rejects_correlated(rng):
    with pytest.raises(ValueError):
        skorokhod_check(Correlated(np.eye(2), Gaussian(1.0)), 0.5, 10, rng)


# -- oracle right-hand sides ------------------------------------------------


def test_rhs_single_candidate_is_zero(rng):
    F = rng.standard_normal((2, 3))
    assert oracle_rhs_discrete(DiscreteDictionary(F[None]), F, 0.4) == 0.0


def test_rhs_two_point_limit():
    tau = 0.3
    F = np.zeros((1, 2))
    far = np.full((1, 2), 1e4)
    v = oracle_rhs_discrete(DiscreteDictionary(np.stack([F, far])), F, tau)
    assert v == pytest.approx(2 * tau * math.log(2), rel=1e-12)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_gibbs_rhs_below_point_mass(seed):
    r = np.random.default_rng(seed)
    J = int(r.integers(1, 7))
    d = DiscreteDictionary(r.standard_normal((J, 2, 3)), r.dirichlet(np.ones(J)))
    F_star = r.standard_normal((2, 3))
    tau = float(r.uniform(0.01, 3))
    assert oracle_rhs_discrete(d, F_star, tau) <= point_mass_rhs(d, F_star, tau) + 1e-12


def test_rhs_relabel_invariance(rng):
    cands = rng.standard_normal((5, 2, 3))
    w = rng.dirichlet(np.ones(5))
    F_star = rng.standard_normal((2, 3))
    perm = rng.permutation(5)
    a = oracle_rhs_discrete(DiscreteDictionary(cands, w), F_star, 0.5)
    b = oracle_rhs_discrete(DiscreteDictionary(cands[perm], w[perm]), F_star, 0.5)
    assert a == pytest.approx(b, rel=1e-13)


def test_rhs_loss_shift():
    # shifting every candidate loss by c shifts the Gibbs value by c
    tau, c = 0.5, 0.8
    losses = np.array([0.1, 0.4, 1.3])
    q = np.array([0.2, 0.5, 0.3])
    base = -2 * tau * math.log(np.dot(q, np.exp(-losses / (2 * tau))))
    shifted = -2 * tau * math.log(np.dot(q, np.exp(-(losses + c) / (2 * tau))))
    assert shifted == pytest.approx(base + c, rel=1e-13)
    # and the library agrees with the closed form on a dictionary realizing those losses
    n = 1
    cands = np.sqrt(losses * n)[:, None, None]
    assert oracle_rhs_discrete(DiscreteDictionary(cands, q), np.zeros((1, 1)), tau) == pytest.approx(base, rel=1e-12)


def test_theorem5_rhs_at_zero(rng):
    F_star = rng.standard_normal((3, 4))
    lam, tau = 0.7, 0.2
    v = theorem5_rhs(np.zeros((3, 4)), F_star, lam, tau)
    assert v == pytest.approx(np.sum(F_star**2) / 4 + 3 * lam * lam, rel=1e-14)


def test_theorem5_rhs_at_truth(rng):
    K, n, lam, tau = 4, 6, 0.9, 0.3
    F = np.outer(rng.standard_normal(K), rng.standard_normal(n))
    expected = 4 * 1 * (n + K + 2) * tau * math.log(1 + np.linalg.norm(F) / (math.sqrt(2) * lam)) + K * lam * lam
    assert theorem5_rhs(F, F, lam, tau) == pytest.approx(expected, rel=1e-13)


def test_theorem5_kl_part_scaling():
    # with tau = 2B^2/n and lam^2 = B^2 (n + K)/K the KL part is O(r (n+K)/n * log)
    K, B, r = 8, 1.0, 1
    def kl_part(n):
        lam = B * math.sqrt((n + K) / K)
        tau = 2 * B * B / n
        F = np.outer(np.ones(K), np.ones(n))  # entries O(1), rank 1
        return 2 * tau * kl_shift_bound(F, PriorConfig(lam, K, n)), math.log(1 + np.linalg.norm(F) / (math.sqrt(2 * r) * lam))
    for n in (20, 40, 80, 160):
        (a, la), (b, lb) = kl_part(n), kl_part(2 * n)
        assert b <= a * max(1.0, lb / la) * (1 + 1e-12)
        assert a / la == pytest.approx(8 * r * B * B * (n + K + 2) / n, rel=1e-12)


def test_theorem5_prior_variance_term_grows_with_n():
    # the K lam^2 term is B^2 (n + K) under the same tuning: recorded, not hidden
    K, B = 8, 1.0
    for n in (20, 40):
        lam = B * math.sqrt((n + K) / K)
        v = theorem5_rhs(np.zeros((K, n)), np.zeros((K, n)), lam, 2 * B * B / n)
        assert v == pytest.approx(B * B * (n + K), rel=1e-12)


# -- certification harness --------------------------------------------------


def test_degenerate_dictionary_passes(rng):
    F = np.zeros((3, 6))
    sc = Scenario("one", DiscreteDictionary(F[None]), F, Uniform(1.0))
    rep = verify_theorem("t1", sc, 50, rng)
    assert rep.empirical_risk == 0.0 and rep.bound_rhs == 0.0 and rep.passed


def test_threshold_formulas():
    K, n = 4, 12
    F = np.zeros((K, n))
    cands = np.stack([F, F + 1.0])
    sc = Scenario("x", DiscreteDictionary(cands), F, Uniform(1.0))
    # L = 1 (all-ones difference), B = 1: (K/n) * 1 * max(2, 3)
    assert temperature_threshold("t1", sc) == pytest.approx(K / n * 3)
    assert temperature_threshold("t3", sc) == pytest.approx(0.5 / n)
    assert temperature_threshold("t4", sc) == pytest.approx(2 / n)
    cov = 0.5 * np.eye(K) + 0.5 * np.ones((K, K))
    sc2 = Scenario("y", DiscreteDictionary(cands), F, Correlated(cov, Uniform(1.0)))
    snorm = 0.5 + 0.5 * K
    assert temperature_threshold("t3", sc2) == pytest.approx(snorm * 0.5 / n)
    # L-bar is the largest entry of Sigma^{1/2} (F - F')
    Lbar = np.abs(sym_sqrt(cov) @ np.ones((K, n))).max()
    assert temperature_threshold("t2", sc2) == pytest.approx(max(2 * Lbar, 3 * snorm) / n)


def test_threshold_violation_names_value(rng):
    F = np.zeros((2, 4))
    sc = Scenario("cold", DiscreteDictionary(np.stack([F, F + 1])), F, Uniform(1.0), tau=1e-3)
    with pytest.raises(ConfigurationError, match="threshold"):
        verify_theorem("t1", sc, 10, rng)


def test_t3_rejects_rademacher_library_scenario():
    sc, _ = load_scenario(library_path("t4_rademacher"))
    with pytest.raises(UnsupportedNoiseError):
        verify_theorem("t3", sc, 10, np.random.default_rng(0))


def test_report_pass_rule():
    assert RiskReport(1.0, 0.1, 0.71, 10).passed
    assert not RiskReport(1.0, 0.1, 0.69, 10).passed
    r = RiskReport(0.5, 0.01, 1.0, 10, "s")
    assert r.slack == 0.5
    text = reports_to_csv([r])
    assert text.splitlines()[0] == "scenario,trials,empirical_risk,std_error,bound_rhs,slack,passed"
    assert text.splitlines()[1].startswith("s,10,0.5,0.01,1.0,0.5,True")


def test_library_has_two_scenarios_per_theorem():
    lib = library()
    for t in ("t1", "t2", "t3", "t4"):
        assert sum(cfg.get("theorem") == t for cfg in lib.values()) >= 2


@pytest.mark.parametrize("stem", sorted(k for k, v in library().items() if v.get("theorem") in ("t1", "t2", "t3", "t4")))
def test_library_scenario_passes_short(stem):
    sc, cfg = load_scenario(library_path(stem))
    rep = verify_theorem(cfg["theorem"], sc, 300, np.random.default_rng(cfg.get_int("seed", 0)))
    assert rep.passed, rep.summary()


def test_scenario_builder_options():
    from ewagg.config import parse_config

    cfg = parse_config("K=3\nn=5\nfstar=rank1\ncandidates=4\nfstar_in_dict=true\nnoise=shared\nbase=rademacher\ntau=0.9\n")
    sc = build_scenario(cfg)
    assert sc.dictionary.candidates.shape == (4, 3, 5)
    np.testing.assert_array_equal(sc.dictionary.candidates[0], sc.F_star)
    assert np.linalg.matrix_rank(sc.F_star) == 1
    assert isinstance(sc.noise, SharedMagnitudeSymmetric) and sc.tau == 0.9
    with pytest.raises(ConfigurationError):
        build_scenario(parse_config("noise=poisson"))


# -- MC-EWA identity ---------------------------------------------------------


def test_mcewa_single_candidate_exact(rng):
    F1 = rng.standard_normal((2, 3))
    F_star = rng.standard_normal((2, 3))
    rep = mcewa_identity_check(DiscreteDictionary(F1[None]), F_star, Gaussian(1.0), 0.5, 1, 20, rng)
    loss = np.sum((F1 - F_star) ** 2) / 3
    assert rep.lhs == pytest.approx(loss, rel=1e-14) and rep.rhs == pytest.approx(loss, rel=1e-14)
    assert rep.gap == 0.0


def test_mcewa_gap_small(rng):
    cands = rng.standard_normal((5, 3, 6))
    F_star = rng.standard_normal((3, 6))
    rep = mcewa_identity_check(DiscreteDictionary(cands), F_star, Gaussian(1.0), 0.4, 8, 3000, rng)
    assert rep.gap_z < 4


# -- low-rank bound (small) -----------------------------------------------


def test_theorem5_small_scale(rng):
    K, n, B = 3, 10, 1.0
    F_star = np.outer(np.ones(K), np.linspace(-1, 1, n))
    lam = B * math.sqrt((n + K) / K)
    rep = verify_theorem5(F_star, Rademacher(1.0), B, lam, 2 * B * B / n, LmcConfig(h=0.01, k_max=300, N=8), 8, rng)
    assert rep.passed and rep.trials == 8


def test_theorem5_rejects_cold_tau(rng):
    with pytest.raises(ConfigurationError, match="threshold"):
        verify_theorem5(np.zeros((2, 4)), Rademacher(1.0), 1.0, 1.0, 0.1, LmcConfig(h=0.01, k_max=2), 2, rng)


def test_report_csv_to_file(tmp_path):
    buf = io.StringIO()
    reports_to_csv([RiskReport(0.1, 0.01, 0.2, 5, "a"), RiskReport(0.3, 0.01, 0.2, 5, "b")], buf)
    rows = buf.getvalue().strip().splitlines()
    assert len(rows) == 3 and rows[2].endswith("False")
