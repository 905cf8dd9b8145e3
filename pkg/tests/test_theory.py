import dataclasses
import math

import numpy as np
import pytest

from nastya.engine import RunConfig
from nastya.errors import CapabilityError, InputError, RegimeError
from nastya.problems import make_quadratic_problem
from nastya.theory import (
    HeterogeneityStats,
    Theorem,
    _reference_bound_cvx,
    _reference_bound_ncvx,
    _reference_bound_sc,
    _reference_bound_small_alpha,
    bound_cvx,
    bound_ncvx,
    bound_sc,
    bound_small_alpha,
    check_stepsizes,
    heterogeneity_stats,
    participation_factor,
    recommended_stepsizes,
    sigma_rad_upper_bound,
)
from conftest import random_psd_quadratic


def make_cfg(cstep, sstep, C, T, d=1, seed=0):
    return RunConfig(cstep=cstep, sstep=sstep, cohort_size=C, horizon=T,
                     x0=np.zeros(d), seed=seed)


def make_stats(rng, M, n):
    sigma_m = rng.uniform(0.1, 2.0, size=M)
    sigma = float(rng.uniform(0.05, 1.5))
    delta_m = rng.uniform(0.0, 1.0, size=M)
    delta = float(rng.uniform(0.0, 0.8))
    return HeterogeneityStats(
        sigma_star_sq=sigma,
        sigma_star_m_sq=sigma_m,
        Sigma_star_sq=float(sigma_m.mean()) + n * sigma,
        delta_star=delta,
        delta_star_m=delta_m,
        D_star_sq=float(delta_m.mean()) + n * delta,
        n=n,
    )


class TestHeterogeneityStats:
    def test_reference_quadratic(self, two_quadratics):
        st = heterogeneity_stats(two_quadratics, two_quadratics.x_star,
                                 two_quadratics.f_star)
        assert st.sigma_star_sq == pytest.approx(1.0, abs=1e-14)
        assert np.allclose(st.sigma_star_m_sq, [1.0, 1.0], atol=1e-14)
        assert st.Sigma_star_sq == pytest.approx(2.0, abs=1e-13)
        assert st.delta_star == pytest.approx(0.5, abs=1e-12)
        assert np.allclose(st.delta_star_m, [0.5, 0.5], atol=1e-12)
        assert st.D_star_sq == pytest.approx(1.0, abs=1e-11)

    def test_homogeneous_problem_zero_variance(self):
        p = make_quadratic_problem(4, 2, 3, mu=0.2, L=1.0, heterogeneity=0.0, seed=2)
        st = heterogeneity_stats(p, p.x_star, p.f_star)
        assert st.sigma_star_sq <= 1e-18

    def test_single_client_zero_variance(self, rng):
        p = random_psd_quadratic(rng, M=1, n=3, d=3)
        st = heterogeneity_stats(p, p.x_star, p.f_star)
        assert st.sigma_star_sq <= 1e-18

    def test_composites_match_definitions(self, rng):
        p = random_psd_quadratic(rng, M=3, n=4, d=3)
        st = heterogeneity_stats(p, p.x_star, p.f_star)
        assert st.Sigma_star_sq == pytest.approx(
            float(st.sigma_star_m_sq.mean()) + st.n * st.sigma_star_sq, rel=1e-12
        )
        assert st.D_star_sq == pytest.approx(
            float(st.delta_star_m.mean()) + st.n * st.delta_star, rel=1e-12
        )

    def test_missing_x_star_named(self, two_quadratics):
        with pytest.raises(CapabilityError, match="x_star"):
            heterogeneity_stats(two_quadratics, None, 0.5)

    def test_missing_f_star_named(self, two_quadratics):
        with pytest.raises(CapabilityError, match="f_star"):
            heterogeneity_stats(two_quadratics, two_quadratics.x_star, None)


class TestParticipationFactor:
    def test_full_participation_zero(self):
        for M in range(2, 11):
            assert participation_factor(M, M) == 0.0

    def test_single_client_is_one(self):
        for M in range(2, 11):
            assert participation_factor(M, 1) == pytest.approx(1.0, rel=1e-15)

    def test_single_total_client(self):
        assert participation_factor(1, 1) == 0.0


class TestBoundSc:
    def test_full_participation_kills_third_term(self, rng):
        st = make_stats(rng, M=5, n=3)
        cfg = make_cfg(cstep=1e-3, sstep=1.0 / 16, C=5, T=20)
        curve = bound_sc(st, mu=0.1, L=1.0, cfg=cfg, dist0_sq=2.0)
        assert np.all(curve.terms["participation"] == 0.0)

    def test_small_cstep_limit_is_participation_floor(self, rng):
        st = make_stats(rng, M=5, n=3)
        cfg = make_cfg(cstep=1e-12, sstep=1.0 / 16, C=2, T=12000)
        curve = bound_sc(st, mu=0.1, L=1.0, cfg=cfg, dist0_sq=2.0)
        floor = 8.0 * cfg.sstep / 0.1 * participation_factor(5, 2) * st.sigma_star_sq
        assert curve.values[-1] == pytest.approx(floor, rel=1e-6)

    def test_values_sum_of_terms_and_nonnegative(self, rng):
        st = make_stats(rng, M=4, n=2)
        cfg = make_cfg(cstep=1e-3, sstep=1.0 / 20, C=2, T=50)
        curve = bound_sc(st, mu=0.2, L=1.0, cfg=cfg, dist0_sq=1.0)
        total = sum(curve.terms.values())
        assert np.allclose(curve.values, total, rtol=1e-15)
        assert np.all(curve.values >= 0)

    def test_eventually_flat(self, rng):
        st = make_stats(rng, M=4, n=2)
        mu, L, dist0 = 0.2, 1.0, 5.0
        cfg0 = make_cfg(cstep=1e-3, sstep=1.0 / 16, C=2, T=1)
        floor = (
            5.0 * cfg0.cstep**2 * st.n * L / mu * st.Sigma_star_sq
            + 8.0 * cfg0.sstep / mu * participation_factor(4, 2) * st.sigma_star_sq
        )
        base = 1.0 - cfg0.sstep * mu / 2.0
        T_flat = int(math.ceil(10.0 * math.log(dist0 / floor) / (-math.log(base))))
        curve = bound_sc(st, mu, L, dataclasses.replace(cfg0, horizon=T_flat), dist0)
        assert abs(curve.values[-1] - floor) <= floor * 1e-6

    def test_regime_violation_names_inequality(self, rng):
        st = make_stats(rng, M=3, n=4)
        with pytest.raises(RegimeError, match="sstep <= 1/\\(16\\*L\\)"):
            bound_sc(st, 0.1, 1.0, make_cfg(1e-3, 1.0, C=2, T=5), 1.0)
        with pytest.raises(RegimeError, match="cstep\\*n <= sstep"):
            bound_sc(st, 0.1, 1.0, make_cfg(1e-2, 1e-3, C=2, T=5), 1.0)

    def test_matches_reference_implementation(self, rng):
        for _ in range(100):
            M = int(rng.integers(2, 8))
            n = int(rng.integers(1, 6))
            st = make_stats(rng, M, n)
            L = float(rng.uniform(0.5, 3.0))
            mu = L / float(rng.uniform(2, 50))
            sstep = float(rng.uniform(0.2, 1.0)) / (16 * L)
            cstep = sstep / n * float(rng.uniform(0.05, 1.0))
            C = int(rng.integers(1, M + 1))
            T = int(rng.integers(1, 30))
            dist0 = float(rng.uniform(0.1, 4.0))
            cfg = make_cfg(cstep, sstep, C, T)
            ours = bound_sc(st, mu, L, cfg, dist0).values
            ref = _reference_bound_sc(
                st.sigma_star_sq, list(st.sigma_star_m_sq), n, mu, L,
                cstep, sstep, C, M, dist0, T)
            assert np.allclose(ours, ref, rtol=1e-14, atol=0)


class TestBoundCvx:
    def test_doubling_T_halves_first_term_only(self, rng):
        st = make_stats(rng, M=4, n=3)
        zero_noise = dataclasses.replace(
            st, sigma_star_sq=0.0, sigma_star_m_sq=np.zeros(4), Sigma_star_sq=0.0
        )
        cfg_T = make_cfg(1e-3, 1.0 / 16, C=2, T=10)
        cfg_2T = make_cfg(1e-3, 1.0 / 16, C=2, T=20)
        b1 = bound_cvx(zero_noise, 1.0, cfg_T, 3.0)
        b2 = bound_cvx(zero_noise, 1.0, cfg_2T, 3.0)
        assert b2 == pytest.approx(b1 / 2, rel=1e-14)

    def test_vanishes_in_easy_limit(self, rng):
        st = make_stats(rng, M=4, n=3)
        cfg = make_cfg(1e-10, 1.0 / 16, C=4, T=10**9)
        assert bound_cvx(st, 1.0, cfg, 1.0) <= 1e-6

    def test_matches_reference_implementation(self, rng):
        for _ in range(100):
            M = int(rng.integers(2, 8))
            n = int(rng.integers(1, 6))
            st = make_stats(rng, M, n)
            L = float(rng.uniform(0.5, 3.0))
            sstep = float(rng.uniform(0.2, 1.0)) / (16 * L)
            cstep = sstep / n * float(rng.uniform(0.05, 1.0))
            cfg = make_cfg(cstep, sstep, int(rng.integers(1, M + 1)), int(rng.integers(1, 40)))
            dist0 = float(rng.uniform(0.1, 4.0))
            ours = bound_cvx(st, L, cfg, dist0)
            ref = _reference_bound_cvx(
                st.sigma_star_sq, list(st.sigma_star_m_sq), n, L,
                cstep, sstep, cfg.cohort_size, M, dist0, cfg.horizon)
            assert ours == pytest.approx(ref, rel=1e-14)


class TestBoundNcvx:
    def test_full_participation_base(self, rng):
        st = make_stats(rng, M=4, n=3)
        L = 1.0
        cfg = make_cfg(1.0 / (2 * 3 * L) / 2, 1.0 / (4 * L) / 2, C=4, T=10)
        with_delta0 = bound_ncvx(st, L, cfg, delta0=1.0, T=10)
        floor_only = bound_ncvx(st, L, cfg, delta0=0.0, T=10)
        base = 1.0 + 1.5 * cfg.sstep * cfg.cstep**2 * 9 * L**3
        expected_first = 4.0 * base**10 / (cfg.sstep * 10)
        assert with_delta0 - floor_only == pytest.approx(expected_first, rel=1e-12)

    def test_delta0_zero_leaves_variance_terms(self, rng):
        st = make_stats(rng, M=4, n=3)
        L = 1.0
        cfg = make_cfg(1.0 / 24, 1.0 / 16, C=2, T=10)
        val = bound_ncvx(st, L, cfg, delta0=0.0, T=10)
        pf = participation_factor(4, 2)
        expected = (6.0 * cfg.cstep**2 * 3 * L**3 * st.D_star_sq
                    + 8.0 * L**2 * cfg.sstep * pf * st.delta_star)
        assert val == pytest.approx(expected, rel=1e-13)

    def test_regime_errors(self, rng):
        st = make_stats(rng, M=3, n=4)
        with pytest.raises(RegimeError, match="cstep <= 1/\\(2\\*n\\*L\\)"):
            bound_ncvx(st, 1.0, make_cfg(1.0, 0.1, C=2, T=5), 1.0, 5)
        with pytest.raises(RegimeError, match="sstep <= 1/\\(4\\*L\\)"):
            bound_ncvx(st, 1.0, make_cfg(1e-3, 0.5, C=2, T=5), 1.0, 5)

    def test_missing_deltas_rejected(self, rng):
        st = dataclasses.replace(make_stats(rng, 3, 2), delta_star=None,
                                 delta_star_m=None, D_star_sq=None)
        with pytest.raises(CapabilityError):
            bound_ncvx(st, 1.0, make_cfg(1e-3, 1e-2, C=2, T=5), 1.0, 5)

    def test_matches_reference_implementation(self, rng):
        for _ in range(100):
            M = int(rng.integers(2, 8))
            n = int(rng.integers(1, 6))
            st = make_stats(rng, M, n)
            L = float(rng.uniform(0.5, 3.0))
            cstep = float(rng.uniform(0.05, 1.0)) / (2 * n * L)
            sstep = float(rng.uniform(0.05, 1.0)) / (4 * L)
            cfg = make_cfg(cstep, sstep, int(rng.integers(1, M + 1)), 10)
            T = int(rng.integers(1, 40))
            delta0 = float(rng.uniform(0.0, 3.0))
            ours = bound_ncvx(st, L, cfg, delta0, T)
            ref = _reference_bound_ncvx(
                st.delta_star, list(st.delta_star_m), n, L, cstep, sstep,
                cfg.cohort_size, M, delta0, T)
            assert ours == pytest.approx(ref, rel=1e-14)


class TestBoundSmallAlpha:
    def test_alpha_zero_constant_curve(self, rng):
        st = make_stats(rng, M=4, n=3)
        cfg = make_cfg(0.5, 0.0, C=2, T=12)
        curve = bound_small_alpha(st, 0.2, 1.0, cfg, 2.0, sigma_rad_sq=1.0)
        assert np.all(curve.terms["participation"] == 0.0)
        assert np.all(curve.terms["contraction"] == 2.0)

    def test_full_participation_kills_second_term(self, rng):
        st = make_stats(rng, M=4, n=3)
        cfg = make_cfg(0.5, 0.5 * 3 * 0.5, C=4, T=12)
        curve = bound_small_alpha(st, 0.2, 1.0, cfg, 2.0, sigma_rad_sq=1.0)
        assert np.all(curve.terms["participation"] == 0.0)
        assert np.all(curve.terms["shuffling"] > 0.0)

    def test_geometric_sum_closed_form(self, rng):
        # the shuffling term telescopes to 2 cstep^2 sigma_rad^2 / mu
        st = make_stats(rng, M=4, n=5)
        mu, cstep = 0.3, 0.8
        cfg = make_cfg(cstep, 0.5 * cstep * 5, C=2, T=3)
        curve = bound_small_alpha(st, mu, 1.0, cfg, 1.0, sigma_rad_sq=2.5)
        closed = 2.0 * cstep**2 * 2.5 / mu
        assert curve.terms["shuffling"][0] == pytest.approx(closed, rel=1e-12)

    def test_alpha_at_or_above_one_rejected(self, rng):
        st = make_stats(rng, M=3, n=2)
        with pytest.raises(RegimeError, match="alpha"):
            bound_small_alpha(st, 0.1, 1.0, make_cfg(0.5, 1.0, C=2, T=5), 1.0, 1.0)

    def test_matches_reference_implementation(self, rng):
        for _ in range(100):
            M = int(rng.integers(2, 8))
            n = int(rng.integers(1, 6))
            st = make_stats(rng, M, n)
            L = float(rng.uniform(0.5, 3.0))
            mu = L / float(rng.uniform(3, 40))
            cstep = float(rng.uniform(0.05, 1.0)) / L
            alpha = float(rng.uniform(0.0, 0.95))
            cfg = make_cfg(cstep, alpha * cstep * n, int(rng.integers(1, M + 1)),
                           int(rng.integers(1, 30)))
            dist0 = float(rng.uniform(0.1, 4.0))
            rad = float(rng.uniform(0.0, 5.0))
            ours = bound_small_alpha(st, mu, L, cfg, dist0, rad).values
            ref = _reference_bound_small_alpha(
                st.sigma_star_sq, n, mu, L, cstep, cfg.sstep,
                cfg.cohort_size, M, dist0, rad, cfg.horizon)
            assert np.allclose(ours, ref, rtol=1e-14, atol=0)


class TestSigmaRad:
    def test_reference_value(self, two_quadratics):
        st = heterogeneity_stats(two_quadratics, two_quadratics.x_star,
                                 two_quadratics.f_star)
        assert sigma_rad_upper_bound(st, 1.0, 1, 2) == pytest.approx(2.5, rel=1e-14)

    def test_linear_in_smoothness(self, two_quadratics):
        st = heterogeneity_stats(two_quadratics, two_quadratics.x_star,
                                 two_quadratics.f_star)
        assert sigma_rad_upper_bound(st, 3.0, 1, 2) == pytest.approx(
            3.0 * sigma_rad_upper_bound(st, 1.0, 1, 2), rel=1e-14
        )

    def test_zero_when_every_sample_minimized(self):
        p = make_quadratic_problem(3, 1, 2, mu=0.5, L=0.5, heterogeneity=0.0, seed=1)
        st = heterogeneity_stats(p, p.x_star, p.f_star)
        assert sigma_rad_upper_bound(st, 0.5, 1, 3) <= 1e-16


class TestStepsizeGuidance:
    def test_sc_boundary(self):
        s = recommended_stepsizes(Theorem.SC, L=2.0, mu=0.1, n=4, C=2, M=4,
                                  epsilon=1e-3, sigma_star_sq=1.0)
        assert s.sstep == pytest.approx(1.0 / 32.0, rel=1e-15)
        assert s.cstep == pytest.approx(s.sstep / 4, rel=1e-15)

    def test_small_alpha_scaling(self):
        kwargs = dict(L=1.0, mu=0.1, n=4, M=10, epsilon=1e-4, sigma_star_sq=5.0)
        s1 = recommended_stepsizes(Theorem.SMALL_ALPHA, C=1, **kwargs)
        s2 = recommended_stepsizes(Theorem.SMALL_ALPHA, C=2, **kwargs)
        assert s2.sstep == pytest.approx(2 * s1.sstep, rel=1e-12)
        assert s1.alpha < 1.0 and s2.alpha < 1.0

    def test_degenerate_noise_note(self):
        s = recommended_stepsizes(Theorem.SMALL_ALPHA, L=1.0, mu=0.1, n=4, C=10,
                                  M=10, epsilon=1e-4, sigma_star_sq=5.0)
        assert s.alpha > 0.999
        assert s.notes

    def test_zero_sigma_note(self):
        s = recommended_stepsizes(Theorem.SMALL_ALPHA, L=1.0, mu=0.1, n=4, C=2,
                                  M=10, epsilon=1e-4, sigma_star_sq=0.0)
        assert s.alpha > 0.999
        assert s.notes

    def test_epsilon_validated(self):
        with pytest.raises(InputError):
            recommended_stepsizes(Theorem.SC, 1.0, 0.1, 2, 1, 2, epsilon=0.0,
                                  sigma_star_sq=1.0)


class TestCheckStepsizes:
    def test_boundary_satisfies_large_server(self):
        L, n = 1.0, 4
        cfg = make_cfg(1.0 / (16 * L * n), 1.0 / (16 * L), C=2, T=5)
        report = {c.theorem: c for c in check_stepsizes(cfg, L, 0.1, n)}
        assert report[Theorem.SC].satisfied
        assert report[Theorem.CVX].satisfied

    def test_large_sstep_violations(self):
        L, n = 1.0, 4
        cfg = make_cfg(1.0 / (16 * L * n), 1.0 / L, C=2, T=5)
        report = {c.theorem: c for c in check_stepsizes(cfg, L, 0.1, n)}
        assert not report[Theorem.SC].satisfied
        assert "sstep <= 1/(16*L)" in report[Theorem.SC].violated
        assert not report[Theorem.NCVX].satisfied
        assert "sstep <= 1/(4*L)" in report[Theorem.NCVX].violated

    def test_alpha_one_violates_pullback(self):
        L, n = 1.0, 4
        cfg = make_cfg(0.1, 0.1 * n, C=2, T=5)
        report = {c.theorem: c for c in check_stepsizes(cfg, L, 0.1, n)}
        assert not report[Theorem.SMALL_ALPHA].satisfied
        assert "alpha" in report[Theorem.SMALL_ALPHA].violated
