"""Hankel realization, matrix logarithm and trace replay checks."""

import numpy as np
import pytest
import scipy.linalg as la

from conftest import chain_fixture
from hamid.coherence import TimeTrace, add_noise, plus_i_state, simulate_trace
from hamid.era import (
    HankelConfig, Realization, build_hankel, choose_epsilon,
    continuous_generator, default_hankel_config, era_realize, principal_logm,
    project_to_unit_circle, realize_trace, verify_realization,
)
from hamid.errors import AliasingError, EmptySystemError


def rotation(phi):
    return np.array([[np.cos(phi), -np.sin(phi)],
                     [np.sin(phi), np.cos(phi)]])


def single_qubit_trace(omega=2.0, dt=0.05, n=200):
    model, obs, psi0, theta, system = chain_fixture(1, [omega], [])
    return simulate_trace(system, dt, n), system


class TestBuildHankel:
    def test_one_by_one(self, bench_trace):
        cfg = HankelConfig(r=1, s=1)
        for k in (0, 3):
            h = build_hankel(bench_trace, cfg, k)
            assert h.shape == (1, 1)
            assert h[0, 0] == bench_trace.samples[k, 0]

    def test_constant_trace_rank_one(self):
        trace = TimeTrace(dt=0.1, samples=np.full((30, 1), 0.7))
        h = build_hankel(trace, HankelConfig(r=8, s=8), 0)
        assert np.all(h == 0.7)
        assert np.linalg.matrix_rank(h, tol=1e-10) == 1

    def test_block_layout(self, bench_trace):
        cfg = HankelConfig(r=3, s=4, j_offsets=(2, 5), t_offsets=(1, 3, 7))
        h = build_hankel(bench_trace, cfg, k=2)
        y = bench_trace.samples[:, 0]
        for i, ji in enumerate((0, 2, 5)):
            for l, tl in enumerate((0, 1, 3, 7)):
                assert h[i, l] == y[ji + 2 + tl]

    def test_benchmark_hankel_rank(self, bench_trace):
        h0 = build_hankel(bench_trace, HankelConfig(r=167, s=167), 0)
        assert h0.shape == (167, 167)
        sv = la.svd(h0, compute_uv=False)
        assert np.linalg.matrix_rank(h0, tol=choose_epsilon(
            sv, h0.shape)) == 6

    def test_insufficient_samples(self, bench_trace):
        with pytest.raises(ValueError):
            build_hankel(bench_trace, HankelConfig(r=200, s=200), 1)


class TestEraRealize:
    def test_rabi_two_state(self):
        trace, _ = single_qubit_trace()
        cfg = default_hankel_config(trace.n_samples)
        h0 = build_hankel(trace, cfg, 0)
        h1 = build_hankel(trace, cfg, 1)
        real = era_realize(h0, h1)
        assert real.n_sigma == 2
        rep = verify_realization(real, trace)
        assert rep.max_abs < 1e-8

    def test_benchmark_order_six(self, bench_trace):
        cfg = HankelConfig(r=167, s=167)
        real = era_realize(build_hankel(bench_trace, cfg, 0),
                           build_hankel(bench_trace, cfg, 1))
        assert real.n_sigma == 6

    def test_zero_trace_empty_system(self):
        trace = TimeTrace(dt=0.1, samples=np.zeros((40, 1)))
        cfg = default_hankel_config(40)
        with pytest.raises(EmptySystemError):
            era_realize(build_hankel(trace, cfg, 0),
                        build_hankel(trace, cfg, 1))

    def test_discrete_eigenvalues_on_unit_circle(self, bench_trace):
        real = era_realize(
            build_hankel(bench_trace, default_hankel_config(335), 0),
            build_hankel(bench_trace, default_hankel_config(335), 1))
        ev = np.linalg.eigvals(real.ad)
        assert np.max(np.abs(np.abs(ev) - 1.0)) < 1e-9

    def test_spectrum_invariant_across_layouts(self, bench_trace):
        spectra = []
        for r, s in ((167, 167), (120, 150), (80, 80)):
            real = era_realize(
                build_hankel(bench_trace, HankelConfig(r=r, s=s), 0),
                build_hankel(bench_trace, HankelConfig(r=r, s=s), 1))
            assert real.n_sigma == 6
            spectra.append(np.sort_complex(np.linalg.eigvals(real.ad)))
        for sp in spectra[1:]:
            assert np.max(np.abs(sp - spectra[0])) < 1e-8

    def test_rank_override(self, bench_trace):
        cfg = default_hankel_config(335)
        real = era_realize(build_hankel(bench_trace, cfg, 0),
                           build_hankel(bench_trace, cfg, 1), rank=4)
        assert real.n_sigma == 4


class TestPrincipalLogm:
    def test_identity(self):
        assert np.allclose(principal_logm(np.eye(4)), np.zeros((4, 4)))

    def test_rotation_closed_form(self):
        for phi in (0.3, -1.2, 2.9):
            expected = np.array([[0.0, -phi], [phi, 0.0]])
            assert np.allclose(principal_logm(rotation(phi)), expected,
                               atol=1e-12)

    def test_matches_library_on_random_matrices(self):
        rng = np.random.default_rng(17)
        for k in (2, 3, 5, 6):
            # orthogonal-like with a mild non-normal perturbation
            skew = rng.normal(size=(k, k))
            skew = skew - skew.T
            m = la.expm(0.4 * skew) + 0.01 * rng.normal(size=(k, k))
            ev = np.linalg.eigvals(m)
            if np.any((np.abs(ev.imag) < 1e-12) & (ev.real <= 0)):
                continue
            mine = principal_logm(m)
            ref = la.logm(m)
            assert np.max(np.abs(mine - ref)) < 1e-9

    def test_negative_real_eigenvalue_raises(self):
        with pytest.raises(AliasingError):
            principal_logm(np.diag([-1.0, 2.0]))

    def test_log_inverts_exp(self):
        rng = np.random.default_rng(23)
        skew = rng.normal(size=(6, 6))
        skew = 0.3 * (skew - skew.T)
        assert np.max(np.abs(principal_logm(la.expm(skew)) - skew)) < 1e-10


class TestContinuousGenerator:
    def test_identity_gives_zero(self):
        real = Realization(ad=np.eye(3), c=np.eye(1, 3), x0=np.ones(3),
                           singular_values=np.ones(3), n_sigma=3, epsilon=0.1)
        out = continuous_generator(real, 0.5)
        assert np.allclose(out.acont, 0.0)

    def test_rotation_recovers_frequency(self):
        omega, dt = 2.0, 0.3
        real = Realization(ad=rotation(omega * dt), c=np.eye(1, 2),
                           x0=np.ones(2), singular_values=np.ones(2),
                           n_sigma=2, epsilon=0.1)
        out = continuous_generator(real, dt)
        assert np.allclose(out.acont, np.array([[0, -omega], [omega, 0]]),
                           atol=1e-12)

    def test_benchmark_spectrum_matches_generator(self, bench, bench_trace):
        real = realize_trace(bench_trace, HankelConfig(r=167, s=167))
        got = np.sort(np.abs(np.linalg.eigvals(real.acont).imag))
        want = np.sort(np.abs(np.linalg.eigvals(
            bench["system"].generator).imag))
        assert np.max(np.abs(got - want)) < 1e-6

    def test_aliasing_guard(self):
        # rotations sampled close to half a revolution per step must refuse
        omega = 2.0
        for frac in (1.0, 1.001, 1.01):
            dt = (np.pi / 2) * 1.1 * frac
            real = Realization(ad=rotation(omega * dt), c=np.eye(1, 2),
                               x0=np.ones(2), singular_values=np.ones(2),
                               n_sigma=2, epsilon=0.1)
            with pytest.raises(AliasingError):
                continuous_generator(real, dt)


class TestVerifyRealization:
    def test_self_residual_machine_level(self, bench_trace):
        real = era_realize(
            build_hankel(bench_trace, HankelConfig(r=167, s=167), 0),
            build_hankel(bench_trace, HankelConfig(r=167, s=167), 1))
        rep = verify_realization(real, bench_trace)
        assert rep.max_abs < 1e-9

    def test_noisy_residual_scales_with_sigma(self, bench_trace):
        sigma = 0.05
        noisy = add_noise(bench_trace, sigma, seed=5)
        real = era_realize(
            build_hankel(noisy, HankelConfig(r=167, s=167), 0),
            build_hankel(noisy, HankelConfig(r=167, s=167), 1), rank=6)
        rep = verify_realization(real, noisy)
        assert 0.2 * sigma < rep.rms < 3.0 * sigma

    def test_overtruncated_realization_flagged(self, bench_trace):
        real = era_realize(
            build_hankel(bench_trace, HankelConfig(r=167, s=167), 0),
            build_hankel(bench_trace, HankelConfig(r=167, s=167), 1), rank=4)
        rep = verify_realization(real, bench_trace)
        assert rep.rms > 1e-3


class TestUnitCircleProjection:
    def test_noisy_eigenvalues_land_on_circle(self, bench_trace):
        noisy = add_noise(bench_trace, 0.05, seed=31)
        cfg = HankelConfig(r=167, s=167)
        h0 = build_hankel(noisy, cfg, 0)
        h1 = build_hankel(noisy, cfg, 1)
        raw = era_realize(h0, h1, rank=6)
        projected = era_realize(h0, h1, rank=6, unit_circle=True)
        assert np.max(np.abs(np.abs(np.linalg.eigvals(raw.ad)) - 1)) > 1e-12
        ev = np.linalg.eigvals(projected.ad)
        assert np.max(np.abs(np.abs(ev) - 1.0)) < 1e-10
        # angles untouched by the projection
        assert np.allclose(np.sort(np.angle(ev)),
                           np.sort(np.angle(np.linalg.eigvals(raw.ad))),
                           atol=1e-12)


class TestChooseEpsilon:
    def test_noisy_gap_detection(self, bench_trace):
        noisy = add_noise(bench_trace, 0.05, seed=2)
        h0 = build_hankel(noisy, HankelConfig(r=167, s=167), 0)
        sv = la.svd(h0, compute_uv=False)
        eps = choose_epsilon(sv, h0.shape, noisy=True)
        assert np.sum(sv > eps) == 6

    def test_clean_threshold_tracks_scale(self):
        sv = np.array([10.0, 1.0, 1e-14])
        eps = choose_epsilon(sv, (100, 100))
        assert 1e-14 < eps < 1.0
