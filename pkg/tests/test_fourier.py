import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from steerage.fourier import (
    CircleSignal,
    InconsistentInputError,
    PreconditionError,
    circle_marginal_rate,
    convolve_half_cosine,
    deconvolve_odd,
    hemisphere_marginal,
    hemisphere_marginal_direct,
    kernel_coefficient,
    kernel_coefficients,
    marginal_translation,
    model_marginal_translation,
    odd_part,
    translation_uniqueness_check,
)
from steerage.geometry import random_unit_vectors
from steerage.gmodel import candidate_qY, gmodel_2d, gmodel_phi_BtoA, gmodel_werner
from steerage.qubit import Direction, phi_state
from steerage.quantity import cap_frame


def kernel_oracle(n):
    # odd n >= 3 integrate to exactly zero, where quad reports spurious roundoff
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(lambda t: math.cos(t) * math.cos(n * t), -math.pi / 2, math.pi / 2,
                                epsabs=1e-14, limit=200)
    return val / (2 * math.pi)


class TestKernel:
    @pytest.mark.parametrize("n", range(-9, 10))
    def test_against_quadrature(self, n):
        assert kernel_coefficient(n) == pytest.approx(kernel_oracle(n), abs=1e-13)

    def test_special_values(self):
        assert kernel_coefficient(0) == pytest.approx(1 / math.pi)
        assert kernel_coefficient(1) == kernel_coefficient(-1) == 0.25
        assert kernel_coefficient(2) == pytest.approx(1 / (3 * math.pi))

    def test_odd_zeros_exact(self):
        for n in range(3, 200, 2):
            assert kernel_coefficient(n) == 0.0
            assert kernel_coefficient(-n) == 0.0

    def test_even_nonzero(self):
        assert all(kernel_coefficient(n) != 0 for n in range(0, 200, 2))

    def test_spectrum(self):
        spec = kernel_coefficients(12)
        assert spec.max_deviation < 1e-14
        assert list(spec.n[spec.zero]) == [n for n in range(-12, 13) if n % 2 and abs(n) >= 3]


class TestSignal:
    def test_size_validation(self):
        with pytest.raises(ValueError):
            CircleSignal(np.zeros(100))
        with pytest.raises(ValueError):
            CircleSignal(np.zeros(32))

    def test_shift(self):
        s = CircleSignal.from_function(lambda p: np.cos(p) + 0.3 * np.sin(2 * p))
        out = s.shifted(0.7)
        assert np.allclose(out.samples, np.cos(s.angles - 0.7) + 0.3 * np.sin(2 * (s.angles - 0.7)))

    def test_odd_part(self):
        s = CircleSignal.from_function(lambda p: 1 + np.cos(p) + np.cos(2 * p))
        assert np.allclose(odd_part(s).samples, 2 * np.cos(s.angles))


class TestMarginal:
    def test_dipole(self):
        eps = 0.3
        g = hemisphere_marginal(CircleSignal.from_function(lambda p: 1 + eps * np.cos(p)))
        assert np.allclose(g.samples, eps * math.pi * np.cos(g.angles), atol=1e-12)

    def test_third_harmonic_invisible(self):
        g = hemisphere_marginal(CircleSignal.from_function(lambda p: np.cos(3 * p)))
        assert np.max(np.abs(g.samples)) < 1e-12

    @pytest.mark.parametrize("seed", range(5))
    def test_fft_matches_direct(self, seed):
        rng = np.random.default_rng(seed)
        c = rng.standard_normal(6)

        def q(p):
            return 2 + sum(c[k] * np.cos((k + 1) * p + k) for k in range(6)) * 0.1

        sig = CircleSignal.from_function(q)
        fft = hemisphere_marginal(sig).samples
        direct = hemisphere_marginal_direct(q, sig.angles)
        assert np.max(np.abs(fft - direct)) < 1e-10

    def test_translation_covariance(self):
        sig = CircleSignal.from_function(lambda p: 1 + 0.2 * np.cos(p) + 0.1 * np.sin(3 * p))
        a = hemisphere_marginal(sig.shifted(0.9)).samples
        b = hemisphere_marginal(sig).shifted(0.9).samples
        assert np.allclose(a, b, atol=1e-12)


class TestDeconvolution:
    @given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0, 2 * math.pi))
    @settings(max_examples=30, deadline=None)
    def test_round_trip(self, a, b, shift):
        y = CircleSignal.from_function(lambda p: a * np.cos(p - shift) + b * np.sin(p))
        back, rep = deconvolve_odd(convolve_half_cosine(y))
        assert np.max(np.abs(back.samples - y.samples)) < 1e-9
        assert rep.recovered == [-1, 1]

    def test_zero_signal_nullspace(self):
        _, rep = deconvolve_odd(CircleSignal(np.zeros(64)))
        assert rep.recovered == [-1, 1]
        assert rep.unrecoverable[:4] == [-3, 3, -5, 5]
        assert len(rep.unrecoverable) == 30

    def test_lost_third_harmonic(self):
        y = CircleSignal.from_function(lambda p: np.cos(p) + 0.2 * np.cos(3 * p))
        back, _ = deconvolve_odd(convolve_half_cosine(y))
        assert np.allclose(back.samples, np.cos(back.angles), atol=1e-12)

    def test_even_content_rejected(self):
        with pytest.raises(InconsistentInputError):
            deconvolve_odd(CircleSignal.from_function(lambda p: np.cos(p) + 0.1 * np.cos(2 * p)))

    def test_dead_harmonic_rejected(self):
        with pytest.raises(InconsistentInputError):
            deconvolve_odd(CircleSignal.from_function(lambda p: np.cos(p) + 0.1 * np.cos(3 * p)))

    def test_recovers_dipole_from_model(self):
        p = 0.2
        u = np.array([0.0, 0.0, 1.0])
        m = gmodel_phi_BtoA(p, u)
        n0 = np.array([1.0, 0.0, 0.0])
        y, _ = deconvolve_odd(circle_marginal_rate(m, n0))
        # antipodal difference on the boundary circle is 2 * 3p (xi . u) / (4 pi)
        R = cap_frame(n0)
        expected = 0.5 * 2 * 3 * p / (4 * math.pi) * (u @ R[:, 0] - 1j * (u @ R[:, 1]))
        assert abs(y.harmonic(1) - expected) < 1e-7
        assert abs(abs(y.harmonic(1)) - 3 * p / (4 * math.pi)) < 1e-7


class TestMarginalTranslation:
    @pytest.mark.parametrize("p", [0.05, 0.2])
    def test_phi_values(self, p):
        G = phi_state(p)
        z = np.array([0, 0, 1.0])
        assert np.allclose(marginal_translation(G, Direction.B2A), p / 2 * z, atol=1e-12)
        assert np.allclose(marginal_translation(G, Direction.A2B), -(p / 3) * z, atol=1e-12)

    def test_model_average_matches(self):
        m = candidate_qY(0.2)
        assert np.allclose(model_marginal_translation(m), [0, 0, -0.2 / 3], atol=1e-10)

    def test_needs_3d_figure(self):
        from steerage.qubit import bell_diagonal

        with pytest.raises(ValueError):
            marginal_translation(bell_diagonal([0.5, 0.5, 0.0]), "a2b")


class TestUniqueness:
    def test_even_perturbations(self, rng):
        base = candidate_qY(0.2)
        for k in range(5):
            w = random_unit_vectors(rng, 1)[0]
            eps = rng.uniform(0, 0.02)

            def quad(xi, _w=w, _e=eps):
                return _e * (3 * (np.asarray(xi) @ _w) ** 2 - 1) / 2

            rep = translation_uniqueness_check(base, base.with_added_density(quad),
                                               n_measurements=40, seed=k, circles=0)
            assert rep.precondition_met
            assert rep.passed, rep.delta
            assert np.allclose(rep.marginal_t1, rep.marginal_t2, atol=1e-10)

    def test_circle_harmonic_agrees(self):
        base = candidate_qY(0.1)
        pert = base.with_added_density(lambda xi: 0.005 * (3 * np.asarray(xi)[..., 0] ** 2 - 1))
        rep = translation_uniqueness_check(base, pert, n_measurements=20, circles=1)
        assert rep.passed
        assert rep.circle_delta < 1e-7

    def test_different_marginals(self):
        rep = translation_uniqueness_check(gmodel_phi_BtoA(0.2), candidate_qY(0.2), n_measurements=20)
        assert not rep.precondition_met
        assert not rep.passed
        assert rep.marginal_mismatch > 0.01

    def test_rule_mismatch(self):
        with pytest.raises(PreconditionError):
            translation_uniqueness_check(gmodel_werner(0.5), gmodel_2d(0.3, 0.2))
