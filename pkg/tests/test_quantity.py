import math

import mpmath
import numpy as np
import pytest
from scipy import integrate

from steerage.geometry import SteeringEllipsoid, random_rotation
from steerage.qubit import bell_diagonal, werner
from steerage.quantity import (
    elliptic_e,
    monte_carlo_3d,
    product_grid,
    sg_1d,
    sg_2d,
    sg_3d,
    shape_coefficient,
    steering_quantity,
)

mpmath.mp.dps = 40


def elliptic_oracle(m):
    return float(mpmath.quad(lambda t: mpmath.sqrt(1 - m * mpmath.sin(t) ** 2), [0, mpmath.pi / 2]))


def half_perimeter_oracle(a, b):
    val, _ = integrate.quad(lambda t: math.hypot(a * math.sin(t), b * math.cos(t)), 0, 2 * math.pi,
                            epsabs=1e-13, epsrel=1e-13, limit=400)
    return val / 2


class TestEllipticE:
    def test_limits(self):
        assert elliptic_e(0.0) == math.pi / 2
        assert elliptic_e(1.0) == 1.0

    def test_three_quarters(self):
        assert elliptic_e(0.75) == pytest.approx(elliptic_oracle(0.75), abs=1e-13)

    def test_near_singular_end(self):
        for m in (1 - 1e-6, 1 - 1e-12):
            assert abs(elliptic_e(m) - float(mpmath.ellipe(mpmath.mpf(m)))) < 1e-13

    @pytest.mark.parametrize("m", [-0.1, 1.0001])
    def test_domain(self, m):
        with pytest.raises(ValueError):
            elliptic_e(m)


class TestLowDimensions:
    def test_sg_1d(self):
        assert sg_1d(0).value == 0
        assert sg_1d(1).value == 1
        assert sg_1d(0.37).value == 0.37
        with pytest.raises(ValueError):
            sg_1d(-0.1)

    def test_circle(self):
        assert sg_2d(0.25, 0.25).value == pytest.approx(math.pi / 4, abs=1e-15)

    def test_segment_limit(self):
        assert sg_2d(0.5, 0.0).value == pytest.approx(1.0, abs=1e-15)
        for b in (1e-3, 1e-6, 1e-9):
            assert abs(sg_2d(0.5, b).value - 1.0) < 5 * b

    def test_against_perimeter_quadrature(self):
        assert sg_2d(0.25, 0.125).value == pytest.approx(half_perimeter_oracle(0.25, 0.125), abs=1e-12)
        assert sg_2d(0.25, 0.125).value == pytest.approx(2 * 0.25 * elliptic_e(0.75), abs=1e-15)

    def test_swapped_axes_warn(self):
        with pytest.warns(UserWarning):
            q = sg_2d(0.1, 0.3)
        assert q.value == pytest.approx(sg_2d(0.3, 0.1).value)

    def test_bad_axes(self):
        with pytest.raises(ValueError):
            sg_2d(0.0, 0.0)


class TestGrid:
    def test_weights(self):
        g = product_grid()
        assert np.all(g.weights > 0)
        assert g.weights.sum() == pytest.approx(4 * math.pi, abs=1e-10)

    def test_low_moments(self):
        g = product_grid(16, 32)
        assert np.allclose(g.weights @ g.nodes, 0, atol=1e-13)
        assert np.allclose((g.weights * g.nodes.T) @ g.nodes, 4 * math.pi / 3 * np.eye(3), atol=1e-13)


class TestSg3d:
    @pytest.mark.parametrize("p", np.round(np.arange(1, 11) / 10, 1))
    def test_werner(self, p):
        assert sg_3d(SteeringEllipsoid.from_shape(-p / 2 * np.eye(3))).value == pytest.approx(2 * p, abs=1e-6)

    def test_zero(self):
        assert sg_3d(np.zeros((3, 3))).value == 0

    def test_dispatch_error(self):
        with pytest.raises(ValueError, match="sg_1d/sg_2d"):
            sg_3d(np.diag([0.3, 0.2, 0.0]))

    def test_monte_carlo(self, rng):
        M = random_rotation(rng) @ np.diag([0.9, 0.5, 0.3]) / 2 @ random_rotation(rng)
        q = sg_3d(M)
        mc = monte_carlo_3d(M, 2_000_000, rng)
        assert abs(q.value - mc.value) < 3 * mc.est_error

    def test_grid_convergence(self):
        M = np.diag([0.45, 0.25, 0.15])
        coarse = sg_3d(M, product_grid(32, 64))
        fine = sg_3d(M, product_grid(64, 128))
        assert abs(fine.value - coarse.value) < coarse.est_error


class TestProperties:
    def test_linearity(self, rng):
        M = rng.standard_normal((3, 3)) * 0.2
        base = sg_3d(M).value
        for c in (0.0, 0.3, 2.0):
            assert sg_3d(c * M).value == pytest.approx(c * base, rel=1e-9, abs=1e-15)
        assert sg_2d(0.4, 0.1).value * 0.5 == pytest.approx(sg_2d(0.2, 0.05).value, rel=1e-12)

    def test_rotation_invariance(self, rng):
        M = np.diag([0.4, 0.3, 0.1])
        base = sg_3d(M).value
        for _ in range(5):
            assert sg_3d(random_rotation(rng) @ M @ random_rotation(rng)).value == pytest.approx(base, abs=1e-9)

    def test_flat_limit_converges(self):
        target = sg_2d(0.4, 0.2).value
        errs = [abs(sg_3d(np.diag([0.4, 0.2, s3]), product_grid(256, 512)).value - target)
                for s3 in (1e-2, 1e-3, 1e-4)]
        assert errs[0] > errs[1] > errs[2]
        assert errs[2] < 1e-3

    def test_monotone(self, rng):
        for _ in range(10):
            s = np.sort(rng.random(3))[::-1] * 0.5
            grow = s + rng.random(3) * 0.1
            assert sg_3d(np.diag(grow)).value >= sg_3d(np.diag(s)).value


class TestSteeringQuantity:
    def test_werner_half(self):
        assert steering_quantity(werner(0.5)).value == pytest.approx(1.0, abs=1e-12)

    def test_edge_range(self):
        vals = [steering_quantity(bell_diagonal([t, 1 - t, 0])).value for t in np.linspace(0.5, 1.0, 21)]
        assert vals[0] == pytest.approx(math.pi / 4, abs=1e-12)
        assert vals[-1] == pytest.approx(1.0, abs=1e-12)
        assert all(v <= 1 + 1e-12 for v in vals)

    def test_zero(self):
        assert steering_quantity(bell_diagonal([0, 0, 0])).value == 0

    def test_directions_agree(self, rng):
        from steerage.qubit import pauli_decompose
        from conftest import random_valid_state

        G = pauli_decompose(random_valid_state(rng))
        assert steering_quantity(G, "a2b").value == steering_quantity(G, "b2a").value


class TestShapeCoefficient:
    def test_sphere(self):
        assert shape_coefficient(SteeringEllipsoid.from_shape(0.3 * np.eye(3))) == pytest.approx(4 / 3, abs=1e-12)

    def test_segment(self):
        assert shape_coefficient(SteeringEllipsoid.from_shape(np.diag([0.3, 0, 0]))) == pytest.approx(2.0)

    def test_circle(self):
        assert shape_coefficient(SteeringEllipsoid.from_shape(np.diag([0.3, 0.3, 0]))) == pytest.approx(math.pi / 2)

    def test_point(self):
        with pytest.raises(ValueError):
            shape_coefficient(SteeringEllipsoid.from_shape(np.zeros((3, 3))))
