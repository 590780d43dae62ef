"""The geometric steering quantity for ellipsoids of every dimension.

The quantity is the normalized integral of the support function over the
directions of the figure: the segment length in 1D, half the ellipse
perimeter in 2D and ``(1/pi) * integral of |M^t n|`` over the sphere in 3D.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .geometry import BORDERLINE, SteeringEllipsoid, support_value
from .qubit import CorrelationMatrix, Direction, basic_state

DEFAULT_N_THETA = 128
DEFAULT_N_PHI = 256

# normalizing constants I_d of the support integral
I_1 = 1.0
I_2 = 2.0
I_3 = math.pi

METHODS = ("analytic-1d", "elliptic-2d", "quadrature-3d", "monte-carlo-3d")


@dataclass(frozen=True)
class SteeringQuantity:
    value: float
    dimension: int
    method: str
    est_error: float = 0.0
    details: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if not self.value >= 0:
            raise ValueError(f"steering quantity must be nonnegative, got {self.value!r}")
        if not self.est_error >= 0:
            raise ValueError("est_error must be nonnegative")


@dataclass(frozen=True)
class QuadratureGrid:
    """Product rule on the unit sphere: Gauss-Legendre in ``cos(theta)``,
    trapezoid in ``phi``. Weights sum to ``4 pi``."""

    nodes: np.ndarray
    weights: np.ndarray
    n_theta: int
    n_phi: int

    def coarsened(self) -> "QuadratureGrid":
        return product_grid(max(self.n_theta // 2, 1), max(self.n_phi // 2, 1))

    def refined(self) -> "QuadratureGrid":
        return product_grid(2 * self.n_theta, 2 * self.n_phi)

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


@lru_cache(maxsize=32)
def _product_grid(n_theta: int, n_phi: int) -> QuadratureGrid:
    z, wz = np.polynomial.legendre.leggauss(n_theta)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    r = np.sqrt(1 - z * z)
    nodes = np.stack(
        [
            np.outer(r, np.cos(phi)),
            np.outer(r, np.sin(phi)),
            np.outer(z, np.ones(n_phi)),
        ],
        axis=-1,
    ).reshape(-1, 3)
    weights = np.outer(wz, np.full(n_phi, 2 * np.pi / n_phi)).ravel()
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureGrid(nodes, weights, n_theta, n_phi)


def product_grid(n_theta: int = DEFAULT_N_THETA, n_phi: int = DEFAULT_N_PHI) -> QuadratureGrid:
    if n_theta < 1 or n_phi < 1:
        raise ValueError("grid sizes must be positive")
    return _product_grid(int(n_theta), int(n_phi))


def grid_for_level(k: int = 0) -> QuadratureGrid:
    """Default grid with both factors scaled by ``2**k``."""
    scale = 2.0 ** k
    return product_grid(max(int(DEFAULT_N_THETA * scale), 2), max(int(DEFAULT_N_PHI * scale), 4))


def cap_frame(n) -> np.ndarray:
    """Rotation whose third column is the unit vector ``n``."""
    n = np.asarray(n, dtype=float)
    n = n / np.linalg.norm(n)
    helper = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(helper, n)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    return np.column_stack([e1, e2, n])


@lru_cache(maxsize=8)
def _hemisphere_rule(n_theta: int, n_phi: int) -> tuple[np.ndarray, np.ndarray]:
    z, wz = np.polynomial.legendre.leggauss(n_theta)
    z = 0.5 * (z + 1)
    wz = 0.5 * wz
    phi = 2 * np.pi * (np.arange(n_phi) + 0.5) / n_phi
    r = np.sqrt(1 - z * z)
    nodes = np.stack(
        [np.outer(r, np.cos(phi)), np.outer(r, np.sin(phi)), np.outer(z, np.ones(n_phi))],
        axis=-1,
    ).reshape(-1, 3)
    weights = np.outer(wz, np.full(n_phi, 2 * np.pi / n_phi)).ravel()
    return nodes, weights


def hemisphere_nodes(n, n_theta: int = 96, n_phi: int = 192) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature nodes/weights for the closed hemisphere ``xi . n >= 0``.

    Weights sum to ``2 pi``. Smooth integrands converge spectrally since
    the rule is aligned with the hemisphere boundary.
    """
    nodes, weights = _hemisphere_rule(n_theta, n_phi)
    return nodes @ cap_frame(n).T, weights


def elliptic_e(m: float) -> float:
    """Complete elliptic integral of the second kind ``E(m)``, ``m = k**2``.

    Arithmetic-geometric mean iteration:
    ``E = K * (1 - sum_n 2**(n-1) c_n**2)`` with ``c_0**2 = m``.
    """
    m = float(m)
    if not 0.0 <= m <= 1.0:
        raise ValueError(f"elliptic_e needs 0 <= m <= 1, got {m!r}")
    if m == 1.0:
        return 1.0
    if m == 0.0:
        return math.pi / 2
    a, b = 1.0, math.sqrt(1.0 - m)
    total = 0.5 * m  # n = 0 term, c_0**2 = m
    power = 0.5
    for _ in range(40):
        c = 0.5 * (a - b)
        a, b = 0.5 * (a + b), math.sqrt(a * b)
        power *= 2.0
        total += power * c * c
        if abs(c) <= 1e-15 * a:
            break
    return (math.pi / (2.0 * a)) * (1.0 - total)


def sg_1d(L: float) -> SteeringQuantity:
    if L < 0:
        raise ValueError(f"segment length must be nonnegative, got {L!r}")
    return SteeringQuantity(float(L), 1 if L > 0 else 0, "analytic-1d", 0.0)


def sg_2d(a: float, b: float) -> SteeringQuantity:
    """Half the perimeter of the ellipse with semi-axes ``a >= b``."""
    if a < b:
        warnings.warn(f"semi-axes given in ascending order ({a}, {b}); swapping", stacklevel=2)
        a, b = b, a
    if a <= 0:
        raise ValueError(f"major semi-axis must be positive, got {a!r}")
    if b < 0:
        raise ValueError(f"minor semi-axis must be nonnegative, got {b!r}")
    m = 1.0 - (b / a) ** 2
    value = 2.0 * a * elliptic_e(min(max(m, 0.0), 1.0))
    return SteeringQuantity(value, 2 if b > 0 else 1, "elliptic-2d", 4 * np.finfo(float).eps * value)


def _sg_3d_value(M: np.ndarray, grid: QuadratureGrid) -> float:
    return grid.integrate(support_value(M, grid.nodes)) / I_3


def sg_3d(E: SteeringEllipsoid | np.ndarray, grid: QuadratureGrid | None = None) -> SteeringQuantity:
    """Support-function integral over the sphere divided by ``pi``.

    ``est_error`` is the change against the half-resolution grid.
    """
    grid = grid or product_grid()
    if not isinstance(E, SteeringEllipsoid):
        E = SteeringEllipsoid.from_shape(E)
    if E.dimension == 0:
        return SteeringQuantity(0.0, 0, "quadrature-3d", 0.0)
    if E.dimension < 3:
        raise ValueError(
            f"sg_3d needs a 3D figure, got dimension {E.dimension}; use sg_1d/sg_2d"
        )
    value = _sg_3d_value(E.shape, grid)
    coarse = _sg_3d_value(E.shape, grid.coarsened())
    err = abs(value - coarse)
    details = {"n_theta": grid.n_theta, "n_phi": grid.n_phi}
    if E.conditioning < BORDERLINE[1]:
        # near-flat figure: the lower-dimensional formula is the limit
        flat = sg_2d(E.principal[0], E.principal[1]).value
        details["flat_limit"] = flat
        err = max(err, abs(value - flat))
    return SteeringQuantity(value, 3, "quadrature-3d", err, details)



def monte_carlo_3d(E, n_samples: int, rng: np.random.Generator, chunk: int = 1_000_000) -> SteeringQuantity:
    """Plain Monte-Carlo estimate of the 3D quantity with its standard error."""
    M = E.shape if isinstance(E, SteeringEllipsoid) else np.asarray(E, dtype=float)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < n_samples:
        k = min(chunk, n_samples - done)
        v = rng.standard_normal((k, 3))
        w = v @ M
        # |M^t n| for n = v/|v| without normalizing v first
        h = np.sqrt(np.einsum("ij,ij->i", w, w) / np.einsum("ij,ij->i", v, v))
        total += h.sum()
        total_sq += (h * h).sum()
        done += k
    mean = total / n_samples
    var = max(total_sq / n_samples - mean * mean, 0.0)
    scale = 4 * np.pi / I_3
    se = scale * math.sqrt(var / (n_samples - 1))
    return SteeringQuantity(float(scale * mean), 3, "monte-carlo-3d", float(se))


def basic_figure(G: CorrelationMatrix) -> SteeringEllipsoid:
    """Centered figure of the basic state; only ``|singular values|`` matter."""
    Gb, _, _ = basic_state(G)
    return SteeringEllipsoid.from_shape(0.5 * np.abs(np.diag(Gb.T)) * np.eye(3))


def quantity_of_figure(E: SteeringEllipsoid, grid: QuadratureGrid | None = None) -> SteeringQuantity:
    s = E.principal
    if E.dimension == 0:
        return SteeringQuantity(0.0, 0, "analytic-1d", 0.0)
    if E.dimension == 1:
        return sg_1d(2 * s[0])
    if E.dimension == 2:
        return sg_2d(s[0], s[1])
    return sg_3d(E, grid)


def steering_quantity(
    G: CorrelationMatrix,
    direction: Direction | str = Direction.A2B,
    grid: QuadratureGrid | None = None,
) -> SteeringQuantity:
    """Quantity of the basic state's figure.

    The singular values of ``T/2`` and ``T^t/2`` coincide, so both steering
    directions give the same number; ``direction`` is kept for reporting.
    """
    Direction(direction)
    return quantity_of_figure(basic_figure(G), grid)


def shape_coefficient(E: SteeringEllipsoid, grid: QuadratureGrid | None = None) -> float:
    """Ratio of the quantity to the sum of semi-axes (exploratory)."""
    total = float(np.sum(E.principal))
    if total == 0:
        raise ValueError("shape coefficient undefined for a point figure")
    return quantity_of_figure(E, grid).value / total
