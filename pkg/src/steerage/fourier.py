"""Great-circle Fourier analysis of hemispherical marginals.

Tilting a hemisphere's normal by ``dtheta`` towards the direction ``phi``
on the boundary circle changes the enclosed weight by ``g(phi) dtheta``
with ``g = y * f``: the circular convolution of the antipodal difference
``y(phi') = q(phi') - q(phi' + pi)`` with the half-cosine kernel
``f(phi') = cos(phi')`` on ``|phi'| <= pi/2``. Fourier coefficients use
``c_n = (1/2pi) int f(phi) exp(-i n phi) dphi``, so ``G(n) = 2 pi F(n) Y(n)``.

``F(n)`` vanishes for odd ``|n| >= 3`` while ``y`` carries only odd
harmonics, so only the first harmonic of ``y`` can be recovered from ``g``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import ellipsoid_of
from .gmodel import (
    GModel,
    Hemisphere3D,
    UnsupportedFormError,
    WernerRadial,
    reconstruct,
    translation_of,
)
from .qubit import CorrelationMatrix, Direction
from .quantity import QuadratureGrid, cap_frame, product_grid

ZERO_TOL = 1e-12
EVEN_CONTENT_TOL = 1e-8
DEFAULT_SAMPLES = 512


class InconsistentInputError(ValueError):
    """The signal cannot be the marginal of any density."""


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class CircleSignal:
    """Samples at ``2**k >= 64`` uniform angles on ``[0, 2 pi)``."""

    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        n = s.shape[0] if s.ndim == 1 else 0
        if n < 64 or n & (n - 1):
            raise ValueError(f"need a power of two >= 64 samples, got {s.shape}")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @classmethod
    def from_function(cls, f, n: int = DEFAULT_SAMPLES) -> "CircleSignal":
        phi = 2 * np.pi * np.arange(n) / n
        return cls(np.asarray(f(phi), dtype=float))

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def angles(self) -> np.ndarray:
        return 2 * np.pi * np.arange(len(self)) / len(self)

    def coefficients(self) -> np.ndarray:
        """``c_n`` in numpy FFT order."""
        return np.fft.fft(self.samples) / len(self)

    def harmonic(self, n: int) -> complex:
        return complex(self.coefficients()[n % len(self)])

    def shifted(self, l: float) -> "CircleSignal":
        """Translation operator: ``(T(l) f)(phi) = f(phi - l)``."""
        n = len(self)
        k = np.fft.fftfreq(n, 1.0 / n)
        return CircleSignal(np.fft.ifft(np.fft.fft(self.samples) * np.exp(-1j * k * l)).real)


def kernel_coefficient(n: int) -> float:
    """``F(n)`` of the half-cosine kernel, exact zeros for odd ``|n| >= 3``."""
    n = abs(int(n))
    if n == 1:
        return 0.25
    if n % 2:
        return 0.0
    sign = -1.0 if (n // 2) % 2 else 1.0
    return sign / (np.pi * (1 - n * n))


@dataclass(frozen=True)
class KernelSpectrum:
    n: np.ndarray
    values: np.ndarray
    quadrature: np.ndarray
    zero: np.ndarray

    @property
    def max_deviation(self) -> float:
        return float(np.max(np.abs(self.values - self.quadrature)))


def kernel_coefficients(n_max: int) -> KernelSpectrum:
    """``F(n)`` for ``-n_max <= n <= n_max`` with a Gauss-Legendre check."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    ns = np.arange(-n_max, n_max + 1)
    vals = np.array([kernel_coefficient(k) for k in ns])
    t, w = np.polynomial.legendre.leggauss(max(64, 4 * n_max))
    phi = 0.5 * np.pi * t
    quad = np.array([(0.5 * np.pi * w) @ (np.cos(phi) * np.cos(k * phi)) for k in ns]) / (2 * np.pi)
    return KernelSpectrum(ns, vals, quad, np.abs(vals) < ZERO_TOL)


def _kernel_fft_order(n_samples: int) -> np.ndarray:
    k = np.fft.fftfreq(n_samples, 1.0 / n_samples).astype(int)
    return np.array([kernel_coefficient(j) for j in k])


def odd_part(q: CircleSignal) -> CircleSignal:
    """``y(phi) = q(phi) - q(phi + pi)``."""
    return CircleSignal(q.samples - np.roll(q.samples, -len(q) // 2))


def convolve_half_cosine(y: CircleSignal) -> CircleSignal:
    Y = np.fft.fft(y.samples)
    G = 2 * np.pi * _kernel_fft_order(len(y)) * Y
    return CircleSignal(np.fft.ifft(G).real)


def hemisphere_marginal(q_on_circle: CircleSignal) -> CircleSignal:
    """Rate of change ``g(phi)`` of the enclosed weight under tilts."""
    return convolve_half_cosine(odd_part(q_on_circle))


def hemisphere_marginal_direct(q, phis, n_nodes: int = 128) -> np.ndarray:
    """Same quantity by Gauss-Legendre quadrature of a callable ``q(phi)``."""
    t, w = np.polynomial.legendre.leggauss(n_nodes)
    out = []
    for phi in np.atleast_1d(phis):
        pp = phi + 0.5 * np.pi * t
        y = q(pp) - q(pp + np.pi)
        out.append((0.5 * np.pi * w) @ (y * np.cos(phi - pp)))
    return np.array(out)


@dataclass(frozen=True)
class NullspaceReport:
    recovered: list[int]
    unrecoverable: list[int]
    even_content: float

    def as_dict(self) -> dict:
        return {
            "recovered": list(self.recovered),
            "unrecoverable": list(self.unrecoverable),
            "even_content": self.even_content,
        }


def deconvolve_odd(g: CircleSignal) -> tuple[CircleSignal, NullspaceReport]:
    """Recover the antipodal difference ``y`` from ``g`` on the harmonics
    the kernel does not annihilate.

    Harmonics with ``F(n) = 0`` are listed as unrecoverable and set to
    zero in the returned signal.
    """
    N = len(g)
    c = g.coefficients()
    k = np.fft.fftfreq(N, 1.0 / N).astype(int)
    scale = max(float(np.max(np.abs(c))), 1e-300)
    even = (k % 2 == 0)
    even_content = float(np.max(np.abs(c[even]))) / scale if np.any(np.abs(c) > 0) else 0.0
    if even_content > EVEN_CONTENT_TOL:
        raise InconsistentInputError(
            f"g carries even harmonics (relative size {even_content:.3g}); "
            "it is not the marginal of an antipodal difference"
        )
    F = _kernel_fft_order(N)
    live = (np.abs(F) >= ZERO_TOL) & ~even
    dead = ~live & ~even
    # Nyquist harmonic is its own negative; skip it from the listings
    nyq = N // 2
    dead_content = np.abs(c[dead & (np.abs(k) != nyq)])
    if dead_content.size and float(np.max(dead_content)) > EVEN_CONTENT_TOL * scale:
        raise InconsistentInputError("g carries harmonics the kernel cannot produce")
    Y = np.zeros(N, dtype=complex)
    Y[live] = c[live] / (2 * np.pi * F[live])
    y = CircleSignal(np.fft.ifft(Y * N).real)
    rec = sorted(int(j) for j in k[live])
    lost = sorted((int(j) for j in k[dead] if abs(j) != nyq), key=lambda j: (abs(j), j))
    return y, NullspaceReport(rec, lost, even_content)


# -- marginals fix the translation ---------------------------------------------------

def direction_for_normal(rule, n) -> np.ndarray:
    """Measurement direction whose outcome ``+`` has outer normal ``n``."""
    n = np.asarray(n, dtype=float)
    if isinstance(rule, WernerRadial):
        return rule.orientation * n
    if isinstance(rule, Hemisphere3D):
        x = n @ rule.shape
        return x / np.linalg.norm(x, axis=-1, keepdims=True)
    raise UnsupportedFormError("need a hemispherical response rule")


def marginal_translation(
    G: CorrelationMatrix,
    direction: Direction | str,
    grid: QuadratureGrid | None = None,
    total: float = 1.0,
) -> np.ndarray:
    """Translation forced on any hemispherical model of total weight ``total``
    that reproduces the state's outcome probabilities.

    Averaging the enclosed weight ``P(n)`` over all normals gives
    ``int P(n) n dsigma = pi int q(xi) xi dsigma = 2 pi t``.
    """
    grid = grid or product_grid(32, 64)
    E = ellipsoid_of(G, direction)
    if E.dimension < 3:
        raise ValueError("marginal translation needs a 3D steering figure")
    H = G.oriented(direction)
    n = grid.nodes
    x = n @ E.shape
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    prob = 0.5 * (1 + x @ H.a)
    return total * (grid.weights * prob) @ n / (2 * np.pi)


def model_marginal_translation(model: GModel, grid: QuadratureGrid | None = None) -> np.ndarray:
    """Same average computed from a model's reconstructed raw marginals."""
    grid = grid or product_grid(16, 32)
    xs = direction_for_normal(model.response, grid.nodes)
    raw = np.array([reconstruct(model, x).raw_plus for x in xs])
    return (grid.weights * raw) @ grid.nodes / (2 * np.pi)


def circle_marginal_rate(model: GModel, n0, n_samples: int = 64, h: float = 1e-3) -> CircleSignal:
    """``g(phi)`` measured from raw marginals by tilting the normal ``n0``
    towards each boundary direction (Richardson-extrapolated differences)."""
    R = cap_frame(n0)
    e1, e2, n0 = R[:, 0], R[:, 1], R[:, 2]
    phis = 2 * np.pi * np.arange(n_samples) / n_samples

    def raw(theta, phi):
        n = np.cos(theta) * n0 + np.sin(theta) * (np.cos(phi) * e1 + np.sin(phi) * e2)
        return reconstruct(model, direction_for_normal(model.response, n)).raw_plus

    g = []
    for phi in phis:
        d1 = (raw(h, phi) - raw(-h, phi)) / (2 * h)
        d2 = (raw(h / 2, phi) - raw(-h / 2, phi)) / h
        g.append((4 * d2 - d1) / 3)
    return CircleSignal(np.array(g))


@dataclass
class UniquenessReport:
    precondition_met: bool
    marginal_mismatch: float
    t1: np.ndarray
    t2: np.ndarray
    delta: float
    marginal_t1: np.ndarray | None = None
    marginal_t2: np.ndarray | None = None
    circle_delta: float | None = None
    passed: bool = False
    notes: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "precondition_met": self.precondition_met,
            "marginal_mismatch": self.marginal_mismatch,
            "t1": self.t1,
            "t2": self.t2,
            "delta": self.delta,
            "marginal_t1": self.marginal_t1,
            "marginal_t2": self.marginal_t2,
            "circle_delta": self.circle_delta,
            "passed": self.passed,
            "notes": list(self.notes),
        }


def translation_uniqueness_check(
    model1: GModel,
    model2: GModel,
    grid: QuadratureGrid | None = None,
    n_measurements: int = 200,
    seed: int = 0,
    marginal_tol: float = 1e-8,
    tol: float = 1e-7,
    circles: int = 2,
) -> UniquenessReport:
    """Two hemispherical models with equal marginals share their translation.

    If the marginals differ the statement does not apply; the report then
    carries the size of the mismatch and ``passed = False``.
    """
    from .geometry import random_unit_vectors

    r1, r2 = model1.response, model2.response
    if type(r1) is not type(r2) or not getattr(r1, "hemispherical", False):
        raise PreconditionError("both models need the same hemispherical response rule")
    rng = np.random.default_rng(seed)
    xs = random_unit_vectors(rng, n_measurements)
    for x in xs[:5]:
        if not np.allclose(r1.normal(x), r2.normal(x), atol=1e-12):
            raise PreconditionError("response rules assign different outer normals")
    mismatch = max(
        abs(reconstruct(model1, x).prob_plus - reconstruct(model2, x).prob_plus) for x in xs
    )
    t1 = translation_of(model1, strict=False).t
    t2 = translation_of(model2, strict=False).t
    delta = float(np.linalg.norm(t1 - t2))
    rep = UniquenessReport(mismatch <= marginal_tol, float(mismatch), t1, t2, delta)
    if not rep.precondition_met:
        rep.notes.append("marginals differ; equal translations are not implied")
        return rep
    rep.marginal_t1 = model_marginal_translation(model1)
    rep.marginal_t2 = model_marginal_translation(model2)
    cd = 0.0
    for n0 in random_unit_vectors(rng, circles):
        y1, _ = deconvolve_odd(circle_marginal_rate(model1, n0))
        y2, _ = deconvolve_odd(circle_marginal_rate(model2, n0))
        cd = max(cd, abs(y1.harmonic(1) - y2.harmonic(1)))
    rep.circle_delta = float(cd)
    rep.passed = delta < tol
    return rep
