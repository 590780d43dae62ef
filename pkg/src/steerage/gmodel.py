"""Geometric local-hidden-state models (g-models).

A g-model is a nonnegative weight on the unit sphere (plus an optional
atom at the center) together with a response rule ``p(a|A, xi)``.
Integrating the rule against the weight reproduces outcome probabilities
and shrinked Bloch vectors; the total weight is the model's steering
quantity and the model is a genuine LHS model iff that total is <= 1.

Weights may be a smooth density on the sphere, a density on a great
circle (2D figures) or explicit atoms (1D figures).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable

import numpy as np

from .geometry import SteeringEllipsoid, normal_at
from .qubit import Direction, phi_state
from .quantity import QuadratureGrid, cap_frame, hemisphere_nodes, product_grid

EVEN_RESIDUAL_TOL = 1e-8
DEFAULT_CIRCLE_NODES = 4096
SEMICIRCLE_GL_NODES = 512


class UnsupportedFormError(ValueError):
    """The model's density lacks the isotropic-plus-odd structure."""


class EmptyModelError(ValueError):
    """Probabilities are undefined for a model of zero total weight."""


# -- response rules ----------------------------------------------------------

@dataclass(frozen=True)
class WernerRadial:
    """Hemispherical rule for a sphere-shaped figure.

    The outer normal of outcome ``+x`` is ``orientation * x``; singlet-like
    correlations (``T = -p I``) have ``orientation = -1``.
    """

    orientation: int = -1
    hemispherical = True

    def normal(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.orientation * x / np.linalg.norm(x)

    def prob_plus(self, x, xi) -> np.ndarray:
        return (np.asarray(xi) @ self.normal(x) >= 0).astype(float)


@dataclass(frozen=True)
class Hemisphere3D:
    """``p(+|A, xi) = 1`` on the closed hemisphere of the outer normal of
    the 3D figure ``x -> shape @ x``, else 0."""

    shape: np.ndarray
    hemispherical = True

    def normal(self, x) -> np.ndarray:
        return normal_at(SteeringEllipsoid.from_shape(self.shape), x)

    def prob_plus(self, x, xi) -> np.ndarray:
        return (np.asarray(xi) @ self.normal(x) >= 0).astype(float)


@dataclass(frozen=True)
class Planar2D:
    """Semicircle rule for a 2D figure.

    On the great circle in the ellipse plane the weight goes to the
    semicircle around the in-plane outer normal; off the circle it is
    split evenly. A direction ``x`` with in-plane part of length ``lam < 1``
    reaches an interior point; its rule is the mixture
    ``1/2 + lam (h - 1/2)`` of the two boundary rules.
    """

    shape: np.ndarray
    hemispherical = False

    @property
    def frame(self) -> np.ndarray:
        U, _, _ = np.linalg.svd(self.shape)
        return U

    def in_plane_weight(self, x) -> float:
        _, _, Vt = np.linalg.svd(self.shape)
        return float(np.linalg.norm(Vt[:2] @ np.asarray(x, dtype=float)))

    def normal(self, x) -> np.ndarray:
        return normal_at(SteeringEllipsoid.from_shape(self.shape), x)

    def prob_plus(self, x, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        lam = self.in_plane_weight(x)
        if lam < 1e-14:
            return np.full(xi.shape[:-1], 0.5)
        e3 = self.frame[:, 2]
        on_circle = np.abs(xi @ e3) < 1e-12
        h = (xi @ self.normal(x) >= 0).astype(float)
        return np.where(on_circle, 0.5 + lam * (h - 0.5), 0.5)


@dataclass(frozen=True)
class Segment1D:
    """``p(+|A, xi) = (1 + (x . v)(xi . axis)) / 2`` for the segment along
    ``axis`` reached by measurements along ``v``."""

    axis: np.ndarray
    measure_axis: np.ndarray
    hemispherical = False

    def prob_plus(self, x, xi) -> np.ndarray:
        c = float(np.asarray(x, dtype=float) @ self.measure_axis)
        return 0.5 * (1 + c * (np.asarray(xi, dtype=float) @ self.axis))


ResponseRule = WernerRadial | Hemisphere3D | Planar2D | Segment1D


# -- the model ----------------------------------------------------------------

@dataclass(frozen=True)
class CircleDensity:
    """Density per radian on the great circle spanned by ``e1, e2``."""

    e1: np.ndarray
    e2: np.ndarray
    density: Callable[[np.ndarray], np.ndarray]
    n_nodes: int = DEFAULT_CIRCLE_NODES

    def point(self, psi) -> np.ndarray:
        psi = np.asarray(psi, dtype=float)
        return np.cos(psi)[..., None] * self.e1 + np.sin(psi)[..., None] * self.e2

    @property
    def angles(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.n_nodes) / self.n_nodes

    @property
    def node_weights(self) -> np.ndarray:
        return self.density(self.angles) * (2 * np.pi / self.n_nodes)


@dataclass(frozen=True)
class GModel:
    response: ResponseRule
    grid: QuadratureGrid = field(default_factory=product_grid)
    sphere_density: Callable[[np.ndarray], np.ndarray] | None = None
    circle: CircleDensity | None = None
    atoms: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    atom_weights: np.ndarray = field(default_factory=lambda: np.zeros(0))
    center_atom: float = 0.0
    label: str = ""

    def __post_init__(self):
        if self.center_atom < 0:
            raise ValueError("center atom weight must be nonnegative")
        if np.any(np.asarray(self.atom_weights) < 0):
            raise ValueError("atom weights must be nonnegative")
        if self.sphere_density is not None and np.min(self.weights) < 0:
            raise ValueError(f"density is negative on the grid (min {np.min(self.weights):.3g})")
        if self.circle is not None and np.min(self.circle.node_weights) < 0:
            raise ValueError("circle density is negative")

    @property
    def weights(self) -> np.ndarray:
        """Density values ``q_i`` at the grid nodes (zero without a sphere density)."""
        if self.sphere_density is None:
            return np.zeros(len(self.grid.weights))
        return np.asarray(self.sphere_density(self.grid.nodes), dtype=float)

    @property
    def quantity(self) -> float:
        total = self.center_atom + float(np.sum(self.atom_weights))
        if self.sphere_density is not None:
            total += self.grid.integrate(self.weights)
        if self.circle is not None:
            total += float(np.sum(self.circle.node_weights))
        return total

    @property
    def is_lhs(self) -> bool:
        return self.quantity <= 1 + 1e-12

    def with_added_density(self, extra: Callable[[np.ndarray], np.ndarray], label: str = "") -> "GModel":
        base = self.sphere_density
        if base is None:
            new = extra
        else:
            def new(xi, _b=base, _e=extra):
                return _b(xi) + _e(xi)
        return replace(self, sphere_density=new, label=label or self.label + "+perturbation")


@dataclass(frozen=True)
class Reconstruction:
    prob_plus: float
    prob_minus: float
    s_plus: np.ndarray
    s_minus: np.ndarray
    raw_plus: float
    raw_minus: float
    quantity: float


@dataclass(frozen=True)
class TranslationVector:
    t: np.ndarray

    def __post_init__(self):
        if np.linalg.norm(self.t) > 1 + 1e-12:
            raise ValueError("translation vector must lie in the unit ball")


# -- reconstruction -------------------------------------------------------------

def _sphere_part(model: GModel, x) -> tuple[float, float, np.ndarray, np.ndarray]:
    q = model.sphere_density
    rule = model.response
    if getattr(rule, "hemispherical", False):
        n = rule.normal(x)
        out = []
        for sgn in (1, -1):
            nodes, w = hemisphere_nodes(sgn * n)
            wq = w * q(nodes)
            out.append((float(wq.sum()), wq @ nodes))
        return out[0][0], out[1][0], out[0][1], out[1][1]
    nodes = model.grid.nodes
    wq = model.grid.weights * q(nodes)
    pp = rule.prob_plus(x, nodes)
    return float(wq @ pp), float(wq @ (1 - pp)), (wq * pp) @ nodes, (wq * (1 - pp)) @ nodes


@lru_cache(maxsize=1)
def _semicircle_rule() -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(SEMICIRCLE_GL_NODES)


def _circle_part(model: GModel, x) -> tuple[float, float, np.ndarray, np.ndarray]:
    circ = model.circle
    rule = model.response
    w_all = circ.node_weights
    pts = circ.point(circ.angles)
    mass = float(w_all.sum())
    vec = w_all @ pts
    if not isinstance(rule, Planar2D):
        pp = rule.prob_plus(x, pts)
        return float(w_all @ pp), float(w_all @ (1 - pp)), (w_all * pp) @ pts, (w_all * (1 - pp)) @ pts
    lam = rule.in_plane_weight(x)
    if lam < 1e-14:
        return 0.5 * mass, 0.5 * mass, 0.5 * vec, 0.5 * vec
    n = rule.normal(x)
    psi_n = np.arctan2(n @ circ.e2, n @ circ.e1)
    t, wt = _semicircle_rule()
    psi = psi_n + 0.5 * np.pi * t
    wq = 0.5 * np.pi * wt * circ.density(psi)
    semi_mass = float(wq.sum())
    semi_vec = wq @ circ.point(psi)
    plus_mass = 0.5 * mass + lam * (semi_mass - 0.5 * mass)
    plus_vec = 0.5 * vec + lam * (semi_vec - 0.5 * vec)
    return plus_mass, mass - plus_mass, plus_vec, vec - plus_vec


def reconstruct(model: GModel, x) -> Reconstruction:
    """Outcome probabilities and shrinked vectors the model assigns to the
    measurement with Bloch vector ``x`` (outcome ``+`` is ``x``).

    Probabilities are normalized by the model's total weight so that
    models whose total differs from 1 remain comparable; the raw hemisphere
    masses are returned alongside.
    """
    x = np.asarray(x, dtype=float)
    raw_p = raw_m = 0.0
    s_p = np.zeros(3)
    s_m = np.zeros(3)
    if model.sphere_density is not None:
        a, b, u, v = _sphere_part(model, x)
        raw_p, raw_m, s_p, s_m = raw_p + a, raw_m + b, s_p + u, s_m + v
    if model.circle is not None:
        a, b, u, v = _circle_part(model, x)
        raw_p, raw_m, s_p, s_m = raw_p + a, raw_m + b, s_p + u, s_m + v
    if len(model.atom_weights):
        pp = model.response.prob_plus(x, model.atoms)
        w = np.asarray(model.atom_weights, dtype=float)
        raw_p += float(w @ pp)
        raw_m += float(w @ (1 - pp))
        s_p = s_p + (w * pp) @ model.atoms
        s_m = s_m + (w * (1 - pp)) @ model.atoms
    raw_p += 0.5 * model.center_atom
    raw_m += 0.5 * model.center_atom
    total = raw_p + raw_m
    if total <= 0:
        raise EmptyModelError("model has zero total weight; probabilities are undefined")
    return Reconstruction(raw_p / total, raw_m / total, s_p, s_m, raw_p, raw_m, total)


# -- constructions --------------------------------------------------------------

def _constant(c: float):
    def q(xi):
        return np.full(np.shape(xi)[:-1], c)
    return q


def gmodel_werner(p: float, grid: QuadratureGrid | None = None) -> GModel:
    """Uniform density ``p / (2 pi)`` reproducing the radius-``p/2`` sphere."""
    if not 0 <= p <= 1:
        raise ValueError(f"Werner parameter must lie in [0, 1], got {p!r}")
    return GModel(
        response=WernerRadial(-1),
        grid=grid or product_grid(),
        sphere_density=_constant(p / (2 * np.pi)),
        label=f"werner(p={p})",
    )


def gmodel_1d(L: float, axis=(0.0, 0.0, 1.0), measure_axis=None) -> GModel:
    """Two atoms of weight ``L/2`` at the segment directions ``+-axis``."""
    if not 0 <= L <= 1:
        raise ValueError(f"segment length must lie in [0, 1], got {L!r}")
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    v = axis if measure_axis is None else np.asarray(measure_axis, dtype=float)
    v = v / np.linalg.norm(v)
    if L == 0:
        atoms, weights = np.zeros((0, 3)), np.zeros(0)
    else:
        atoms, weights = np.stack([axis, -axis]), np.array([L / 2, L / 2])
    return GModel(
        response=Segment1D(axis, v),
        atoms=atoms,
        atom_weights=weights,
        label=f"segment(L={L})",
    )


def ellipse_circle_density(sigma1: float, sigma2: float):
    """Density per radian on the circle for the ellipse with semi-axes
    ``sigma1 >= sigma2 > 0`` along the circle's first and second axes.

    The weight at the tangent direction of a boundary point equals
    ``|s| / (2 cos(alpha)) * dtheta/dtheta_n``, with ``alpha`` the angle
    between the point and its outer normal and ``theta``, ``theta_n`` the
    polar angles of point and normal. Both angles are closed-form in the
    eccentric anomaly ``t`` of ``s(t) = (sigma1 cos t, sigma2 sin t)``.
    """
    a, b = float(sigma1), float(sigma2)

    def q(psi):
        theta_n = np.asarray(psi, dtype=float) - 0.5 * np.pi
        t = np.arctan2(b * np.sin(theta_n), a * np.cos(theta_n))
        c, s = np.cos(t), np.sin(t)
        point_sq = a * a * c * c + b * b * s * s
        normal_sq = b * b * c * c + a * a * s * s
        s_norm = np.sqrt(point_sq)
        # s . n / |s| with n = (b cos t, a sin t) / sqrt(normal_sq)
        cos_alpha = (a * b) / (s_norm * np.sqrt(normal_sq))
        dtheta_dt = a * b / point_sq
        dtheta_n_dt = a * b / normal_sq
        return s_norm / (2 * cos_alpha) * dtheta_dt / dtheta_n_dt

    return q


def gmodel_2d(
    sigma1: float,
    sigma2: float,
    resolution: int = DEFAULT_CIRCLE_NODES,
    frame=None,
) -> GModel:
    """Circle-supported model for the ellipse with semi-axes ``sigma1, sigma2``.

    ``frame`` is a rotation whose first two columns span the ellipse plane
    (default: the x-y plane). The target figure is
    ``x -> frame @ diag(sigma1, sigma2, 0) @ frame^t @ x``.
    """
    if not 0.5 >= sigma1 >= sigma2:
        raise ValueError(f"need 1/2 >= sigma1 >= sigma2, got {sigma1!r}, {sigma2!r}")
    if sigma2 <= 0:
        raise ValueError("sigma2 = 0 is a segment; use gmodel_1d")
    R = np.eye(3) if frame is None else np.asarray(frame, dtype=float)
    shape = R @ np.diag([sigma1, sigma2, 0.0]) @ R.T
    circle = CircleDensity(R[:, 0], R[:, 1], ellipse_circle_density(sigma1, sigma2), resolution)
    return GModel(
        response=Planar2D(shape),
        circle=circle,
        label=f"ellipse(sigma1={sigma1}, sigma2={sigma2})",
    )


def _dipole_density(p: float, u, strength: float):
    u = np.asarray(u, dtype=float)
    u = u / np.linalg.norm(u)

    def q(xi):
        return (1 + strength * p * (np.asarray(xi) @ u)) / (4 * np.pi)

    return q


def _check_phi_range(p: float):
    if not 0 < p <= 0.2:
        raise ValueError(f"p must lie in (0, 1/5], got {p!r}")


def gmodel_phi_BtoA(p: float, u=(0.0, 0.0, 1.0), grid: QuadratureGrid | None = None) -> GModel:
    """Bob-to-Alice model ``q = (1 + 3p cos(beta')) / (4 pi)`` around ``u``."""
    _check_phi_range(p)
    return GModel(
        response=WernerRadial(-1),
        grid=grid or product_grid(),
        sphere_density=_dipole_density(p, u, 3.0),
        label=f"phi_b2a(p={p})",
    )


def candidate_qY(p: float, u=(0.0, 0.0, -1.0), grid: QuadratureGrid | None = None) -> GModel:
    """Alice-to-Bob candidate ``q = (1 + 2p cos(alpha')) / (4 pi)`` around ``u``."""
    _check_phi_range(p)
    return GModel(
        response=WernerRadial(-1),
        grid=grid or product_grid(),
        sphere_density=_dipole_density(p, u, 2.0),
        label=f"phi_a2b_candidate(p={p})",
    )


# -- translations -----------------------------------------------------------------

def density_parts(model: GModel) -> tuple[np.ndarray, np.ndarray]:
    """Even and odd parts of the sphere density at the grid nodes."""
    if model.sphere_density is None:
        raise UnsupportedFormError("translation needs a density on the sphere")
    nodes = model.grid.nodes
    q_plus = model.sphere_density(nodes)
    q_minus = model.sphere_density(-nodes)
    return 0.5 * (q_plus + q_minus), 0.5 * (q_plus - q_minus)


def translation_of(model: GModel, strict: bool = True) -> TranslationVector:
    """Shift of the model's figure relative to the centered figure generated
    by its even part.

    The odd part of the density times ``xi`` is integrated over the
    hemisphere aligned with the odd part's first moment. With
    ``strict=True`` the even part must be isotropic; otherwise the figure
    is not a translated sphere and the call is refused.
    """
    if not getattr(model.response, "hemispherical", False):
        raise UnsupportedFormError("translation needs a hemispherical response rule")
    if model.circle is not None or len(model.atom_weights):
        raise UnsupportedFormError("translation is defined for sphere densities only")
    even, odd = density_parts(model)
    spread = float(np.max(even) - np.min(even))
    if strict and spread > EVEN_RESIDUAL_TOL * max(1.0, float(np.max(np.abs(even)))):
        raise UnsupportedFormError(
            f"even part of the density is anisotropic (spread {spread:.3g})"
        )
    moment = model.grid.weights * odd @ model.grid.nodes
    if np.linalg.norm(moment) < 1e-15:
        return TranslationVector(np.zeros(3))
    axis = moment / np.linalg.norm(moment)
    nodes, w = hemisphere_nodes(axis)
    q = model.sphere_density
    odd_h = 0.5 * (q(nodes) - q(-nodes))
    return TranslationVector((w * odd_h) @ nodes)


def translation_by_subtraction(model: GModel, x) -> np.ndarray:
    """``s_+`` minus the vector the isotropic even part alone would give."""
    even, _ = density_parts(model)
    c0 = float(np.mean(even))
    rec = reconstruct(model, x)
    return rec.s_plus - c0 * np.pi * model.response.normal(x)


# -- asymmetric steering ----------------------------------------------------------

@dataclass
class DirectionFinding:
    direction: str
    verdict: str
    lower_bound: float
    required_translation: np.ndarray
    model_translation: np.ndarray | None
    marginal_translation: np.ndarray
    model_quantity: float | None
    max_marginal_error: float | None
    max_figure_error: float | None
    notes: list[str] = field(default_factory=list)


@dataclass
class AsymmetryReport:
    p: float
    u: np.ndarray
    b2a: DirectionFinding
    a2b: DirectionFinding
    mismatch: float
    uniqueness: dict
    near_werner_limit: bool

    @property
    def verdicts(self) -> tuple[str, str]:
        return self.b2a.verdict, self.a2b.verdict


def _consistency(model: GModel, G, direction, xs) -> tuple[float, float]:
    from .qubit import conditioned_state

    pe = fe = 0.0
    for x in xs:
        rec = reconstruct(model, x)
        cs = conditioned_state(G, x, +1, direction)
        pe = max(pe, abs(rec.prob_plus - cs.prob))
        fe = max(fe, float(np.linalg.norm(rec.s_plus - cs.shrinked)))
    return pe, fe


def asymmetry_report(
    p: float,
    u=(0.0, 0.0, 1.0),
    grid: QuadratureGrid | None = None,
    n_checks: int = 100,
    seed: int = 2017,
    tol: float = 1e-6,
) -> AsymmetryReport:
    """One-way steering of ``phi(p)``.

    Bob to Alice: the explicit model has total weight 1 and reproduces the
    assemblage, so the state is unsteerable in that direction. Alice to
    Bob: every model with the basic state's rule and the observed marginals
    carries the translation those marginals fix, which differs from the
    required centre shift, so no model reaches the lower bound 1.
    """
    from .fourier import marginal_translation, translation_uniqueness_check
    from .geometry import ellipsoid_of, random_unit_vectors
    from .quantity import steering_quantity

    _check_phi_range(p)
    grid = grid or product_grid()
    u = np.asarray(u, dtype=float)
    u = u / np.linalg.norm(u)
    G = phi_state(p, u)
    bound = steering_quantity(G, grid=grid).value
    rng = np.random.default_rng(seed)
    xs = random_unit_vectors(rng, n_checks)

    # Bob measures, Alice is steered
    mx = gmodel_phi_BtoA(p, u, grid)
    req_x = ellipsoid_of(G, Direction.B2A).center
    t_x = translation_of(mx).t
    marg_x = marginal_translation(G, Direction.B2A, grid)
    pe, fe = _consistency(mx, G, Direction.B2A, xs)
    ok = mx.quantity <= 1 + tol and pe < tol and fe < tol
    b2a = DirectionFinding(
        direction="b2a",
        verdict="unsteerable" if ok else "unknown",
        lower_bound=bound,
        required_translation=req_x,
        model_translation=t_x,
        marginal_translation=marg_x,
        model_quantity=mx.quantity,
        max_marginal_error=pe,
        max_figure_error=fe,
    )

    # Alice measures, Bob is steered
    u_y = -u
    my = candidate_qY(p, u_y, grid)
    req_y = ellipsoid_of(G, Direction.A2B).center
    t_y = translation_of(my).t
    marg_y = marginal_translation(G, Direction.A2B, grid)
    pe_y, fe_y = _consistency(my, G, Direction.A2B, xs)
    mismatch = float(np.linalg.norm(req_y - marg_y))
    steerable = bound >= 1 - tol and mismatch > tol
    a2b = DirectionFinding(
        direction="a2b",
        verdict="steerable" if steerable else "unknown",
        lower_bound=bound,
        required_translation=req_y,
        model_translation=t_y,
        marginal_translation=marg_y,
        model_quantity=my.quantity,
        max_marginal_error=pe_y,
        max_figure_error=fe_y,
        notes=["candidate model matches the marginals but not the figure"],
    )

    # even perturbation of the candidate: same marginals, same translation
    w = cap_frame(u)[:, 0]
    eps = 0.9 * (1 - 2 * p) / (4 * np.pi) / 2

    def quad(xi, _w=w, _e=eps):
        return _e * (3 * (np.asarray(xi) @ _w) ** 2 - 1) / 2

    uniq = translation_uniqueness_check(my, my.with_added_density(quad), grid=grid, seed=seed)
    return AsymmetryReport(
        p=p,
        u=u,
        b2a=b2a,
        a2b=a2b,
        mismatch=mismatch,
        uniqueness=uniq.as_dict(),
        near_werner_limit=mismatch <= tol,
    )
