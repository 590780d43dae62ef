"""Steering ellipsoids, their support function and outer normals."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qubit import (
    CorrelationMatrix,
    ConditionedState,
    Direction,
    conditioned_state,
)

RANK_TOL = 1e-9
# sigma_k / sigma_1 inside this band is reported as borderline
BORDERLINE = (1e-9, 1e-6)


class UnsupportedDimensionError(ValueError):
    pass


def rank_threshold(sigma_max: float) -> float:
    return RANK_TOL * max(sigma_max, 1.0)


@dataclass(frozen=True)
class SteeringEllipsoid:
    """Image of the unit sphere under ``x -> shape @ x``, shifted by ``center``.

    ``principal`` holds the singular values of ``shape`` (descending) and
    ``axes`` the matching principal directions (columns) in the steered
    Bloch ball.
    """

    center: np.ndarray
    shape: np.ndarray
    dimension: int
    principal: np.ndarray
    axes: np.ndarray
    conditioning: float

    @classmethod
    def from_shape(cls, shape, center=(0.0, 0.0, 0.0)) -> "SteeringEllipsoid":
        M = np.asarray(shape, dtype=float)
        U, s, _ = np.linalg.svd(M)
        dim = int(np.sum(s >= rank_threshold(s[0])))
        # smallest nonzero singular value relative to the largest
        cond = float(s[dim - 1] / s[0]) if dim >= 1 else 0.0
        return cls(
            center=np.asarray(center, dtype=float),
            shape=M,
            dimension=dim,
            principal=s,
            axes=U,
            conditioning=cond,
        )

    @property
    def borderline(self) -> bool:
        """True when some singular value ratio falls in the ambiguous band."""
        if self.principal[0] == 0:
            return False
        ratios = self.principal[1:] / self.principal[0]
        lo, hi = BORDERLINE
        return bool(np.any((ratios >= lo) & (ratios <= hi)))

    @property
    def semi_axes(self) -> np.ndarray:
        return self.principal

    def surface_point(self, x) -> np.ndarray:
        return self.center + self.shape @ np.asarray(x, dtype=float)


def ellipsoid_of(G: CorrelationMatrix, direction: Direction | str = Direction.A2B) -> SteeringEllipsoid:
    """Steering ellipsoid on the steered side.

    ``a2b``: center ``b/2``, shape ``T^t/2``; ``b2a``: center ``a/2``, shape ``T/2``.
    """
    H = G.oriented(direction)
    return SteeringEllipsoid.from_shape(0.5 * H.T.T, 0.5 * H.b)


def _shape(E) -> np.ndarray:
    return E.shape if isinstance(E, SteeringEllipsoid) else np.asarray(E, dtype=float)


def support_value(E, n) -> float | np.ndarray:
    """Support function ``|M^t n|`` of the centered figure.

    ``n`` may be a single vector or an ``(..., 3)`` stack of vectors.
    """
    M = _shape(E)
    n = np.asarray(n, dtype=float)
    return np.linalg.norm(n @ M, axis=-1)


def normal_at(E: SteeringEllipsoid, x) -> np.ndarray:
    """Outer unit normal at the surface point reached by direction ``x``.

    For a 2D ellipse the normal lies in the ellipse plane and belongs to
    the boundary point reached by the in-plane part of ``x``.
    """
    if E.dimension <= 1:
        raise UnsupportedDimensionError(
            f"outer normals need dimension >= 2, figure has dimension {E.dimension}"
        )
    x = np.asarray(x, dtype=float)
    U, s, Vt = np.linalg.svd(E.shape)
    k = E.dimension
    # (M^+)^t x restricted to the nonzero singular directions
    coeff = (Vt[:k] @ x) / s[:k]
    n = U[:, :k] @ coeff
    nrm = np.linalg.norm(n)
    if nrm < 1e-14:
        raise ValueError("direction is orthogonal to the ellipse plane; normal undefined")
    return n / nrm


@dataclass(frozen=True)
class AssemblageSample:
    direction: np.ndarray
    plus: ConditionedState
    minus: ConditionedState


def sample_assemblage(
    G: CorrelationMatrix, directions, direction: Direction | str = Direction.A2B
) -> list[AssemblageSample]:
    out = []
    for x in np.asarray(directions, dtype=float).reshape(-1, 3):
        out.append(
            AssemblageSample(
                direction=x,
                plus=conditioned_state(G, x, +1, direction),
                minus=conditioned_state(G, x, -1, direction),
            )
        )
    return out


def fibonacci_sphere(n: int) -> np.ndarray:
    """``n`` nearly uniform unit vectors on the golden-angle spiral."""
    if n < 1:
        raise ValueError("need at least one direction")
    i = np.arange(n) + 0.5
    z = 1 - 2 * i / n
    r = np.sqrt(np.clip(1 - z * z, 0, None))
    phi = np.pi * (3 - np.sqrt(5)) * np.arange(n)
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def random_unit_vectors(rng: np.random.Generator, n: int) -> np.ndarray:
    v = rng.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] *= -1
    return q
