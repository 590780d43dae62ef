"""Pauli-basis representation of two-qubit states.

A two-qubit density matrix is stored through its real 4x4 coefficient
matrix ``G[u, v] = Tr[rho sigma_u (x) sigma_v]``, split into Alice's Bloch
vector ``a`` (column 0), Bob's Bloch vector ``b`` (row 0) and the 3x3
correlation block ``T``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
POSITIVITY_SLACK = -1e-10
BOUND_SLACK = 1e-9
UNIT_TOL = 1e-12

PAULI = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)
# PAULI_2Q[u, v] = sigma_u (x) sigma_v
PAULI_2Q = np.einsum("uij,vkl->uvikjl", PAULI, PAULI).reshape(4, 4, 4, 4)


class InvalidStateError(ValueError):
    """Raised when an input violates a state invariant."""


class Direction(str, Enum):
    """Which party measures. ``A2B``: Alice measures, Bob is steered."""

    A2B = "a2b"
    B2A = "b2a"


def _vec3(v, name: str) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.shape != (3,):
        raise InvalidStateError(f"{name} must be a 3-vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidStateError(f"{name} has non-finite entries")
    return arr


@dataclass(frozen=True)
class CorrelationMatrix:
    """Real Pauli-basis representation ``G = [[1, b^t], [a, T]]``."""

    a: np.ndarray
    b: np.ndarray
    T: np.ndarray

    def __post_init__(self):
        a = _vec3(self.a, "a")
        b = _vec3(self.b, "b")
        T = np.asarray(self.T, dtype=float)
        if T.shape != (3, 3):
            raise InvalidStateError(f"T must be 3x3, got shape {T.shape}")
        if not np.all(np.isfinite(T)):
            raise InvalidStateError("T has non-finite entries")
        if np.linalg.norm(a) > 1 + BOUND_SLACK:
            raise InvalidStateError(f"|a| = {np.linalg.norm(a):.6g} exceeds 1")
        if np.linalg.norm(b) > 1 + BOUND_SLACK:
            raise InvalidStateError(f"|b| = {np.linalg.norm(b):.6g} exceeds 1")
        smax = np.linalg.svd(T, compute_uv=False)[0]
        if smax > 1 + BOUND_SLACK:
            raise InvalidStateError(f"largest singular value of T is {smax:.6g} > 1")
        for name, arr in (("a", a), ("b", b), ("T", T)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_matrix(cls, G) -> "CorrelationMatrix":
        G = np.asarray(G, dtype=float)
        if G.shape != (4, 4):
            raise InvalidStateError(f"G must be 4x4, got shape {G.shape}")
        if abs(G[0, 0] - 1) > TRACE_TOL:
            raise InvalidStateError(f"G[0,0] must be 1 (trace), got {G[0, 0]!r}")
        return cls(a=G[1:, 0], b=G[0, 1:], T=G[1:, 1:])

    @property
    def matrix(self) -> np.ndarray:
        G = np.empty((4, 4))
        G[0, 0] = 1.0
        G[0, 1:] = self.b
        G[1:, 0] = self.a
        G[1:, 1:] = self.T
        return G

    def swapped(self) -> "CorrelationMatrix":
        """Exchange the roles of Alice and Bob."""
        return CorrelationMatrix(a=self.b, b=self.a, T=self.T.T)

    def oriented(self, direction: Direction | str) -> "CorrelationMatrix":
        """Return the representation in which the measuring party is 'Alice'."""
        return self if Direction(direction) is Direction.A2B else self.swapped()

    @property
    def is_bell_diagonal(self) -> bool:
        """True for T states (vanishing marginals); T need not be diagonal."""
        return bool(np.all(self.a == 0) and np.all(self.b == 0))


@dataclass(frozen=True)
class ConditionedState:
    """Outcome probability and shrinked Bloch vector of the unnormalized
    conditioned state on the steered side."""

    prob: float
    shrinked: np.ndarray


@dataclass(frozen=True)
class ValidityReport:
    hermiticity_residual: float
    trace_residual: float
    min_eigenvalue: float
    valid: bool
    messages: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "hermiticity_residual": self.hermiticity_residual,
            "trace_residual": self.trace_residual,
            "min_eigenvalue": self.min_eigenvalue,
            "valid": self.valid,
            "messages": list(self.messages),
        }


def pauli_decompose(rho) -> CorrelationMatrix:
    """Return ``G`` with ``G[u, v] = Tr[rho sigma_u (x) sigma_v]``."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise InvalidStateError(f"density matrix must be 4x4, got shape {rho.shape}")
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    if herm > HERMITIAN_TOL:
        raise InvalidStateError(f"density matrix is not Hermitian (residual {herm:.3g})")
    tr = abs(np.trace(rho) - 1)
    if tr > TRACE_TOL:
        raise InvalidStateError(f"density matrix trace differs from 1 by {tr:.3g}")
    G = np.einsum("ij,uvji->uv", rho, PAULI_2Q).real
    G[0, 0] = 1.0
    return CorrelationMatrix.from_matrix(G)


def pauli_compose(G: CorrelationMatrix) -> np.ndarray:
    """Inverse of :func:`pauli_decompose`. Positivity is not checked."""
    return np.einsum("uv,uvij->ij", G.matrix, PAULI_2Q) / 4


def validate_state(G: CorrelationMatrix) -> ValidityReport:
    rho = pauli_compose(G)
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    tr = float(abs(np.trace(rho) - 1))
    lam = float(np.linalg.eigvalsh((rho + rho.conj().T) / 2)[0])
    messages = []
    if herm > HERMITIAN_TOL:
        messages.append(f"hermiticity residual {herm:.3g}")
    if tr > TRACE_TOL:
        messages.append(f"trace residual {tr:.3g}")
    if lam < POSITIVITY_SLACK:
        messages.append(f"negative eigenvalue {lam:.6g}")
    return ValidityReport(herm, tr, lam, lam >= POSITIVITY_SLACK, messages)


def _unit(x, tol: float = UNIT_TOL) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (3,):
        raise ValueError(f"measurement direction must be a 3-vector, got shape {x.shape}")
    nrm = np.linalg.norm(x)
    if abs(nrm - 1) > tol:
        raise ValueError(f"measurement direction must be a unit vector, |x| = {nrm!r}")
    return x


def conditioned_state(
    G: CorrelationMatrix,
    x,
    sign: int = +1,
    direction: Direction | str = Direction.A2B,
) -> ConditionedState:
    """Conditioned state for the projector with Bloch vector ``sign * x``.

    With ``direction='a2b'`` Alice measures and the result lives on Bob's
    side: ``prob = (1 + sign x.a)/2``, ``shrinked = (b + sign T^t x)/2``.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    x = _unit(x)
    H = G.oriented(direction)
    prob = 0.5 * (1 + sign * float(x @ H.a))
    shrinked = 0.5 * (H.b + sign * (H.T.T @ x))
    return ConditionedState(prob, shrinked)


def proper_svd(T) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """SVD ``T = R1 diag(d) R2^t`` with ``R1, R2`` in SO(3).

    ``|d|`` is sorted descending; any determinant correction lands on the
    last entry, so at most one entry of ``d`` is negative.
    """
    U, s, Vt = np.linalg.svd(np.asarray(T, dtype=float))
    V = Vt.T
    d = s.copy()
    if np.linalg.det(U) < 0:
        U[:, -1] *= -1
        d[-1] *= -1
    if np.linalg.det(V) < 0:
        V[:, -1] *= -1
        d[-1] *= -1
    d = d + 0.0  # drop -0.0
    return U, d, V


def basic_state(G: CorrelationMatrix) -> tuple[CorrelationMatrix, np.ndarray, np.ndarray]:
    """Bell-diagonal representative sharing the correlation shape of ``G``.

    Returns ``(G', R1, R2)`` with ``G'.T = R1^t T R2`` diagonal.
    """
    R1, d, R2 = proper_svd(G.T)
    Gb = CorrelationMatrix(a=np.zeros(3), b=np.zeros(3), T=np.diag(d))
    return Gb, R1, R2


# -- presets ---------------------------------------------------------------

def werner(p: float) -> CorrelationMatrix:
    """``W(p) = p |psi-><psi-| + (1 - p) I/4``."""
    if not 0 <= p <= 1:
        raise InvalidStateError(f"Werner parameter must lie in [0, 1], got {p!r}")
    return CorrelationMatrix(a=np.zeros(3), b=np.zeros(3), T=-p * np.eye(3))


def bell_diagonal(t) -> CorrelationMatrix:
    t = _vec3(t, "bell_diagonal")
    return CorrelationMatrix(a=np.zeros(3), b=np.zeros(3), T=np.diag(t))


def phi_state(p: float, u=(0.0, 0.0, 1.0)) -> CorrelationMatrix:
    """``1/2 psi- + p phi(x)I/2 + 3p/2 I/2(x)phi_perp + (1-5p)/2 I/4``.

    ``u`` is the Bloch vector of ``phi``; the orthogonal state has ``-u``.
    Physical for ``0 <= p <= 1/5``.
    """
    u = _unit(u, tol=1e-9)
    u = u / np.linalg.norm(u)
    return CorrelationMatrix(a=p * u, b=-1.5 * p * u, T=-0.5 * np.eye(3))


def ref_state_29() -> CorrelationMatrix:
    """The one-way steerable state ``1/2 psi- + 1/5 |0><0|(x)I/2 + 3/10 I/2(x)|1><1|``."""
    return phi_state(0.2, (0.0, 0.0, 1.0))


def singlet_density() -> np.ndarray:
    psi = np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)
    return np.outer(psi, psi.conj())
