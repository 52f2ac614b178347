"""Gaussian covariance states and the ladder/quadrature bases.

Ordering is interleaved, ``(a_1, a_1^dag, a_2, a_2^dag, ...)``. The covariance
matrix is ``sigma_jk = <{v_j, v_k^dag}> - 2 <v_j><v_k^dag>``, so the vacuum is
the identity. The quadrature basis is reached through the unitary

    U = 1/sqrt(2) * direct_sum [[1, 1], [-i, i]]

which maps ``v`` to ``(q, p) / sqrt(2)`` with ``q = a + a^dag`` and
``p = i (a^dag - a)``. In that basis the uncertainty principle reads
``sigma_q + i Omega >= 0`` with ``Omega = direct_sum [[0, 1], [-1, 0]]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import BasisError, DimensionError, InvariantError
from .linalg import TOL, as_cmatrix, frozen, is_hermitian

LADDER = "ladder"
QUADRATURE = "quadrature"
BASES = (LADDER, QUADRATURE)

_J2 = np.array([[0.0, 1.0], [-1.0, 0.0]])
_U2 = np.array([[1.0, 1.0], [-1j, 1j]]) / math.sqrt(2)


def commutation_matrix(n: int) -> np.ndarray:
    """``Sigma_jk = [v_j, v_k]`` in the interleaved ladder ordering."""
    return np.kron(np.eye(n), _J2).astype(complex)


def symplectic_form(n: int) -> np.ndarray:
    """Quadrature-basis symplectic form ``Omega``."""
    return np.kron(np.eye(n), _J2)


@lru_cache(maxsize=32)
def _unitary(n: int) -> np.ndarray:
    return frozen(np.kron(np.eye(n), _U2))


def quadrature_unitary(n: int) -> np.ndarray:
    return _unitary(n)


def db_to_r(db: float) -> float:
    """Squeezing parameter ``r`` with ``exp(-2r) = 10**(-db/10)``."""
    return db * math.log(10) / 20


@dataclass(frozen=True)
class CovState:
    """Covariance matrix and first moments of an ``n``-mode Gaussian state."""

    sigma: np.ndarray
    mean: np.ndarray = None
    basis: str = LADDER

    def __post_init__(self):
        s = as_cmatrix(self.sigma, "sigma", square=True)
        if s.shape[0] % 2:
            raise DimensionError("covariance matrix must have even dimension")
        if not is_hermitian(s):
            raise InvariantError("covariance matrix is not Hermitian")
        if self.basis not in BASES:
            raise BasisError(f"unknown basis {self.basis!r}")
        m = np.zeros(s.shape[0], complex) if self.mean is None else np.array(self.mean, complex)
        if m.shape != (s.shape[0],):
            raise DimensionError(f"mean has shape {m.shape}, expected {(s.shape[0],)}")
        object.__setattr__(self, "sigma", frozen((s + s.conj().T) / 2))
        object.__setattr__(self, "mean", frozen(m))

    @property
    def n_modes(self) -> int:
        return self.sigma.shape[0] // 2

    def to_basis(self, basis: str) -> "CovState":
        if basis not in BASES:
            raise BasisError(f"unknown basis {basis!r}")
        if basis == self.basis:
            return self
        u = quadrature_unitary(self.n_modes)
        if basis == QUADRATURE:
            return CovState(u @ self.sigma @ u.conj().T, u @ self.mean, QUADRATURE)
        return CovState(u.conj().T @ self.sigma @ u, u.conj().T @ self.mean, LADDER)

    def quadrature_sigma(self) -> np.ndarray:
        """Real symmetric quadrature-basis covariance matrix."""
        s = self.to_basis(QUADRATURE).sigma
        return ((s + s.conj().T) / 2).real

    def physicality_min_eigenvalue(self) -> float:
        """Smallest eigenvalue of ``sigma_q + i Omega``; negative means unphysical."""
        s = self.to_basis(QUADRATURE).sigma
        w = np.linalg.eigvalsh(s + 1j * symplectic_form(self.n_modes))
        return float(w[0])

    def is_physical(self, tol: float = TOL.psd) -> bool:
        scale = max(1.0, float(np.linalg.norm(self.sigma, 2)))
        return self.physicality_min_eigenvalue() >= -tol * scale

    def transformed(self, s: np.ndarray, d: np.ndarray | None = None) -> "CovState":
        """Apply ``sigma -> S sigma S^dag`` and ``mean -> S mean + d``."""
        s = np.asarray(s, complex)
        mean = s @ self.mean + (0 if d is None else d)
        return CovState(s @ self.sigma @ s.conj().T, mean, self.basis)


def _convert(x, basis_from: str, basis_to: str):
    if isinstance(x, np.ndarray):
        x = as_cmatrix(x, square=True)
        u = quadrature_unitary(x.shape[0] // 2)
        if basis_to == QUADRATURE:
            return u @ x @ u.conj().T
        return u.conj().T @ x @ u
    if getattr(x, "basis", None) != basis_from:
        raise BasisError(f"expected a {basis_from}-basis object, got {getattr(x, 'basis', None)!r}")
    return x.to_basis(basis_to)


def to_quadrature(x):
    """Convert a ladder-basis :class:`CovState`, channel or raw matrix to quadratures."""
    return _convert(x, LADDER, QUADRATURE)


def from_quadrature(x):
    """Inverse of :func:`to_quadrature`."""
    return _convert(x, QUADRATURE, LADDER)


def vacuum_state(n: int = 1) -> CovState:
    return CovState(np.eye(2 * n, dtype=complex))


def thermal_state(nbar: float | Sequence[float]) -> CovState:
    nb = np.atleast_1d(np.asarray(nbar, float))
    if np.any(nb < 0):
        raise InvariantError("thermal occupation must be nonnegative")
    return CovState(np.diag(np.repeat(2 * nb + 1, 2)).astype(complex))


def squeezed_state(db: float, quadrature: str | float = "q") -> CovState:
    """Pure single-mode squeezed vacuum with ``db`` decibels of squeezing.

    ``quadrature`` selects the squeezed quadrature: ``"q"`` (``a + a^dag``),
    ``"p"``, or an angle ``phi`` for the quadrature ``a e^{-i phi} + h.c.``.
    """
    if db < 0:
        raise ValueError("squeezing in dB must be nonnegative")
    phi = {"q": 0.0, "p": math.pi / 2}.get(quadrature, quadrature)
    r = db_to_r(db)
    c, s = math.cosh(2 * r), math.sinh(2 * r)
    off = -s * np.exp(2j * float(phi))
    return CovState(np.array([[c, off], [np.conj(off), c]], complex))


def two_mode_squeezed_state(r: float) -> CovState:
    """Two-mode squeezed vacuum with squeezing parameter ``r``."""
    c, s = math.cosh(2 * r), math.sinh(2 * r)
    sigma = np.zeros((4, 4), complex)
    sigma[0, 0] = sigma[1, 1] = sigma[2, 2] = sigma[3, 3] = c
    # <{a1, a2}> and <{a1^dag, a2^dag}> carry the correlations
    sigma[0, 3] = sigma[3, 0] = s
    sigma[1, 2] = sigma[2, 1] = s
    return CovState(sigma)


def product_state(*states: CovState) -> CovState:
    """Tensor product of ladder-basis states, in the given mode order."""
    dims = [s.sigma.shape[0] for s in states]
    sigma = np.zeros((sum(dims), sum(dims)), complex)
    mean = np.zeros(sum(dims), complex)
    i = 0
    for s, d in zip(states, dims):
        if s.basis != LADDER:
            raise BasisError("product_state expects ladder-basis states")
        sigma[i : i + d, i : i + d] = s.sigma
        mean[i : i + d] = s.mean
        i += d
    return CovState(sigma, mean)


def embed(state: CovState, mode: int, n: int) -> CovState:
    """Place a single-mode ``state`` on ``mode`` of an ``n``-mode vacuum."""
    if state.n_modes != 1:
        raise DimensionError("embed expects a single-mode state")
    if not 0 <= mode < n:
        raise IndexError(f"mode {mode} out of range for {n} modes")
    parts = [vacuum_state(1)] * n
    parts[mode] = state.to_basis(LADDER)
    return product_state(*parts)


def mode_slice(modes: Sequence[int]) -> np.ndarray:
    return np.array([2 * m + k for m in modes for k in (0, 1)], dtype=int)


def passive_transform(u: np.ndarray) -> np.ndarray:
    """Ladder-basis matrix of the mode transformation ``a -> u a``."""
    u = np.asarray(u, complex)
    n = u.shape[0]
    s = np.zeros((2 * n, 2 * n), complex)
    s[0::2, 0::2] = u
    s[1::2, 1::2] = u.conj()
    return s
