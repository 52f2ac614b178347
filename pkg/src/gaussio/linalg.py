"""Dense complex linear-algebra kernel.

Everything the channel formulas consume lives here: the matrix exponential,
a Sylvester solver, the Gramian-type noise integral, eigenvalue reports and
positive-semidefiniteness tests. Matrices are plain ``numpy.ndarray`` objects
of dtype ``complex128``; every entry point validates shape and finiteness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .errors import (
    DimensionError,
    NonFiniteError,
    PhysicalityError,
    StabilityError,
    SylvesterError,
)

#: Sentinel for the stationary (``t -> infinity``) branch of time-dependent formulas.
T_INF = math.inf


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds shared by the whole package.

    ``stab``, ``psd`` and ``herm`` are relative: they are scaled by the size
    of the matrix under test.
    """

    stab: float = 1e-9
    psd: float = 1e-9
    herm: float = 1e-9
    sylvester_gap: float = 1e-12
    max_condition: float = 1e12


TOL = Tolerances()


class SpectralReport(NamedTuple):
    eigenvalues: np.ndarray
    max_real_part: float
    condition_estimate: float

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.eigenvalues))) if self.eigenvalues.size else 0.0

    def is_stable(self, tol: float = TOL.stab) -> bool:
        """True when every eigenvalue sits strictly in the left half-plane.

        The margin is relative to the spectral radius so that the test does not
        depend on the frequency units of the caller.
        """
        if not self.eigenvalues.size:
            return False
        return self.max_real_part < -tol * self.max_abs


class PSDResult(NamedTuple):
    ok: bool
    min_eigenvalue: float

    def __bool__(self) -> bool:
        return self.ok


def as_cmatrix(x, name: str = "matrix", square: bool = False) -> np.ndarray:
    """Coerce ``x`` to a finite complex 2-D array."""
    m = np.array(x, dtype=complex, copy=True)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2:
        raise DimensionError(f"{name} must be two-dimensional, got shape {m.shape}")
    if m.shape[0] == 0 or m.shape[1] == 0:
        raise DimensionError(f"{name} must be non-empty")
    if square and m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NonFiniteError(f"{name} contains non-finite entries")
    return m


def frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def spectral_report(m) -> SpectralReport:
    m = as_cmatrix(m, square=True)
    w, v = np.linalg.eig(m)
    try:
        cond = float(np.linalg.cond(v))
    except np.linalg.LinAlgError:
        cond = math.inf
    return SpectralReport(frozen(w), float(np.max(w.real)), cond)


def expm(m, t: float = 1.0) -> np.ndarray:
    """Return ``exp(m * t)``.

    Uses scaling and squaring with a Pade approximant (Al-Mohy & Higham),
    via :func:`scipy.linalg.expm`.
    """
    m = as_cmatrix(m, square=True)
    if not np.isfinite(t):
        raise NonFiniteError(f"time must be finite, got {t}")
    return scipy.linalg.expm(m * t)


def sylvester_gap(a: np.ndarray, b: np.ndarray) -> float:
    """Smallest ``|alpha + beta|`` over eigenvalues of ``a`` and ``b``."""
    ea = np.linalg.eigvals(a)
    eb = np.linalg.eigvals(b)
    return float(np.min(np.abs(ea[:, None] + eb[None, :])))


def solve_sylvester(a, b, c, tol: float = TOL.sylvester_gap) -> np.ndarray:
    """Solve ``a @ x + x @ b = c`` for ``x``.

    The system is vectorised column-major,
    ``(I kron a + b.T kron I) vec(x) = vec(c)``, and solved directly. The
    matrices handled here are small (at most a few hundred unknowns), so the
    dense solve is both the simplest and the most robust option.

    Raises:
        SylvesterError: if ``a`` and ``-b`` share an eigenvalue, i.e. the
            solution is not unique. The offending gap is attached.
    """
    a = as_cmatrix(a, "A", square=True)
    b = as_cmatrix(b, "B", square=True)
    c = as_cmatrix(c, "C")
    p, q = a.shape[0], b.shape[0]
    if c.shape != (p, q):
        raise DimensionError(f"C has shape {c.shape}, expected {(p, q)}")

    scale = np.linalg.norm(a, 2) + np.linalg.norm(b, 2)
    gap = sylvester_gap(a, b)
    if gap <= tol * max(scale, np.finfo(float).tiny):
        raise SylvesterError(
            f"A and -B share an eigenvalue (gap {gap:.3e}); no unique solution", gap
        )

    op = np.kron(np.eye(q), a) + np.kron(b.T, np.eye(p))
    x = np.linalg.solve(op, c.reshape(-1, order="F"))
    return x.reshape((p, q), order="F")


def noise_integral(a, sigma_in, t: float) -> np.ndarray:
    """Return ``I(t) = int_0^t exp(A s) sigma_in exp(A^dag s) ds``.

    ``I`` solves ``A I + I A^dag = exp(A t) sigma_in exp(A^dag t) - sigma_in``;
    for ``t = T_INF`` the right-hand side reduces to ``-sigma_in``.
    """
    a = as_cmatrix(a, "A", square=True)
    s = as_cmatrix(sigma_in, "sigma_in", square=True)
    if s.shape != a.shape:
        raise DimensionError(f"sigma_in has shape {s.shape}, expected {a.shape}")
    rep = spectral_report(a)
    if not rep.is_stable():
        raise StabilityError(
            f"drift matrix is not stable (max Re eig = {rep.max_real_part:.3e})",
            rep.max_real_part,
        )
    if math.isinf(t) and t > 0:
        rhs = -s
    elif np.isfinite(t) and t > 0:
        e = expm(a, t)
        rhs = e @ s @ e.conj().T - s
    else:
        raise ValueError(f"integration time must be positive or T_INF, got {t}")
    x = solve_sylvester(a, a.conj().T, rhs)
    return (x + x.conj().T) / 2


def is_hermitian(m: np.ndarray, tol: float = TOL.herm) -> bool:
    return np.linalg.norm(m - m.conj().T) <= tol * max(np.linalg.norm(m), 1e-300)


def psd_check(m, tol: float = TOL.psd) -> PSDResult:
    """Test ``m >= 0`` up to ``tol * max(1, ||m||)``.

    Raises:
        PhysicalityError: if ``m`` is not Hermitian to relative ``TOL.herm``.
    """
    m = as_cmatrix(m, square=True)
    if not is_hermitian(m):
        raise PhysicalityError("matrix is not Hermitian")
    w = np.linalg.eigvalsh((m + m.conj().T) / 2)
    lo = float(w[0])
    return PSDResult(lo >= -tol * max(1.0, float(np.linalg.norm(m, 2))), lo)
