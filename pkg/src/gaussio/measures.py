"""Figures of merit for Gaussian covariance states.

All measures refuse unphysical input instead of clamping, so a channel bug
surfaces as an error rather than as a plausible-looking number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, PhysicalityError
from .linalg import TOL
from .states import LADDER, CovState, symplectic_form

ROUNDING_FLOOR = 1e-12

CSV_COLUMNS = ("state_id", "squeezing_db", "purity", "logneg_ebits", "occupations")


def _require_physical(state: CovState) -> None:
    if not state.is_physical(TOL.psd):
        raise PhysicalityError(
            f"state violates the uncertainty principle (min eigenvalue "
            f"{state.physicality_min_eigenvalue():.3e})",
            state.physicality_min_eigenvalue(),
        )


def squeezing_db(state: CovState) -> float:
    """``max(0, -10 log10(s_min))`` with ``s_min`` the smallest quadrature-CM eigenvalue.

    Deficits below ``ROUNDING_FLOOR`` (rounding noise on vacuum) count as none.
    """
    _require_physical(state)
    lo = float(np.linalg.eigvalsh(state.quadrature_sigma())[0])
    if lo >= 1 - ROUNDING_FLOOR:
        return 0.0
    return -10 * math.log10(lo)


def purity(state: CovState) -> float:
    """``Tr rho^2 = det(sigma)^(-1/2)``."""
    _require_physical(state)
    _, logdet = np.linalg.slogdet(state.quadrature_sigma())
    return math.exp(-0.5 * logdet)


def symplectic_eigenvalues(state: CovState) -> np.ndarray:
    """Williamson spectrum, ascending; all equal to 1 for pure states."""
    s = state.quadrature_sigma()
    w = np.sort(np.abs(np.linalg.eigvals(1j * symplectic_form(state.n_modes) @ s)))
    # eigenvalues come in +-nu pairs
    return w[0::2]


def log_negativity(state: CovState) -> float:
    """Logarithmic negativity (ebits) of a two-mode state.

    ``nu_-`` is the smallest modulus among the eigenvalues of
    ``Omega T sigma_q T`` with ``T = 1_2 (+) sigma_x``, the partial transpose
    expressed in quadratures.
    """
    if state.n_modes != 2:
        raise DimensionError(f"logarithmic negativity needs exactly two modes, got {state.n_modes}")
    _require_physical(state)
    s = state.quadrature_sigma()
    t = np.eye(4)
    t[2:, 2:] = [[0.0, 1.0], [1.0, 0.0]]
    nu = float(np.min(np.abs(np.linalg.eigvals(symplectic_form(2) @ t @ s @ t))))
    if nu >= 1 - ROUNDING_FLOOR:
        return 0.0
    return -math.log2(nu)


def mean_occupation(state: CovState, mode: int) -> float:
    """``<a_j^dag a_j> = (sigma_jj - 1)/2 + |<a_j>|^2`` (0-based ``mode``)."""
    if not 0 <= mode < state.n_modes:
        raise IndexError(f"mode {mode} out of range for {state.n_modes} modes")
    _require_physical(state)
    lad = state.to_basis(LADDER)
    j = 2 * mode
    return float((lad.sigma[j, j].real - 1) / 2 + abs(lad.mean[j]) ** 2)


@dataclass(frozen=True)
class MeasureReport:
    squeezing_db: float
    purity: float
    logneg_ebits: float | None
    sympl_eigs: tuple
    mean_occupation: tuple

    def csv_row(self, state_id: str) -> list:
        return [
            state_id,
            f"{self.squeezing_db:.12g}",
            f"{self.purity:.12g}",
            "" if self.logneg_ebits is None else f"{self.logneg_ebits:.12g}",
            ";".join(f"{x:.12g}" for x in self.mean_occupation),
        ]


def measure_report(state: CovState) -> MeasureReport:
    _require_physical(state)
    return MeasureReport(
        squeezing_db=squeezing_db(state),
        purity=purity(state),
        logneg_ebits=log_negativity(state) if state.n_modes == 2 else None,
        sympl_eigs=tuple(float(x) for x in symplectic_eigenvalues(state)),
        mean_occupation=tuple(mean_occupation(state, j) for j in range(state.n_modes)),
    )
