"""Open-system description: Hamiltonian, losses and input noise to drift matrix.

A quadratic Hamiltonian ``1/2 sum H_jk v_j v_k + sum V_j v_j`` with loss rates
``kappa_j`` yields the Langevin equation ``dv/dt = A v + v_in`` with

    A = -i Sigma H - K^2 / 2,    vbar_in = -i Sigma V,    K = diag(sqrt(kappa_j)) (x2)

``sigma_in`` is the white-noise correlator of ``v_in`` itself, i.e. it already
contains the ``K`` factors: vacuum input is ``sigma_in = K^2``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionError, InvariantError, PhysicalityError
from .linalg import (
    TOL,
    SpectralReport,
    as_cmatrix,
    expm,
    frozen,
    is_hermitian,
    noise_integral,
    spectral_report,
)
from .states import LADDER, CovState, commutation_matrix, quadrature_unitary, symplectic_form

SCHEMA = "gaussio.system/1"


def _swap_pairs(n: int) -> np.ndarray:
    return np.kron(np.eye(n), np.array([[0.0, 1.0], [1.0, 0.0]]))


def thermal_input(kappa: Sequence[float], nbar: Sequence[float]) -> np.ndarray:
    """White thermal input noise ``K diag((2 nbar_j + 1) 1_2) K``."""
    kappa = np.asarray(kappa, float)
    nbar = np.broadcast_to(np.asarray(nbar, float), kappa.shape)
    if np.any(nbar < 0):
        raise InvariantError("thermal occupancy must be nonnegative")
    if np.any(kappa < 0):
        raise InvariantError("loss rates must be nonnegative")
    return np.diag(np.repeat(kappa * (2 * nbar + 1), 2)).astype(complex)


@dataclass(frozen=True)
class SystemSpec:
    """Quadratic open bosonic system.

    Attributes:
        H: ``2n x 2n`` symmetric Hamiltonian matrix (rad/s).
        kappa: loss rate of each mode (rad/s).
        sigma_in: ``2n x 2n`` input-noise correlator, ``K``-scaled.
        V: linear drive, ``V[2j] = conj(V[2j+1])`` (rad/s).
        labels: mode names.
        nbar: thermal occupancies, when ``sigma_in`` was built from them.
    """

    H: np.ndarray
    kappa: np.ndarray
    sigma_in: np.ndarray
    V: np.ndarray = None
    labels: tuple = None
    nbar: tuple = None

    def __post_init__(self):
        h = as_cmatrix(self.H, "H", square=True)
        dim = h.shape[0]
        if dim % 2:
            raise DimensionError("H must have even dimension 2n")
        n = dim // 2
        kappa = np.array(self.kappa, float).reshape(-1)
        if kappa.shape != (n,):
            raise DimensionError(f"kappa must have {n} entries")
        s = as_cmatrix(self.sigma_in, "sigma_in", square=True)
        if s.shape != h.shape:
            raise DimensionError(f"sigma_in has shape {s.shape}, expected {h.shape}")
        v = np.zeros(dim, complex) if self.V is None else np.array(self.V, complex).reshape(-1)
        if v.shape != (dim,):
            raise DimensionError(f"V must have {dim} entries")
        labels = tuple(self.labels) if self.labels is not None else tuple(f"mode{j + 1}" for j in range(n))
        if len(labels) != n or len(set(labels)) != n:
            raise InvariantError("labels must be n distinct names")

        scale = max(np.linalg.norm(h), 1e-300)
        if np.linalg.norm(h - h.T) > TOL.herm * scale:
            raise InvariantError("H must be symmetric (H = H^T)")
        p = _swap_pairs(n)
        if np.linalg.norm(h.conj() - p @ h @ p) > TOL.herm * scale:
            raise InvariantError("H does not define a Hermitian Hamiltonian (conj(H) != P H P)")
        if np.max(np.abs(v[0::2] - v[1::2].conj()), initial=0) > TOL.herm * max(np.max(np.abs(v)), 1e-300):
            raise InvariantError("drive vector must satisfy V[2j-1] = conj(V[2j])")
        if not np.all(np.isfinite(kappa)) or np.any(kappa < 0):
            raise InvariantError("loss rates kappa must be finite and nonnegative")
        if not is_hermitian(s):
            raise InvariantError("sigma_in must be Hermitian")
        lossless = np.repeat(kappa == 0, 2)
        if np.any(np.abs(s[lossless, :]) > 0) or np.any(np.abs(s[:, lossless]) > 0):
            raise InvariantError("sigma_in must vanish on lossless modes")

        object.__setattr__(self, "H", frozen(h))
        object.__setattr__(self, "kappa", frozen(kappa))
        object.__setattr__(self, "sigma_in", frozen((s + s.conj().T) / 2))
        object.__setattr__(self, "V", frozen(v))
        object.__setattr__(self, "labels", labels)
        if self.nbar is not None:
            object.__setattr__(self, "nbar", tuple(float(x) for x in self.nbar))

    @classmethod
    def thermal(cls, H, kappa, nbar=0.0, V=None, labels=None) -> "SystemSpec":
        kappa = np.asarray(kappa, float)
        nb = np.broadcast_to(np.asarray(nbar, float), kappa.shape)
        return cls(H, kappa, thermal_input(kappa, nb), V=V, labels=labels, nbar=tuple(nb))

    @property
    def n(self) -> int:
        return self.kappa.shape[0]

    def mode_index(self, mode: int | str) -> int:
        """Resolve a mode label or 0-based index."""
        if isinstance(mode, str):
            try:
                return self.labels.index(mode)
            except ValueError:
                raise KeyError(f"unknown mode label {mode!r}; have {self.labels}") from None
        mode = int(mode)
        if not 0 <= mode < self.n:
            raise IndexError(f"mode index {mode} out of range for {self.n} modes")
        return mode

    @property
    def lossy_modes(self) -> tuple:
        return tuple(int(j) for j in np.flatnonzero(self.kappa > 0))

    def to_dict(self) -> dict:
        doc = {
            "schema": SCHEMA,
            "n": self.n,
            "labels": list(self.labels),
            "H": _encode(self.H),
            "V": _encode(self.V),
            "kappa": [float(k) for k in self.kappa],
        }
        if self.nbar is not None:
            doc["nbar"] = list(self.nbar)
        else:
            doc["sigma_in"] = _encode(self.sigma_in)
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "SystemSpec":
        schema = doc.get("schema", SCHEMA)
        if schema != SCHEMA:
            raise InvariantError(f"unsupported system schema {schema!r}")
        h = _decode(doc["H"])
        n = int(doc.get("n", h.shape[0] // 2))
        if h.shape != (2 * n, 2 * n):
            raise DimensionError(f"H has shape {h.shape}, expected {(2 * n, 2 * n)}")
        v = _decode(doc["V"]) if "V" in doc else None
        kappa = np.asarray(doc["kappa"], float)
        labels = doc.get("labels")
        if "sigma_in" in doc:
            return cls(h, kappa, _decode(doc["sigma_in"]), V=v, labels=labels)
        return cls.thermal(h, kappa, doc.get("nbar", 0.0), V=v, labels=labels)

    def digest(self) -> str:
        """Stable hash of the serialized spec."""
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def _encode(x: np.ndarray):
    """Complex arrays as nested ``[re, im]`` pairs."""
    x = np.asarray(x, complex)
    return np.stack([x.real, x.imag], axis=-1).tolist()


def _decode(x) -> np.ndarray:
    a = np.asarray(x, float)
    if a.shape[-1] != 2:
        raise DimensionError("complex arrays must be encoded as [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]


@dataclass(frozen=True)
class PhysicalityReport:
    ok: bool
    min_eigenvalue: float
    modes: tuple
    eigenvalues: np.ndarray = field(repr=False, default=None)

    def __bool__(self) -> bool:
        return self.ok


def validate_physicality(spec: SystemSpec) -> PhysicalityReport:
    """Check ``K^-1 sigma_in K^-1 + i Omega >= 0`` in quadratures, on lossy modes."""
    modes = spec.lossy_modes
    if not modes:
        return PhysicalityReport(True, float("inf"), modes, np.array([]))
    idx = np.array([2 * m + k for m in modes for k in (0, 1)])
    kinv = 1 / np.sqrt(np.repeat(spec.kappa[list(modes)], 2))
    bath = kinv[:, None] * spec.sigma_in[np.ix_(idx, idx)] * kinv[None, :]
    u = quadrature_unitary(len(modes))
    form = u @ bath @ u.conj().T + 1j * symplectic_form(len(modes))
    w = np.linalg.eigvalsh((form + form.conj().T) / 2)
    lo = float(w[0])
    ok = lo >= -TOL.psd * max(1.0, float(np.max(np.abs(w))))
    return PhysicalityReport(ok, lo, modes, w)


@dataclass(frozen=True)
class DriftModel:
    """Drift matrix and derived quantities for a :class:`SystemSpec`."""

    A: np.ndarray
    K: np.ndarray
    Sigma: np.ndarray
    vbar_in: np.ndarray
    spectral: SpectralReport
    spec: SystemSpec = field(repr=False)

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def sigma_in(self) -> np.ndarray:
        return self.spec.sigma_in

    @property
    def stable(self) -> bool:
        return self.spectral.is_stable()

    @property
    def stability_margin(self) -> float:
        """``-max Re eig(A)``; positive for stable models."""
        return -self.spectral.max_real_part


def build_drift(spec: SystemSpec) -> DriftModel:
    """Assemble ``A = -i Sigma H - K^2/2`` and ``vbar_in = -i Sigma V``.

    Raises:
        PhysicalityError: if the input noise is not a physical correlator.
    """
    rep = validate_physicality(spec)
    if not rep.ok:
        raise PhysicalityError(
            f"input noise violates the uncertainty principle (min eigenvalue {rep.min_eigenvalue:.3e})",
            rep.min_eigenvalue,
        )
    n = spec.n
    h = (spec.H + spec.H.T) / 2
    sigma = commutation_matrix(n)
    k = np.diag(np.sqrt(np.repeat(spec.kappa, 2)))
    a = -1j * sigma @ h - k @ k / 2
    vbar = -1j * sigma @ spec.V
    return DriftModel(
        A=frozen(a),
        K=frozen(k),
        Sigma=frozen(sigma),
        vbar_in=frozen(vbar),
        spectral=spectral_report(a),
        spec=spec,
    )


def evolve_state(model: DriftModel, state: CovState, t: float) -> CovState:
    """Intra-system state at time ``t``.

    ``sigma(t) = e^{At} sigma(0) e^{A^dag t} + I(t)`` with ``I`` the noise
    integral of ``sigma_in``, and ``mean(t) = e^{At} mean(0) + A^-1 (e^{At} - 1) vbar_in``.
    """
    state = state.to_basis(LADDER)
    if state.sigma.shape != model.A.shape:
        raise DimensionError("state and model have different mode counts")
    if t == 0:
        return state
    e = expm(model.A, t)
    sigma = e @ state.sigma @ e.conj().T + noise_integral(model.A, model.sigma_in, t)
    drift = np.linalg.solve(model.A, (e - np.eye(e.shape[0])) @ model.vbar_in)
    return CovState(sigma, e @ state.mean + drift)
