"""Input-output Gaussian channels.

Three kinds of output mode are supported, all built from the Langevin model
``dv/dt = A v + v_in`` and the boundary condition ``v_out = K v - K^-1 v_in``:

``pulse``
    exponential wave packets ``f = N int_0^inf e^{Lambda t} v_out(t) dt``;
``detector``
    Lorentzian-filtered fields ``g(t) = N_t int_0^t e^{Lambda (t - t')} v_out(t') dt'``;
``stationary``
    the ``t -> infinity`` limit of the detector modes.

Each yields a channel ``sigma_out = M sigma(0) M^dag + N`` acting on the
initial intra-system covariance matrix. Output rows exist only for modes with
``kappa > 0``; ``GaussianChannel.output_modes`` lists them.

Phase convention: the pulse mode is reported as ``X v(0) + u``, which is the
negative of the mode obtained by direct integration. A global phase leaves
every covariance matrix unchanged; for the matched single-mode pulse it makes
``X = -1``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    BasisError,
    DimensionError,
    IllConditionedError,
    InvariantError,
    LosslessModeError,
    StabilityError,
)
from .linalg import T_INF, TOL, as_cmatrix, expm, frozen, noise_integral
from .states import LADDER, QUADRATURE, CovState, mode_slice, quadrature_unitary, symplectic_form
from .system import DriftModel, _encode

PULSE = "pulse"
DETECTOR = "detector"
STATIONARY = "stationary"

CHANNEL_SCHEMA = "gaussio.channel/1"

RESONANCE_GUARD = 1e-9
NEAR_RESONANCE = 1e-4


@dataclass(frozen=True)
class ModeProfile:
    """Complex rates ``mu_j`` (``Re mu_j < 0``) of the output mode of each system mode.

    ``accessible`` lists the (0-based) modes whose outputs are actually read.
    """

    mu: np.ndarray
    accessible: tuple = None

    def __post_init__(self):
        mu = np.array(self.mu, complex).reshape(-1)
        if not np.all(np.isfinite(mu)):
            raise InvariantError("mode-profile rates must be finite")
        if np.any(mu.real >= 0):
            raise InvariantError("mode-profile rates must have negative real part")
        acc = tuple(range(mu.size)) if self.accessible is None else tuple(int(j) for j in self.accessible)
        if not acc or any(not 0 <= j < mu.size for j in acc) or len(set(acc)) != len(acc):
            raise InvariantError(f"accessible modes {acc} invalid for {mu.size} modes")
        object.__setattr__(self, "mu", frozen(mu))
        object.__setattr__(self, "accessible", acc)

    @property
    def n(self) -> int:
        return self.mu.size

    @property
    def lambdas(self) -> np.ndarray:
        """Interleaved ``(mu_1, mu_1^*, mu_2, mu_2^*, ...)``."""
        lam = np.empty(2 * self.n, complex)
        lam[0::2] = self.mu
        lam[1::2] = self.mu.conj()
        return lam

    @classmethod
    def for_model(cls, model: DriftModel, rates: Mapping, accessible: Sequence | None = None,
                  default: complex | None = None) -> "ModeProfile":
        """Profile with explicit ``rates`` for some modes and ``default`` elsewhere.

        Modes may be given as labels or indices. Unread modes get
        ``-max(kappa)`` unless ``default`` is supplied.
        """
        spec = model.spec
        if default is None:
            default = -float(np.max(spec.kappa)) if np.max(spec.kappa) > 0 else -1.0
        mu = np.full(spec.n, complex(default))
        for mode, rate in rates.items():
            mu[spec.mode_index(mode)] = rate
        if accessible is None:
            accessible = list(rates)
        return cls(mu, tuple(spec.mode_index(m) for m in accessible))

    def to_dict(self) -> dict:
        return {"mu": _encode(self.mu), "accessible": list(self.accessible)}


def pulse_rate(frequency: float, rate: float) -> complex:
    """``mu = i*frequency - rate/2``: a pulse co-rotating with a mode at ``frequency``."""
    return complex(-rate / 2, frequency)


def detector_rate(frequency: float, bandwidth: float) -> complex:
    """``mu = -i*frequency - bandwidth/2``: a filter centred on a mode at ``frequency``.

    The convolution kernel ``e^{mu (t - t')}`` multiplies ``e^{-mu t'}``, so
    resonance with ``a(t') ~ e^{-i frequency t'}`` needs ``Im mu = -frequency``.
    """
    return complex(-bandwidth / 2, -frequency)


@dataclass(frozen=True)
class GaussianChannel:
    """``sigma -> M sigma M^dag + N``, ``mean -> M mean + offset``."""

    M: np.ndarray
    N: np.ndarray
    kind: str
    profile: ModeProfile
    output_modes: tuple
    t: float | None = None
    basis: str = LADDER
    offset: np.ndarray = None
    spec_digest: str = ""
    warnings: tuple = ()

    def __post_init__(self):
        m = as_cmatrix(self.M, "M")
        nn = as_cmatrix(self.N, "N", square=True)
        if nn.shape[0] != m.shape[0]:
            raise DimensionError("M and N disagree on the output dimension")
        off = np.zeros(m.shape[0], complex) if self.offset is None else np.asarray(self.offset, complex)
        object.__setattr__(self, "M", frozen(m))
        object.__setattr__(self, "N", frozen((nn + nn.conj().T) / 2))
        object.__setattr__(self, "offset", frozen(off.copy()))
        object.__setattr__(self, "output_modes", tuple(self.output_modes))

    @property
    def accessible(self) -> tuple:
        return self.profile.accessible

    @property
    def accessible_positions(self) -> list:
        """Positions of the accessible modes among the output modes."""
        return [self.output_modes.index(j) for j in self.accessible]

    def to_basis(self, basis: str) -> "GaussianChannel":
        if basis == self.basis:
            return self
        if basis not in (LADDER, QUADRATURE):
            raise BasisError(f"unknown basis {basis!r}")
        uo = quadrature_unitary(self.M.shape[0] // 2)
        ui = quadrature_unitary(self.M.shape[1] // 2)
        if basis == LADDER:
            uo, ui = uo.conj().T, ui.conj().T
        return GaussianChannel(
            uo @ self.M @ ui.conj().T,
            uo @ self.N @ uo.conj().T,
            self.kind,
            self.profile,
            self.output_modes,
            self.t,
            basis,
            uo @ self.offset,
            self.spec_digest,
            self.warnings,
        )

    def to_dict(self) -> dict:
        return {
            "schema": CHANNEL_SCHEMA,
            "kind": self.kind,
            "t": None if self.t is None else (self.t if math.isfinite(self.t) else "inf"),
            "basis": self.basis,
            "M": _encode(self.M),
            "N": _encode(self.N),
            "offset": _encode(self.offset),
            "output_modes": list(self.output_modes),
            "provenance": {"spec_hash": self.spec_digest, "profile": self.profile.to_dict()},
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GaussianChannel":
        from .system import _decode

        if doc.get("schema") != CHANNEL_SCHEMA:
            raise InvariantError(f"unsupported channel schema {doc.get('schema')!r}")
        prof = doc["provenance"]["profile"]
        t = doc.get("t")
        return cls(
            _decode(doc["M"]),
            _decode(doc["N"]),
            doc["kind"],
            ModeProfile(_decode(prof["mu"]), prof["accessible"]),
            doc["output_modes"],
            T_INF if t == "inf" else t,
            doc["basis"],
            _decode(doc["offset"]),
            doc["provenance"].get("spec_hash", ""),
            tuple(doc.get("warnings", ())),
        )


@dataclass
class _Setup:
    a: np.ndarray
    k: np.ndarray
    sigma_in: np.ndarray
    lam: np.ndarray
    rows: np.ndarray
    output_modes: tuple
    profile: ModeProfile
    notes: list = field(default_factory=list)


def _prepare(model: DriftModel, sigma_in, profile: ModeProfile) -> _Setup:
    if profile.n != model.n:
        raise DimensionError(f"profile has {profile.n} modes, model has {model.n}")
    if not model.stable:
        raise StabilityError(
            f"drift matrix is not stable (max Re eig = {model.spectral.max_real_part:.3e})",
            model.spectral.max_real_part,
        )
    s = as_cmatrix(sigma_in, "sigma_in", square=True)
    if s.shape != model.A.shape:
        raise DimensionError(f"sigma_in has shape {s.shape}, expected {model.A.shape}")
    lossy = model.spec.lossy_modes
    dead = [j for j in profile.accessible if j not in lossy]
    if dead:
        names = ", ".join(model.spec.labels[j] for j in dead)
        raise LosslessModeError(f"lossless accessible mode(s): {names} (kappa = 0 has no output field)")
    return _Setup(
        a=np.asarray(model.A),
        k=np.diag(model.K).real.copy(),
        sigma_in=s,
        lam=profile.lambdas,
        rows=mode_slice(lossy),
        output_modes=lossy,
        profile=profile,
    )


def _row_of_inverse(b: np.ndarray, j: int) -> np.ndarray:
    """Row ``j`` of ``b^-1``, refusing numerically singular ``b``."""
    cond = np.linalg.cond(b)
    if not cond < TOL.max_condition:
        raise IllConditionedError(f"matrix to invert has condition number {cond:.3e}", cond)
    e = np.zeros(b.shape[0], complex)
    e[j] = 1
    return np.linalg.solve(b.T, e)


def _channel(setup: _Setup, model, m, n_, kind, t, offset) -> GaussianChannel:
    for note in setup.notes:
        warnings.warn(note, RuntimeWarning, stacklevel=3)
    return GaussianChannel(
        m, n_, kind, setup.profile, setup.output_modes, t, LADDER, offset,
        model.spec.digest(), tuple(setup.notes),
    )


def pulse_channel(model: DriftModel, sigma_in, profile: ModeProfile) -> GaussianChannel:
    """Channel onto exponential pulse modes.

    ``X_jk = [N K (A + lambda_j)^-1]_jk`` and
    ``Y_jk = -(X' sigma_in X'^dag)_jk / (lambda_j + lambda_k^*)`` with
    ``X' = X + N K^-1``, ``N = |2 Re Lambda|^(1/2)``.
    """
    st = _prepare(model, sigma_in, profile)
    dim = st.a.shape[0]
    eye = np.eye(dim)
    norm = np.sqrt(np.abs(2 * st.lam.real))
    x = np.empty((st.rows.size, dim), complex)
    xp = np.empty_like(x)
    for i, j in enumerate(st.rows):
        x[i] = norm[j] * st.k[j] * _row_of_inverse(st.a + st.lam[j] * eye, j)
        xp[i] = x[i]
        xp[i, j] += norm[j] / st.k[j]
    lam = st.lam[st.rows]
    den = lam[:, None] + lam[None, :].conj()
    y = -(xp @ st.sigma_in @ xp.conj().T) / den
    offset = -(xp @ model.vbar_in) / lam
    return _channel(st, model, x, y, PULSE, None, offset)


def _near_resonance(st: _Setup, model: DriftModel) -> bool:
    """Flag detector rates too close to a drift eigenvalue for the closed form.

    ``(A - lambda_j)^-1`` has a removable singularity at resonance, but the
    closed-form terms cancel catastrophically near it, losing about
    ``eps (|A| / gap)^2`` relative accuracy. Inside ``NEAR_RESONANCE`` the
    channel is evaluated from the equivalent augmented linear system instead.
    """
    eig = model.spectral.eigenvalues
    scale = max(float(np.linalg.norm(st.a, 2)), float(np.max(np.abs(st.lam))), 1e-300)
    near = False
    for j in st.output_modes:
        for comp in (st.profile.mu[j], np.conj(st.profile.mu[j])):
            gap = float(np.min(np.abs(comp - eig)))
            if gap < NEAR_RESONANCE * scale:
                kind = "resonant" if gap < RESONANCE_GUARD * scale else "near-resonant"
                st.notes.append(
                    f"detector rate {st.profile.mu[j]:.6g} of mode {j} is {kind} with a drift "
                    f"eigenvalue (gap {gap:.2e}); evaluated via the augmented system"
                )
                near = True
                break
    return near


def _augmented(st: _Setup, model: DriftModel, t: float):
    """Detector channel from the joint dynamics of ``v`` and the filtered outputs ``y``.

    ``dy/dt = Lambda y + K v - K^-1 v_in`` and ``g = N_t y``; valid for any
    ``Lambda`` including exact resonance, at the cost of a larger Sylvester solve.
    """
    d = st.a.shape[0]
    r = st.rows.size
    lam = st.lam[st.rows]
    b = np.zeros((d + r, d + r), complex)
    b[:d, :d] = st.a
    b[d:, d:] = np.diag(lam)
    dm = np.zeros((d + r, d), complex)
    dm[:d, :d] = np.eye(d)
    for i, j in enumerate(st.rows):
        b[d + i, j] = st.k[j]
        dm[d + i, j] = -1 / st.k[j]
    q = dm @ st.sigma_in @ dm.conj().T
    drive = dm @ model.vbar_in
    re = lam.real
    if math.isinf(t):
        norm = np.sqrt(np.abs(2 * re))
        noise = noise_integral(b, q, T_INF)
        m = np.zeros((r, d), complex)
        mean = -np.linalg.solve(b, drive)
    else:
        norm = np.sqrt(np.abs(2 * re) / -np.expm1(2 * re * t))
        noise = noise_integral(b, q, t)
        e = expm(b, t)
        m = norm[:, None] * e[d:, :d]
        mean = np.linalg.solve(b, (e - np.eye(d + r)) @ drive)
    n_ = norm[:, None] * noise[d:, d:] * norm[None, :]
    return m, n_, norm * mean[d:]


def _detector_parts(st: _Setup, t: float):
    """Matrices F and F + N_t K^-1 restricted to output rows."""
    dim = st.a.shape[0]
    eye = np.eye(dim)
    re = st.lam.real
    if math.isinf(t):
        norm = np.sqrt(np.abs(2 * re))
    else:
        norm = np.sqrt(np.abs(2 * re) / -np.expm1(2 * re * t))
    f = np.empty((st.rows.size, dim), complex)
    p = np.empty_like(f)
    for i, j in enumerate(st.rows):
        f[i] = norm[j] * st.k[j] * _row_of_inverse(st.a - st.lam[j] * eye, j)
        p[i] = f[i]
        p[i, j] += norm[j] / st.k[j]
    return f, p


def _cross_term(st: _Setup, f, p, e=None, t=None):
    """``J`` (``e is None``) or ``L``: columns ``F [e^{(A+lam_k^*)t}] (A + lam_k^*)^-1 sigma_in P^dag``."""
    dim = st.a.shape[0]
    eye = np.eye(dim)
    lam = st.lam[st.rows]
    pd = p.conj().T
    out = np.empty((st.rows.size, st.rows.size), complex)
    for c in range(st.rows.size):
        r = np.linalg.solve(st.a + np.conj(lam[c]) * eye, st.sigma_in @ pd[:, c])
        if e is not None:
            r = np.exp(np.conj(lam[c]) * t) * (e @ r)
        out[:, c] = f @ r
    return out


def detector_channel(model: DriftModel, sigma_in, profile: ModeProfile, t: float) -> GaussianChannel:
    """Channel onto finite-bandwidth detector modes at time ``t``.

    ``Z_jk = [N_t K (A - lambda_j)^-1 (e^{At} - e^{lambda_j t})]_jk`` and
    ``T = F I F^dag - G + H + (J + J^dag) - (L + L^dag)``, where ``I`` is the
    noise integral up to ``t``. ``t = T_INF`` returns :func:`stationary_spectrum`.
    """
    if math.isinf(t) and t > 0:
        return stationary_spectrum(model, sigma_in, profile)
    if not (np.isfinite(t) and t > 0):
        raise ValueError(f"detection time must be positive, got {t}")
    st = _prepare(model, sigma_in, profile)
    if _near_resonance(st, model):
        z, tt, offset = _augmented(st, model, float(t))
        return _channel(st, model, z, tt, DETECTOR, float(t), offset)
    f, p = _detector_parts(st, t)
    e = expm(st.a, t)
    lam = st.lam[st.rows]
    z = f @ e - np.exp(lam * t)[:, None] * f
    den = lam[:, None] + lam[None, :].conj()
    g = (p @ st.sigma_in @ p.conj().T) / den
    h = np.exp(den * t) * g
    i_t = noise_integral(st.a, st.sigma_in, t)
    j = _cross_term(st, f, p)
    l_ = _cross_term(st, f, p, e, t)
    tt = f @ i_t @ f.conj().T - g + h + (j + j.conj().T) - (l_ + l_.conj().T)
    ainv_drive = np.linalg.solve(st.a, (e - np.eye(e.shape[0])) @ model.vbar_in)
    offset = f @ ainv_drive - (p @ model.vbar_in) * np.expm1(lam * t) / lam
    return _channel(st, model, z, tt, DETECTOR, float(t), offset)


def stationary_spectrum(model: DriftModel, sigma_in, profile: ModeProfile) -> GaussianChannel:
    """Long-time limit of the detector modes: ``M = 0``, ``N = F I F^dag - G + J + J^dag``."""
    st = _prepare(model, sigma_in, profile)
    if _near_resonance(st, model):
        m, n_, offset = _augmented(st, model, T_INF)
        return _channel(st, model, m, n_, STATIONARY, T_INF, offset)
    f, p = _detector_parts(st, T_INF)
    lam = st.lam[st.rows]
    den = lam[:, None] + lam[None, :].conj()
    g = (p @ st.sigma_in @ p.conj().T) / den
    i_inf = noise_integral(st.a, st.sigma_in, T_INF)
    j = _cross_term(st, f, p)
    n_ = f @ i_inf @ f.conj().T - g + (j + j.conj().T)
    offset = -f @ np.linalg.solve(st.a, model.vbar_in) + (p @ model.vbar_in) / lam
    m = np.zeros((st.rows.size, st.a.shape[0]), complex)
    return _channel(st, model, m, n_, STATIONARY, T_INF, offset)


def apply_channel(ch: GaussianChannel, state: CovState, accessible_only: bool = False) -> CovState:
    """``sigma_out = M sigma M^dag + N``; optionally keep only accessible outputs."""
    if state.basis != ch.basis:
        raise BasisError(f"state is in the {state.basis} basis, channel in the {ch.basis} basis")
    if state.sigma.shape[0] != ch.M.shape[1]:
        raise DimensionError(
            f"state has dimension {state.sigma.shape[0]}, channel expects {ch.M.shape[1]}"
        )
    out = CovState(ch.M @ state.sigma @ ch.M.conj().T + ch.N, ch.M @ state.mean + ch.offset, ch.basis)
    if accessible_only:
        return restrict(out, ch.accessible_positions)
    return out


def restrict(state: CovState, modes: Sequence[int]) -> CovState:
    """Reduced state of the listed (0-based) modes, in the given order."""
    modes = [int(m) for m in modes]
    if not modes:
        raise ValueError("cannot restrict to an empty set of modes")
    if len(set(modes)) != len(modes) or any(not 0 <= m < state.n_modes for m in modes):
        raise IndexError(f"invalid mode selection {modes} for {state.n_modes} modes")
    idx = mode_slice(modes)
    return CovState(state.sigma[np.ix_(idx, idx)], state.mean[idx], state.basis)


def cp_min_eigenvalue(ch: GaussianChannel) -> float:
    """Smallest eigenvalue of ``N_q + i (Omega - M_q Omega M_q^dag)``.

    Nonnegative iff the channel is completely positive.
    """
    q = ch.to_basis(QUADRATURE)
    omega_out = symplectic_form(q.M.shape[0] // 2)
    omega_in = symplectic_form(q.M.shape[1] // 2)
    form = q.N + 1j * (omega_out - q.M @ omega_in @ q.M.conj().T)
    return float(np.linalg.eigvalsh((form + form.conj().T) / 2)[0])
