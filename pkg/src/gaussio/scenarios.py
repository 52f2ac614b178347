"""Trapped-ion cavity scenarios and their analytic baselines.

The ion's internal transition is treated as a bosonic mode, which keeps the
whole problem Gaussian. Its validity is monitored through
:func:`excited_population_estimate` applied to the atomic occupation along
the evolution.

Mode order for the ion-cavity system: ``motion`` (a1), ``cavity`` (a2),
``atom`` (a3).
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np
from scipy import constants

from .channels import ModeProfile, detector_rate, pulse_rate
from .errors import ConfigError, InvariantError
from .states import CovState, embed, passive_transform, product_state, squeezed_state, vacuum_state
from .system import DriftModel, SystemSpec
from .units import parse_frequency, parse_length, parse_number, parse_time

ION_CAVITY_LABELS = ("motion", "cavity", "atom")
LARGE_DETUNING_FACTOR = 5.0


@dataclass(frozen=True)
class IonCavityParams:
    """Ion-cavity parameters; frequencies and rates in rad/s."""

    nu: float
    delta: float
    Delta: float
    g0: float
    Omega: float
    eta: float
    kappa1: float
    kappa2: float
    kappa3: float
    nbar_th: float = 0.0

    def __post_init__(self):
        for name in ("kappa1", "kappa2", "kappa3", "nbar_th"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise InvariantError(f"{name} must be finite and nonnegative, got {v}")
        if not 0 < self.eta < 1:
            raise InvariantError(f"Lamb-Dicke parameter must lie in (0, 1), got {self.eta}")
        for f in dataclasses.fields(self):
            if not math.isfinite(getattr(self, f.name)):
                raise InvariantError(f"{f.name} must be finite")

    @property
    def large_detuning(self) -> bool:
        """``Delta >= 5 max(nu, delta, g0, Omega)``, the regime behind the effective model."""
        return self.Delta >= LARGE_DETUNING_FACTOR * max(self.nu, abs(self.delta), self.g0, self.Omega)

    def replace(self, **changes) -> "IonCavityParams":
        return dataclasses.replace(self, **changes)


def sideband_delta(nu: float, g0: float, Delta: float) -> float:
    """Cavity detuning that puts the light-shifted cavity on the red sideband (``delta' = nu``)."""
    return nu + g0**2 / Delta


def indium_params() -> IonCavityParams:
    """Indium-ion parameters of the reference experiment.

    The cavity detuning is not tabulated; it is fixed by ``delta' = nu``.
    """
    tp = 2 * math.pi
    nu, g0, Delta = tp * 5e6, tp * 0.62e6, tp * 10e6
    nbar = 1.2e6
    return IonCavityParams(
        nu=nu,
        delta=sideband_delta(nu, g0, Delta),
        Delta=Delta,
        g0=g0,
        Omega=tp * 1e6,
        eta=0.08,
        kappa1=tp * 24 / nbar,
        kappa2=tp * 53e3,
        kappa3=tp * 360e3,
        nbar_th=nbar,
    )


def ion_cavity_system(p: IonCavityParams) -> SystemSpec:
    """Three-mode system for

        nu a1'a1 + delta a2'a2 + Delta a3'a3 + g0 (a2'a3 + a2 a3')
        - eta Omega (a1 + a1')(a3 + a3') + i Omega (a3 - a3')

    with thermal bath ``nbar_th`` on the motion and vacuum elsewhere.
    """
    h = np.zeros((6, 6))

    def couple(i, j, v):
        h[i, j] = h[j, i] = v

    couple(0, 1, p.nu)
    couple(2, 3, p.delta)
    couple(4, 5, p.Delta)
    couple(3, 4, p.g0)  # a2^dag a3
    couple(2, 5, p.g0)  # a2 a3^dag
    for i in (0, 1):
        for j in (4, 5):
            couple(i, j, -p.eta * p.Omega)
    v = np.zeros(6, complex)
    v[4], v[5] = 1j * p.Omega, -1j * p.Omega
    return SystemSpec.thermal(
        h,
        [p.kappa1, p.kappa2, p.kappa3],
        [p.nbar_th, 0.0, 0.0],
        V=v,
        labels=ION_CAVITY_LABELS,
    )


@dataclass(frozen=True)
class EffectiveParams:
    """Motion-cavity coupling after eliminating the internal levels."""

    J: float
    delta_prime: float
    kappa_eff: float
    ratios: dict = dataclasses.field(default_factory=dict, compare=False)


def effective_params(p: IonCavityParams) -> EffectiveParams:
    """``J = eta g0 Omega / Delta``, ``delta' = delta - g0^2/Delta``, ``kappa = 4 J^2 / kappa2``.

    ``ratios`` reports the hierarchy ``nu >> kappa2 >> J >> nbar_th kappa1``.
    """
    if p.Delta <= 0:
        raise InvariantError("effective parameters need Delta > 0")
    if p.kappa2 <= 0:
        raise InvariantError("effective parameters need kappa2 > 0")
    j = p.eta * p.g0 * p.Omega / p.Delta
    heating = p.nbar_th * p.kappa1
    ratios = {
        "nu/kappa2": p.nu / p.kappa2,
        "kappa2/J": p.kappa2 / j if j else math.inf,
        "J/(nbar_th*kappa1)": j / heating if heating else math.inf,
    }
    return EffectiveParams(j, p.delta - p.g0**2 / p.Delta, 4 * j**2 / p.kappa2, ratios)


def adiabatic_baseline(eff: EffectiveParams, nu: float) -> SystemSpec:
    """Single mode at ``nu`` decaying at ``kappa_eff`` into vacuum."""
    if eff.kappa_eff <= 0:
        raise InvariantError("baseline needs kappa_eff > 0")
    h = np.array([[0.0, nu], [nu, 0.0]])
    return SystemSpec.thermal(h, [eff.kappa_eff], [0.0], labels=("motion",))


def spectral_cooling_rate(model: DriftModel, mode: int = 0) -> float:
    """Decay rate ``-2 Re(alpha)`` of the drift eigenmode that overlaps most with ``mode``."""
    w, v = np.linalg.eig(model.A)
    weight = np.abs(v[2 * mode, :]) ** 2 / np.sum(np.abs(v) ** 2, axis=0)
    return float(-2 * w[int(np.argmax(weight))].real)


def matched_pulse_profile(model: DriftModel, p: IonCavityParams, rate: float | None = None) -> ModeProfile:
    """Pulse on the cavity output co-rotating with the motion, ``mu = i nu - kappa/2``."""
    if rate is None:
        rate = effective_params(p).kappa_eff
    return ModeProfile.for_model(model, {"cavity": pulse_rate(p.nu, rate)})


def matched_detector_profile(model: DriftModel, p: IonCavityParams, bandwidth: float) -> ModeProfile:
    """Detector of the given bandwidth on the cavity output, centred on the motional sideband."""
    return ModeProfile.for_model(model, {"cavity": detector_rate(p.nu, bandwidth)})


def motional_squeezed_state(db: float, n: int = 3) -> CovState:
    """Motion squeezed in ``q = a1 + a1^dag``, other modes in vacuum."""
    return embed(squeezed_state(db, "q"), 0, n)


def inferred_occupation(detector_occupation: float, kappa: float, bandwidth: float) -> float:
    """Invert ``<g^dag g> ~ (4 kappa / Gamma) <a1^dag a1>``."""
    return bandwidth / (4 * kappa) * detector_occupation


@dataclass(frozen=True)
class TwoSidedSplit:
    """Beam splitter relating the one-sided output to the two mirror outputs."""

    kappaL: float
    kappaR: float

    def __post_init__(self):
        if self.kappaL < 0 or self.kappaR < 0 or self.kappaL + self.kappaR <= 0:
            raise InvariantError("mirror rates must be nonnegative with a positive sum")

    @classmethod
    def balanced(cls, kappa_tot: float = 1.0) -> "TwoSidedSplit":
        return cls(kappa_tot / 2, kappa_tot / 2)

    @property
    def bs(self) -> np.ndarray:
        tot = self.kappaL + self.kappaR
        lt, rt = math.sqrt(self.kappaL), math.sqrt(self.kappaR)
        return np.array([[lt, rt], [-rt, lt]]) / math.sqrt(tot)


def two_sided_transform(split: TwoSidedSplit, f_state: CovState, xi_state: CovState | None = None) -> CovState:
    """State of the mirror outputs ``(f_L, f_R) = BS^dag (f, xi)``.

    ``xi`` is the reflected input mode, vacuum unless given. Used as a loss
    model, ``f_L`` is the accessible portion and ``f_R`` is traced out.
    """
    if f_state.n_modes != 1:
        raise InvariantError("two_sided_transform expects a single-mode f state")
    xi = vacuum_state(1) if xi_state is None else xi_state
    if xi.n_modes != 1:
        raise InvariantError("xi must be a single-mode state")
    joint = product_state(f_state.to_basis("ladder"), xi.to_basis("ladder"))
    out = joint.transformed(passive_transform(split.bs.T))
    return out.to_basis(f_state.basis)


def excited_population_estimate(n3: float) -> float:
    """``P(n > 1) ~ (n/(1+n))^2`` for a thermal distribution with mean ``n``."""
    if n3 < 0:
        raise ValueError(f"occupation must be nonnegative, got {n3}")
    return (n3 / (1 + n3)) ** 2


@dataclass(frozen=True)
class RawExperiment:
    """Laboratory numbers from which the ion-cavity parameters follow (SI units, rad/s)."""

    lambda_light: float
    L: float
    w0: float
    kappa3: float
    mass_amu: float
    nu: float
    T_env: float
    heating_time: float
    kappa2: float
    Omega: float
    Delta: float

    def __post_init__(self):
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if not (math.isfinite(v) and v > 0):
                raise InvariantError(f"{f.name} must be positive, got {v}")


def derive_experimental(raw: RawExperiment) -> tuple[IonCavityParams, dict]:
    """Coupling, Lamb-Dicke parameter, finesse and heating from laboratory numbers.

    Returns the parameters and a diagnostics dict with ``g0``, ``V``, ``eta``,
    ``finesse``, ``nbar_th`` and ``kappa1``.
    """
    c, hbar, kb = constants.c, constants.hbar, constants.k
    volume = raw.L * math.pi * (raw.w0 / 2) ** 2
    g0 = 0.5 * math.sqrt(3 * raw.lambda_light**2 * c * raw.kappa3 / (2 * math.pi * volume))
    mass = raw.mass_amu * constants.atomic_mass
    eta = 2 * math.pi / raw.lambda_light * math.sqrt(hbar / (2 * mass * raw.nu))
    finesse = math.pi * c / (raw.L * raw.kappa2)
    nbar = 1 / math.expm1(hbar * raw.nu / (kb * raw.T_env))
    kappa1 = 1 / (raw.heating_time * nbar)
    params = IonCavityParams(
        nu=raw.nu,
        delta=sideband_delta(raw.nu, g0, raw.Delta),
        Delta=raw.Delta,
        g0=g0,
        Omega=raw.Omega,
        eta=eta,
        kappa1=kappa1,
        kappa2=raw.kappa2,
        kappa3=raw.kappa3,
        nbar_th=nbar,
    )
    diag = {"g0": g0, "V": volume, "eta": eta, "finesse": finesse, "nbar_th": nbar, "kappa1": kappa1}
    return params, diag


# --- presets ---------------------------------------------------------------

_PARAM_PARSERS = {
    "nu": parse_frequency, "delta": parse_frequency, "Delta": parse_frequency,
    "g0": parse_frequency, "Omega": parse_frequency, "eta": parse_number,
    "kappa1": parse_frequency, "kappa2": parse_frequency, "kappa3": parse_frequency,
    "nbar_th": parse_number,
}

_RAW_PARSERS = {
    "lambda_light": parse_length, "L": parse_length, "w0": parse_length,
    "kappa3": parse_frequency, "mass_amu": parse_number, "nu": parse_frequency,
    "T_env": parse_number, "heating_time": parse_time, "kappa2": parse_frequency,
    "Omega": parse_frequency, "Delta": parse_frequency,
}

ION_PARAMETERS = tuple(_PARAM_PARSERS)


def params_from_dict(doc: dict) -> IonCavityParams:
    """Build :class:`IonCavityParams` from a document; ``delta: "sideband"`` sets ``delta' = nu``.

    ``heating_rate`` (``nbar_th * kappa1``) may replace ``kappa1``.
    """
    doc = dict(doc)
    unknown = set(doc) - set(_PARAM_PARSERS) - {"heating_rate"}
    if unknown:
        raise ConfigError(f"unknown ion-cavity parameters: {sorted(unknown)}")
    heating = doc.pop("heating_rate", None)
    delta = doc.pop("delta", "sideband")
    vals = {k: _PARAM_PARSERS[k](v, k) for k, v in doc.items()}
    if heating is not None:
        if "kappa1" in vals:
            raise ConfigError("give either kappa1 or heating_rate, not both")
        nb = vals.get("nbar_th", 0.0)
        if nb <= 0:
            raise ConfigError("heating_rate needs a positive nbar_th")
        vals["kappa1"] = parse_frequency(heating, "heating_rate") / nb
    missing = set(_PARAM_PARSERS) - set(vals) - {"delta", "kappa1", "nbar_th"}
    if missing:
        raise ConfigError(f"missing ion-cavity parameters: {sorted(missing)}")
    vals.setdefault("kappa1", 0.0)
    if delta == "sideband":
        vals["delta"] = sideband_delta(vals["nu"], vals["g0"], vals["Delta"])
    else:
        vals["delta"] = parse_frequency(delta, "delta")
    return IonCavityParams(**vals)


def raw_from_dict(doc: dict) -> RawExperiment:
    unknown = set(doc) - set(_RAW_PARSERS)
    if unknown:
        raise ConfigError(f"unknown raw-experiment fields: {sorted(unknown)}")
    missing = set(_RAW_PARSERS) - set(doc)
    if missing:
        raise ConfigError(f"missing raw-experiment fields: {sorted(missing)}")
    return RawExperiment(**{k: _RAW_PARSERS[k](v, k) for k, v in doc.items()})


def preset_names() -> list:
    return sorted(p.name[:-5] for p in resources.files(__package__).joinpath("presets").iterdir()
                  if p.name.endswith(".json"))


def load_preset(name: str) -> dict:
    path = resources.files(__package__).joinpath("presets", f"{name}.json")
    if not path.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return json.loads(path.read_text(encoding="utf-8"))


def preset_params(name: str) -> tuple[IonCavityParams, dict]:
    """Ion-cavity parameters of a preset plus its extra settings (e.g. detector bandwidth)."""
    doc = load_preset(name)
    kind = doc.get("kind")
    if kind == "ion_cavity":
        params = params_from_dict(doc["params"])
        diag = {}
    elif kind == "raw_experiment":
        params, diag = derive_experimental(raw_from_dict(doc["raw"]))
    else:
        raise ConfigError(f"preset {name!r} has unknown kind {kind!r}")
    extras = {"diagnostics": diag}
    if "detector_bandwidth" in doc:
        extras["detector_bandwidth"] = parse_frequency(doc["detector_bandwidth"], "detector_bandwidth")
    return params, extras
