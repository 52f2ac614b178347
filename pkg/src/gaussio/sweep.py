"""Evaluation of run configurations: model building, sweeps and reports."""

from __future__ import annotations

import functools
import math
import os
import time as _time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channels import (
    ModeProfile,
    apply_channel,
    detector_channel,
    detector_rate,
    pulse_channel,
    pulse_rate,
    stationary_spectrum,
)
from .config import ION_PARAMETERS, STATE_VARIABLES, RunConfig, mode_rate
from .errors import ConfigError, LosslessModeError
from .measures import log_negativity, mean_occupation, purity, squeezing_db
from .scenarios import (
    EffectiveParams,
    IonCavityParams,
    adiabatic_baseline,
    derive_experimental,
    effective_params,
    excited_population_estimate,
    inferred_occupation,
    ion_cavity_system,
    params_from_dict,
    raw_from_dict,
    spectral_cooling_rate,
    two_sided_transform,
)
from .states import CovState, embed, squeezed_state, thermal_state, vacuum_state
from .system import DriftModel, SystemSpec, build_drift, evolve_state, validate_physicality
from .units import parse_frequency

EXCITATION_GRID = 64


def thread_count(n_points: int) -> int:
    """Worker count: ``GIO_THREADS`` if set, else the CPU count, never above ``n_points``."""
    env = os.environ.get("GIO_THREADS")
    if env:
        try:
            cap = int(env)
        except ValueError:
            raise ConfigError(f"GIO_THREADS must be an integer, got {env!r}") from None
        if cap < 1:
            raise ConfigError("GIO_THREADS must be at least 1")
    else:
        cap = os.cpu_count() or 1
    return max(1, min(cap, n_points))


@dataclass
class Built:
    spec: SystemSpec
    model: DriftModel
    params: IonCavityParams | None = None
    eff: EffectiveParams | None = None
    warnings: list = field(default_factory=list)


class Runner:
    """Evaluates a :class:`RunConfig` at individual sweep values."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.var = cfg.sweep.variable if cfg.sweep else None
        self.values = cfg.sweep.values if cfg.sweep else (None,)

    # -- model -------------------------------------------------------------

    def _param_doc(self, value):
        sc = self.cfg.scenario
        if sc.raw is not None:
            params, _ = derive_experimental(raw_from_dict(sc.raw))
            overrides = dict(sc.params or {})
            if self.var in ION_PARAMETERS:
                overrides[self.var] = value
            if not overrides:
                return params
            doc = {k: getattr(params, k) for k in ION_PARAMETERS}
            doc["delta"] = "sideband"
            return params_from_dict({**doc, **overrides})
        doc = dict(sc.params)
        if self.var in ION_PARAMETERS:
            doc[self.var] = value
            if self.var == "kappa1":
                doc.pop("heating_rate", None)
        return params_from_dict(doc)

    @functools.lru_cache(maxsize=256)
    def build(self, key=None) -> Built:
        """Model for a sweep value (``key`` only matters for parameter sweeps)."""
        sc = self.cfg.scenario
        if sc.kind == "system":
            if not isinstance(sc.system, dict):
                raise ConfigError("inline system must be an object")
            try:
                spec = SystemSpec.from_dict(sc.system)
            except KeyError as exc:
                raise ConfigError(f"inline system lacks field {exc}") from None
            return Built(spec, build_drift(spec))
        p = self._param_doc(key)
        notes = []
        if not p.large_detuning:
            notes.append(
                f"Delta = {p.Delta:.6g} rad/s is below the large-detuning threshold "
                f"5*max(nu, delta, g0, Omega) = {5 * max(p.nu, abs(p.delta), p.g0, p.Omega):.6g} rad/s"
            )
        if sc.model == "effective":
            eff = effective_params(p)
            spec = adiabatic_baseline(eff, p.nu)
            return Built(spec, build_drift(spec), p, eff, notes)
        spec = ion_cavity_system(p)
        eff = effective_params(p) if p.Delta > 0 and p.kappa2 > 0 else None
        return Built(spec, build_drift(spec), p, eff, notes)

    def built_for(self, value) -> Built:
        return self.build(value if self.var in ION_PARAMETERS else None)

    # -- profile -------------------------------------------------------------

    def _bandwidth(self) -> float:
        bw = self.cfg.profile.get("bandwidth", self.cfg.scenario.detector_bandwidth)
        if bw is None:
            raise ConfigError("detector_matched profile needs a bandwidth")
        return parse_frequency(bw, "bandwidth")

    def profile(self, b: Built) -> ModeProfile:
        cfg, spec = self.cfg, b.spec
        acc = cfg.profile.get("accessible")
        if acc is None:
            if cfg.scenario.kind == "system":
                acc = [spec.labels[j] for j in spec.lossy_modes]
            else:
                acc = ["motion"] if cfg.scenario.model == "effective" else ["cavity"]
        try:
            acc_idx = [spec.mode_index(m) for m in acc]
        except (KeyError, IndexError) as exc:
            raise ConfigError(f"profile.accessible: {exc}") from None
        dead = [spec.labels[j] for j in acc_idx if spec.kappa[j] <= 0]
        if dead:
            raise LosslessModeError(
                f"lossless accessible mode(s): {', '.join(dead)} (kappa = 0 has no output field)"
            )
        entries = dict(cfg.profile.get("modes", {}))
        for m in acc:
            key = m if isinstance(m, str) else spec.labels[spec.mode_index(m)]
            if m not in entries and key not in entries:
                if cfg.scenario.kind == "system":
                    raise ConfigError(f"profile.modes needs an entry for accessible mode {key!r}")
                entries[key] = "pulse_matched" if cfg.channel == "pulse" else "detector_matched"
        rates = {}
        for m, entry in entries.items():
            if entry == "pulse_matched":
                rate = pulse_rate(self._ion(b).nu, self._eff(b).kappa_eff)
            elif entry == "detector_matched":
                rate = detector_rate(self._ion(b).nu, self._bandwidth())
            else:
                rate = mode_rate(entry)
            try:
                rates[spec.mode_index(m)] = rate
            except (KeyError, IndexError) as exc:
                raise ConfigError(f"profile.modes: {exc}") from None
        default = cfg.profile.get("default")
        default = None if default is None else mode_rate(default)
        return ModeProfile.for_model(b.model, rates, acc_idx, default)

    def _ion(self, b: Built) -> IonCavityParams:
        if b.params is None:
            raise ConfigError("matched profiles need an ion-cavity scenario")
        return b.params

    def _eff(self, b: Built) -> EffectiveParams:
        if b.eff is None:
            raise ConfigError("effective parameters are undefined for this scenario (need Delta, kappa2 > 0)")
        return b.eff

    # -- evaluation ----------------------------------------------------------

    def seconds(self, b: Built, t):
        if t is None or self.cfg.time_unit == "s":
            return t
        return t / self._eff(b).kappa_eff

    def _time(self, value):
        return value if self.var == "time" else self.cfg.time

    @functools.lru_cache(maxsize=256)
    def channel(self, key, t):
        b = self.build(key)
        prof = self.profile(b)
        m = b.model
        if self.cfg.channel == "pulse":
            return pulse_channel(m, m.sigma_in, prof)
        if self.cfg.channel == "stationary" or math.isinf(t):
            return stationary_spectrum(m, m.sigma_in, prof)
        return detector_channel(m, m.sigma_in, prof, t)

    def initial_state(self, b: Built, value) -> CovState:
        init, spec = self.cfg.initial_state, b.spec
        kind = init["kind"]
        if kind == "vacuum":
            return vacuum_state(spec.n)
        if kind == "thermal" and isinstance(init["nbar"], list):
            if len(init["nbar"]) != spec.n:
                raise ConfigError(f"initial_state.nbar needs {spec.n} entries")
            return thermal_state(init["nbar"])
        try:
            mode = spec.mode_index(init["mode"])
        except (KeyError, IndexError) as exc:
            raise ConfigError(f"initial_state.mode: {exc}") from None
        if kind == "thermal":
            nbar = value if self.var == "nbar0" else init["nbar"]
            single = thermal_state([nbar])
        else:
            db = value if self.var == "input_squeezing_db" else init["db"]
            single = squeezed_state(db, init["quadrature"])
        return embed(single, mode, spec.n)

    def evaluate(self, value) -> dict:
        """All configured outputs at one sweep value."""
        start = _time.perf_counter()
        cfg = self.cfg
        key = value if self.var in ION_PARAMETERS else None
        b = self.build(key)
        t = self.seconds(b, self._time(value))
        ch = self.channel(key, t)
        s0 = self.initial_state(b, value)
        out = apply_channel(ch, s0, accessible_only=True)
        read = out
        if cfg.two_sided is not None:
            if out.n_modes != 1:
                raise ConfigError("two_sided needs exactly one accessible output mode")
            out = two_sided_transform(cfg.two_sided, out)
        row = {}
        outs = cfg.outputs
        if "squeezing_db" in outs:
            row["squeezing_db"] = squeezing_db(out)
        if "purity" in outs:
            row["purity"] = purity(out)
        if "logneg_ebits" in outs:
            row["logneg_ebits"] = log_negativity(out) if out.n_modes == 2 else None
        if "occupations" in outs:
            row["occupations"] = tuple(mean_occupation(out, j) for j in range(out.n_modes))
        if "inferred_occupation" in outs or "actual_occupation" in outs:
            mode = self._inference_mode(b)
        if "inferred_occupation" in outs:
            bw = float(-2 * ch.profile.mu[ch.accessible[0]].real)
            rate = spectral_cooling_rate(b.model, mode) if cfg.inference_rate == "spectral" else self._eff(b).kappa_eff
            row["inferred_occupation"] = inferred_occupation(mean_occupation(read, 0), rate, bw)
        if "actual_occupation" in outs:
            row["actual_occupation"] = mean_occupation(evolve_state(b.model, s0, t), mode)
        if "excited_population" in outs:
            row["excited_population"] = self._excitation(b, s0, t)
        if "wall_time_ms" in outs:
            row["wall_time_ms"] = (_time.perf_counter() - start) * 1e3
        return row

    def _inference_mode(self, b: Built) -> int:
        try:
            return b.spec.mode_index(self.cfg.inference_mode)
        except (KeyError, IndexError) as exc:
            raise ConfigError(f"inference.mode: {exc}") from None

    def _excitation(self, b: Built, s0: CovState, t) -> float:
        """Bosonization check on the atom: at ``t``, or the worst case over ``[0, 10/kappa_eff]``."""
        atom = b.spec.mode_index("atom")
        if t is not None and math.isfinite(t):
            times = [t]
        else:
            times = np.linspace(0.0, 10 / self._eff(b).kappa_eff, EXCITATION_GRID)
        return max(
            excited_population_estimate(mean_occupation(evolve_state(b.model, s0, float(tt)), atom))
            for tt in times
        )

    def warnings(self) -> list:
        b = self.built_for(self.values[0])
        return list(b.warnings)


def format_cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, tuple):
        return ";".join(f"{v:.12g}" for v in x)
    return f"{x:.12g}"


def columns(cfg: RunConfig) -> list:
    return ["sweep_value", *cfg.outputs]


def run_sweep(cfg: RunConfig, threads: int | None = None) -> tuple:
    """Evaluate every sweep point in ascending order.

    Points may run on a thread pool (``GIO_THREADS``); rows come back in sweep order.
    Returns ``(columns, rows, warnings)`` with rows as lists of strings.
    """
    runner = Runner(cfg)
    values = runner.values
    n = thread_count(len(values)) if threads is None else max(1, min(threads, len(values)))
    # build shared objects once before fanning out
    warns = runner.warnings()
    if cfg.sweep is None or cfg.sweep.variable in STATE_VARIABLES:
        runner.evaluate(values[0])
    if n == 1:
        results = [runner.evaluate(v) for v in values]
    else:
        with ThreadPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(runner.evaluate, values))
    rows = []
    for v, res in zip(values, results):
        rows.append([format_cell(v)] + [format_cell(res[c]) for c in cfg.outputs])
    return columns(cfg), rows, warns


def validate_report(cfg: RunConfig) -> dict:
    """Derived quantities for the first sweep point, without running the sweep."""
    runner = Runner(cfg)
    value = runner.values[0]
    b = runner.built_for(value)
    spec, model = b.spec, b.model
    phys = validate_physicality(spec)
    eig = model.spectral.eigenvalues
    rep = {
        "scenario": cfg.scenario.name,
        "labels": list(spec.labels),
        "kappa": [float(k) for k in spec.kappa],
        "drift_spectrum": [[float(e.real), float(e.imag)] for e in sorted(eig, key=lambda z: (z.real, z.imag))],
        "stable": bool(model.stable),
        "stability_margin": model.stability_margin,
        "physicality_eigenvalues": [float(x) for x in phys.eigenvalues],
        "physical": bool(phys.ok),
    }
    if b.params is not None:
        rep["params"] = {k: getattr(b.params, k) for k in ION_PARAMETERS}
        rep["large_detuning"] = b.params.large_detuning
    if b.eff is not None:
        rep["effective"] = {"J": b.eff.J, "delta_prime": b.eff.delta_prime, "kappa_eff": b.eff.kappa_eff}
        rep["ratios"] = dict(b.eff.ratios)
        if cfg.scenario.model == "full":
            rep["spectral_cooling_rate"] = spectral_cooling_rate(model, 0)
    key = value if runner.var in ION_PARAMETERS else None
    t = runner.seconds(b, runner._time(value))
    ch = runner.channel(key, t)
    rep["profile_mu"] = [[float(z.real), float(z.imag)] for z in ch.profile.mu]
    rep["accessible"] = [spec.labels[j] for j in ch.accessible]
    rep["sweep_points"] = len(runner.values)
    rep["warnings"] = list(b.warnings) + list(ch.warnings)
    return rep
