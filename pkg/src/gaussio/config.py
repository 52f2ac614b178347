"""Run configuration documents (JSON).

A document looks like::

    {
      "scenario": "indium_cavity",
      "channel": "pulse",
      "initial_state": {"kind": "squeezed", "db": 0, "quadrature": "q", "mode": "motion"},
      "sweep": {"variable": "input_squeezing_db", "start": 0, "stop": 20, "step": 1},
      "outputs": ["squeezing_db", "purity"],
      "output_path": "output_squeezing.csv"
    }

Relative ``output_path`` values resolve against the config file's directory.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .scenarios import ION_PARAMETERS, TwoSidedSplit, load_preset
from .units import parse_frequency, parse_number, parse_time

CHANNELS = ("pulse", "detector", "stationary")

OUTPUTS = (
    "squeezing_db",
    "purity",
    "logneg_ebits",
    "occupations",
    "inferred_occupation",
    "actual_occupation",
    "excited_population",
    "wall_time_ms",
)
DEFAULT_OUTPUTS = ("squeezing_db", "purity", "logneg_ebits", "occupations")

STATE_VARIABLES = ("input_squeezing_db", "nbar0")
SWEEP_VARIABLES = STATE_VARIABLES + ("time",) + ION_PARAMETERS
TIME_UNITS = ("s", "1/kappa_eff")
INFERENCE_RATES = ("spectral", "formula")

_TOP_KEYS = {
    "scenario", "channel", "profile", "time", "sweep", "initial_state", "outputs",
    "two_sided", "inference", "output_path", "description",
}


@dataclass(frozen=True)
class ScenarioConfig:
    """Either an ion-cavity model (``params`` document) or an inline system."""

    kind: str  # "ion_cavity" or "system"
    params: dict = None
    raw: dict = None
    system: dict = None
    model: str = "full"  # or "effective"
    detector_bandwidth: object = None
    name: str = ""


@dataclass(frozen=True)
class SweepConfig:
    variable: str
    values: tuple
    unit: str = ""


@dataclass(frozen=True)
class RunConfig:
    scenario: ScenarioConfig
    channel: str = "pulse"
    profile: dict = field(default_factory=dict)
    time: float | None = None
    time_unit: str = "s"
    sweep: SweepConfig | None = None
    initial_state: dict = field(default_factory=lambda: {"kind": "vacuum"})
    outputs: tuple = DEFAULT_OUTPUTS
    two_sided: TwoSidedSplit | None = None
    inference_rate: str = "spectral"
    inference_mode: object = 0
    output_path: Path | None = None
    sha256: str = ""


def _need(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


def _scenario(doc) -> ScenarioConfig:
    if isinstance(doc, str):
        doc = {"preset": doc}
    _need(isinstance(doc, dict), "scenario must be a preset name or an object")
    model = doc.get("model", "full")
    _need(model in ("full", "effective"), f"scenario.model must be 'full' or 'effective', got {model!r}")
    unknown = set(doc) - {"preset", "overrides", "ion_cavity", "system", "model", "detector_bandwidth"}
    _need(not unknown, f"unknown scenario keys: {sorted(unknown)}")
    sources = [k for k in ("preset", "ion_cavity", "system") if k in doc]
    _need(len(sources) == 1, "scenario needs exactly one of 'preset', 'ion_cavity', 'system'")
    bw = doc.get("detector_bandwidth")
    if "system" in doc:
        _need(model == "full", "an inline system has no effective model")
        _need("overrides" not in doc, "overrides apply to ion-cavity scenarios only")
        return ScenarioConfig("system", system=doc["system"], detector_bandwidth=bw, name="inline")
    if "ion_cavity" in doc:
        params = dict(doc["ion_cavity"])
        params.update(doc.get("overrides", {}))
        return ScenarioConfig("ion_cavity", params=params, model=model, detector_bandwidth=bw, name="inline")
    name = doc["preset"]
    _need(isinstance(name, str), "preset must be a name")
    pre = load_preset(name)
    bw = bw if bw is not None else pre.get("detector_bandwidth")
    overrides = doc.get("overrides", {})
    _need(isinstance(overrides, dict), "overrides must be an object")
    unknown = set(overrides) - set(ION_PARAMETERS) - {"heating_rate"}
    _need(not unknown, f"unknown override parameters: {sorted(unknown)}")
    if pre["kind"] == "ion_cavity":
        params = dict(pre["params"])
        params.update(overrides)
        return ScenarioConfig("ion_cavity", params=params, model=model, detector_bandwidth=bw, name=name)
    if pre["kind"] == "raw_experiment":
        return ScenarioConfig("ion_cavity", raw=dict(pre["raw"]), params=dict(overrides), model=model,
                              detector_bandwidth=bw, name=name)
    raise ConfigError(f"preset {name!r} has unknown kind {pre['kind']!r}")


def _sweep_parser(variable: str, unit: str):
    if variable == "time":
        return parse_number if unit == "1/kappa_eff" else parse_time
    if variable in ("eta", "nbar_th") or variable in STATE_VARIABLES:
        return parse_number
    return parse_frequency


def _sweep(doc) -> SweepConfig:
    _need(isinstance(doc, dict), "sweep must be an object")
    unknown = set(doc) - {"variable", "start", "stop", "step", "values", "unit"}
    _need(not unknown, f"unknown sweep keys: {sorted(unknown)}")
    var = doc.get("variable")
    _need(var in SWEEP_VARIABLES, f"sweep variable {var!r} is not one of {', '.join(SWEEP_VARIABLES)}")
    unit = doc.get("unit", "s" if var == "time" else "")
    if var == "time":
        _need(unit in TIME_UNITS, f"time sweep unit must be one of {TIME_UNITS}")
    else:
        _need(unit == "", "only time sweeps take a unit")
    parse = _sweep_parser(var, unit)
    if "values" in doc:
        _need(not {"start", "stop", "step"} & set(doc), "give either values or start/stop/step")
        vals = [parse(v, "sweep value") for v in doc["values"]]
        _need(len(vals) > 0, "sweep values must not be empty")
        _need(all(b > a for a, b in zip(vals, vals[1:])), "sweep values must be strictly ascending")
    else:
        for k in ("start", "stop", "step"):
            _need(k in doc, f"sweep needs {k!r}")
        start, stop, step = (parse(doc[k], f"sweep.{k}") for k in ("start", "stop", "step"))
        _need(step > 0 and math.isfinite(step), f"sweep step must be positive, got {step}")
        _need(stop >= start, "sweep stop must not be below start")
        count = int(math.floor((stop - start) / step * (1 + 1e-12) + 1e-9)) + 1
        _need(count <= 1_000_000, f"sweep has too many points ({count})")
        vals = [start + i * step for i in range(count)]
    _need(all(math.isfinite(v) for v in vals), "sweep values must be finite")
    return SweepConfig(var, tuple(float(v) for v in vals), unit)


def _initial_state(doc) -> dict:
    if isinstance(doc, str):
        doc = {"kind": doc}
    _need(isinstance(doc, dict), "initial_state must be a kind name or an object")
    kind = doc.get("kind")
    _need(kind in ("vacuum", "thermal", "squeezed"), f"initial_state kind {kind!r} unknown")
    out = {"kind": kind, "mode": doc.get("mode", 0)}
    if kind == "thermal":
        nbar = doc.get("nbar", 0.0)
        if isinstance(nbar, list):
            out["nbar"] = [parse_number(x, "initial_state.nbar") for x in nbar]
            _need(all(x >= 0 for x in out["nbar"]), "thermal occupancies must be nonnegative")
        else:
            out["nbar"] = parse_number(nbar, "initial_state.nbar")
            _need(out["nbar"] >= 0, "thermal occupancy must be nonnegative")
    elif kind == "squeezed":
        out["db"] = parse_number(doc.get("db", 0.0), "initial_state.db")
        q = doc.get("quadrature", "q")
        _need(q in ("q", "p") or isinstance(q, (int, float)), "quadrature must be 'q', 'p' or an angle")
        out["quadrature"] = q
    return out


def _two_sided(doc) -> TwoSidedSplit | None:
    if doc is None or doc is False:
        return None
    if doc == "balanced" or doc is True:
        return TwoSidedSplit.balanced()
    _need(isinstance(doc, dict), "two_sided must be 'balanced' or {kappaL, kappaR}")
    return TwoSidedSplit(parse_frequency(doc["kappaL"], "kappaL"), parse_frequency(doc["kappaR"], "kappaR"))


def parse_config(doc: dict, base_dir: Path | None = None, sha256: str = "") -> RunConfig:
    """Validate a configuration document."""
    _need(isinstance(doc, dict), "configuration must be a JSON object")
    unknown = set(doc) - _TOP_KEYS
    _need(not unknown, f"unknown configuration keys: {sorted(unknown)}")
    _need("scenario" in doc, "configuration needs a 'scenario'")
    scenario = _scenario(doc["scenario"])
    channel = doc.get("channel", "pulse")
    _need(channel in CHANNELS, f"channel must be one of {CHANNELS}, got {channel!r}")

    profile = doc.get("profile", {})
    _need(isinstance(profile, dict), "profile must be an object")
    unknown = set(profile) - {"accessible", "modes", "default", "bandwidth"}
    _need(not unknown, f"unknown profile keys: {sorted(unknown)}")

    sweep = _sweep(doc["sweep"]) if "sweep" in doc else None
    time, time_unit = None, "s"
    if "time" in doc:
        t = doc["time"]
        if isinstance(t, dict):
            time_unit = t.get("unit", "s")
            _need(time_unit in TIME_UNITS, f"time unit must be one of {TIME_UNITS}")
            t = t.get("value")
        time = math.inf if t in ("inf", math.inf) else (
            parse_number(t, "time") if time_unit != "s" else parse_time(t, "time"))
        _need(time > 0, "time must be positive")
    if sweep and sweep.variable == "time":
        _need(time is None, "give either a fixed time or a time sweep")
        _need(all(v > 0 for v in sweep.values), "swept times must be positive")
        time_unit = sweep.unit
    if channel == "detector":
        _need(time is not None or (sweep and sweep.variable == "time"), "detector channel needs a time")
    if sweep and sweep.variable in ION_PARAMETERS:
        _need(scenario.kind == "ion_cavity", f"sweep variable {sweep.variable!r} needs an ion-cavity scenario")
    if time_unit == "1/kappa_eff":
        _need(scenario.kind == "ion_cavity", "time unit 1/kappa_eff needs an ion-cavity scenario")

    init = _initial_state(doc.get("initial_state", "vacuum"))
    if sweep and sweep.variable == "input_squeezing_db":
        _need(init["kind"] == "squeezed", "input_squeezing_db sweep needs a squeezed initial_state")
    if sweep and sweep.variable == "nbar0":
        _need(init["kind"] == "thermal" and not isinstance(init.get("nbar"), list),
              "nbar0 sweep needs a single-mode thermal initial_state")

    outputs = doc.get("outputs", list(DEFAULT_OUTPUTS))
    _need(isinstance(outputs, list) and outputs, "outputs must be a non-empty list")
    bad = [o for o in outputs if o not in OUTPUTS]
    _need(not bad, f"unknown outputs {bad}; choose from {', '.join(OUTPUTS)}")
    _need(len(set(outputs)) == len(outputs), "outputs must not repeat")
    outputs = tuple(o for o in OUTPUTS if o in outputs)
    timed = {"actual_occupation", "inferred_occupation"} & set(outputs)
    if timed:
        _need(time is not None or (sweep and sweep.variable == "time"),
              f"outputs {sorted(timed)} need a time")
    if "inferred_occupation" in outputs:
        _need(channel == "detector", "inferred_occupation needs the detector channel")
        _need(scenario.kind == "ion_cavity", "inferred_occupation needs an ion-cavity scenario")
    if "excited_population" in outputs:
        _need(scenario.kind == "ion_cavity" and scenario.model == "full",
              "excited_population needs the full ion-cavity model")

    inference = doc.get("inference", {})
    _need(isinstance(inference, dict), "inference must be an object")
    rate = inference.get("rate", "spectral")
    _need(rate in INFERENCE_RATES, f"inference.rate must be one of {INFERENCE_RATES}")

    out_path = doc.get("output_path")
    if out_path is not None:
        _need(isinstance(out_path, str) and out_path, "output_path must be a non-empty string")
        out_path = Path(out_path)
        if base_dir is not None and not out_path.is_absolute():
            out_path = base_dir / out_path

    return RunConfig(
        scenario=scenario,
        channel=channel,
        profile=profile,
        time=time,
        time_unit=time_unit,
        sweep=sweep,
        initial_state=init,
        outputs=outputs,
        two_sided=_two_sided(doc.get("two_sided")),
        inference_rate=rate,
        inference_mode=inference.get("mode", 0),
        output_path=out_path,
        sha256=sha256,
    )


def load_config(path) -> RunConfig:
    """Read and validate a JSON configuration file."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    try:
        doc = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return parse_config(doc, path.parent, hashlib.sha256(data).hexdigest())


def mode_rate(spec, default=None):
    """Parse an explicit profile entry: ``[re, im]`` or ``{kind, frequency, rate|bandwidth}``."""
    from .channels import detector_rate, pulse_rate

    if isinstance(spec, list):
        _need(len(spec) == 2, "explicit rates are [re, im] pairs")
        return complex(parse_frequency(spec[0], "rate.re"), parse_frequency(spec[1], "rate.im"))
    if isinstance(spec, dict):
        kind = spec.get("kind")
        freq = parse_frequency(spec.get("frequency", 0.0), "profile frequency")
        if kind == "pulse":
            return pulse_rate(freq, parse_frequency(spec["rate"], "profile rate"))
        if kind == "detector":
            return detector_rate(freq, parse_frequency(spec["bandwidth"], "profile bandwidth"))
        raise ConfigError(f"profile entry kind must be 'pulse' or 'detector', got {kind!r}")
    raise ConfigError(f"cannot interpret profile entry {spec!r}")
