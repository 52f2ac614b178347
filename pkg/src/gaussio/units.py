"""Parsing of physical quantities written in configuration documents.

Frequencies are stored as angular frequencies (rad/s). A configuration may
give them as plain numbers (already rad/s), as ``"<x> rad/s"``, or in the
``2pi`` notation used in experimental tables, e.g. ``"2pi*5MHz"`` or
``"2π·0.62 MHz"``. A bare ``"5MHz"`` is rejected because it is ambiguous.
"""

from __future__ import annotations

import math
import re

from .errors import ConfigError

_PREFIX = {"": 1.0, "p": 1e-12, "n": 1e-9, "u": 1e-6, "μ": 1e-6, "µ": 1e-6, "m": 1e-3,
           "c": 1e-2, "k": 1e3, "M": 1e6, "G": 1e9}

_QUANTITY = re.compile(
    r"""^\s*
    (?P<twopi>2\s*[*·×]?\s*(?:pi|π)\s*[*·×]?)?\s*
    (?P<num>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*
    (?P<unit>[A-Za-zμµ/]+)?\s*$""",
    re.VERBOSE,
)


def _split(value, what: str):
    if isinstance(value, bool):
        raise ConfigError(f"{what}: expected a number or quantity string, got {value!r}")
    if isinstance(value, (int, float)):
        return False, float(value), ""
    if not isinstance(value, str):
        raise ConfigError(f"{what}: expected a number or quantity string, got {value!r}")
    m = _QUANTITY.match(value)
    if not m:
        raise ConfigError(f"{what}: cannot parse {value!r}")
    return bool(m["twopi"]), float(m["num"]), m["unit"] or ""


def _scaled(unit: str, base: str, what: str, raw) -> float:
    if not unit.endswith(base):
        raise ConfigError(f"{what}: unit of {raw!r} is not a {base}-based unit")
    prefix = unit[: -len(base)]
    if prefix not in _PREFIX:
        raise ConfigError(f"{what}: unknown unit prefix in {raw!r}")
    return _PREFIX[prefix]


def parse_frequency(value, what: str = "frequency") -> float:
    """Angular frequency in rad/s."""
    twopi, num, unit = _split(value, what)
    if not unit:
        if twopi:
            raise ConfigError(f"{what}: {value!r} needs a Hz-based unit after 2pi")
        return num
    if unit == "rad/s":
        if twopi:
            raise ConfigError(f"{what}: {value!r} mixes 2pi with rad/s")
        return num
    scale = _scaled(unit, "Hz", what, value)
    if not twopi:
        raise ConfigError(
            f"{what}: {value!r} is ambiguous; write '2pi*{num:g}{unit}' or give rad/s"
        )
    return 2 * math.pi * num * scale


def parse_time(value, what: str = "time") -> float:
    """Time in seconds."""
    twopi, num, unit = _split(value, what)
    if twopi:
        raise ConfigError(f"{what}: unexpected 2pi factor in {value!r}")
    return num * (_scaled(unit, "s", what, value) if unit else 1.0)


def parse_length(value, what: str = "length") -> float:
    """Length in metres."""
    twopi, num, unit = _split(value, what)
    if twopi:
        raise ConfigError(f"{what}: unexpected 2pi factor in {value!r}")
    return num * (_scaled(unit, "m", what, value) if unit else 1.0)


def parse_number(value, what: str = "value") -> float:
    twopi, num, unit = _split(value, what)
    if twopi or unit:
        raise ConfigError(f"{what}: expected a dimensionless number, got {value!r}")
    return num
