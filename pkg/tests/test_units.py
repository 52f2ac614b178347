import math

import pytest

from gaussio.errors import ConfigError
from gaussio.units import parse_frequency, parse_length, parse_number, parse_time


@pytest.mark.parametrize(
    "text, expected",
    [
        ("2pi*5MHz", 2 * math.pi * 5e6),
        ("2π·0.62 MHz", 2 * math.pi * 0.62e6),
        ("2pi*24Hz", 2 * math.pi * 24),
        ("2 pi 53 kHz", 2 * math.pi * 53e3),
        ("1e4 rad/s", 1e4),
        (31415.9, 31415.9),
        (7, 7.0),
    ],
)
def test_frequency_forms(text, expected):
    assert parse_frequency(text) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("text", ["5MHz", "2pi*5", "2pi*3 rad/s", "2pi*5MegaHz", "fast", True, None, [1]])
def test_frequency_rejects(text):
    with pytest.raises(ConfigError):
        parse_frequency(text)


def test_bare_hertz_message_suggests_fix():
    with pytest.raises(ConfigError, match="2pi"):
        parse_frequency("5MHz", "nu")


def test_time_and_length():
    assert parse_time("6.6ms") == pytest.approx(6.6e-3)
    assert parse_time("85.7us") == pytest.approx(85.7e-6)
    assert parse_time(0.5) == 0.5
    assert parse_length("230nm") == pytest.approx(230e-9)
    assert parse_length("1cm") == pytest.approx(1e-2)
    assert parse_length("6 um") == pytest.approx(6e-6)
    with pytest.raises(ConfigError):
        parse_time("2pi*1s")
    with pytest.raises(ConfigError):
        parse_length("3Hz")


def test_dimensionless():
    assert parse_number("0.08") == 0.08
    with pytest.raises(ConfigError):
        parse_number("3dB")
