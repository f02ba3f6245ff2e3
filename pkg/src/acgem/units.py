"""Minimal unit-suffixed quantity parsing for scenario files.

Every physical value in a config is written as ``<number> <unit>`` and is
converted to SI here.  Frequencies stay in ordinary Hz; callers that need
angular units multiply by 2 pi themselves.
"""

from __future__ import annotations

import math
import re

from scipy import constants as const


class UnitError(ValueError):
    """Unknown unit, wrong dimension or malformed number."""


_SI_PREFIX = {"T": 1e12, "G": 1e9, "M": 1e6, "k": 1e3, "": 1.0, "m": 1e-3, "u": 1e-6, "µ": 1e-6, "n": 1e-9}


def _prefixed(base: str, prefixes: str) -> dict:
    return {p + base: _SI_PREFIX[p] for p in prefixes.split(",")}


UNITS = {
    "frequency": {**_prefixed("Hz", "T,G,M,k,"), "rad/s": 1 / (2 * math.pi)},
    "rate": {"1/s": 1.0, "/s": 1.0, "s^-1": 1.0, "Hz": 1.0},
    "time": _prefixed("s", ",m,u,µ,n"),
    "length": {**_prefixed("m", ",m,u,µ,n"), "cm": 1e-2},
    "power": _prefixed("W", ",m,u"),
    "density": {"m^-3": 1.0, "cm^-3": 1e6, "1/cm^3": 1e6, "1/m^3": 1.0},
    "rate_coefficient": {"m^3/s": 1.0, "cm^3/s": 1e-6},
    "intensity": {"W/m^2": 1.0, "W/cm^2": 1e4},
    "temperature": {"K": 1.0, "mK": 1e-3, "uK": 1e-6},
    "energy": {"J": 1.0, "eV": const.electron_volt},
}

_NUMBER = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(.*?)\s*$")


def parse_quantity(text: str, kind: str) -> float:
    """Parse ``"1.5 W"`` style text into an SI float of dimension ``kind``.

    A bare number is accepted only for ``kind == "dimensionless"``.
    """
    m = _NUMBER.match(str(text))
    if not m:
        raise UnitError(f"cannot parse a number from {text!r}")
    value, unit = float(m.group(1)), m.group(2)
    if kind == "dimensionless":
        if unit:
            raise UnitError(f"{text!r}: expected a plain number")
        return value
    table = UNITS.get(kind)
    if table is None:
        raise UnitError(f"unknown quantity kind {kind!r}")
    if unit not in table:
        raise UnitError(f"{text!r}: unit {unit!r} is not a {kind} (use one of {', '.join(table)})")
    return value * table[unit]


def format_quantity(value: float, unit: str, kind: str) -> str:
    """Inverse of ``parse_quantity`` for provenance headers."""
    return f"{value / UNITS[kind][unit]:.9g} {unit}"
