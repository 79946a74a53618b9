"""Canonical "p/q" serialization of exact rationals.

Every value in the library is a :class:`fractions.Fraction`.  The wire form is
the reduced fraction printed as ``p/q`` with the denominator omitted when it is
1 and the sign carried by the numerator.  Parsing is strict: a string that is
not already in canonical form (unreduced, ``q <= 1`` spelled out, leading
zeros, sign on the denominator) is rejected so that dump/load round-trips are
bit-exact.
"""

from __future__ import annotations

import re
from fractions import Fraction

_INT_RE = re.compile(r"0|-?[1-9][0-9]*")
_RAT_RE = re.compile(r"(-?[1-9][0-9]*)/([1-9][0-9]*)")


class RationalFormatError(ValueError):
    """Raised when a rational string is not in canonical form."""


def parse_rational(text: str) -> Fraction:
    """Parse a canonical rational string ("p" or "p/q" with q >= 2, reduced)."""
    if not isinstance(text, str):
        raise RationalFormatError(f"rational must be a string, got {type(text).__name__}")
    m = _INT_RE.fullmatch(text)
    if m:
        return Fraction(int(text))
    m = _RAT_RE.fullmatch(text)
    if m is None:
        raise RationalFormatError(f"not a canonical rational: {text!r}")
    num, den = int(m.group(1)), int(m.group(2))
    if den == 1:
        raise RationalFormatError(f"denominator 1 must be omitted: {text!r}")
    frac = Fraction(num, den)
    if frac.numerator != num or frac.denominator != den:
        raise RationalFormatError(f"not reduced: {text!r}")
    return frac


def format_rational(value: Fraction | int) -> str:
    """Render a rational in canonical "p/q" form (q omitted when 1)."""
    frac = Fraction(value)
    if frac.denominator == 1:
        return str(frac.numerator)
    return f"{frac.numerator}/{frac.denominator}"
