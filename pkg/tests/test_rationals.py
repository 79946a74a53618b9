from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ocf.rationals import RationalFormatError, format_rational, parse_rational


def test_parse_canonical():
    assert parse_rational("3") == Fraction(3)
    assert parse_rational("-3") == Fraction(-3)
    assert parse_rational("0") == Fraction(0)
    assert parse_rational("2/3") == Fraction(2, 3)
    assert parse_rational("-7/2") == Fraction(-7, 2)


@pytest.mark.parametrize(
    "text",
    ["3/1", "4/2", "03", "1/03", "-0", "+3", "1/-2", "", "a", "1.5", " 1", "1 "],
)
def test_parse_rejects_non_canonical(text):
    with pytest.raises(RationalFormatError):
        parse_rational(text)


def test_format_examples():
    assert format_rational(Fraction(5)) == "5"
    assert format_rational(Fraction(5, 1)) == "5"
    assert format_rational(Fraction(-4, 6)) == "-2/3"
    assert format_rational(7) == "7"


@given(st.fractions())
def test_round_trip(q):
    assert parse_rational(format_rational(q)) == q
