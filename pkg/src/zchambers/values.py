"""Cone volumes: exact rationals plus a distinguished infinite value."""
from __future__ import annotations

from fractions import Fraction


class Infinite:
    """The volume of a cone whose anticanonical slice is unbounded."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITE"

    def __str__(self):
        return "inf"

    def __eq__(self, other):
        return isinstance(other, Infinite)

    def __hash__(self):
        return hash("zchambers.inf")

    def __reduce__(self):
        return (Infinite, ())


INFINITE = Infinite()

ConeVolume = "Fraction | Infinite"


def is_infinite(v) -> bool:
    return isinstance(v, Infinite)


def format_volume(v) -> str:
    if is_infinite(v):
        return "inf"
    v = Fraction(v)
    return f"{v.numerator}/{v.denominator}"


def parse_volume(text: str):
    text = text.strip()
    if text == "inf":
        return INFINITE
    return Fraction(text)


def volume_json(v):
    if is_infinite(v):
        return "inf"
    v = Fraction(v)
    return {"num": v.numerator, "den": v.denominator}
