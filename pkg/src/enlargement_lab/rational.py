"""Exact rational helpers and the extended time axis ``[0, inf]``.

Finite times are :class:`fractions.Fraction`; infinity is ``math.inf``, which
compares correctly against fractions and never takes part in arithmetic.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Union

INF = math.inf

Time = Union[Fraction, float]

_INF_LABELS = {"inf", "+inf", "infinity", "+infinity", "oo"}


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"not a finite rational: {x!r}")
        return Fraction(x)
    raise TypeError(f"cannot read {x!r} as a rational")


def to_time(x) -> Time:
    if x is None:
        return INF
    if isinstance(x, float) and math.isinf(x) and x > 0:
        return INF
    if isinstance(x, str) and x.strip().lower() in _INF_LABELS:
        return INF
    t = to_fraction(x)
    if t < 0:
        raise ValueError(f"times are non-negative, got {x!r}")
    return t


def is_finite(t: Time) -> bool:
    return t != INF


def fmt(q: Fraction) -> str:
    """Serialize a rational as an exact ``"p/q"`` string."""
    q = to_fraction(q)
    return f"{q.numerator}/{q.denominator}"


def fmt_time(t: Time) -> str:
    return "inf" if t == INF else fmt(t)
