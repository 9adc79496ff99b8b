"""Exact integer rounding of rational powers.

Planning formulas produce resolutions of the form ceil(n**e) with rational
e; rounding through floats can be off by one when n**e is an exact integer,
so the ceiling is decided by integer comparisons.
"""

from __future__ import annotations

from fractions import Fraction

__all__ = ["ceil_power"]


def ceil_power(n: int, e: Fraction) -> int:
    """Smallest integer m with m >= n**e, for integer n >= 1 and rational e.

    For e <= 0 the value lies in (0, 1], so the ceiling is 1.
    """
    if n < 1:
        raise ValueError("base must be a positive integer")
    e = Fraction(e)
    if n == 1 or e <= 0:
        return 1
    p, q = e.numerator, e.denominator
    target = n**p
    x = max(1, int(round(float(n) ** (p / q))))
    while x**q < target:
        x += 1
    while x > 1 and (x - 1) ** q >= target:
        x -= 1
    return x
