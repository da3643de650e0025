"""Parameters of the +/-1-innovation AR(1) chain killed at zero.

The chain is X_{n+1} = a*X_n + xi_{n+1} with xi = +1 with probability p and
-1 with probability q = 1-p, started at some x >= 0 and killed the first time
it goes negative.  For 0 < a <= 2/3 the surviving chain lives on
[0, 1/(1-a)] and its backward dynamics are driven by a piecewise-linear
expanding map with a "hole": the open interval (hole_lo, 1) of points that
have no nonnegative one-step past.  Everything else in the package is built
on top of these few numbers.

Parameters can be exact (fractions.Fraction) or floats.  Derived quantities
(ceiling, hole_lo, q) are computed in the same arithmetic as the field they
come from, so exact params give exact geometry.  Mixed use is fine: Python
compares Fraction against float exactly, and Fraction-with-float arithmetic
degrades to float.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

TWO_THIRDS = Fraction(2, 3)
ONE_HALF = Fraction(1, 2)


class NumericFailure(Exception):
    """Base class for numeric failures (root bracketing, divergent series,
    degenerate estimates).  The CLI maps these to exit code 3."""


def as_exact(value) -> Fraction:
    """Exact rational view of a number.

    Floats convert through their exact binary value (no decimal guessing);
    strings accept both "num/den" and decimal forms.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, str)):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(value)
    raise TypeError(f"cannot interpret {value!r} as an exact rational")


@dataclass(frozen=True)
class ModelParams:
    """Chain parameters.

    a: contraction factor.  The supported range is 0 < a <= 2/3; values in
       (2/3, 1) are admitted only with experimental=True (the backward map
       loses injectivity there and nothing downstream is guaranteed).
    p: probability of the +1 innovation, strictly between 0 and 1.
    """

    a: Fraction | float
    p: Fraction | float
    experimental: bool = False

    def __post_init__(self):
        a = as_exact(self.a)
        p = as_exact(self.p)
        if not 0 < p < 1:
            raise ValueError(f"p must be in (0, 1), got {self.p}")
        if a <= 0:
            raise ValueError(f"a must be positive, got {self.a}")
        if a > TWO_THIRDS and not self.experimental:
            raise ValueError(
                f"a = {self.a} exceeds 2/3; pass experimental=True (CLI: "
                "--experimental) to evaluate anyway, without guarantees"
            )
        if a >= 1:
            raise ValueError(f"a must be below 1, got {self.a}")

    @property
    def q(self):
        return 1 - self.p

    @property
    def ceiling(self):
        """Top of the state space, 1/(1-a): the fixed point of x -> a*x + 1."""
        return 1 / (1 - self.a)

    @property
    def hole_lo(self):
        """Left end of the hole (2a-1)/(1-a).

        The hole (hole_lo, 1) is the open set of x with no admissible
        one-step past.  It is empty exactly at a = 2/3 (hole_lo = 1); at
        a = 1/2 it is the full (0, 1); for a < 1/2 the formula goes negative
        and every x in [0, 1) sits in the hole, including 0 itself.
        """
        return (2 * self.a - 1) / (1 - self.a)

    @property
    def is_exact(self) -> bool:
        return isinstance(self.a, Fraction)

    def exact(self) -> "ModelParams":
        """Twin with both fields as exact rationals (floats convert via
        their binary value)."""
        if isinstance(self.a, Fraction) and isinstance(self.p, Fraction):
            return self
        return ModelParams(as_exact(self.a), as_exact(self.p), self.experimental)

    def to_json(self) -> dict:
        def enc(v):
            return str(v) if isinstance(v, Fraction) else v

        return {"a": enc(self.a), "p": enc(self.p), "experimental": self.experimental}
