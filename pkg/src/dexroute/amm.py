"""Constant-product swap math.

All routers and the exhaustive oracle price trades through this module, so
there is exactly one numeric path from reserves to output amounts.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Union

from .exceptions import InvalidFee, NegativeInput, NonPositiveReserve


class ReservePair(NamedTuple):
    """Reserves of a pool seen from one trade direction (input side first)."""

    r_in: float
    r_out: float

    def reversed(self) -> "ReservePair":
        return ReservePair(self.r_out, self.r_in)


class SwapMode(str, enum.Enum):
    REAL = "real"
    EXACT = "exact"


@dataclass(frozen=True)
class FeeRate:
    """Fraction of the input retained by the pool as fee, in ``[0, 1)``.

    ``rate`` may be a float or a :class:`fractions.Fraction`; exact-integer
    swaps use the fraction form so 0.003 becomes the familiar 997/1000.
    """

    rate: Union[float, Fraction] = Fraction(3, 1000)

    def __post_init__(self):
        r = self.rate
        if isinstance(r, bool) or not isinstance(r, (int, float, Fraction)):
            raise InvalidFee(f"fee must be a real number, got {r!r}")
        if not (0 <= r < 1) or (isinstance(r, float) and not math.isfinite(r)):
            raise InvalidFee(f"fee must lie in [0, 1), got {r!r}")

    @property
    def keep(self) -> float:
        """``1 - rate`` as a float."""
        return float(1 - self.rate)

    def keep_fraction(self) -> Fraction:
        if isinstance(self.rate, float):
            # str() round-trips the shortest decimal, so 0.003 -> 3/1000
            return 1 - Fraction(str(self.rate))
        return 1 - Fraction(self.rate)


DEFAULT_FEE = FeeRate()

FeeLike = Union[FeeRate, float, Fraction]
ModeLike = Union[SwapMode, str]


def as_fee(fee: FeeLike) -> FeeRate:
    return fee if isinstance(fee, FeeRate) else FeeRate(fee)


def as_mode(mode: ModeLike) -> SwapMode:
    try:
        return SwapMode(mode)
    except ValueError:
        raise ValueError(f"unknown swap mode {mode!r}; expected 'real' or 'exact'") from None


def _check(r_in, r_out, amount_in):
    if not (r_in > 0 and r_out > 0):
        raise NonPositiveReserve(f"reserves must be positive, got ({r_in!r}, {r_out!r})")
    if not math.isfinite(r_in) or not math.isfinite(r_out):
        raise NonPositiveReserve(f"reserves must be finite, got ({r_in!r}, {r_out!r})")
    if amount_in < 0 or not math.isfinite(amount_in):
        raise NegativeInput(f"amount_in must be finite and >= 0, got {amount_in!r}")


def _as_int(value, what):
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    if isinstance(value, Fraction) and value.denominator == 1:
        return int(value)
    raise ValueError(f"exact mode needs integral {what}, got {value!r}")


def real_swap_out(r_in: float, r_out: float, amount_in: float, keep: float) -> float:
    """Unchecked float swap; ``keep`` is ``1 - fee``.

    Uses ``y*a/(x+a)`` with ``a = keep*dx``, algebraically equal to
    ``y - x*y/(x+a)`` but free of the cancellation when ``dy << y``.
    """
    a = keep * amount_in
    out = r_out * a / (r_in + a)
    if out >= r_out:
        out = math.nextafter(r_out, 0.0)
    return out


def swap_out(
    reserves,
    amount_in,
    fee: FeeLike = DEFAULT_FEE,
    mode: ModeLike = SwapMode.REAL,
):
    """Output amount for selling ``amount_in`` into a pool with ``reserves``.

    Real mode evaluates ``dy = y - x*y / (x + (1-fee)*dx)`` in doubles. Exact
    mode mirrors on-chain integer math, ``floor(y*k*dx / (x*d + k*dx))`` with
    ``k/d = 1 - fee``, and returns an ``int``.

    >>> round(swap_out((1000, 1000), 100), 5)
    90.66109
    >>> swap_out((1000, 1000), 1000, fee=0.0)
    500.0
    """
    r_in, r_out = reserves
    _check(r_in, r_out, amount_in)
    fee = as_fee(fee)
    if as_mode(mode) is SwapMode.EXACT:
        x = _as_int(r_in, "reserve")
        y = _as_int(r_out, "reserve")
        dx = _as_int(amount_in, "amount_in")
        keep = fee.keep_fraction()
        k, d = keep.numerator, keep.denominator
        return (y * k * dx) // (x * d + k * dx)
    return real_swap_out(float(r_in), float(r_out), float(amount_in), fee.keep)


def apply_swap(
    reserves,
    amount_in,
    fee: FeeLike = DEFAULT_FEE,
    mode: ModeLike = SwapMode.REAL,
):
    """Trade against ``reserves`` and return ``(new_reserves, amount_out)``.

    The whole input (fee included) stays in the pool: ``(x + dx, y - dy)``.
    """
    out = swap_out(reserves, amount_in, fee, mode)
    r_in, r_out = reserves
    if as_mode(mode) is SwapMode.EXACT:
        r_in, r_out, amount_in = int(r_in), int(r_out), int(amount_in)
    return ReservePair(r_in + amount_in, r_out - out), out
