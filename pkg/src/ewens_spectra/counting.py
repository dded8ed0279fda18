"""Counting statistics of the (limiting) eigenangle point processes.

Finite n, rescaled eigenangles (unit mean spacing):

    tau_n        atoms k / y_j            k in Z
    tilde tau_n  atoms (k + Phi_j) / y_j  k in Z

Limits (y_j ~ GEM(theta), Phi_j iid uniform):

    tau_inf        atoms k / y_j, k != 0
    tilde tau_inf  atoms (k + Phi_j) / y_j

Windows are half-open (a, a+b]; the modified limit is counted on [0, A].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InvalidWindow
from .ewens import CycleLengths
from .gem_poisson import GemSample, PhasedGem


@dataclass(frozen=True)
class IntervalSpec:
    """The window (a, a+b]."""

    a: float
    b: float

    def __post_init__(self):
        if not (self.a >= 0 and math.isfinite(self.a)):
            raise InvalidWindow(f"a must be finite and >= 0, got {self.a}")
        if not (self.b > 0 and math.isfinite(self.b)):
            raise InvalidWindow(f"b must be finite and > 0, got {self.b}")

    @property
    def upper(self) -> float:
        return self.a + self.b


@dataclass(frozen=True)
class CountResult:
    value: float
    truncation_bias_bound: float = 0.0

    def __int__(self) -> int:
        return int(round(self.value))


def _frac(x):
    return x - np.floor(x)


def _floor_ratio(x: float, ell: int, n: int) -> int:
    """floor(x * ell / n) in exact rational arithmetic."""
    q = Fraction(x) * ell / n
    return math.floor(q)


def count_tau_n(cycles: CycleLengths, interval: IntervalSpec) -> CountResult:
    """Number of atoms k/y_j^{(n)} in (a, a+b], y_j^{(n)} = l_j / n."""
    total = 0
    for ell in cycles.lengths:
        total += _floor_ratio(interval.upper, ell, cycles.n) - _floor_ratio(interval.a, ell, cycles.n)
    return CountResult(float(total))


def _floor_shift(x: float, ell: int, n: int, phase: float) -> int:
    return math.floor(Fraction(x) * ell / n - Fraction(phase))


def count_tau_n_modified(cycles: CycleLengths, phases, interval: IntervalSpec) -> CountResult:
    """Number of atoms (k + Phi_j)/y_j^{(n)} in (a, a+b]."""
    phases = list(phases)
    if len(phases) != cycles.num_cycles:
        raise ValueError("one phase per cycle is required")
    total = 0
    for ell, phi in zip(cycles.lengths, phases):
        total += _floor_shift(interval.upper, ell, cycles.n, phi) - _floor_shift(interval.a, ell, cycles.n, phi)
    return CountResult(float(total))


def count_limit_tau(gem: GemSample, a: float, b: float) -> CountResult:
    """X(a, a+b) = b - sum_j ({(a+b) y_j} - {a y_j}).

    Sticks past the truncation index satisfy (a+b) y_j < 1 as soon as
    (a+b) * residual < 1, so each contributes exactly b * y_j and the tail
    is b * residual in closed form.
    """
    if not a > 0:
        raise InvalidWindow("tau_infinity excludes k = 0, so the window needs a > 0")
    if not b > 0:
        raise InvalidWindow("b must be > 0")
    y = gem.sticks
    body = math.fsum(_frac((a + b) * y) - _frac(a * y))
    value = b - body - b * gem.residual
    exact_tail = (a + b) * gem.residual < 1.0
    return CountResult(value, 0.0 if exact_tail else b * gem.residual)


def count_limit_tau_modified(phased: PhasedGem, A: float) -> CountResult:
    """tilde X(A) = A + sum_j (1{Phi_j <= {A y_j}} - {A y_j}), the count on [0, A].

    The tail beyond the truncation index is dropped; its mean is zero and its
    absolute contribution is below A * residual.
    """
    if not A > 0:
        raise InvalidWindow("A must be > 0")
    p = _frac(A * phased.gem.sticks)
    value = A + math.fsum((phased.phases <= p).astype(float) - p)
    return CountResult(value, A * phased.gem.residual)


def count_shifted(gem: GemSample, s: float, t: float) -> CountResult:
    """X(s, s+t): tau_inf seen through the shift x -> x + s."""
    return count_limit_tau(gem, s, t)


# ---------------------------------------------------------------------------
# Direct enumeration (independent of the fractional-part identities).


def enumerate_limit_points(sticks, a: float, b: float) -> list[tuple[int, int]]:
    """(j, k) with a < k / y_j <= a + b, k >= 1, listed by brute force."""
    out = []
    for j, y in enumerate(sticks):
        k = 1
        while k / y <= a + b:
            if k / y > a:
                out.append((j, k))
            k += 1
    return out


def enumerate_modified_points(sticks, phases, lo: float, hi: float, closed_left: bool = True):
    """(j, k) with (k + Phi_j)/y_j in [lo, hi] (or (lo, hi]), by brute force."""
    out = []
    for j, (y, phi) in enumerate(zip(sticks, phases)):
        k = math.floor(lo * y - phi) - 1
        while (k + phi) / y <= hi:
            x = (k + phi) / y
            if x > lo or (closed_left and x == lo):
                out.append((j, k))
            k += 1
    return out


# ---------------------------------------------------------------------------
# Vectorized versions over matrices of sticks (rows = replicates).


def limit_counts(sticks: np.ndarray, a: float, b: float) -> np.ndarray:
    """X(a, a+b) for each row, as sum_j floor((a+b) y_j) - floor(a y_j).

    Equal to the fractional-part form because the full stick sequence sums to
    one; unused (zero-padded) sticks contribute nothing.
    """
    if not a > 0:
        raise InvalidWindow("tau_infinity excludes k = 0, so the window needs a > 0")
    return (np.floor((a + b) * sticks) - np.floor(a * sticks)).sum(axis=1).astype(np.int64)


def modified_counts(sticks: np.ndarray, phases: np.ndarray, A: float) -> np.ndarray:
    """tilde X(A) for each row, as sum_j floor(A y_j) + 1{Phi_j <= {A y_j}}."""
    ay = A * sticks
    fl = np.floor(ay)
    return (fl + (phases <= ay - fl)).sum(axis=1).astype(np.int64)


def za_values(sticks: np.ndarray, A: float) -> np.ndarray:
    """Z_A = sum_j p_j (1 - p_j) / log A with p_j = {A y_j}."""
    p = _frac(A * sticks)
    return (p * (1.0 - p)).sum(axis=1) / math.log(A)


def tau_n_counts(lengths: np.ndarray, n: int, a: float, b: float) -> np.ndarray:
    """count_tau_n for rows of cycle lengths (zero padded), exact integer arithmetic."""
    lengths = np.asarray(lengths, dtype=np.int64)
    fa, fb = Fraction(a), Fraction(a + b)
    # floor(x * l / n) = (x.num * l) // (x.den * n) exactly; Python ints once int64 could overflow
    scale = max(fb.numerator, fa.numerator, fb.denominator * n, fa.denominator * n)
    big = scale * max(int(lengths.max(initial=0)), 1) >= 2**62
    if big:
        lengths = lengths.astype(object)
    hi = (fb.numerator * lengths) // (fb.denominator * n)
    lo = (fa.numerator * lengths) // (fa.denominator * n)
    return (hi - lo).sum(axis=1)
