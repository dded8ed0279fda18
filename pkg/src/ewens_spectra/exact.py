"""Deterministic numerics: Cesaro constants, exact integrals, Campbell moments.

Long O(n) sums go through :func:`math.fsum` (exactly rounded), so closed
forms with up to 10^7 terms stay accurate well below 1e-8.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Decimal, getcontext
from typing import Sequence

import numpy as np

from .errors import DivergentAtZero, NotCoprime
from .ewens import as_theta

getcontext().prec = 50

#: 40-digit literals for irrational parameters
IRRATIONALS = {
    "sqrt2": "1.414213562373095048801688724209698078570",
    "golden": "1.618033988749894848204586834365638117720",
    "pi": "3.141592653589793238462643383279502884197",
    "e": "2.718281828459045235360287471352662497757",
}


def parse_real(text) -> Decimal:
    """Decimal from a keyword (sqrt2, golden, pi, e), a decimal string or a number."""
    if isinstance(text, Decimal):
        return text
    if isinstance(text, (int, float)):
        return Decimal(repr(text)) if isinstance(text, float) else Decimal(text)
    key = str(text).strip().lower()
    if key in IRRATIONALS:
        return Decimal(IRRATIONALS[key])
    return Decimal(key)


def _fsum_chunks(values: np.ndarray) -> float:
    return math.fsum(values)


# ---------------------------------------------------------------------------
# Fractional parts of j * beta with beta carried beyond double precision


class _Multiplier:
    """beta = h1 + h2 + lo with h1, h2 short enough that j*h1, j*h2 are exact."""

    MAX_J = 2**26

    def __init__(self, beta):
        d = parse_real(beta)
        hi = float(d)
        split = 134217729.0 * hi  # Dekker split, 2**27 + 1
        self.h1 = split - (split - hi)
        self.h2 = hi - self.h1
        self.lo = float(d - Decimal(hi))

    def frac(self, j: np.ndarray) -> np.ndarray:
        if len(j) and j[-1] >= self.MAX_J:
            raise ValueError(f"index too large for exact splitting (>= {self.MAX_J})")
        jf = j.astype(float)
        a = jf * self.h1
        b = jf * self.h2
        s = (a - np.floor(a)) + (b - np.floor(b)) + jf * self.lo
        return s - np.floor(s)


@dataclass(frozen=True)
class AsymptoticConstant:
    value: float
    kind: str
    params: dict = field(default_factory=dict)
    certificate: float = 0.0
    converged: bool = True
    extrapolated: float | None = None

    def to_record(self) -> dict:
        return {
            "kind": self.kind,
            "params": self.params,
            "value": self.value,
            "certificate": {
                "dyadic_gap": self.certificate,
                "converged": self.converged,
                "extrapolated": self.extrapolated,
            },
        }


_CESARO_KINDS = ("c1", "c2", "ell")


def _cesaro_terms(kind: str, fa: _Multiplier | None, fb: _Multiplier, j: np.ndarray) -> np.ndarray:
    xb = fb.frac(j)
    if kind == "ell":
        return xb * (1.0 - xb)
    diff = xb - fa.frac(j) if fa is not None else xb
    return diff if kind == "c1" else diff * diff


def cesaro_constant(kind: str, alpha="0", beta="sqrt2", n_terms: int = 10**7, tol: float = 1e-3, chunk: int = 2**20):
    """Partial Cesaro average (1/n) sum_{j<=n} of the c1 / c2 / ell summand.

    For ``kind="ell"`` the summand is {j kappa}(1 - {j kappa}) with
    kappa = beta - alpha.  The averages at n/2 and n are compared; their gap
    is the certificate, and ``2 S_n - S_{n/2}`` is reported as a
    Richardson-style extrapolation.
    """
    if kind not in _CESARO_KINDS:
        raise ValueError(f"kind must be one of {_CESARO_KINDS}")
    n = int(n_terms)
    if n < 2:
        raise ValueError("n_terms must be >= 2")
    a_dec, b_dec = parse_real(alpha), parse_real(beta)
    if kind == "ell":
        fa, fb = None, _Multiplier(b_dec - a_dec)
    else:
        fa = None if a_dec == 0 else _Multiplier(a_dec)
        fb = _Multiplier(b_dec)
    half = n // 2
    partial = {}
    sums = []
    start = 1
    for stop in (half, n):
        while start <= stop:
            end = min(start + chunk - 1, stop)
            j = np.arange(start, end + 1, dtype=np.int64)
            sums.append(_fsum_chunks(_cesaro_terms(kind, fa, fb, j)))
            start = end + 1
        partial[stop] = math.fsum(sums)
    s_half, s_full = partial[half] / half, partial[n] / n
    gap = abs(s_full - s_half)
    params = {"alpha": str(alpha), "beta": str(beta), "n_terms": n}
    return AsymptoticConstant(s_full, kind, params, gap, gap < tol, 2 * s_full - s_half)


def rational_c2(r: int, s: int, alpha="sqrt2", n_terms: int = 10**6, tol: float = 1e-3) -> AsymptoticConstant:
    """c2 for beta = (r/s) alpha: closed form (1/6)(1 - 1/(rs)), checked against Cesaro."""
    if r < 1 or s < 1:
        raise ValueError("r and s must be positive integers")
    if math.gcd(r, s) != 1:
        raise NotCoprime(f"gcd({r}, {s}) = {math.gcd(r, s)}")
    if r < s:
        raise ValueError("need r/s >= 1")
    closed = (1.0 - 1.0 / (r * s)) / 6.0
    a = parse_real(alpha)
    numeric = cesaro_constant("c2", a, a * r / s, n_terms, tol)
    gap = abs(closed - numeric.value)
    params = {"r": r, "s": s, "alpha": str(alpha), "n_terms": int(n_terms), "cesaro": numeric.value}
    return AsymptoticConstant(closed, "var_rational", params, gap, gap < tol)


# ---------------------------------------------------------------------------
# Fourier series of {x}(1 - {x})


def fourier_b2(x: float, k_max: int) -> float:
    """1/6 - (1/pi^2) sum_{k=1}^{k_max} cos(2 pi k x) / k^2."""
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    k = np.arange(1, k_max + 1, dtype=np.int64)
    phase = k * float(x)
    phase -= np.floor(phase)
    terms = np.cos(2.0 * math.pi * phase) / (k.astype(float) ** 2)
    return 1.0 / 6.0 - math.fsum(terms) / math.pi**2


def b2_exact(x: float) -> float:
    f = x - math.floor(x)
    return f * (1.0 - f)


# ---------------------------------------------------------------------------
# Closed forms for integrals of fractional parts

_SERIES_FROM = 1000


def _one_minus_klog(k: np.ndarray) -> np.ndarray:
    """1 - k log(1 + 1/k)."""
    kf = k.astype(float)
    out = 1.0 - kf * np.log1p(1.0 / kf)
    big = k >= _SERIES_FROM
    if big.any():
        inv = 1.0 / kf[big]
        # sum_{m>=2} (-1)^m / (m k^{m-1})
        acc = np.zeros_like(inv)
        for m in range(9, 1, -1):
            acc = acc * inv + (-1.0) ** m / m
        out[big] = acc * inv
    return out


def _h_term(k: np.ndarray) -> np.ndarray:
    """1/2 - k + k^2 log(1 + 1/k)."""
    kf = k.astype(float)
    out = 0.5 - kf + kf * kf * np.log1p(1.0 / kf)
    big = k >= _SERIES_FROM
    if big.any():
        inv = 1.0 / kf[big]
        # sum_{m>=3} (-1)^{m+1} k^{2-m} / m
        acc = np.zeros_like(inv)
        for m in range(11, 2, -1):
            acc = acc * inv + (-1.0) ** (m + 1) / m
        out[big] = acc * inv
    return out


def integral_frac_over_x(n: int) -> float:
    """int_0^1 {n x} / x dx = 1 + sum_{k=1}^{n-1} (1 - k log(1 + 1/k))."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 1:
        return 1.0
    k = np.arange(1, n, dtype=np.int64)
    return math.fsum(np.concatenate([[1.0], _one_minus_klog(k)]))


def log_factorial(n: int) -> float:
    """log(n!) by summing logs (no Stirling approximation)."""
    if n < 2:
        return 0.0
    return math.fsum(np.log(np.arange(2, n + 1, dtype=float)))


def integral_frac_logx(n: int) -> float:
    """int_0^1 {n x} log x dx in closed form."""
    if n < 1:
        raise ValueError("n must be >= 1")
    k = np.arange(1, n, dtype=np.int64)
    tail = math.fsum(_h_term(k)) if n > 1 else 0.0
    parts = [-0.5 * math.log(n), log_factorial(n) / (2 * n), -1.0 / (4 * n), -tail / (2 * n)]
    return math.fsum(parts)


def frac_int_log(p: int) -> float:
    """int_0^1 {p x} log x dx = p/4 + sum_{j<p} (j/p) log(j/p) - 1/2."""
    if p < 1:
        raise ValueError("p must be >= 1")
    j = np.arange(1, p, dtype=float) / p
    return math.fsum(np.concatenate([[p / 4.0, -0.5], j * np.log(j)]))


def sum_frac_log(ell: int, n: int, sign: int = 1) -> float:
    """sum_{k=1}^{n-1} (2 {sign * ell * k / n} - 1) log(k / n), fractional parts exact."""
    if ell < 1 or n < 2:
        raise ValueError("need ell >= 1 and n >= 2")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    k = np.arange(1, n, dtype=np.int64)
    frac = np.mod(sign * ell * k, n) / n
    return math.fsum((2.0 * frac - 1.0) * np.log(k / n))


def frac_log_slope(ell: int) -> float:
    """ell/2 + 2 sum_{m<ell} (m/ell) log(m/ell): the linear coefficient of sum_frac_log."""
    m = np.arange(1, ell, dtype=float) / ell
    return ell / 2.0 + 2.0 * math.fsum(m * np.log(m))


def sum_frac_log_residual(ell: int, n: int, sign: int = 1) -> float:
    """sum_frac_log minus its two leading asymptotic terms."""
    lead = sign * (frac_log_slope(ell) * n - 0.5 * math.log(n))
    return sum_frac_log(ell, n, sign) - lead


def variance_integral_exact(p: int, q: int) -> float:
    """int_0^1 ({p x} - {q x})^2 / x dx via the integration-by-parts closed form."""
    if p < 1 or q < 1:
        raise ValueError("p and q must be positive integers")
    if p == q:
        return 0.0
    g = math.gcd(p, q)
    k = np.arange(1, p, dtype=np.int64)
    j = np.arange(1, q, dtype=np.int64)
    m = np.arange(1, g, dtype=float)
    sum_p = (2.0 * (np.mod(q * k, p) / p) - 1.0) * np.log(k / p)
    sum_q = (2.0 * (np.mod(p * j, q) / q) - 1.0) * np.log(j / q)
    parts = np.concatenate(
        [
            [-2.0 * (p - q) * (frac_int_log(p) - frac_int_log(q))],
            -sum_p,
            -sum_q,
            -2.0 * np.log(m / g),
        ]
    )
    return math.fsum(parts)


# ---------------------------------------------------------------------------
# Piecewise polynomials and exact quadrature of g(x)/x on (0, 1]

_SERIES_RATIO = 1.0 / 64.0
_SERIES_TERMS = 12


@dataclass(frozen=True)
class PiecewisePoly:
    """g on (0, 1]: on piece i, g(x) = sum_m coeffs[i, m] (x - breakpoints[i])^m.

    ``breakpoints`` has one more entry than ``coeffs`` has rows, starts at
    0 and ends at 1.
    """

    breakpoints: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        c = np.atleast_2d(np.asarray(self.coeffs, dtype=float))
        if len(bp) != len(c) + 1:
            raise ValueError("need len(breakpoints) == len(coeffs) + 1")
        if np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def polynomial(cls, coeffs: Sequence[float]) -> "PiecewisePoly":
        """A single piece: g(x) = sum_m coeffs[m] x^m on (0, 1]."""
        return cls(np.array([0.0, 1.0]), np.array([coeffs], dtype=float))

    @classmethod
    def frac_diff(cls, alpha: float, beta: float, merge_tol: float = 1e-15) -> "PiecewisePoly":
        """{beta x} - {alpha x} on (0, 1]; jumps at k/alpha and k/beta."""
        pts = [np.array([0.0, 1.0])]
        for c in (alpha, beta):
            if c > 0:
                pts.append(np.arange(1, math.ceil(c)) / c if c > 1 else np.empty(0))
                pts[-1] = pts[-1][pts[-1] < 1.0]
        bp = np.unique(np.concatenate(pts))
        keep = np.concatenate([[True], np.diff(bp) > merge_tol * max(alpha, beta, 1.0)])
        bp = bp[keep]
        bp[-1] = 1.0
        mid = 0.5 * (bp[:-1] + bp[1:])
        jump = np.floor(beta * mid) - np.floor(alpha * mid)
        slope = beta - alpha
        c0 = slope * bp[:-1] - jump
        return cls(bp, np.column_stack([c0, np.full_like(c0, slope)]))

    @property
    def degree(self) -> int:
        return self.coeffs.shape[1] - 1

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        i = np.clip(np.searchsorted(self.breakpoints, x, side="left") - 1, 0, len(self.coeffs) - 1)
        d = x - self.breakpoints[i]
        c = self.coeffs[i]
        out = np.zeros_like(d)
        for m in range(self.degree, -1, -1):
            out = out * d + c[..., m]
        return out

    def square(self) -> "PiecewisePoly":
        c = self.coeffs
        deg = self.degree
        out = np.zeros((len(c), 2 * deg + 1))
        for i in range(deg + 1):
            for j in range(deg + 1):
                out[:, i + j] += c[:, i] * c[:, j]
        return PiecewisePoly(self.breakpoints, out)

    def integral(self) -> float:
        """int_0^1 g(x) dx."""
        width = np.diff(self.breakpoints)
        m = np.arange(self.coeffs.shape[1])
        return math.fsum((self.coeffs * width[:, None] ** (m + 1) / (m + 1)).ravel())

    def compose_frac(self, t: float) -> "PiecewisePoly":
        """x -> g({t x}) on (0, 1], for t >= 1."""
        if t < 1:
            raise ValueError("t must be >= 1")
        periods = math.ceil(t)
        k = np.repeat(np.arange(periods, dtype=float), len(self.coeffs))
        starts = np.tile(self.breakpoints[:-1], periods)
        u = (k + starts) / t
        keep = u < 1.0
        u = u[keep]
        scale = t ** np.arange(self.coeffs.shape[1])
        c = np.tile(self.coeffs, (periods, 1))[keep] * scale
        bp = np.concatenate([u, [1.0]])
        good = np.diff(bp) > 0
        return PiecewisePoly(np.concatenate([u[good], [1.0]]), c[good])


def _int_poly_over_shift(c: np.ndarray, width: np.ndarray, shift: np.ndarray) -> np.ndarray:
    """Per-row int_0^width P(d) / (d + shift) dd, shift > 0, P(d) = sum_m c[:, m] d^m."""
    deg = c.shape[1] - 1
    out = np.zeros(len(c))
    series = width <= _SERIES_RATIO * shift
    if series.any():
        cs, w, s = c[series], width[series], shift[series]
        r = w / s
        acc = np.zeros(len(cs))
        # 1/(d+s) = (1/s) sum_j (-d/s)^j
        for m in range(deg + 1):
            inner = np.zeros(len(cs))
            for j in range(_SERIES_TERMS - 1, -1, -1):
                inner = inner * (-r) + 1.0 / (m + j + 1)
            acc += cs[:, m] * w ** (m + 1) * inner
        out[series] = acc / s
    exact = ~series
    if exact.any():
        ce, w, s = c[exact], width[exact], shift[exact]
        # synthetic division of P(d) by (d + s)
        q = np.zeros((len(ce), max(deg, 1)))
        rem = ce[:, deg].copy()
        for m in range(deg - 1, -1, -1):
            if m < q.shape[1]:
                q[:, m] = rem
            rem = ce[:, m] - s * rem
        poly = np.zeros(len(ce))
        for m in range(deg):
            poly += q[:, m] * w ** (m + 1) / (m + 1)
        out[exact] = poly + rem * np.log1p(w / s)
    return out


def piecewise_quadrature(g: PiecewisePoly, zero_tol: float = 0.0) -> float:
    """Exact int_0^1 g(x)/x dx for a piecewise polynomial g with g(0+) = 0."""
    u = g.breakpoints[:-1]
    width = np.diff(g.breakpoints)
    c = g.coeffs
    first = u == 0.0
    total = []
    if first.any():
        c0 = c[first]
        if np.any(np.abs(c0[:, 0]) > zero_tol):
            raise DivergentAtZero("g(0+) != 0, so g(x)/x is not integrable at 0")
        m = np.arange(1, c.shape[1])
        total.append(c0[:, 1:] * width[first][:, None] ** m / m)
    rest = ~first
    if rest.any():
        total.append(_int_poly_over_shift(c[rest], width[rest], u[rest]))
    return math.fsum(np.concatenate([np.ravel(t) for t in total]))


def frac_diff_square_integral(p: float, q: float) -> float:
    """int_0^1 ({p x} - {q x})^2 / x dx by piecewise quadrature."""
    return piecewise_quadrature(PiecewisePoly.frac_diff(p, q).square())


def campbell_moments(a: float, b: float, theta) -> tuple[float, float]:
    """Mean and variance of sum_{x in W} f_{a,b}(x) for the Poisson process theta/x dx on (0,1)."""
    if not (a > 0 and b > 0):
        raise ValueError("a and b must be > 0")
    t = as_theta(theta).theta
    f = PiecewisePoly.frac_diff(a, a + b)
    return t * piecewise_quadrature(f), t * piecewise_quadrature(f.square())


def transfo_value(f: PiecewisePoly, t: float) -> float:
    """int_0^1 f({t x}) / x dx."""
    return piecewise_quadrature(f.compose_frac(t))


def transfo_asymptotic_check(f: PiecewisePoly, t_grid) -> np.ndarray:
    """Residuals int_0^1 f({tx})/x dx - log(t) int_0^1 f over ``t_grid``."""
    mass = f.integral()
    return np.array([transfo_value(f, float(t)) - math.log(t) * mass for t in t_grid])


def outer_mass_integral(theta, upper: float = math.inf) -> float:
    """int_1^upper (1 - (s/(s+1))^theta) theta/s ds, by adaptive quadrature."""
    from scipy.integrate import quad

    t = as_theta(theta).theta

    def integrand(s):
        return -math.expm1(-t * math.log1p(1.0 / s)) * t / s

    value, _ = quad(integrand, 1.0, upper, limit=200, epsabs=1e-13, epsrel=1e-12)
    return value
