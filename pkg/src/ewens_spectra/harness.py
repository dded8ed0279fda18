"""Monte-Carlo driver and statistical verdicts.

Replicates are generated in blocks of :data:`~ewens_spectra.streams.BLOCK_SIZE`.
Block ``b`` of statistic ``sid`` draws from ``make_rng(seed, sid.key(), b)``,
so every series is bit-identical whatever the number of worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import ndtr

from . import counting
from .errors import ConfigInvalid, DegenerateSeries, InsufficientGrid
from .ewens import as_theta, batch_cycle_counts, ewens_type_probability, integer_partitions
from .exact import campbell_moments, parse_real
from .gem_poisson import coupling_counts, first_spacing, gem_batch, paintbox_virtual, poisson_batch
from .streams import block_ranges, make_rng


@dataclass(frozen=True)
class Thresholds:
    """Every verdict threshold used by the test suite and the CLI."""

    slope_rel_tol_modified: float = 0.10
    slope_rel_tol_interval: float = 0.15
    slope_rel_tol_ratio: float = 0.15
    ks_modified: float = 0.05
    ks_interval: float = 0.06
    mean_residual_bound: float = 3.0
    mean_stderr_mult: float = 3.0
    za_median_rel_tol: float = 0.10
    coupling_sigma_mult: float = 3.0
    coupling_second_moment_rel_tol: float = 0.10
    ks_coupling: float = 0.02
    ks_translation: float = 0.02
    bridge_match_rate: float = 0.95
    chi2_alpha: float = 1e-3
    min_grid_points: int = 4
    min_grid_decades: float = 3.0
    min_ks_length: int = 1000


DEFAULT_THRESHOLDS = Thresholds()

#: sticks are broken until residual * scale < tail bound
COUNT_TAIL_BOUND = 1e-3  # exact for X(a, a+b): any tail below 1/(a+b) adds nothing
MODIFIED_TAIL_BOUND = 1e-6  # X~(A): a dropped stick flips the count w.p. <= A * residual


# ---------------------------------------------------------------------------
# Series and statistic descriptors


@dataclass(frozen=True)
class StatisticId:
    """Which statistic, at which scale.

    kinds:
      ``xtilde``      X~(A) with A = scale
      ``x_interval``  X(a, a + scale), parameter ``a`` (default 1)
      ``x_ratio``     X(scale, nu * scale), parameter ``nu``
      ``x_shift``     X(scale, scale + t), parameter ``t``
      ``za``          Z_A with A = scale
      ``y1``          first GEM stick (scale ignored)
    """

    kind: str
    theta: float
    scale: float
    params: tuple = ()

    def param(self, name: str, default=None):
        return dict(self.params).get(name, default)

    def key(self) -> str:
        extra = ",".join(f"{k}={v}" for k, v in self.params)
        return f"{self.kind}|theta={self.theta!r}|scale={self.scale!r}|{extra}"


@dataclass(frozen=True)
class StatSeries:
    values: np.ndarray
    master_seed: int
    replicate_count: int
    statistic_id: StatisticId

    def __post_init__(self):
        v = np.array(self.values)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if len(v) != self.replicate_count:
            raise ValueError("series length differs from replicate_count")

    def mean(self) -> float:
        return float(np.mean(self.values))

    def variance(self) -> float:
        return float(np.var(self.values, ddof=1))

    def mean_stderr(self) -> float:
        return math.sqrt(self.variance() / self.replicate_count)

    def variance_stderr(self) -> float:
        return variance_stderr(self.values)


def variance_stderr(values: np.ndarray) -> float:
    """Standard error of the sample variance from the fourth central moment."""
    x = np.asarray(values, dtype=float)
    n = len(x)
    d = x - x.mean()
    m2 = float(np.mean(d * d))
    m4 = float(np.mean(d**4))
    return math.sqrt(max(m4 - m2 * m2 * (n - 3) / (n - 1), 0.0) / n)


def _nu(stat: StatisticId) -> float:
    return float(parse_real(stat.param("nu", "2")))


def _block_values(stat: StatisticId, rng: np.random.Generator, size: int) -> np.ndarray:
    t = stat.theta
    kind, s = stat.kind, stat.scale
    stick_rng, phase_rng = rng.spawn(2)
    if kind in ("xtilde", "za"):
        sticks, _ = gem_batch(t, size, stick_rng, MODIFIED_TAIL_BOUND, s)
        if kind == "za":
            return counting.za_values(sticks, s)
        return counting.modified_counts(sticks, phase_rng.random(sticks.shape), s)
    if kind == "y1":
        sticks, _ = gem_batch(t, size, stick_rng, 0.5, 1.0)
        return sticks[:, 0].copy()
    if kind == "x_interval":
        a, b = float(stat.param("a", 1.0)), s
    elif kind == "x_ratio":
        a, b = s, (_nu(stat) - 1.0) * s
    elif kind == "x_shift":
        a, b = s, float(stat.param("t"))
    else:
        raise ConfigInvalid(f"unknown statistic kind {kind!r}")
    sticks, _ = gem_batch(t, size, stick_rng, COUNT_TAIL_BOUND, a + b)
    return counting.limit_counts(sticks, a, b)


def generate_series(stat: StatisticId, replicates: int, master_seed: int, threads: int = 1) -> StatSeries:
    if replicates < 1:
        raise ConfigInvalid("replicates must be >= 1")
    as_theta(stat.theta)
    blocks = list(block_ranges(replicates))

    def run(block):
        b, start, stop = block
        return _block_values(stat, make_rng(master_seed, stat.key(), b), stop - start)

    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, blocks))
    else:
        parts = [run(blk) for blk in blocks]
    return StatSeries(np.concatenate(parts), master_seed, replicates, stat)


def run_experiment(
    kind: str,
    scale_grid: Sequence[float],
    replicates: int,
    theta,
    master_seed: int,
    params: tuple = (),
    threads: int = 1,
) -> dict[float, StatSeries]:
    """One :class:`StatSeries` per scale."""
    if replicates < 1:
        raise ConfigInvalid("replicates must be >= 1")
    t = as_theta(theta).theta
    grid = [float(s) for s in scale_grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigInvalid("scale grid must be strictly increasing")
    return {s: generate_series(StatisticId(kind, t, s, tuple(params)), replicates, master_seed, threads) for s in grid}


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov verdicts


@dataclass(frozen=True)
class KsVerdict:
    statistic: float
    n: int
    threshold: float
    passed: bool

    @property
    def pass_(self) -> bool:
        return self.passed


def _is_integer_valued(x: np.ndarray) -> bool:
    return bool(np.all(np.isfinite(x)) and np.all(x == np.round(x)))


def ks_statistic_normal(values, mean: float = 0.0, sd: float = 1.0) -> float:
    """sup |F_emp - Phi((. - mean)/sd)|.

    Integer-valued samples are compared at their atoms, with the normal CDF
    evaluated at the half-integer midpoints (continuity correction).
    """
    x = np.sort(np.asarray(values, dtype=float))
    n = len(x)
    if _is_integer_valued(x):
        atoms, counts = np.unique(x, return_counts=True)
        emp = np.cumsum(counts) / n
        ref = ndtr((atoms + 0.5 - mean) / sd)
        below = ndtr((atoms[0] - 0.5 - mean) / sd)
        return float(max(np.max(np.abs(emp - ref)), below))
    cdf = ndtr((x - mean) / sd)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - cdf), np.max(cdf - (i - 1) / n)))


def ks_normal(
    series: StatSeries | np.ndarray,
    standardize: str = "theoretical",
    mean: float | None = None,
    variance: float | None = None,
    threshold: float = DEFAULT_THRESHOLDS.ks_modified,
    min_length: int = DEFAULT_THRESHOLDS.min_ks_length,
) -> KsVerdict:
    """KS distance to N(0, 1) after standardizing by given or empirical moments."""
    x = np.asarray(series.values if isinstance(series, StatSeries) else series, dtype=float)
    if len(x) < min_length:
        raise ConfigInvalid(f"KS verdicts need at least {min_length} values, got {len(x)}")
    if np.var(x) == 0:
        raise DegenerateSeries("sample variance is zero")
    if standardize == "empirical":
        mu, var = float(np.mean(x)), float(np.var(x, ddof=1))
    elif standardize == "theoretical":
        if mean is None or variance is None:
            raise ConfigInvalid("theoretical standardization needs mean and variance")
        mu, var = float(mean), float(variance)
    else:
        raise ConfigInvalid(f"unknown standardization {standardize!r}")
    if var <= 0:
        raise DegenerateSeries("reference variance must be positive")
    d = ks_statistic_normal(x, mu, math.sqrt(var))
    return KsVerdict(d, len(x), threshold, d < threshold)


def two_sample_distance(x, y, threshold: float = DEFAULT_THRESHOLDS.ks_translation) -> KsVerdict:
    """Two-sample KS: sup over the pooled atoms of |F_x - F_y|."""
    a = np.sort(np.asarray(x.values if isinstance(x, StatSeries) else x, dtype=float))
    b = np.sort(np.asarray(y.values if isinstance(y, StatSeries) else y, dtype=float))
    atoms = np.unique(np.concatenate([a, b]))
    fa = np.searchsorted(a, atoms, side="right") / len(a)
    fb = np.searchsorted(b, atoms, side="right") / len(b)
    d = float(np.max(np.abs(fa - fb))) if len(atoms) else 0.0
    return KsVerdict(d, min(len(a), len(b)), threshold, d < threshold)


# ---------------------------------------------------------------------------
# Variance growth


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    residuals: np.ndarray
    grid: np.ndarray
    slope_stderr: float
    variances: np.ndarray
    variance_stderrs: np.ndarray

    def within(self, target: float, rel_tol: float) -> bool:
        return abs(self.slope - target) <= rel_tol * abs(target)


def _check_grid(grid: np.ndarray, min_points: int, min_decades: float):
    if len(grid) < min_points:
        raise InsufficientGrid(f"need >= {min_points} grid points, got {len(grid)}")
    span = math.log10(grid[-1] / grid[0]) if len(grid) else 0.0
    if span < min_decades - 1e-9:
        raise InsufficientGrid(f"grid spans {span:.2f} decades, need >= {min_decades}")


def variance_slope_fit(
    series: dict[float, StatSeries | np.ndarray],
    min_points: int = DEFAULT_THRESHOLDS.min_grid_points,
    min_decades: float = DEFAULT_THRESHOLDS.min_grid_decades,
) -> FitResult:
    """Weighted least squares of sample variance against log(scale)."""
    grid = np.array(sorted(series), dtype=float)
    _check_grid(grid, min_points, min_decades)
    vals = [np.asarray(series[s].values if isinstance(series[s], StatSeries) else series[s], float) for s in grid]
    var = np.array([np.var(v, ddof=1) for v in vals])
    se = np.array([variance_stderr(v) for v in vals])
    x = np.log(grid)
    w = 1.0 / np.maximum(se, 1e-12) ** 2
    design = np.column_stack([np.ones_like(x), x])
    cov = np.linalg.inv(design.T @ (design * w[:, None]))
    intercept, slope = cov @ (design.T @ (w * var))
    resid = var - slope * x - intercept
    return FitResult(float(slope), float(intercept), resid, grid, float(math.sqrt(cov[1, 1])), var, se)


# ---------------------------------------------------------------------------
# Z_A diagnostic


@dataclass(frozen=True)
class ZaSummary:
    A: float
    median: float
    iqr: float
    values: np.ndarray


def za_diagnostic(theta, A_grid: Sequence[float], replicates: int, master_seed: int, threads: int = 1) -> list[ZaSummary]:
    out = []
    for A, s in run_experiment("za", A_grid, replicates, theta, master_seed, threads=threads).items():
        q1, med, q3 = np.percentile(s.values, [25, 50, 75])
        out.append(ZaSummary(A, float(med), float(q3 - q1), s.values))
    return out


# ---------------------------------------------------------------------------
# Mean asymptotics for X(a, a+b)


@dataclass(frozen=True)
class MeanResidual:
    b: float
    mean: float
    stderr: float
    residual: float
    campbell_residual: float


def mean_asymptotic_check(
    theta,
    a: float,
    b_grid: Sequence[float],
    replicates: int,
    master_seed: int,
    coefficient: float | None = None,
    threads: int = 1,
    min_decades: float = 2.0,
) -> list[MeanResidual]:
    """Residuals E_emp X(a, a+b) - b + coefficient * log b (coefficient theta/2 by default).

    ``campbell_residual`` is the same centering applied to the exact Poisson
    mean b - E(T) from Campbell's formula, which differs from E X by a
    bounded coupling slack.
    """
    t = as_theta(theta).theta
    grid = np.array([float(b) for b in b_grid])
    _check_grid(grid, 2, min_decades)
    coef = t / 2.0 if coefficient is None else coefficient
    runs = run_experiment("x_interval", grid, replicates, t, master_seed, (("a", a),), threads)
    out = []
    for b, s in runs.items():
        campbell_mean, _ = campbell_moments(a, b, t)
        out.append(
            MeanResidual(
                b,
                s.mean(),
                s.mean_stderr(),
                s.mean() - b + coef * math.log(b),
                (b - campbell_mean) - b + coef * math.log(b),
            )
        )
    return out


# ---------------------------------------------------------------------------
# Coupling with the scale-invariant Poisson process


@dataclass(frozen=True)
class CouplingSummary:
    x_max: float
    outer_counts: np.ndarray  # #{k <= 0 : Y_k < 1}
    sym_diff: np.ndarray  # #(V sym-diff W)
    first_spacings: np.ndarray  # 1 - X_1

    @property
    def outer_mean(self) -> float:
        return float(np.mean(self.outer_counts))

    @property
    def outer_stderr(self) -> float:
        return float(np.std(self.outer_counts, ddof=1) / math.sqrt(len(self.outer_counts)))

    @property
    def sym_second_moment(self) -> float:
        return float(np.mean(self.sym_diff.astype(float) ** 2))


def coupling_experiment(
    theta, x_max: float, replicates: int, master_seed: int, epsilon: float = 1e-6
) -> CouplingSummary:
    t = as_theta(theta).theta
    outs, syms, firsts = [], [], []
    key = f"coupling|theta={t!r}|x_max={x_max!r}|eps={epsilon!r}"
    for b, start, stop in block_ranges(replicates):
        inner, outer = poisson_batch(t, epsilon, x_max, stop - start, make_rng(master_seed, key, b))
        n_out, sym = coupling_counts(inner, outer)
        outs.append(n_out)
        syms.append(sym)
        firsts.append(first_spacing(inner))
    return CouplingSummary(x_max, np.concatenate(outs), np.concatenate(syms), np.concatenate(firsts))


# ---------------------------------------------------------------------------
# Finite n


@dataclass(frozen=True)
class BridgeResult:
    n: int
    interval: tuple[float, float]
    finite_counts: np.ndarray
    limit_counts: np.ndarray

    @property
    def match_rate(self) -> float:
        return float(np.mean(self.finite_counts == self.limit_counts))


def finite_n_bridge(
    n: int, theta, trajectories: int, master_seed: int, a: float = 1.0, b: float = 10.0
) -> BridgeResult:
    """count_tau_n of sigma_n against the limiting count on the same virtual permutation.

    Each trajectory is built with the paintbox coupling, so the limit
    frequencies y_j are known exactly and the limit count uses them.
    """
    t = as_theta(theta).theta
    spec = counting.IntervalSpec(a, b)
    fin, lim = [], []
    key = f"bridge|theta={t!r}|n={n}"
    for i in range(trajectories):
        sample = paintbox_virtual(n, t, make_rng(master_seed, key, i))
        fin.append(int(counting.count_tau_n(sample.cycles, spec)))
        y = sample.limits[None, :]
        lim.append(int(counting.limit_counts(y, a, b)[0]))
    return BridgeResult(n, (a, a + b), np.array(fin), np.array(lim))


@dataclass(frozen=True)
class ChiSquareResult:
    n: int
    statistic: float
    dof: int
    p_value: float
    passed: bool


def ewens_chi_square(n: int, theta, replicates: int, master_seed: int, alpha: float = DEFAULT_THRESHOLDS.chi2_alpha):
    """Pearson chi-square of sampled cycle types of sigma_n against the Ewens sampling formula."""
    from scipy.stats import chi2

    t = as_theta(theta).theta
    parts = list(integer_partitions(n))
    index = {p: i for i, p in enumerate(parts)}
    observed = np.zeros(len(parts))
    key = f"ewens-type|theta={t!r}|n={n}"
    for b, start, stop in block_ranges(replicates):
        lengths = batch_cycle_counts(n, t, stop - start, make_rng(master_seed, key, b))
        types, counts = np.unique(-np.sort(-lengths, axis=1), axis=0, return_counts=True)
        for row, c in zip(types, counts):
            observed[index[tuple(int(v) for v in row if v > 0)]] += c
    expected = np.array([ewens_type_probability(p, t) for p in parts]) * replicates
    stat = float(np.sum((observed - expected) ** 2 / expected))
    dof = len(parts) - 1
    p = float(chi2.sf(stat, dof)) if dof > 0 else 1.0
    return ChiSquareResult(n, stat, dof, p, p > alpha)
