import math

import numpy as np
import pytest
from scipy.stats import norm

from ewens_spectra.errors import ConfigInvalid, DegenerateSeries, InsufficientGrid
from ewens_spectra.harness import (
    DEFAULT_THRESHOLDS,
    StatisticId,
    StatSeries,
    generate_series,
    ks_normal,
    ks_statistic_normal,
    mean_asymptotic_check,
    run_experiment,
    two_sample_distance,
    variance_slope_fit,
    variance_stderr,
    za_diagnostic,
)
from ewens_spectra.streams import make_rng


def test_zero_replicates_rejected():
    with pytest.raises(ConfigInvalid):
        run_experiment("xtilde", [10.0], 0, 1.0, 1)


def test_grid_must_increase():
    with pytest.raises(ConfigInvalid):
        run_experiment("xtilde", [100.0, 10.0], 10, 1.0, 1)


def test_unknown_kind():
    with pytest.raises(ConfigInvalid):
        generate_series(StatisticId("nope", 1.0, 1.0), 10, 1)


def test_same_seed_bit_identical():
    a = run_experiment("xtilde", [50.0], 5000, 1.0, 42)[50.0]
    b = run_experiment("xtilde", [50.0], 5000, 1.0, 42)[50.0]
    assert a.values.tobytes() == b.values.tobytes()


def test_independent_of_worker_count():
    sid = StatisticId("x_interval", 1.0, 100.0, (("a", 1.0),))
    one = generate_series(sid, 10_000, 7, threads=1)
    four = generate_series(sid, 10_000, 7, threads=4)
    assert one.values.tobytes() == four.values.tobytes()


def test_prefix_stable_across_replicate_counts():
    sid = StatisticId("xtilde", 1.0, 30.0)
    small = generate_series(sid, 1000, 3)
    large = generate_series(sid, 9000, 3)
    assert np.array_equal(small.values, large.values[:1000])


def test_disjoint_ids_uncorrelated():
    a = generate_series(StatisticId("xtilde", 1.0, 100.0), 100_000, 5)
    b = generate_series(StatisticId("xtilde", 1.0, 1000.0), 100_000, 5)
    assert abs(np.corrcoef(a.values, b.values)[0, 1]) < 0.01


def test_series_invariants():
    with pytest.raises(ValueError):
        StatSeries(np.zeros(3), 1, 4, StatisticId("xtilde", 1.0, 1.0))
    s = StatSeries(np.arange(10.0), 1, 10, StatisticId("xtilde", 1.0, 1.0))
    with pytest.raises(ValueError):
        s.values[0] = 5


def test_variance_estimator_sanity():
    rng = make_rng(1, "normal")
    n, sigma = 20_000, 2.0
    x = rng.normal(0, sigma, n)
    assert abs(np.var(x, ddof=1) - sigma**2) < 3 * math.sqrt(2 / (n - 1)) * sigma**2
    # normal data: the fourth-moment standard error is close to sqrt(2/n) sigma^2
    assert variance_stderr(x) == pytest.approx(math.sqrt(2 / n) * sigma**2, rel=0.05)


def test_ks_quantile_plugin():
    n = 1000
    q = norm.ppf((np.arange(1, n + 1) - 0.5) / n)
    v = ks_normal(q, "theoretical", 0.0, 1.0)
    assert v.statistic <= 0.5 / n + 1e-12
    assert v.passed


def test_ks_degenerate_and_short():
    with pytest.raises(DegenerateSeries):
        ks_normal(np.ones(2000), "empirical")
    with pytest.raises(ConfigInvalid):
        ks_normal(np.arange(10.0), "empirical")
    with pytest.raises(ConfigInvalid):
        ks_normal(np.arange(2000.0), "theoretical")


def test_ks_integer_continuity_correction():
    # Poisson(400) is close to N(400, 400); the half-integer comparison keeps the gap small
    rng = make_rng(2, "pois")
    x = rng.poisson(400, 50_000)
    assert ks_statistic_normal(x, 400, 20) < 0.01
    # naive comparison at the atoms is biased by about phi(0)/(2 sigma)
    atoms, counts = np.unique(x, return_counts=True)
    naive = np.max(np.abs(np.cumsum(counts) / len(x) - norm.cdf((atoms - 400) / 20)))
    assert naive > ks_statistic_normal(x, 400, 20)


def test_ks_calibration_meta_trials():
    rng = make_rng(3, "meta")
    passes = sum(ks_normal(rng.normal(size=10_000), "theoretical", 0.0, 1.0).passed for _ in range(100))
    assert passes >= 99


def test_two_sample_distance():
    x = np.array([1, 2, 2, 3])
    assert two_sample_distance(x, x).statistic == 0
    assert two_sample_distance(np.zeros(10), np.ones(10)).statistic == 1


def test_slope_fit_synthetic():
    rng = make_rng(4, "syn")
    grid = [1e2, 1e3, 1e4, 1e5]
    series = {s: rng.normal(0, math.sqrt(2 * math.log(s)), 20_000) for s in grid}
    fit = variance_slope_fit(series)
    assert abs(fit.slope - 2) < 4 * fit.slope_stderr
    assert len(fit.residuals) == 4
    assert np.allclose(fit.residuals, fit.variances - fit.slope * np.log(fit.grid) - fit.intercept)


def test_slope_fit_grid_requirements():
    series = {s: np.arange(100.0) for s in (1e2, 1e3, 1e4)}
    with pytest.raises(InsufficientGrid):
        variance_slope_fit(series)
    with pytest.raises(InsufficientGrid):
        variance_slope_fit({s: np.arange(100.0) for s in (1, 2, 3, 4)})
    assert variance_slope_fit(series, min_points=3, min_decades=2).grid.shape == (3,)


def test_thresholds_in_one_record():
    assert DEFAULT_THRESHOLDS.ks_modified == 0.05
    with pytest.raises(Exception):
        DEFAULT_THRESHOLDS.ks_modified = 0.1


def test_za_single_stick_vanishes():
    from ewens_spectra.counting import za_values

    assert za_values(np.array([[1.0]]), 1e5)[0] == 0.0


def test_za_diagnostic_shapes():
    out = za_diagnostic(1.0, [1e3, 1e4], 2000, 9)
    assert [z.A for z in out] == [1e3, 1e4]
    assert all(z.iqr > 0 for z in out)


def test_mean_check_coefficient_discrimination():
    # theta = 2: the right coefficient theta/2 = 1 keeps residuals flat,
    # coefficient 1/2 drifts by about (1/2) log b across the grid
    good = mean_asymptotic_check(2.0, 1.0, [1e2, 1e3, 1e4], 20_000, 11)
    bad = mean_asymptotic_check(2.0, 1.0, [1e2, 1e3, 1e4], 20_000, 11, coefficient=0.5)
    drift_good = good[-1].residual - good[0].residual
    drift_bad = bad[-1].residual - bad[0].residual
    assert abs(drift_good) < 0.5
    assert drift_bad == pytest.approx(drift_good - 0.5 * math.log(100), abs=1e-9)
    for row in good:
        assert abs(row.residual) < 3 + 3 * row.stderr
        # Campbell prediction and Monte-Carlo mean differ by a bounded slack
        assert abs(row.residual - row.campbell_residual) < 3


def test_modified_mean_centering():
    s = generate_series(StatisticId("xtilde", 1.0, 500.0), 50_000, 13)
    assert abs(s.mean() - 500.0) < 3 * s.mean_stderr()
