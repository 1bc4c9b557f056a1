import math

import numpy as np
import pytest
from scipy.stats import poisson

from iontrap_bench.detection import (CountModel, classify,
                                     discrimination_threshold,
                                     monte_carlo_fidelity, simulate_counts, snr)
from iontrap_bench.errors import ValidationError

# Frozen from the exhaustive integer-threshold scan at bright mean 26,
# dark mean 8 (side-imaging operating point: (4.5+2) kcps and 2 kcps
# over 4 ms).
GOLDEN_THRESHOLD = 16
GOLDEN_FIDELITY = 0.9887996784111577
GOLDEN_BRIGHT_ERROR = 0.014169632190839814
GOLDEN_DARK_ERROR = 0.008231010986844867


def side_imaging_model():
    return CountModel(signal_rate=4500.0, background_rate=2000.0, duration=4e-3)


def test_model_means():
    model = side_imaging_model()
    assert model.bright_mean == pytest.approx(26.0, rel=1e-12)
    assert model.dark_mean == pytest.approx(8.0, rel=1e-12)
    exclusive = CountModel(signal_rate=4500.0, background_rate=2000.0,
                           duration=4e-3, background_in_bright=False)
    assert exclusive.bright_mean == pytest.approx(18.0, rel=1e-12)


def test_zero_rates_all_zero_counts():
    model = CountModel(signal_rate=0.0, background_rate=0.0, duration=4e-3)
    counts = simulate_counts(model, "bright", 500, seed=1)
    assert np.all(counts == 0)


def test_bright_sample_mean():
    model = side_imaging_model()
    counts = simulate_counts(model, "bright", 10_000, seed=42)
    tol = 3.0 * math.sqrt(26.0) / math.sqrt(10_000)
    assert abs(counts.mean() - 26.0) < tol


def test_dark_sample_variance():
    model = side_imaging_model()
    counts = simulate_counts(model, "dark", 10_000, seed=43)
    assert abs(counts.var(ddof=1) - 8.0) / 8.0 < 0.10


def test_deterministic_and_counter_based():
    model = side_imaging_model()
    a = simulate_counts(model, "bright", 10_000, seed=7)
    b = simulate_counts(model, "bright", 10_000, seed=7)
    assert np.array_equal(a, b)
    # shot i depends only on (seed, i): a shorter run is a prefix
    prefix = simulate_counts(model, "bright", 100, seed=7)
    assert np.array_equal(prefix, a[:100])
    c = simulate_counts(model, "bright", 10_000, seed=8)
    assert not np.array_equal(a, c)


def test_simulate_validation():
    model = side_imaging_model()
    with pytest.raises(ValidationError):
        simulate_counts(model, "bright", 0, seed=1)
    with pytest.raises(ValidationError):
        simulate_counts(model, "half-bright", 10, seed=1)
    with pytest.raises(ValidationError):
        CountModel(signal_rate=-1.0, background_rate=0.0, duration=1e-3)


# -- threshold ----------------------------------------------------------------

def test_threshold_golden_scan():
    result = discrimination_threshold(26.0, 8.0, k_max=100)
    assert result.threshold == GOLDEN_THRESHOLD
    assert result.fidelity == pytest.approx(GOLDEN_FIDELITY, abs=1e-12)
    assert result.bright_error == pytest.approx(GOLDEN_BRIGHT_ERROR, abs=1e-12)
    assert result.dark_error == pytest.approx(GOLDEN_DARK_ERROR, abs=1e-12)


def test_threshold_matches_independent_pmf_scan():
    # brute-force oracle built from pmf partial sums rather than cdf calls
    bright_mean, dark_mean = 26.0, 8.0
    ks = np.arange(0, 101)
    pmf_b = poisson.pmf(np.arange(0, 200), bright_mean)
    pmf_d = poisson.pmf(np.arange(0, 200), dark_mean)
    best_k, best_err = None, np.inf
    for k in ks:
        err = 0.5 * (pmf_b[:k].sum() + (1.0 - pmf_d[:k].sum()))
        if err < best_err - 1e-15:
            best_k, best_err = int(k), float(err)
    result = discrimination_threshold(bright_mean, dark_mean)
    assert result.threshold == best_k
    assert result.fidelity == pytest.approx(1.0 - best_err, abs=1e-12)


def test_threshold_dark_zero():
    result = discrimination_threshold(5.0, 0.0)
    assert result.threshold == 1
    assert result.dark_error == 0.0


def test_threshold_requires_separation():
    with pytest.raises(ValidationError):
        discrimination_threshold(8.0, 8.0)
    with pytest.raises(ValidationError):
        discrimination_threshold(7.9, 8.0)


def test_classify():
    calls = classify(np.array([3, 15, 16, 40]), 16)
    assert calls.tolist() == [False, False, True, True]


def test_monte_carlo_matches_analytic():
    model = side_imaging_model()
    shots = 10_000
    mc_fid, analytic = monte_carlo_fidelity(model, shots, seed=11)
    assert abs(mc_fid - analytic.fidelity) < 3.0 / math.sqrt(shots)


def test_fidelity_monotone_in_duration():
    last = 0.0
    for t_ms in (0.5, 1.0, 2.0, 4.0, 8.0):
        model = CountModel(signal_rate=4500.0, background_rate=2000.0,
                           duration=t_ms * 1e-3)
        result = discrimination_threshold(model.bright_mean, model.dark_mean)
        assert result.fidelity >= last - 1e-12
        last = result.fidelity


# -- snr ------------------------------------------------------------------------

def test_snr_values():
    assert snr(4500.0, 2000.0) == pytest.approx(2.25, rel=1e-12)
    assert snr(1000.0, 1000.0) == 1.0
    assert snr(30_000.0, 100.0) == pytest.approx(300.0, rel=1e-12)


def test_snr_zero_background_is_inf():
    assert snr(30_000.0, 0.0) == math.inf
    with pytest.raises(ValidationError):
        snr(-1.0, 1.0)
