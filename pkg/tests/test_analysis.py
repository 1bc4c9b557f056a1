import math

import numpy as np
import pytest
from scipy.stats import binom

from iontrap_bench.analysis import (EnsembleConfig, RabiTrace,
                                    crosstalk_intensity_ratio,
                                    ensemble_sensitivity_scaling,
                                    fit_gaussian_profile, fit_rabi, heating_rate)
from iontrap_bench.dynamics import DriveSpec, MotionalMode, rabi_carrier_population
from iontrap_bench.errors import DimensionError, ValidationError

OMEGA0 = math.pi / 130e-6
MODE = MotionalMode(omega=2 * np.pi * 1.02e6, eta=0.055, nbar=30.0)
TIMES = np.linspace(1e-6, 1.5e-3, 60)


def noiseless_trace(omega0=OMEGA0, nbar=30.0, a=1.0, times=TIMES, eta=0.055):
    m = MotionalMode(omega=MODE.omega, eta=eta, nbar=nbar)
    p = rabi_carrier_population(times, DriveSpec(omega0=omega0, a=a), [m])
    return RabiTrace(times=times, populations=p,
                     shots=np.full(times.shape, 10 ** 9),
                     stderr=np.full(times.shape, 1e-4))


def binomial_trace(seed, omega0=OMEGA0, nbar=30.0, shots=200, times=TIMES):
    m = MotionalMode(omega=MODE.omega, eta=0.055, nbar=nbar)
    p = rabi_carrier_population(times, DriveSpec(omega0=omega0, a=1.0), [m])
    gen = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    u = np.maximum(gen.random(times.size), 1e-300)
    successes = binom.ppf(u, shots, p).astype(int)
    return RabiTrace.from_binomial(times, successes, shots)


# -- RabiTrace ----------------------------------------------------------------

def test_trace_validation():
    with pytest.raises(DimensionError):
        RabiTrace(times=np.array([0.0, 1.0]), populations=np.array([0.1]),
                  shots=np.array([10, 10]), stderr=np.array([0.1, 0.1]))
    with pytest.raises(ValidationError):
        RabiTrace(times=np.array([1.0, 1.0]), populations=np.array([0.1, 0.1]),
                  shots=np.array([10, 10]), stderr=np.array([0.1, 0.1]))
    with pytest.raises(ValidationError):
        RabiTrace(times=np.array([0.0, 1.0]), populations=np.array([0.1, 1.4]),
                  shots=np.array([10, 10]), stderr=np.array([0.1, 0.1]))


def test_binomial_stderr_and_floor():
    times = np.array([1e-6, 2e-6, 3e-6])
    trace = RabiTrace.from_binomial(times, np.array([0, 100, 200]), 200)
    assert trace.stderr[0] == pytest.approx(1.0 / 202.0, rel=1e-12)  # p = 0 floor
    assert trace.stderr[2] == pytest.approx(1.0 / 202.0, rel=1e-12)  # p = 1 floor
    expected_mid = math.sqrt(0.5 * 0.5 / 200)
    assert trace.stderr[1] == pytest.approx(expected_mid, rel=1e-12)


# -- fit_rabi -----------------------------------------------------------------

def test_fit_rabi_noiseless_exact():
    fit = fit_rabi(noiseless_trace(), [MODE])
    assert fit.converged
    assert fit.params["omega0"] == pytest.approx(OMEGA0, rel=1e-6)
    assert fit.params["nbar"] == pytest.approx(30.0, rel=1e-6)
    assert fit.params["a"] == pytest.approx(1.0, rel=1e-6)


def test_fit_rabi_noisy_recovery_sample():
    hits_nbar = hits_omega = 0
    n = 20
    for seed in range(n):
        fit = fit_rabi(binomial_trace(seed), [MODE])
        assert fit.converged
        if abs(fit.params["nbar"] - 30.0) / 30.0 <= 0.15:
            hits_nbar += 1
        if abs(fit.params["omega0"] - OMEGA0) / OMEGA0 <= 0.01:
            hits_omega += 1
    assert hits_nbar >= n - 1
    assert hits_omega >= n - 1


def test_fit_rabi_six_percent_rate_difference():
    fast = fit_rabi(noiseless_trace(omega0=1.064 * OMEGA0), [MODE])
    slow = fit_rabi(noiseless_trace(omega0=OMEGA0), [MODE])
    delta = fast.params["omega0"] / slow.params["omega0"] - 1.0
    assert delta == pytest.approx(0.064, abs=1e-6)


def test_fit_rabi_preconditions():
    short = noiseless_trace(times=np.linspace(1e-6, 1.5e-3, 9))
    with pytest.raises(ValidationError):
        fit_rabi(short, [MODE])
    sub_period = noiseless_trace(times=np.linspace(1e-6, 50e-6, 20))
    with pytest.raises(ValidationError):
        fit_rabi(sub_period, [MODE])
    with pytest.raises(ValidationError):
        fit_rabi(noiseless_trace(), [])


def test_fit_rabi_nbar_zero_clamped_flag():
    trace = noiseless_trace(nbar=0.0)
    fit = fit_rabi(trace, [MODE], initial={"nbar": 0.5})
    assert fit.converged
    assert fit.params["nbar"] <= 1e-6
    if fit.params["nbar"] <= 1e-12:
        assert "nbar_clamped_at_zero" in fit.flags


def test_fit_rabi_float_eta():
    trace = noiseless_trace()
    fit = fit_rabi(trace, [MODE], float_eta=True)
    assert fit.converged
    assert fit.params["eta"] == pytest.approx(0.055, rel=1e-3)


def test_fit_rabi_deterministic():
    trace = binomial_trace(3)
    f1 = fit_rabi(trace, [MODE])
    f2 = fit_rabi(trace, [MODE])
    assert f1.params == f2.params


# -- fit_gaussian_profile -------------------------------------------------------

FWHM = 5.26e-6
SIGMA = FWHM / math.sqrt(8 * math.log(2))
XS = np.linspace(-12e-6, 12e-6, 201)


def gaussian_values(center=1e-6, amp=3.0, offset=0.2):
    return amp * np.exp(-0.5 * ((XS - center) / SIGMA) ** 2) + offset


def test_gaussian_fit_exact():
    fit = fit_gaussian_profile(XS, gaussian_values())
    assert fit.converged
    assert fit.params["fwhm"] == pytest.approx(FWHM, rel=1e-6)
    assert fit.params["center"] == pytest.approx(1e-6, rel=1e-6)
    assert fit.params["amplitude"] == pytest.approx(3.0, rel=1e-6)
    assert fit.params["offset"] == pytest.approx(0.2, rel=1e-6)


def test_gaussian_fit_noisy_five_percent():
    clean = gaussian_values()
    hits = 0
    n = 100
    for seed in range(n):
        rng = np.random.default_rng(1000 + seed)
        noisy = clean + rng.normal(0.0, 0.05 * 3.0, XS.shape)
        fit = fit_gaussian_profile(XS, noisy, errors=np.full(XS.shape, 0.15))
        if fit.converged and abs(fit.params["fwhm"] - FWHM) / FWHM <= 0.03:
            hits += 1
    assert hits >= 95


def test_gaussian_fit_coverage_calibration():
    clean = gaussian_values()
    cover = 0
    n = 200
    for seed in range(n):
        rng = np.random.default_rng(5000 + seed)
        noisy = clean + rng.normal(0.0, 0.15, XS.shape)
        fit = fit_gaussian_profile(XS, noisy, errors=np.full(XS.shape, 0.15))
        if fit.errors and abs(fit.params["center"] - 1e-6) <= fit.errors["center"]:
            cover += 1
    assert 0.60 * n <= cover <= 0.75 * n


def test_gaussian_flat_data_flagged():
    fit = fit_gaussian_profile(XS, np.full(XS.shape, 1.0))
    assert not fit.converged
    assert "degenerate_data" in fit.flags or "sigma_unbounded" in fit.flags


def test_gaussian_preconditions():
    with pytest.raises(ValidationError):
        fit_gaussian_profile(XS[:4], gaussian_values()[:4])


# -- heating_rate ----------------------------------------------------------------

WAITS = np.array([0.0, 1e-3, 2e-3, 4e-3, 6e-3, 8e-3])


def test_heating_constant_slope_zero():
    result = heating_rate(WAITS, np.full(WAITS.shape, 7.0),
                          np.full(WAITS.shape, 0.5))
    assert result.slope == pytest.approx(0.0, abs=1e-9)


def test_heating_exact_line():
    nbars = 5.0 + 1250.0 * WAITS
    result = heating_rate(WAITS, nbars, np.full(WAITS.shape, 0.5))
    assert result.rate_q_per_ms == pytest.approx(1.25, rel=1e-12)
    assert result.intercept == pytest.approx(5.0, rel=1e-12)
    assert result.reduced_chi2 == pytest.approx(0.0, abs=1e-18)


def test_heating_two_distinct_times_exact():
    # two distinct wait times, repeated measurements, exactly collinear
    waits = np.array([0.0, 0.0, 5e-3, 5e-3])
    nbars = 2.0 + 800.0 * waits
    result = heating_rate(waits, nbars, np.full(4, 0.3))
    assert result.slope == pytest.approx(800.0, rel=1e-12)
    assert result.reduced_chi2 == pytest.approx(0.0, abs=1e-18)


def test_heating_noisy_recovery():
    nbars = 5.0 + 1250.0 * WAITS
    rng = np.random.default_rng(99)
    noisy = nbars + rng.normal(0.0, 0.3, WAITS.shape)
    result = heating_rate(WAITS, noisy, np.full(WAITS.shape, 0.3))
    assert abs(result.rate_q_per_ms - 1.25) / 1.25 <= 0.10


def test_heating_coverage_calibration():
    nbars = 5.0 + 1250.0 * WAITS
    cover = 0
    n = 200
    for seed in range(n):
        rng = np.random.default_rng(7000 + seed)
        noisy = nbars + rng.normal(0.0, 1.0, WAITS.shape)
        result = heating_rate(WAITS, noisy, np.full(WAITS.shape, 1.0))
        if abs(result.slope - 1250.0) <= result.slope_error:
            cover += 1
    assert 0.60 * n <= cover <= 0.75 * n


def test_heating_slope_invariant_under_offset():
    rng = np.random.default_rng(31)
    nbars = 5.0 + 1250.0 * WAITS + rng.normal(0, 0.4, WAITS.shape)
    errs = np.full(WAITS.shape, 0.4)
    base = heating_rate(WAITS, nbars, errs)
    shifted = heating_rate(WAITS, nbars + 42.0, errs)
    assert shifted.slope == pytest.approx(base.slope, rel=1e-9)


def test_heating_preconditions():
    with pytest.raises(ValidationError):
        heating_rate(WAITS[:2], np.array([1.0, 2.0]), np.array([0.1, 0.1]))
    with pytest.raises(ValidationError):
        heating_rate(np.zeros(3), np.ones(3), np.full(3, 0.1))


# -- ratios and scaling ----------------------------------------------------------

def test_crosstalk_ratio_values():
    assert crosstalk_intensity_ratio(0.05, 1.0) == pytest.approx(0.0025, rel=1e-12)
    assert crosstalk_intensity_ratio(0.0, 1.0) == 0.0
    assert crosstalk_intensity_ratio(2.0, 2.0) == 1.0
    with pytest.raises(ValidationError):
        crosstalk_intensity_ratio(0.1, 0.0)


def test_crosstalk_ratio_sqrt_identity():
    rng = np.random.default_rng(13)
    for _ in range(25):
        ratio = rng.uniform(0.0, 1.0)
        omega_c = math.sqrt(ratio)
        assert crosstalk_intensity_ratio(omega_c, 1.0) == pytest.approx(ratio, rel=1e-12)


def test_ensemble_scaling():
    assert ensemble_sensitivity_scaling(EnsembleConfig(1, 1, 1.0)) == 1.0
    assert ensemble_sensitivity_scaling(EnsembleConfig(4, 2, 1.0)) == pytest.approx(0.25)
    assert ensemble_sensitivity_scaling(EnsembleConfig(8, 1, 2.0)) == pytest.approx(0.25)
    with pytest.raises(ValidationError):
        EnsembleConfig(0, 1, 1.0)
    with pytest.raises(ValidationError):
        EnsembleConfig(1, 1, -1.0)
