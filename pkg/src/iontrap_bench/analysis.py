"""Fitting and extraction pipelines.

Nonlinear fits are damped least squares (scipy trust-region reflective with
bounds); 1-sigma uncertainties come from the local curvature of the
weighted residual at the optimum.  All fits are deterministic for identical
inputs and report a convergence flag rather than failing silently.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares
from scipy.signal import lombscargle

from .dynamics import DriveSpec, MotionalMode, rabi_carrier_population
from .errors import DimensionError, ValidationError

GAUSSIAN_SIGMA_TO_FWHM = math.sqrt(8.0 * math.log(2.0))


@dataclass(frozen=True)
class RabiTrace:
    """Time series of excited-state population estimates.

    times : s, strictly increasing.  populations : in [0, 1].  shots : per
    point.  stderr : standard error per point; binomial traces use
    sqrt(p(1-p)/shots) with a floor of 1/(shots+2) so p = 0 or 1 points
    keep finite weight.
    """

    times: np.ndarray
    populations: np.ndarray
    shots: np.ndarray
    stderr: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        p = np.asarray(self.populations, dtype=float)
        s = np.asarray(self.shots)
        e = np.asarray(self.stderr, dtype=float)
        if not (t.shape == p.shape == s.shape == e.shape):
            raise DimensionError("trace arrays must have equal length")
        if t.size < 2:
            raise ValidationError("a trace needs at least two points")
        if np.any(np.diff(t) <= 0):
            raise ValidationError("trace times must be strictly increasing")
        if np.any((p < 0) | (p > 1)):
            raise ValidationError("populations must lie in [0, 1]")
        if np.any(e <= 0):
            raise ValidationError("standard errors must be positive")
        for name, arr in (("times", t), ("populations", p), ("shots", s), ("stderr", e)):
            object.__setattr__(self, name, arr)

    @classmethod
    def from_binomial(cls, times, successes, shots):
        """Trace from per-point success counts out of `shots` trials."""
        times = np.asarray(times, dtype=float)
        successes = np.asarray(successes)
        shots_arr = np.broadcast_to(np.asarray(shots), times.shape).astype(int)
        p = successes / shots_arr
        stderr = np.sqrt(p * (1.0 - p) / shots_arr)
        floor = 1.0 / (shots_arr + 2.0)
        return cls(times=times, populations=p, shots=shots_arr,
                   stderr=np.maximum(stderr, floor))

    def __len__(self):
        return self.times.size


@dataclass(frozen=True)
class FitResult:
    """Fit parameters with 1-sigma uncertainties and a convergence flag.

    `errors` is None unless the fit converged.  `flags` carries conditions
    like a parameter pinned at a bound.
    """

    params: dict
    errors: dict
    reduced_chi2: float
    converged: bool
    flags: tuple = ()
    message: str = ""


def _covariance_errors(jac):
    """1-sigma errors from the weighted-residual curvature J^T J."""
    _, s, vt = np.linalg.svd(jac, full_matrices=False)
    good = s > s[0] * 1e-12 if s.size and s[0] > 0 else np.zeros_like(s, dtype=bool)
    if not good.all():
        return None  # singular curvature: some direction unconstrained
    cov = (vt.T / s ** 2) @ vt
    diag = np.diag(cov)
    if np.any(diag < 0):
        return None
    return np.sqrt(diag)


def _dominant_angular_frequency(times, values):
    """Coarse periodogram peak used to seed the Rabi fit."""
    span = times[-1] - times[0]
    dt = np.median(np.diff(times))
    w_lo = 2.0 * np.pi * 0.25 / span
    w_hi = np.pi / dt
    grid = np.linspace(w_lo, w_hi, 2048)
    power = lombscargle(times, values - values.mean(), grid, precenter=False)
    return float(grid[np.argmax(power)])


def _guess_rabi(trace, etas):
    """Initial (omega0, nbar, a) heuristics from the trace itself."""
    omega0 = _dominant_angular_frequency(trace.times, trace.populations)
    a = float(np.clip(trace.populations.max(), 0.1, 1.0))
    # Contrast decay: find when the oscillation amplitude halves.
    eta2 = float(np.sum(np.square(etas)))
    nbar = 1.0
    if eta2 > 0:
        quarters = np.array_split(np.arange(len(trace)), 4)
        amps = [np.ptp(trace.populations[ix]) for ix in quarters if ix.size >= 2]
        if amps and amps[0] > 0:
            for k, amp in enumerate(amps):
                if amp < 0.5 * amps[0]:
                    t_half = trace.times[quarters[k][quarters[k].size // 2]]
                    if t_half > 0:
                        nbar = math.sqrt(3.0) / (omega0 * eta2 * t_half)
                    break
    return omega0, float(np.clip(nbar, 0.0, 200.0)), a


def fit_rabi(trace, modes, initial=None, float_eta=False, max_nfev=2000):
    """Fit {Omega0, nbar, a} of the thermal carrier model to a trace.

    `modes` fixes the Lamb-Dicke parameters and mode frequencies; a single
    thermal occupation common to all modes is floated.  With `float_eta`
    (single mode only) the Lamb-Dicke parameter is fitted as well.  Returns
    a :class:`FitResult`; a fit driven to nbar = 0 is clamped there and
    flagged, and non-convergence is reported with the best point found.
    """
    modes = list(modes)
    if not modes:
        raise ValidationError("at least one motional mode required")
    if len(trace) < 10:
        raise ValidationError("Rabi fit needs at least 10 points")
    if float_eta and len(modes) != 1:
        raise ValidationError("float_eta supports a single mode only")

    etas = np.array([m.eta for m in modes])
    omegas = [m.omega for m in modes]
    w = 1.0 / trace.stderr

    omega0_g, nbar_g, a_g = _guess_rabi(trace, etas)
    if initial is not None:
        omega0_g = initial.get("omega0", omega0_g)
        nbar_g = initial.get("nbar", nbar_g)
        a_g = initial.get("a", a_g)
    span_periods = (trace.times[-1] - trace.times[0]) * omega0_g / (2.0 * np.pi)
    if span_periods < 0.9:
        raise ValidationError(
            f"trace spans {span_periods:.2f} oscillation periods; need >= 1")

    def unpack(x):
        if float_eta:
            return x[0], x[1], x[2], np.array([x[3]])
        return x[0], x[1], x[2], etas

    def residual(x):
        omega0, nbar, a, e = unpack(x)
        mm = [MotionalMode(omega=om, eta=float(ei), nbar=nbar)
              for om, ei in zip(omegas, e)]
        model = rabi_carrier_population(trace.times, DriveSpec(omega0=omega0, a=a), mm)
        return (model - trace.populations) * w

    x0 = [omega0_g, nbar_g, max(min(a_g, 1.0), 1e-3)]
    lo = [1e-6 * omega0_g, 0.0, 1e-6]
    hi = [np.inf, np.inf, 1.0]
    x_scale = [omega0_g, max(nbar_g, 1.0), 1.0]
    if float_eta:
        x0.append(float(etas[0]))
        lo.append(0.0)
        hi.append(1.0)
        x_scale.append(max(float(etas[0]), 1e-3))

    res = least_squares(residual, x0, bounds=(lo, hi), x_scale=x_scale,
                        method="trf", xtol=1e-13, ftol=1e-13, gtol=1e-13,
                        max_nfev=max_nfev)
    omega0, nbar, a, e = unpack(res.x)
    params = {"omega0": float(omega0), "nbar": float(nbar), "a": float(a)}
    if float_eta:
        params["eta"] = float(e[0])

    flags = []
    if nbar <= 1e-12:
        flags.append("nbar_clamped_at_zero")
    converged = bool(res.status > 0)
    errors = None
    if converged:
        sigmas = _covariance_errors(res.jac)
        if sigmas is None:
            flags.append("singular_curvature")
        else:
            names = list(params)
            errors = {n: float(s) for n, s in zip(names, sigmas)}
    dof = max(len(trace) - len(res.x), 1)
    return FitResult(params=params, errors=errors,
                     reduced_chi2=float(2.0 * res.cost / dof),
                     converged=converged, flags=tuple(flags), message=res.message)


def fit_gaussian_profile(positions, values, errors=None, max_nfev=2000):
    """Fit amplitude * exp(-(x-c)^2 / (2 sigma^2)) + offset to profile data.

    Reports center, sigma, fwhm = sigma * sqrt(8 ln 2), amplitude, offset.
    Degenerate (flat) data comes back flagged, never as a silent answer.
    """
    x = np.asarray(positions, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.shape != y.shape:
        raise DimensionError("positions and values must have equal length")
    if x.size < 5:
        raise ValidationError("Gaussian profile fit needs at least 5 points")
    if errors is None:
        w = np.ones_like(y)
    else:
        w = 1.0 / np.asarray(errors, dtype=float)

    span = float(x.max() - x.min())
    if span <= 0:
        raise ValidationError("positions must not be all identical")
    if np.ptp(y) <= 1e-14 * max(abs(float(y.mean())), 1.0):
        return FitResult(params={}, errors=None, reduced_chi2=float("nan"),
                         converged=False, flags=("degenerate_data",),
                         message="values are constant; no peak to fit")

    offset0 = float(y.min())
    amp0 = float(y.max() - y.min())
    pos_w = np.maximum(y - offset0, 0.0)
    center0 = float((x * pos_w).sum() / pos_w.sum())
    var0 = float((pos_w * (x - center0) ** 2).sum() / pos_w.sum())
    sigma0 = math.sqrt(var0) if var0 > 0 else span / 4.0

    def residual(p):
        amp, center, sigma, offset = p
        return (amp * np.exp(-0.5 * ((x - center) / sigma) ** 2) + offset - y) * w

    res = least_squares(
        residual, [amp0, center0, sigma0, offset0],
        bounds=([-np.inf, -np.inf, 1e-12 * span, -np.inf], np.inf),
        x_scale=[max(amp0, 1e-12), span, max(sigma0, 1e-3 * span), max(abs(offset0), 1.0)],
        method="trf", xtol=1e-13, ftol=1e-13, gtol=1e-13, max_nfev=max_nfev)
    amp, center, sigma, offset = res.x
    params = {"amplitude": float(amp), "center": float(center),
              "sigma": float(sigma), "offset": float(offset),
              "fwhm": float(sigma * GAUSSIAN_SIGMA_TO_FWHM)}
    flags = []
    converged = bool(res.status > 0)
    errors_out = None
    if converged:
        sigmas = _covariance_errors(res.jac)
        if sigmas is None or sigma > 10.0 * span:
            flags.append("sigma_unbounded")
            converged = False
        else:
            errors_out = {"amplitude": float(sigmas[0]), "center": float(sigmas[1]),
                          "sigma": float(sigmas[2]), "offset": float(sigmas[3]),
                          "fwhm": float(sigmas[2] * GAUSSIAN_SIGMA_TO_FWHM)}
    dof = max(x.size - 4, 1)
    return FitResult(params=params, errors=errors_out,
                     reduced_chi2=float(2.0 * res.cost / dof),
                     converged=converged, flags=tuple(flags), message=res.message)


@dataclass(frozen=True)
class HeatingRateResult:
    """Weighted linear fit of nbar against wait time."""

    slope: float          # quanta per second
    intercept: float      # quanta at zero wait
    slope_error: float
    intercept_error: float
    reduced_chi2: float

    @property
    def rate_q_per_ms(self):
        return self.slope * 1e-3

    @property
    def rate_error_q_per_ms(self):
        return self.slope_error * 1e-3


def heating_rate(wait_times, nbars, nbar_errors=None):
    """Weighted linear regression nbar(t) = nbar0 + ndot * t.

    `wait_times` in seconds.  Parameter uncertainties come from the weighted
    normal equations; with no errors given, unit weights are used and the
    covariance is scaled by the residual variance.
    """
    t = np.asarray(wait_times, dtype=float)
    y = np.asarray(nbars, dtype=float)
    if t.shape != y.shape:
        raise DimensionError("wait times and nbar arrays must have equal length")
    if t.size < 3:
        raise ValidationError("heating-rate fit needs at least 3 wait times")
    if nbar_errors is None:
        weights = np.ones_like(y)
        scale_by_chi2 = True
    else:
        e = np.asarray(nbar_errors, dtype=float)
        if np.any(e <= 0):
            raise ValidationError("nbar uncertainties must be positive")
        weights = 1.0 / e ** 2
        scale_by_chi2 = False

    X = np.column_stack([np.ones_like(t), t])
    XtW = X.T * weights
    normal = XtW @ X
    try:
        cov = np.linalg.inv(normal)
    except np.linalg.LinAlgError:
        raise ValidationError("degenerate wait-time design (all times equal?)")
    beta = cov @ (XtW @ y)
    resid = y - X @ beta
    chi2 = float((weights * resid ** 2).sum())
    dof = max(t.size - 2, 1)
    red = chi2 / dof
    if scale_by_chi2:
        cov = cov * red
    return HeatingRateResult(
        slope=float(beta[1]), intercept=float(beta[0]),
        slope_error=float(np.sqrt(cov[1, 1])),
        intercept_error=float(np.sqrt(cov[0, 0])),
        reduced_chi2=red)


def crosstalk_intensity_ratio(omega_crosstalk, omega_drive):
    """Relative leaked intensity (Omega_c / Omega_0)^2 from fitted Rabi rates."""
    if omega_drive <= 0:
        raise ValidationError("driven Rabi frequency must be positive")
    if omega_crosstalk < 0:
        raise ValidationError("cross-talk Rabi frequency must be nonnegative")
    return (omega_crosstalk / omega_drive) ** 2


@dataclass(frozen=True)
class EnsembleConfig:
    """Separately interrogated ion ensembles: N ions per ensemble, m
    ensembles, protocol constant alpha."""

    n_ions: int
    m_ensembles: int
    alpha: float

    def __post_init__(self):
        if self.n_ions < 1 or self.m_ensembles < 1:
            raise ValidationError("ensemble counts must be >= 1")
        if self.alpha <= 0:
            raise ValidationError("protocol constant must be positive")


def ensemble_sensitivity_scaling(config):
    """Relative sensitivity factor (alpha * N)^(-m/2)."""
    return (config.alpha * config.n_ions) ** (-config.m_ensembles / 2.0)
