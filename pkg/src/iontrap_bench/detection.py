"""Poisson photon-count statistics for bright/dark state discrimination.

Counts are independent Poisson draws.  Sampling is counter-based: shot i is
produced from the i-th uniform of a Philox stream keyed by the seed, so the
draw for a given (seed, shot) pair never depends on how the work is split.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import poisson

from .errors import ValidationError


@dataclass(frozen=True)
class CountModel:
    """Detection counting model.

    signal_rate : bright-state fluorescence reaching the detector, counts/s.
    background_rate : counts/s.  duration : s.  By default the bright-state
    mean includes the background (a "total count rate" reading); set
    `background_in_bright=False` for the exclusive interpretation.
    """

    signal_rate: float
    background_rate: float
    duration: float
    background_in_bright: bool = True

    def __post_init__(self):
        if self.signal_rate < 0 or self.background_rate < 0:
            raise ValidationError("count rates must be nonnegative")
        if self.duration <= 0:
            raise ValidationError("detection duration must be positive")

    @property
    def bright_mean(self):
        rate = self.signal_rate + (self.background_rate if self.background_in_bright else 0.0)
        return rate * self.duration

    @property
    def dark_mean(self):
        return self.background_rate * self.duration


def _counter_uniforms(seed, n):
    """n uniforms from a Philox stream keyed by `seed` (counter-based)."""
    gen = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    u = gen.random(n)
    # poisson.ppf maps u=0 to -1; the open interval keeps quantiles valid.
    return np.maximum(u, 1e-300)


def simulate_counts(model, state, shots, seed):
    """Poisson photon counts for `shots` detection windows.

    `state` is "bright" or "dark".  Deterministic for a fixed seed; shot i
    depends only on (seed, i).
    """
    if shots < 1:
        raise ValidationError("at least one shot required")
    if state not in ("bright", "dark"):
        raise ValidationError(f"state must be 'bright' or 'dark', got {state!r}")
    mean = model.bright_mean if state == "bright" else model.dark_mean
    u = _counter_uniforms(seed, shots)
    if mean == 0.0:
        return np.zeros(shots, dtype=np.int64)
    return poisson.ppf(u, mean).astype(np.int64)


@dataclass(frozen=True)
class DiscriminationResult:
    """Integer count threshold with its error budget.

    Counts >= threshold are called bright.  bright_error = P(bright draw
    below threshold), dark_error = P(dark draw at or above threshold),
    fidelity = 1 - (bright_error + dark_error) / 2.
    """

    threshold: int
    bright_error: float
    dark_error: float
    fidelity: float


def discrimination_threshold(bright_mean, dark_mean, k_max=None):
    """Best integer threshold separating two Poisson count distributions.

    Scans every integer k in [0, k_max] minimizing the equal-prior mean
    error (exact cumulative sums, no Gaussian approximation); smallest k
    wins ties.
    """
    if not bright_mean > dark_mean:
        raise ValidationError(
            f"bright mean ({bright_mean}) must exceed dark mean ({dark_mean})")
    if dark_mean < 0:
        raise ValidationError("dark mean must be nonnegative")
    if k_max is None:
        k_max = int(math.ceil(bright_mean + 12.0 * math.sqrt(bright_mean) + 25.0))
    ks = np.arange(k_max + 1)
    # P(X < k) = cdf(k - 1); poisson.cdf(-1) = 0.
    bright_err = poisson.cdf(ks - 1, bright_mean)
    dark_err = 1.0 - poisson.cdf(ks - 1, dark_mean)
    mean_err = 0.5 * (bright_err + dark_err)
    k_star = int(np.argmin(mean_err))
    return DiscriminationResult(
        threshold=k_star,
        bright_error=float(bright_err[k_star]),
        dark_error=float(dark_err[k_star]),
        fidelity=float(1.0 - mean_err[k_star]),
    )


def classify(counts, threshold):
    """Boolean bright calls for an array of counts."""
    return np.asarray(counts) >= threshold


def monte_carlo_fidelity(model, shots, seed):
    """Empirical discrimination fidelity from simulated bright and dark runs.

    Uses the analytic threshold for the model's means; bright and dark draws
    come from independent labeled sub-streams of `seed`.
    """
    result = discrimination_threshold(model.bright_mean, model.dark_mean)
    bright = simulate_counts(model, "bright", shots, seed)
    dark = simulate_counts(model, "dark", shots, seed + 1)
    bright_err = float(np.mean(bright < result.threshold))
    dark_err = float(np.mean(dark >= result.threshold))
    return 1.0 - 0.5 * (bright_err + dark_err), result


def snr(signal_rate, background_rate):
    """Signal-to-background rate ratio.  Zero background gives inf, not an error."""
    if signal_rate < 0 or background_rate < 0:
        raise ValidationError("rates must be nonnegative")
    if background_rate == 0.0:
        return math.inf
    return signal_rate / background_rate
