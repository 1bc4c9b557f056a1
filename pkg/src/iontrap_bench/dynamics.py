"""Lamb-Dicke parameters and carrier Rabi dynamics of thermal ions.

Two independent routes compute the excited-state population under a carrier
drive with the ion in a thermal motional state:

* :func:`rabi_carrier_population` -- closed form.  Per mode, the thermal
  geometric series is summed analytically; the real part is taken of the
  full complex product.
* :func:`rabi_population_oracle` -- explicit thermally-weighted sum of
  cosines over a truncated Fock grid, with the first-order carrier
  frequency Omega_n = Omega0 * (1 - sum_k eta_k^2 (n_k + 1/2)).

They must agree to 1e-9 absolute; the test suite enforces this.
"""

import math
from dataclasses import dataclass

import numpy as np

from .constants import HBAR
from .errors import TruncationError, ValidationError

THERMAL_WEIGHT_DEFICIT = 1e-12


@dataclass(frozen=True)
class MotionalMode:
    """One secular mode: frequency (rad/s), Lamb-Dicke parameter, mean
    thermal occupation."""

    omega: float
    eta: float
    nbar: float

    def __post_init__(self):
        if self.omega <= 0:
            raise ValidationError(f"mode frequency must be positive, got {self.omega}")
        if self.eta < 0:
            raise ValidationError(f"Lamb-Dicke parameter must be nonnegative, got {self.eta}")
        if self.nbar < 0:
            raise ValidationError(f"thermal occupation must be nonnegative, got {self.nbar}")

    @property
    def lamb_dicke_valid(self):
        """sqrt(nbar) * eta < 1: wavepacket small against the drive wavelength."""
        return math.sqrt(self.nbar) * self.eta < 1.0


@dataclass(frozen=True)
class DriveSpec:
    """Carrier drive: rest Rabi frequency (rad/s), initial ground-state
    population a in [0, 1], wavelength (m), beam angle to the mode axis (rad)."""

    omega0: float
    a: float = 1.0
    wavelength: float = 435e-9
    angle: float = 0.0

    def __post_init__(self):
        if self.omega0 < 0:
            raise ValidationError("rest Rabi frequency must be nonnegative")
        if not 0.0 <= self.a <= 1.0:
            raise ValidationError(f"initial ground population must be in [0, 1], got {self.a}")


@dataclass(frozen=True)
class TransitionSpec:
    """A drivable transition and its relative coupling scale on Omega0."""

    label: str
    scale: float = 1.0

    def __post_init__(self):
        if self.scale < 0:
            raise ValidationError("coupling scale must be nonnegative")


def lamb_dicke(wavelength, angle, species, omega):
    """Lamb-Dicke parameter (2*pi/lambda) * cos(theta) * sqrt(hbar / (2 m omega))."""
    if wavelength <= 0:
        raise ValidationError("wavelength must be positive")
    if omega <= 0:
        raise ValidationError("mode frequency must be positive")
    return (2.0 * np.pi / wavelength) * np.cos(angle) * np.sqrt(
        HBAR / (2.0 * species.mass * omega))


def rabi_carrier_population(t, drive, modes):
    """Excited-state population P(t) for a thermal ion under a carrier drive.

    P(t) = (a/2) * (1 - Re[f1(t)] / f2(t)) with, per mode k
    (theta_k = Omega0 * eta_k^2 * t):

        f1 factor:  exp(-i theta_k / 2) * (1 - nbar_k exp(i theta_k) / (nbar_k + 1))
        f2 factor:  (nbar_k + 1) - 2 nbar_k cos(theta_k) + nbar_k^2 / (nbar_k + 1)

    and an overall exp(i Omega0 t) inside the real part.  Scalar or array `t`.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValidationError("time must be nonnegative")
    omega0 = drive.omega0
    num = np.exp(1j * omega0 * t)
    den = np.ones_like(t)
    for mode in modes:
        theta = omega0 * mode.eta ** 2 * t
        nb = mode.nbar
        num = num * np.exp(-0.5j * theta) * (1.0 - nb * np.exp(1j * theta) / (nb + 1.0))
        den = den * ((nb + 1.0) - 2.0 * nb * np.cos(theta) + nb ** 2 / (nb + 1.0))
    p = 0.5 * drive.a * (1.0 - num.real / den)
    return float(np.clip(p, 0.0, drive.a)) if p.ndim == 0 else np.clip(p, 0.0, drive.a)


def fock_cutoff(nbar, deficit=THERMAL_WEIGHT_DEFICIT):
    """Smallest n_max whose truncated thermal weight is >= 1 - deficit."""
    if nbar <= 0:
        return 0
    # 1 - (nbar/(nbar+1))^(N+1) >= 1 - deficit
    n = math.ceil(math.log(deficit) / math.log(nbar / (nbar + 1.0))) - 1
    return max(n, 0)


def thermal_weights(nbar, n_max):
    """Thermal occupation probabilities p_n = nbar^n / (nbar+1)^(n+1), n <= n_max."""
    n = np.arange(n_max + 1)
    if nbar == 0:
        w = np.zeros(n_max + 1)
        w[0] = 1.0
        return w
    log_w = n * math.log(nbar / (nbar + 1.0)) - math.log(nbar + 1.0)
    return np.exp(log_w)


def rabi_population_oracle(t, drive, modes, n_max=None):
    """Fock-sum reference for :func:`rabi_carrier_population`.

    Sums a * (1 - cos(Omega_n t)) / 2 over the truncated thermal Fock grid
    with Omega_n = Omega0 * (1 - sum_k eta_k^2 (n_k + 1/2)).  `n_max` may be
    an int, a per-mode sequence, or None (auto: smallest truncation keeping
    thermal weight >= 1 - 1e-12 per mode).  Raises TruncationError when an
    explicit truncation leaves more weight behind.
    """
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    if np.any(t < 0):
        raise ValidationError("time must be nonnegative")

    modes = list(modes)
    if n_max is None:
        cutoffs = [fock_cutoff(m.nbar) for m in modes]
    elif np.isscalar(n_max):
        cutoffs = [int(n_max)] * len(modes)
    else:
        cutoffs = [int(x) for x in n_max]
        if len(cutoffs) != len(modes):
            raise ValidationError("one n_max per mode required")

    weights = np.ones(1)
    detuning = np.zeros(1)  # sum_k eta_k^2 (n_k + 1/2) over the grid
    for mode, cut in zip(modes, cutoffs):
        w = thermal_weights(mode.nbar, cut)
        kept = float(w.sum())
        if 1.0 - kept > THERMAL_WEIGHT_DEFICIT * (1.0 + 1e-9):
            raise TruncationError(
                f"n_max={cut} keeps thermal weight {kept:.15f} < 1 - 1e-12 "
                f"for nbar={mode.nbar}")
        shift = mode.eta ** 2 * (np.arange(cut + 1) + 0.5)
        weights = np.outer(weights, w).ravel()
        detuning = (detuning[:, None] + shift[None, :]).ravel()

    omega_n = drive.omega0 * (1.0 - detuning)
    # Chunk the time axis so the cos() temporary stays small for large grids.
    block = max(1, 4_000_000 // max(omega_n.size, 1))
    mean_cos = np.empty_like(t)
    for i in range(0, t.size, block):
        mean_cos[i:i + block] = np.cos(np.outer(t[i:i + block], omega_n)) @ weights
    p = 0.5 * drive.a * (1.0 - mean_cos)
    return float(p[0]) if scalar else p


def rabi_rate_from_intensity(intensity, intensity_ref, omega_ref):
    """Rabi frequency at intensity I given a reference pair: Omega ~ sqrt(I)."""
    if intensity < 0:
        raise ValidationError("intensity must be nonnegative")
    if intensity_ref <= 0:
        raise ValidationError("reference intensity must be positive")
    return omega_ref * math.sqrt(intensity / intensity_ref)


def nbar_from_sideband_ratio(ratio):
    """Mean occupation from the red/blue sideband excitation ratio R: R/(1-R)."""
    if not 0.0 <= ratio < 1.0:
        raise ValidationError(f"sideband ratio must be in [0, 1), got {ratio}")
    return ratio / (1.0 - ratio)


def pi_time(omega0):
    """Pulse duration for full population transfer at rest, pi / Omega0."""
    if omega0 <= 0:
        raise ValidationError("Rabi frequency must be positive")
    return math.pi / omega0
