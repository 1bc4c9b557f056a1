"""Integrated-beam intensity, splitters, loss budgets, and coupling models.

Beams from output couplers are treated as ideal focused Gaussians (waist at
the focus, Rayleigh divergence along the propagation direction).  Loss
chains add in dB; distributed elements contribute rate * length.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

# Intensity-FWHM relations for a Gaussian: w0 = FWHM / sqrt(2 ln 2),
# sigma = FWHM / sqrt(8 ln 2).
FWHM_TO_WAIST = 1.0 / math.sqrt(2.0 * math.log(2.0))
FWHM_TO_SIGMA = 1.0 / math.sqrt(8.0 * math.log(2.0))


@dataclass(frozen=True)
class BeamModel:
    """Focused Gaussian beam.

    focus : (3,) m.  direction : unit propagation vector (normalized on
    construction; the bundled geometry emits at 45 degrees from the surface).
    wavelength : m.  fwhm : intensity full width at half maximum at the
    focus, m.  power : W delivered past the output coupler.
    """

    focus: np.ndarray
    direction: np.ndarray
    wavelength: float
    fwhm: float
    power: float

    def __post_init__(self):
        object.__setattr__(self, "focus", np.asarray(self.focus, dtype=float))
        d = np.asarray(self.direction, dtype=float)
        norm = np.linalg.norm(d)
        if norm == 0:
            raise ValidationError("beam direction must be a nonzero vector")
        object.__setattr__(self, "direction", d / norm)
        if self.fwhm <= 0:
            raise ValidationError(f"beam FWHM must be positive, got {self.fwhm}")
        if self.wavelength <= 0:
            raise ValidationError("wavelength must be positive")
        if self.power < 0:
            raise ValidationError("beam power must be nonnegative")

    @property
    def waist(self):
        """1/e^2 intensity radius at the focus."""
        return self.fwhm * FWHM_TO_WAIST

    @property
    def rayleigh_range(self):
        return math.pi * self.waist ** 2 / self.wavelength

    @property
    def peak_intensity(self):
        """2 P / (pi w0^2) at the focus, W/m^2."""
        return 2.0 * self.power / (math.pi * self.waist ** 2)


@dataclass(frozen=True)
class FlatBeam:
    """Deliberately unfocused beam: uniform intensity over the site region.

    Used for repump light that only needs to overlap the ion, not focus on
    it; `intensity` is the flat level in W/m^2.
    """

    intensity: float

    def __post_init__(self):
        if self.intensity < 0:
            raise ValidationError("flat-beam intensity must be nonnegative")


def beam_intensity(beam, point):
    """Intensity (W/m^2) of `beam` at `point`.

    Gaussian transverse profile with waist w0 = FWHM / sqrt(2 ln 2) widening
    as w(s) = w0 sqrt(1 + (s/zR)^2) along the propagation direction.  A
    :class:`FlatBeam` returns its uniform level everywhere.
    """
    if isinstance(beam, FlatBeam):
        return beam.intensity
    delta = np.asarray(point, dtype=float) - beam.focus
    s = float(delta @ beam.direction)
    r2 = float(delta @ delta) - s * s
    r2 = max(r2, 0.0)
    w0 = beam.waist
    w2 = w0 * w0 * (1.0 + (s / beam.rayleigh_range) ** 2)
    return 2.0 * beam.power / (math.pi * w2) * math.exp(-2.0 * r2 / w2)


@dataclass(frozen=True)
class LossElement:
    """One element of a loss chain: fixed dB, or a dB/cm rate with a length."""

    name: str
    loss_db: float = None
    loss_db_per_cm: float = None
    length_cm: float = None

    def __post_init__(self):
        fixed = self.loss_db is not None
        distributed = self.loss_db_per_cm is not None or self.length_cm is not None
        if fixed == distributed:
            raise ValidationError(
                f"element {self.name!r}: give either loss_db or "
                f"(loss_db_per_cm, length_cm)")
        if distributed and (self.loss_db_per_cm is None or self.length_cm is None):
            raise ValidationError(
                f"element {self.name!r}: loss_db_per_cm and length_cm go together")
        if self.effective_db < 0:
            raise ValidationError(f"element {self.name!r}: loss must be >= 0 dB")

    @property
    def effective_db(self):
        if self.loss_db is not None:
            return float(self.loss_db)
        return float(self.loss_db_per_cm) * float(self.length_cm)


@dataclass(frozen=True)
class LossChain:
    """Ordered loss elements from launch to ion."""

    elements: tuple

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))

    @classmethod
    def from_dicts(cls, items):
        return cls(tuple(LossElement(**item) for item in items))


@dataclass(frozen=True)
class LossBudget:
    """Summed budget: total dB, power transmission fraction, per-element table."""

    total_db: float
    transmission: float
    table: tuple  # (name, dB) pairs

    def power_out(self, power_in):
        return power_in * self.transmission


def loss_budget(chain):
    """Total dB, transmission fraction, and per-element table for `chain`."""
    if not chain.elements:
        raise ValidationError("loss chain must contain at least one element")
    table = tuple((e.name, e.effective_db) for e in chain.elements)
    total = float(sum(db for _, db in table))
    return LossBudget(total_db=total, transmission=10.0 ** (-total / 10.0), table=table)


@dataclass(frozen=True)
class SplitterSpec:
    """Waveguide power splitter: fanout, per-output power ratios, insertion loss."""

    ratios: tuple = (0.5, 0.5)
    insertion_loss_db: float = 0.0

    def __post_init__(self):
        ratios = tuple(float(r) for r in self.ratios)
        object.__setattr__(self, "ratios", ratios)
        if any(r <= 0 for r in ratios):
            raise ValidationError("splitter ratios must be positive")
        if sum(ratios) > 1.0 + 1e-12:
            raise ValidationError(f"splitter ratios sum to {sum(ratios)} > 1")
        if self.insertion_loss_db < 0:
            raise ValidationError("splitter insertion loss must be >= 0 dB")

    @property
    def fanout(self):
        return len(self.ratios)


def split(power, spec):
    """Output powers of a splitter: input * ratio * 10^(-loss/10) per port."""
    if power < 0:
        raise ValidationError("input power must be nonnegative")
    factor = 10.0 ** (-spec.insertion_loss_db / 10.0)
    return np.array([power * r * factor for r in spec.ratios])


def split_ratio_from_rabi_imbalance(delta_omega_rel):
    """Port power ratio implied by a relative Rabi-rate mismatch.

    With intensity (hence power) proportional to Omega^2, a fast/slow rate
    ratio 1 + delta means a power ratio (1 + delta)^2.  Returns the ratio
    and the two port fractions (fast, slow) normalized to 1.
    """
    if delta_omega_rel < 0:
        raise ValidationError("Rabi imbalance must be nonnegative")
    ratio = (1.0 + delta_omega_rel) ** 2
    return ratio, (ratio / (1.0 + ratio), 1.0 / (1.0 + ratio))


def evanescent_coupling(delta_n_eff, length, wavelength):
    """Power fraction coupled between two parallel guides.

    Symmetric/antisymmetric two-mode beat: sin^2(pi * dn * L / lambda),
    clamped to [0, 1].
    """
    if length < 0:
        raise ValidationError("coupling length must be nonnegative")
    if wavelength <= 0:
        raise ValidationError("wavelength must be positive")
    value = math.sin(math.pi * delta_n_eff * length / wavelength) ** 2
    return min(max(value, 0.0), 1.0)


def mesh_transmission(hole_side, trace_width):
    """Open-area fraction of a square shield mesh: (hole / (hole + trace))^2."""
    if hole_side <= 0:
        raise ValidationError("mesh hole side must be positive")
    if trace_width < 0:
        raise ValidationError("mesh trace width must be nonnegative")
    return (hole_side / (hole_side + trace_width)) ** 2
