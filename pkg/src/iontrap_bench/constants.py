"""Physical constants and bundled ion species."""

from dataclasses import dataclass

import scipy.constants as const

from .errors import ValidationError

HBAR = const.hbar
ELEMENTARY_CHARGE = const.e
ATOMIC_MASS = const.atomic_mass


@dataclass(frozen=True)
class IonSpecies:
    """A trapped ion species: mass in kg, charge in C."""

    mass: float
    charge: float

    def __post_init__(self):
        if self.mass <= 0:
            raise ValidationError(f"ion mass must be positive, got {self.mass}")
        if self.charge == 0:
            raise ValidationError("ion charge must be nonzero")


# Singly charged ytterbium-171 (mass taken as 171 u).
YB171 = IonSpecies(mass=171 * ATOMIC_MASS, charge=ELEMENTARY_CHARGE)
