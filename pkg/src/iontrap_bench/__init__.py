"""Desk-scale toolkit for surface-trap ion experiments with integrated optics.

Subsystems:

* :mod:`iontrap_bench.trap_model` -- electrostatic + RF pseudopotential model,
  secular frequencies, trap depth, RF calibration.
* :mod:`iontrap_bench.voltage_solver` -- constrained linear solves for
  multi-well DC voltage sets and shuttling waveforms.
* :mod:`iontrap_bench.photonics` -- Gaussian beam intensity, splitters,
  loss budgets, evanescent coupling, mesh transmission.
* :mod:`iontrap_bench.dynamics` -- Lamb-Dicke parameters and thermal-state
  carrier Rabi dynamics (closed form plus Fock-sum oracle).
* :mod:`iontrap_bench.detection` -- Poisson photon-count statistics and
  bright/dark discrimination.
* :mod:`iontrap_bench.analysis` -- fitting pipelines (Rabi, Gaussian
  profile, heating rate) and derived ratios.
* :mod:`iontrap_bench.scenario` -- declarative scenario runner.
"""

__version__ = "0.1.0"

from .constants import YB171, IonSpecies

__all__ = ["YB171", "IonSpecies", "__version__"]
