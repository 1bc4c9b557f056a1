"""Electrostatic and RF pseudopotential model of a surface trap.

The trap is described by an :class:`ElectrodeBasis`: per-electrode potential
value, gradient, and Hessian (all per applied volt) at query points.  Two
backings exist: analytic electrodes evaluable anywhere in a bounding box
(the bundled five-wire geometry, arbitrary test functions) and sampled
electrodes restricted to a fixed query-point set loaded from file.

The RF drive enters through the standard time-averaged pseudopotential
U = q^2 |E_rf|^2 / (4 m Omega^2).  Its Hessian is evaluated in the
quadratic approximation 2 H_rf^2 (exact at the RF null); no micromotion.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .constants import IonSpecies, YB171  # noqa: F401  (re-exported)
from .errors import DimensionError, DomainExhaustedError, UnknownPointError, ValidationError

_POINT_TOL = 1e-12  # m; sampled-basis lookup tolerance


@dataclass(frozen=True)
class AnalyticElectrode:
    """Electrode backed by a callable point -> (value, gradient, hessian)."""

    name: str
    fn: object

    def potential(self, point):
        value, grad, hess = self.fn(np.asarray(point, dtype=float))
        return float(value), np.asarray(grad, dtype=float), np.asarray(hess, dtype=float)


class SampledElectrode:
    """Electrode known only at a fixed set of query points."""

    def __init__(self, name, points, values, gradients, hessians):
        self.name = name
        self._points = np.asarray(points, dtype=float)
        self._values = np.asarray(values, dtype=float)
        self._gradients = np.asarray(gradients, dtype=float)
        self._hessians = np.asarray(hessians, dtype=float)

    def potential(self, point):
        point = np.asarray(point, dtype=float)
        d = np.abs(self._points - point).max(axis=1)
        idx = int(np.argmin(d))
        if d[idx] > _POINT_TOL:
            raise UnknownPointError(
                f"point {point} not in query set of electrode {self.name!r}")
        return (float(self._values[idx]),
                self._gradients[idx].copy(),
                self._hessians[idx].copy())


class ElectrodeBasis:
    """Named electrodes plus the spatial domain they are valid on.

    Parameters
    ----------
    electrodes : sequence
        Objects with a ``name`` and ``potential(point)``.
    bounds : (3, 2) array, optional
        Axis-aligned domain box [[xmin, xmax], [ymin, ymax], [zmin, zmax]].
        Required for analytic electrodes (scans rely on it); for sampled
        electrodes the query-point set is the domain.
    points : (n, 3) array, optional
        The shared query-point set for sampled electrodes.
    axis_y, axis_z : float, optional
        The (y, z) of the nominal trapping line, letting callers refer to a
        well by its axial coordinate alone.
    """

    def __init__(self, electrodes, bounds=None, points=None, axis_y=None, axis_z=None):
        electrodes = list(electrodes)
        names = [e.name for e in electrodes]
        if len(set(names)) != len(names):
            raise ValidationError("electrode names must be unique")
        self.electrodes = electrodes
        self.bounds = None if bounds is None else np.asarray(bounds, dtype=float)
        self.points = None if points is None else np.asarray(points, dtype=float)
        self.axis_y = axis_y
        self.axis_z = axis_z

    @property
    def names(self):
        return [e.name for e in self.electrodes]

    def __len__(self):
        return len(self.electrodes)

    @property
    def continuous(self):
        """True when electrodes can be queried anywhere in the bounds box."""
        return self.points is None

    def in_domain(self, point):
        point = np.asarray(point, dtype=float)
        if self.points is not None:
            return bool(np.any(np.abs(self.points - point).max(axis=1) <= _POINT_TOL))
        if self.bounds is not None:
            return bool(np.all(point >= self.bounds[:, 0]) and np.all(point <= self.bounds[:, 1]))
        return True

    def require_in_domain(self, point):
        if not self.in_domain(point):
            raise UnknownPointError(f"point {np.asarray(point)} outside basis domain")

    def sample(self, point):
        """Values, gradients, Hessians of every electrode at `point`.

        Returns arrays of shape (n,), (n, 3), (n, 3, 3).
        """
        self.require_in_domain(point)
        vals, grads, hesses = [], [], []
        for e in self.electrodes:
            v, g, h = e.potential(point)
            vals.append(v)
            grads.append(g)
            hesses.append(h)
        return np.array(vals), np.array(grads), np.array(hesses)

    def axis_point(self, x):
        """3D point on the nominal trapping line at axial coordinate `x` (m)."""
        if self.axis_y is None or self.axis_z is None:
            raise ValidationError("basis has no trapping-line metadata (axis_y/axis_z)")
        return np.array([float(x), self.axis_y, self.axis_z])


@dataclass(frozen=True)
class RfDrive:
    """RF drive: angular frequency (rad/s), amplitude (V), and the electrode
    whose per-volt potential defines the RF field map."""

    frequency: float
    amplitude: float
    electrode: object

    def __post_init__(self):
        if self.frequency <= 0:
            raise ValidationError(f"RF drive frequency must be positive, got {self.frequency}")

    def field_per_volt(self, point):
        """RF E-field (V/m per volt) and its Jacobian (V/m^2 per volt)."""
        _, grad, hess = self.electrode.potential(point)
        return -grad, -hess

    def with_amplitude(self, amplitude):
        return RfDrive(self.frequency, float(amplitude), self.electrode)


@dataclass(frozen=True)
class TrapSite:
    """A trapping location with its secular frequencies and depth."""

    position: np.ndarray
    frequencies: np.ndarray  # rad/s, ascending
    depth: float  # J

    def __post_init__(self):
        if self.depth < 0:
            raise ValidationError(f"trap depth must be nonnegative, got {self.depth}")


def characterize_site(basis, voltages, rf, species, position, escape_axis,
                      **depth_kwargs):
    """Secular frequencies and depth of the well at `position` as a TrapSite.

    Raises ValidationError when any curvature at the site is negative
    (not a valid trapping point).
    """
    terms = total_potential(basis, voltages, rf, species, position)
    modes = secular_frequency(terms.hessian, species)
    if modes.imaginary.any():
        raise ValidationError("site has a negative-curvature direction")
    depth = trap_depth(basis, voltages, rf, species, position, escape_axis,
                       **depth_kwargs)
    return TrapSite(position=np.asarray(position, dtype=float),
                    frequencies=modes.omega, depth=depth)


@dataclass(frozen=True)
class PotentialTerms:
    """Total potential energy (J), gradient (J/m), Hessian (J/m^2)."""

    energy: float
    gradient: np.ndarray
    hessian: np.ndarray


def _pseudo_coefficient(rf, species):
    return species.charge ** 2 * rf.amplitude ** 2 / (4.0 * species.mass * rf.frequency ** 2)


def total_potential(basis, voltages, rf, species, point):
    """Total potential energy, gradient, and Hessian for an ion at `point`.

    Electrostatic part: q * sum_i v_i * phi_i.  RF part: the time-averaged
    pseudopotential q^2 |E_rf|^2 / (4 m Omega^2), which is nonnegative.
    Pass ``rf=None`` (or amplitude 0) for a DC-only result.

    Returns a :class:`PotentialTerms`.
    """
    voltages = np.asarray(voltages, dtype=float)
    if voltages.shape != (len(basis),):
        raise DimensionError(
            f"expected {len(basis)} voltages, got shape {voltages.shape}")
    point = np.asarray(point, dtype=float)
    vals, grads, hesses = basis.sample(point)
    q = species.charge
    energy = q * float(voltages @ vals)
    gradient = q * (voltages @ grads)
    hessian = q * np.einsum("i,ijk->jk", voltages, hesses)

    if rf is not None and rf.amplitude != 0.0:
        coef = _pseudo_coefficient(rf, species)
        _, g_rf, h_rf = rf.electrode.potential(point)
        energy += coef * float(g_rf @ g_rf)
        gradient = gradient + coef * 2.0 * (h_rf @ g_rf)
        hessian = hessian + coef * 2.0 * (h_rf @ h_rf)
    return PotentialTerms(energy=energy, gradient=gradient, hessian=hessian)


@dataclass(frozen=True)
class SecularModes:
    """Secular mode frequencies (rad/s, ascending eigenvalue order), principal
    axes (columns), and per-mode flags marking negative-curvature directions
    (imaginary frequency, magnitude reported)."""

    omega: np.ndarray
    axes: np.ndarray
    imaginary: np.ndarray


def secular_frequency(hessian, species, *, symmetry_rtol=1e-9):
    """Secular frequencies from an energy Hessian (J/m^2).

    omega_k = sqrt(|lambda_k| / m) for eigenvalues lambda_k; directions with
    negative curvature are flagged imaginary rather than dropped.
    """
    hessian = np.asarray(hessian, dtype=float)
    if hessian.shape != (3, 3):
        raise DimensionError(f"hessian must be 3x3, got {hessian.shape}")
    scale = np.abs(hessian).max()
    if scale > 0 and np.abs(hessian - hessian.T).max() > symmetry_rtol * scale:
        raise ValidationError("hessian is not symmetric")
    evals, axes = np.linalg.eigh(0.5 * (hessian + hessian.T))
    tiny = 1e-12 * max(scale, 1.0) if scale > 0 else 0.0
    imaginary = evals < -tiny
    omega = np.sqrt(np.abs(evals) / species.mass)
    return SecularModes(omega=omega, axes=axes, imaginary=imaginary)


def trap_depth(basis, voltages, rf, species, site, escape_axis, *,
               step=None, max_steps=20000):
    """Depth of the well at `site` along `escape_axis`.

    Marches the total energy along the (normalized) escape direction until
    it turns over, refines the barrier maximum, and returns
    E(barrier) - E(site) in J.

    Raises ValidationError when `site` is not a local minimum along the
    axis, and DomainExhaustedError (carrying the boundary energy difference)
    when the energy is still rising at the domain edge.
    """
    site = np.asarray(site, dtype=float)
    axis = np.asarray(escape_axis, dtype=float)
    norm = np.linalg.norm(axis)
    if norm == 0:
        raise ValidationError("escape axis must be a nonzero vector")
    axis = axis / norm

    if basis.bounds is None:
        raise ValidationError("trap_depth needs a basis with a bounded domain")
    # Distance to the domain box along the ray.
    t_max = np.inf
    for k in range(3):
        if axis[k] > 0:
            t_max = min(t_max, (basis.bounds[k, 1] - site[k]) / axis[k])
        elif axis[k] < 0:
            t_max = min(t_max, (basis.bounds[k, 0] - site[k]) / axis[k])
    if not np.isfinite(t_max) or t_max <= 0:
        raise ValidationError("site is on the domain boundary along the escape axis")

    if step is None:
        step = t_max / 2000.0

    def energy(t):
        return total_potential(basis, voltages, rf, species, site + t * axis).energy

    e_site = energy(0.0)
    if energy(step) <= e_site or energy(-step) <= e_site:
        raise ValidationError("site is not a local minimum along the escape axis")

    t_prev, e_prev = 0.0, e_site
    t_curr, e_curr = step, energy(step)
    n = 1
    while n < max_steps:
        t_next = t_curr + step
        if t_next > t_max:
            # Monotone rise up to the boundary: no turning point in domain.
            e_edge = energy(t_max)
            raise DomainExhaustedError(
                "no barrier maximum inside the basis domain",
                boundary_value=e_edge - e_site)
        e_next = energy(t_next)
        if e_next < e_curr:
            break
        t_prev, e_prev = t_curr, e_curr
        t_curr, e_curr = t_next, e_next
        n += 1
    else:
        raise DomainExhaustedError("barrier search exceeded max_steps",
                                   boundary_value=e_curr - e_site)

    res = minimize_scalar(lambda t: -energy(t), bracket=(t_prev, t_curr, t_curr + step),
                          method="brent", options=dict(xtol=1e-12))
    e_barrier = -res.fun
    return e_barrier - e_site


def find_rf_null(rf, guess, *, max_iter=100, gtol_rel=1e-12):
    """Locate the RF field null near `guess` by Newton iteration on grad(phi) = 0.

    The per-volt potential is smooth, so Newton steps d = -H^-1 g converge
    quadratically.  Deterministic for identical inputs.
    """
    x = np.asarray(guess, dtype=float).copy()
    _, g, h = rf.electrode.potential(x)
    scale = np.abs(h).max()
    for _ in range(max_iter):
        if np.linalg.norm(g) <= gtol_rel * scale * max(np.linalg.norm(x), 1e-6):
            return x
        try:
            delta = np.linalg.solve(h, -g)
        except np.linalg.LinAlgError:
            raise ValidationError("singular Hessian while searching for RF null")
        x = x + delta
        _, g, h = rf.electrode.potential(x)
    raise ValidationError("RF null search did not converge")


def radial_pseudo_frequency(rf, species, null):
    """Largest secular frequency of the pseudopotential at the RF null."""
    coef = _pseudo_coefficient(rf, species)
    _, _, h_rf = rf.electrode.potential(null)
    hess = coef * 2.0 * (h_rf @ h_rf)
    modes = secular_frequency(hess, species)
    return float(modes.omega[-1])


def calibrate_rf_amplitude(rf, species, target_radial, null, *,
                           v_max=5000.0, rel_tol=1e-12):
    """Scan the RF amplitude until the radial secular frequency matches.

    Brackets the monotone response omega_r(V) on [0, v_max] and bisects to
    `rel_tol`.  Returns a new RfDrive with the calibrated amplitude.
    """
    if target_radial <= 0:
        raise ValidationError("target radial frequency must be positive")

    def omega_at(v):
        return radial_pseudo_frequency(rf.with_amplitude(v), species, null)

    lo, hi = 0.0, 1.0
    while omega_at(hi) < target_radial:
        hi *= 2.0
        if hi > v_max:
            raise ValidationError(
                f"radial frequency target unreachable below {v_max} V")
    while (hi - lo) > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if omega_at(mid) < target_radial:
            lo = mid
        else:
            hi = mid
    return rf.with_amplitude(0.5 * (lo + hi))
