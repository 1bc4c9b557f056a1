"""Constrained linear solves for multi-well DC voltage sets.

Each well contributes four constraint rows at its position: the three
components of the electrode-generated electric field (targeting the negated
compensation field, so the total field at the ion cancels the ambient one)
and the axial potential curvature d^2(phi)/dx^2 (targeting m*omega^2/q or a
given curvature).  Rows from all wells are concatenated into one linear
system and solved by a minimum-norm SVD pseudo-inverse; voltages exceeding
the configured bound are handled by an iterative active-set on the box.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (DimensionError, InfeasibleSolveError, ShuttleStepError,
                     ValidationError)

SVD_CUTOFF = 1e-10  # singular values below cutoff * s_max are treated as rank-deficient

FIELD_KINDS = ("Ex", "Ey", "Ez")
CURVATURE_KIND = "d2x"


@dataclass(frozen=True)
class WellSpec:
    """A desired trapping site.

    position : (3,) m.  curvature : target axial d^2(phi)/dx^2 in V/m^2
    (positive).  compensation : ambient stray field (V/m) the electrodes
    must cancel at the site.
    """

    position: np.ndarray
    curvature: float
    compensation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        object.__setattr__(self, "compensation", np.asarray(self.compensation, dtype=float))
        if self.position.shape != (3,):
            raise DimensionError(f"well position must be a 3-vector, got {self.position.shape}")
        if self.compensation.shape != (3,):
            raise DimensionError("compensation field must be a 3-vector")
        if not self.curvature > 0:
            raise ValidationError(f"target axial curvature must be positive, got {self.curvature}")

    @classmethod
    def from_axial_frequency(cls, position, omega, species, compensation=(0.0, 0.0, 0.0)):
        """Build a spec from a target axial secular frequency (rad/s)."""
        if omega <= 0:
            raise ValidationError("axial frequency must be positive")
        curvature = species.mass * omega ** 2 / abs(species.charge)
        return cls(position=np.asarray(position, dtype=float), curvature=curvature,
                   compensation=np.asarray(compensation, dtype=float))

    def axial_frequency(self, species):
        return np.sqrt(abs(species.charge) * self.curvature / species.mass)


def interpolate_wells(start, end, t):
    """Linear interpolation between two well lists (position, curvature,
    compensation), well k mapping to well k.

    Exact at both endpoints and exact whenever start == end, so a static
    "shuttle" reproduces its solution bitwise.
    """
    if len(start) != len(end):
        raise ValidationError("start and end well lists must have equal length")
    if t == 0.0:
        return list(start)
    if t == 1.0:
        return list(end)
    out = []
    for a, b in zip(start, end):
        out.append(WellSpec(
            position=a.position + t * (b.position - a.position),
            curvature=a.curvature + t * (b.curvature - a.curvature),
            compensation=a.compensation + t * (b.compensation - a.compensation),
        ))
    return out


@dataclass(frozen=True)
class ConstraintSystem:
    """Stacked constraint rows: matrix (rows x electrodes), right-hand side,
    and one (well_index, kind) label per row."""

    matrix: np.ndarray
    rhs: np.ndarray
    labels: tuple
    electrode_names: tuple

    @property
    def n_rows(self):
        return self.matrix.shape[0]

    @property
    def n_electrodes(self):
        return self.matrix.shape[1]


def build_constraints(wells, basis):
    """Constraint system for a list of :class:`WellSpec` on `basis`.

    4 rows per well: Ex, Ey, Ez (electrode field per volt, targeting the
    negated compensation field) and d2x (axial curvature per volt).
    """
    if len(wells) == 0:
        raise ValidationError("at least one well required")
    positions = np.array([w.position for w in wells])
    for i in range(len(wells)):
        for j in range(i + 1, len(wells)):
            if np.abs(positions[i] - positions[j]).max() < 1e-9:
                raise ValidationError(f"wells {i} and {j} are at the same position")

    rows, rhs, labels = [], [], []
    for w_idx, well in enumerate(wells):
        basis.require_in_domain(well.position)
        _, grads, hesses = basis.sample(well.position)
        for k, kind in enumerate(FIELD_KINDS):
            rows.append(-grads[:, k])          # E-field per volt
            rhs.append(-well.compensation[k])  # electrodes cancel the ambient field
            labels.append((w_idx, kind))
        rows.append(hesses[:, 0, 0])
        rhs.append(well.curvature)
        labels.append((w_idx, CURVATURE_KIND))
    return ConstraintSystem(matrix=np.array(rows), rhs=np.array(rhs),
                            labels=tuple(labels), electrode_names=tuple(basis.names))


def compensation_system(wells, basis):
    """Constraint system for the compensation fields alone.

    Field rows target the negated compensation fields and curvature rows
    target zero, so the legacy additive flow is: solve the wells with zero
    compensation, solve this system, and sum the two voltage sets (they
    coincide with the inline solve by linearity on unbounded solves).
    """
    stripped = [replace(w, compensation=np.zeros(3)) for w in wells]
    base = build_constraints(stripped, basis)
    rhs = np.zeros_like(base.rhs)
    for i, (_, kind) in enumerate(base.labels):
        if kind in FIELD_KINDS:
            k = FIELD_KINDS.index(kind)
            well = wells[base.labels[i][0]]
            rhs[i] = -well.compensation[k]
    return ConstraintSystem(matrix=base.matrix, rhs=rhs, labels=base.labels,
                            electrode_names=base.electrode_names)


@dataclass(frozen=True)
class VoltageSolution:
    """Solved voltages with per-constraint residuals and bound-clip flags."""

    voltages: np.ndarray
    residuals: np.ndarray
    clipped: np.ndarray
    feasible: bool
    labels: tuple = ()

    @property
    def max_abs_voltage(self):
        return float(np.abs(self.voltages).max())

    @property
    def residual_norm(self):
        return float(np.linalg.norm(self.residuals))


def _min_norm_lstsq(A, b, cutoff=SVD_CUTOFF):
    """Minimum-norm least-squares solution via SVD with relative cutoff."""
    if A.size == 0:
        return np.zeros(A.shape[1])
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    if s[0] == 0.0:
        return np.zeros(A.shape[1])
    keep = s > cutoff * s[0]
    return Vt[keep].T @ ((U[:, keep].T @ b) / s[keep])


def _box_active_set(A, b, bound, cutoff):
    """Iterative active-set on the voltage box [-bound, bound].

    Violating voltages are clamped at the bound and the free ones re-solved
    (minimum-norm); clamped ones whose least-squares gradient points back
    into the box are released one at a time.
    """
    m, n = A.shape
    clamped_val = np.zeros(n)
    is_clamped = np.zeros(n, dtype=bool)
    v = np.zeros(n)
    for _ in range(4 * n + 8):
        free = ~is_clamped
        v = clamped_val.copy()
        if free.any():
            rhs = b - A[:, is_clamped] @ clamped_val[is_clamped]
            v[free] = _min_norm_lstsq(A[:, free], rhs, cutoff)
        viol = free & (np.abs(v) > bound * (1.0 + 1e-12))
        if viol.any():
            clamped_val[viol] = np.sign(v[viol]) * bound
            is_clamped |= viol
            continue
        grad = A.T @ (A @ v - b)
        pull = np.sign(clamped_val) * grad
        scale = np.abs(grad).max()
        releasable = is_clamped & (pull > 1e-12 * max(scale, 1.0))
        if releasable.any():
            i = int(np.argmax(np.where(releasable, pull, -np.inf)))
            is_clamped[i] = False
            clamped_val[i] = 0.0
            continue
        break
    np.clip(v, -bound, bound, out=v)
    return v, is_clamped


def solve_voltages(system, bound=None, *, feasibility_tol=1e-6, cutoff=SVD_CUTOFF):
    """Solve a :class:`ConstraintSystem` for electrode voltages.

    Returns the minimum-norm least-squares solution; when `bound` (V) is
    given and exceeded, re-solves with active bound constraints.  Residuals
    are always reported.  Raises InfeasibleSolveError (carrying the best
    solution) when every electrode is pinned at the bound and the residual
    norm still exceeds feasibility_tol * max(1, ||b||).
    """
    A = np.asarray(system.matrix, dtype=float)
    b = np.asarray(system.rhs, dtype=float)
    if A.ndim != 2 or A.shape[0] != b.shape[0]:
        raise DimensionError("constraint matrix and rhs shapes disagree")
    if A.shape[0] == 0:
        raise ValidationError("empty constraint system")
    if bound is not None and not bound > 0:
        raise ValidationError("voltage bound must be positive")

    v = _min_norm_lstsq(A, b, cutoff)
    clipped = np.zeros(A.shape[1], dtype=bool)
    if bound is not None and np.abs(v).max() > bound * (1.0 + 1e-12):
        v, clipped = _box_active_set(A, b, bound, cutoff)

    residuals = A @ v - b
    feasible = bool(np.linalg.norm(residuals) <= feasibility_tol * max(1.0, np.linalg.norm(b)))
    solution = VoltageSolution(voltages=v, residuals=residuals, clipped=clipped,
                               feasible=feasible, labels=system.labels)
    if bound is not None and not feasible and clipped.all():
        raise InfeasibleSolveError(
            f"all electrodes at the {bound} V bound with residual norm "
            f"{solution.residual_norm:.3e}", best_solution=solution)
    return solution


def shuttle_waveform(start_wells, end_wells, steps, basis, bound=None, **solve_kwargs):
    """Voltage solutions for linearly interpolated well configurations.

    Returns `steps` solutions including both endpoints.  Any failing step
    raises ShuttleStepError naming the step index.
    """
    if len(start_wells) != len(end_wells):
        raise ValidationError("start and end well counts must match")
    if steps < 2:
        raise ValidationError("a shuttle waveform needs at least 2 steps")
    solutions = []
    for k in range(steps):
        t = k / (steps - 1)
        wells_k = interpolate_wells(start_wells, end_wells, t)
        try:
            system = build_constraints(wells_k, basis)
            solutions.append(solve_voltages(system, bound=bound, **solve_kwargs))
        except Exception as exc:  # noqa: BLE001 - step index context matters more
            raise ShuttleStepError(k, exc) from exc
    return solutions


def sparsify_solution(system, bound=None, *, tol=1e-9, cutoff=SVD_CUTOFF):
    """Optional sparsity pass: zero out electrodes whose removal leaves the
    residual norm within `tol` * max(1, ||b||) of the dense solve.

    Greedy, smallest-|v| first.  Off the default solve path.
    """
    base = solve_voltages(system, bound=bound, cutoff=cutoff)
    b_scale = max(1.0, float(np.linalg.norm(system.rhs)))
    active = np.ones(system.n_electrodes, dtype=bool)
    best = base
    order = np.argsort(np.abs(base.voltages), kind="stable")
    for i in order:
        trial = active.copy()
        trial[i] = False
        if not trial.any():
            break
        A = system.matrix[:, trial]
        v_t = _min_norm_lstsq(A, system.rhs, cutoff)
        if bound is not None and np.abs(v_t).max() > bound * (1.0 + 1e-12):
            continue
        res = A @ v_t - system.rhs
        if np.linalg.norm(res) - base.residual_norm <= tol * b_scale:
            active = trial
            full = np.zeros(system.n_electrodes)
            full[active] = v_t
            best = VoltageSolution(voltages=full, residuals=res,
                                   clipped=np.zeros_like(active), feasible=True,
                                   labels=system.labels)
    return best, active
