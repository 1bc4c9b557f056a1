"""Exception types shared across the toolkit."""


class IonBenchError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(IonBenchError):
    """Input violates a documented precondition or invariant."""


class DimensionError(ValidationError):
    """Array shape or length does not match what the operation expects."""


class UnknownPointError(IonBenchError):
    """Query point not present in (or outside the domain of) a basis."""


class DomainExhaustedError(IonBenchError):
    """A scan reached the edge of the basis domain without finding its target.

    Carries the value accumulated at the boundary (for a trap-depth scan,
    the energy difference between the domain edge and the well minimum).
    """

    def __init__(self, message, boundary_value=None):
        super().__init__(message)
        self.boundary_value = boundary_value


class InfeasibleSolveError(IonBenchError):
    """Bounded voltage solve cannot reach tolerance; carries the best attempt."""

    def __init__(self, message, best_solution=None):
        super().__init__(message)
        self.best_solution = best_solution


class ShuttleStepError(IonBenchError):
    """A shuttle waveform step failed; names the failing step index."""

    def __init__(self, step_index, cause):
        super().__init__(f"shuttle step {step_index} failed: {cause}")
        self.step_index = step_index
        self.cause = cause


class TruncationError(IonBenchError):
    """Fock-space truncation leaves more thermal weight behind than allowed."""


class ScenarioError(IonBenchError):
    """Scenario file failed validation; carries the diagnostics list."""

    def __init__(self, diagnostics):
        lines = "; ".join(f"{d.pointer}: {d.message}" for d in diagnostics)
        super().__init__(f"scenario validation failed: {lines}")
        self.diagnostics = list(diagnostics)


class StepFailedError(IonBenchError):
    """A scenario step failed during execution."""
