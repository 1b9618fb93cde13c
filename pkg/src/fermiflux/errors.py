"""Exception types shared across the package."""


class FermifluxError(Exception):
    """Base class for all package-specific errors."""


class MalformedInputError(FermifluxError):
    """Input matrix or model does not have the required shape/structure."""


class ValidationError(FermifluxError):
    """A structural invariant is violated beyond tolerance.

    Carries the list of violated constraints as ``violations``:
    tuples ``(name, residual, tolerance)``.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        lines = ", ".join(f"{n} (residual {r:.3e} > {t:.1e})" for n, r, t in self.violations)
        super().__init__(f"invariant violations: {lines}")


class NotErgodicError(FermifluxError):
    """The model fails the Kalman rank criterion; stationary state not unique."""


class ResourceLimitError(FermifluxError):
    """Requested Fock-space size exceeds the configured cap."""


class DegenerateSpectrumError(FermifluxError):
    """Spectral splitting hit the imaginary-axis guard band."""


class NumericDegeneracyError(FermifluxError):
    """A numerically singular intermediate (e.g. invariant-subspace stacking)."""


class InfeasibleError(FermifluxError):
    """Requested target violates a feasibility condition (first/second law, partial sums)."""


class UnsupportedModelError(FermifluxError):
    """Operation is only defined for a restricted model class (e.g. single-mode baths)."""


class InternalConsistencyError(FermifluxError):
    """A quantity that must be real/positive came out otherwise; indicates a bug upstream."""
