"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input that fails a structural check (shape, symmetry, config)."""


class SymmetryError(ValidationError):
    """Spectrum is not conjugate-symmetric, so it does not describe a real field."""

    def __init__(self, message, index=None, residual=None):
        super().__init__(message)
        self.index = index
        self.residual = residual


class NumericalHalt(RuntimeError):
    """Base class for conditions that stop a run (exit code 3)."""

    reason = "numerical_halt"


class RadiusTooLargeError(NumericalHalt, OverflowError):
    """Gevrey multiplier would overflow on the current grid."""

    reason = "radius_too_large_for_grid"


class CFLViolation(NumericalHalt):
    reason = "cfl_violation"


class BlowupCeilingExceeded(NumericalHalt):
    reason = "blowup_monitor_ceiling"
