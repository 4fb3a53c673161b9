"""Pseudo-spectral Vlasov-Poisson simulation with Gevrey-norm tracking."""
from .dynamics import PotentialSpec, density, force, rhs
from .energy import EnergyBreakdown, energy_breakdown, verify_identity
from .errors import (BlowupCeilingExceeded, CFLViolation, NumericalHalt, RadiusTooLargeError, SymmetryError,
                     ValidationError)
from .integrator import StepPolicy, evolve, step
from .norms import GevreyParams, NormReport, gevrey_norm, japanese_bracket, norm_report, sobolev_norm
from .phase_space import GridSpec, PhaseSpectrum, to_physical, to_spectral
from .regularity import RadiusState, RadiusTracker, advance_lambda, check_sobolev_bound, envelope_A
from .runner import run
from .scenario import ScenarioSpec

__version__ = "0.1.0"

__all__ = [
    "BlowupCeilingExceeded", "CFLViolation", "EnergyBreakdown", "GevreyParams", "GridSpec", "NormReport",
    "NumericalHalt", "PhaseSpectrum", "PotentialSpec", "RadiusState", "RadiusTooLargeError", "RadiusTracker",
    "ScenarioSpec", "StepPolicy", "SymmetryError", "ValidationError", "advance_lambda", "check_sobolev_bound",
    "density", "energy_breakdown", "envelope_A", "evolve", "force", "gevrey_norm", "japanese_bracket",
    "norm_report", "rhs", "run", "sobolev_norm", "step", "to_physical", "to_spectral", "verify_identity",
]
