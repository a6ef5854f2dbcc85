"""Certification harness for the aggregation risk bounds."""

from .bounds import (
    McEwaReport,
    RiskReport,
    Scenario,
    mcewa_identity_check,
    oracle_rhs_discrete,
    point_mass_rhs,
    reports_to_csv,
    temperature_threshold,
    theorem5_rhs,
    verify_theorem,
    verify_theorem5,
)
from .skorokhod import EtaSpec, SkorokhodReport, skorokhod_check
from .stein import (
    DensityLaw,
    SteinProfile,
    convolved_density,
    convolved_stein_constant,
    density_law,
    stein_constant,
    stein_profile,
    symmetric_beta,
    triangular,
)

__all__ = [
    "DensityLaw",
    "EtaSpec",
    "McEwaReport",
    "RiskReport",
    "Scenario",
    "SkorokhodReport",
    "SteinProfile",
    "convolved_density",
    "convolved_stein_constant",
    "density_law",
    "mcewa_identity_check",
    "oracle_rhs_discrete",
    "point_mass_rhs",
    "reports_to_csv",
    "skorokhod_check",
    "stein_constant",
    "stein_profile",
    "symmetric_beta",
    "temperature_threshold",
    "theorem5_rhs",
    "triangular",
    "verify_theorem",
    "verify_theorem5",
]
