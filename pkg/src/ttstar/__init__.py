"""Arbitrary-precision numerics for the radial tt*-Toda equation (case 4a)."""
from .asymptotics import (
    ExponentData,
    RegionLabel,
    StokesPair,
    classify_stokes,
    conjecture_predict,
    exponent_data,
    fine_structure_predict,
    gamma_from_stokes,
    stokes_from_gamma,
)
from .charts import ChartId, ChartState, chart_transition
from .farfield import corrected_far_field, leading_far_field
from .glrk import GaussLegendre, IntegratorConfig, integrate_path
from .pipelines import RunProfile, deviation_run, omega1_run, verify_fine_structure

__version__ = "0.1.0"

__all__ = [
    "ChartId",
    "ChartState",
    "ExponentData",
    "GaussLegendre",
    "IntegratorConfig",
    "RegionLabel",
    "RunProfile",
    "StokesPair",
    "chart_transition",
    "classify_stokes",
    "conjecture_predict",
    "corrected_far_field",
    "deviation_run",
    "exponent_data",
    "fine_structure_predict",
    "gamma_from_stokes",
    "integrate_path",
    "leading_far_field",
    "omega1_run",
    "stokes_from_gamma",
    "verify_fine_structure",
]
