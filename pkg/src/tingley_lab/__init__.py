"""Exact finite models for recovering real-linear extensions of unit-sphere isometries."""

from .core_model import ComplexFunction, PointEvaluation, PointSpace, sphere_check, sup_norm, unit_level_set
from .isometry_factory import (
    SphereIsometryOracle,
    WcoSpec2,
    WcoSpec3,
    build_wco_2,
    build_wco_3,
    perturb_oracle,
    random_instance,
    verify_isometry,
)
from .reconstruction import OracleInconsistent, ReconstructionReport, reconstruct, reconstruct_2, reconstruct_3
from .tbundle import BundlePoint, EquivariantFunction, FiniteTBundle, RadialProfile

__all__ = [
    "BundlePoint",
    "ComplexFunction",
    "EquivariantFunction",
    "FiniteTBundle",
    "OracleInconsistent",
    "PointEvaluation",
    "PointSpace",
    "RadialProfile",
    "ReconstructionReport",
    "SphereIsometryOracle",
    "WcoSpec2",
    "WcoSpec3",
    "build_wco_2",
    "build_wco_3",
    "perturb_oracle",
    "random_instance",
    "reconstruct",
    "reconstruct_2",
    "reconstruct_3",
    "sphere_check",
    "sup_norm",
    "unit_level_set",
    "verify_isometry",
]
