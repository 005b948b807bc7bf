"""Quasi-static vine robot simulator with reconfigurable pneumatic joints."""

__version__ = "0.1.0"

from .calibration import Construction, calibrate, embedded_datasets
from .config import RobotConfiguration, TrunkSegment, build_robot, get_robot, robot_names
from .growth import (
    CalibrationTable,
    GrowthPhase,
    GrowthState,
    RetractionPlan,
    free_space_retraction_stability,
    plan_cascading_retraction,
    step_growth,
    step_retraction,
)
from .mechanics import (
    ChamberGeometry,
    MaterialSpec,
    PouchState,
    PressureState,
    RPJModule,
    TendonState,
    chamber_contact_force,
    curvature_from_moment,
    effective_bending_stiffness,
    pouch_geometry,
    pouch_ratio,
    solve_pouch_angle,
    tendon_moment,
)
from .solver import (
    EquilibriumShape,
    PointLoad,
    assemble_chain,
    bend_to_angle,
    localization_index,
    solve_equilibrium,
    tip_deflection_curve,
)

__all__ = [
    "CalibrationTable",
    "ChamberGeometry",
    "Construction",
    "EquilibriumShape",
    "GrowthPhase",
    "GrowthState",
    "MaterialSpec",
    "PointLoad",
    "PouchState",
    "PressureState",
    "RPJModule",
    "RetractionPlan",
    "RobotConfiguration",
    "TendonState",
    "TrunkSegment",
    "assemble_chain",
    "bend_to_angle",
    "build_robot",
    "calibrate",
    "chamber_contact_force",
    "curvature_from_moment",
    "effective_bending_stiffness",
    "embedded_datasets",
    "free_space_retraction_stability",
    "get_robot",
    "localization_index",
    "plan_cascading_retraction",
    "pouch_geometry",
    "pouch_ratio",
    "robot_names",
    "solve_equilibrium",
    "solve_pouch_angle",
    "step_growth",
    "step_retraction",
    "tendon_moment",
    "tip_deflection_curve",
]
