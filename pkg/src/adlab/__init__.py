"""Shear-cascade laboratory for anomalous dissipation at small viscosity.

The package builds an alternating-shear velocity field from a geometric
ladder of scales, advects a passive scalar through it at viscosity nu, lifts
the pair to a divergence-free three-component flow, and measures whether the
viscous dissipation survives or vanishes as nu walks down the two ladders.
"""

from .cascade import CascadeParams, ScaleSequences, build_sequences, check_conditions
from .experiments import (
    DissipationReport,
    ExperimentConfig,
    emit_outputs,
    run_dichotomy,
    run_heat_calibration,
    run_theorem_a,
    run_vanishing,
)
from .norms import bochner_norm, gradient_sup, holder_seminorm, l2_gap, uniformity_scan
from .nslift import LiftedForce, LiftedSolution, dissipation_3d, lift, ns_residual
from .scalarsolver import (
    DtPolicy,
    ResolutionError,
    ScalarField,
    Trajectory,
    gronwall_level,
    heat_counterexample,
    initial_datum,
    resolution_floor,
    solve,
    vanishing_viscosity_gap,
)
from .shearflow import ShearSchedule, build_schedule, sample_velocity, truncate
from .trajio import read_snapshots, write_snapshots

__version__ = "0.1.0"

__all__ = [
    "CascadeParams",
    "ScaleSequences",
    "build_sequences",
    "check_conditions",
    "DissipationReport",
    "ExperimentConfig",
    "emit_outputs",
    "run_dichotomy",
    "run_heat_calibration",
    "run_theorem_a",
    "run_vanishing",
    "bochner_norm",
    "gradient_sup",
    "holder_seminorm",
    "l2_gap",
    "uniformity_scan",
    "LiftedForce",
    "LiftedSolution",
    "dissipation_3d",
    "lift",
    "ns_residual",
    "DtPolicy",
    "ResolutionError",
    "ScalarField",
    "Trajectory",
    "gronwall_level",
    "heat_counterexample",
    "initial_datum",
    "resolution_floor",
    "solve",
    "vanishing_viscosity_gap",
    "ShearSchedule",
    "build_schedule",
    "sample_velocity",
    "truncate",
    "read_snapshots",
    "write_snapshots",
    "__version__",
]
