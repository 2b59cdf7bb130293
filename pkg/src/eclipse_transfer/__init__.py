"""Quasi-minimum-time planar low-thrust transfers with Earth-shadow constraints."""
from eclipse_transfer.direct import OptimizerReport, SearchBox, direct_minimize
from eclipse_transfer.dynamics import (
    AugmentedState,
    Environment,
    JumpEvent,
    VehicleSpec,
    apply_costate_jump,
    hamiltonian,
    in_eclipse,
    rhs,
)
from eclipse_transfer.errors import (
    ConfigError,
    DegenerateControlError,
    GrazingCrossingError,
    InvalidAngleError,
    NoFeasibleTransferError,
    NoRootError,
    SingularityError,
    TransferError,
    UnboundOrbitError,
)
from eclipse_transfer.guess import CostateGuess, build_guess, solve_theta0
from eclipse_transfer.orbital import (
    OrbitSpec,
    OsculatingElements,
    delta_v,
    elements_from_state,
    initial_state,
    local_time_to_alpha0,
)
from eclipse_transfer.propagation import IntegratorSettings, StopCondition, Trajectory, propagate
from eclipse_transfer.solver import SolveResult, TransferProblem, evaluate, gto_to_geo, objective, solve

__version__ = "0.1.0"

__all__ = [
    "AugmentedState", "ConfigError", "CostateGuess", "DegenerateControlError", "Environment",
    "GrazingCrossingError", "IntegratorSettings", "InvalidAngleError", "JumpEvent",
    "NoFeasibleTransferError", "NoRootError", "OptimizerReport", "OrbitSpec",
    "OsculatingElements", "SearchBox", "SingularityError", "SolveResult", "StopCondition",
    "Trajectory", "TransferError", "TransferProblem", "UnboundOrbitError", "VehicleSpec",
    "apply_costate_jump", "build_guess", "delta_v", "direct_minimize", "elements_from_state",
    "evaluate", "gto_to_geo", "hamiltonian", "in_eclipse", "initial_state",
    "local_time_to_alpha0", "objective", "propagate", "rhs", "solve", "solve_theta0",
]
