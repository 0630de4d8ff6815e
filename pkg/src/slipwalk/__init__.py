"""Reactive blind walking for a bipedal robot: decoupled spring/pendulum
MPC planners, quintic swing trajectories, a 1 kHz reduced-order simulator
over uneven terrain, and a whole-body QP controller."""

from .horizontal import FootstepPlan, FootstepPlanner, HorizontalParams, HorizontalState
from .qp import ActiveSetQp, QpProblem, QpSolution, QpStatus, solve_qp
from .scenario import ScenarioError, emit_scenario, parse_scenario
from .simulate import GaitParams, PushEvent, Scenario, SimLog, run_scenario, summarize
from .swing import GaitClock, advance_clock, swing_foot_ref
from .terrain import Flat, Slope, Stairs, TerrainError, TerrainProfile, Wave, build_profile
from .vertical import VerticalParams, VerticalPlanner, VerticalState

__version__ = "0.1.0"

__all__ = [
    "ActiveSetQp",
    "FootstepPlan",
    "FootstepPlanner",
    "Flat",
    "GaitClock",
    "GaitParams",
    "HorizontalParams",
    "HorizontalState",
    "PushEvent",
    "QpProblem",
    "QpSolution",
    "QpStatus",
    "Scenario",
    "ScenarioError",
    "SimLog",
    "Slope",
    "Stairs",
    "TerrainError",
    "TerrainProfile",
    "VerticalParams",
    "VerticalPlanner",
    "VerticalState",
    "Wave",
    "advance_clock",
    "build_profile",
    "emit_scenario",
    "parse_scenario",
    "run_scenario",
    "solve_qp",
    "summarize",
    "swing_foot_ref",
]
