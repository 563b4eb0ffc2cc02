"""Trajectory planning and Monte Carlo evaluation for a multi-purpose delivery UAV.

The UAV carries a package from a source S to a destination D and back, and on
the way collects data from prioritized IoT clusters and forwards it to
terrestrial base stations (TBSs).
"""

from skyplanner.channel import ChannelParams, LinkSpec, UnitTimeTable
from skyplanner.energy import PowerProfile, RotorParams
from skyplanner.errors import (
    EnumerationCapError,
    InfeasibleTripError,
    IntegrationError,
    InvalidParameterError,
    NoRelayError,
)
from skyplanner.geometry import Point, Scene, SceneParams, sample_scene
from skyplanner.planner import PlannerConfig, TrajectoryPlan, plan_trajectory

__version__ = "0.1.0"

__all__ = [
    "ChannelParams",
    "EnumerationCapError",
    "InfeasibleTripError",
    "IntegrationError",
    "InvalidParameterError",
    "LinkSpec",
    "NoRelayError",
    "PlannerConfig",
    "Point",
    "PowerProfile",
    "RotorParams",
    "Scene",
    "SceneParams",
    "TrajectoryPlan",
    "UnitTimeTable",
    "plan_trajectory",
    "sample_scene",
]
