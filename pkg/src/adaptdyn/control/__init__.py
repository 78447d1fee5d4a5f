from .costs import (
    GoalReachCost,
    PathTrackCost,
    PoseTrackCost,
    QuadraticCost,
    VelocityCost,
    monotone_nearest,
    wrap_angle,
)
from .episode import MODES, EpisodeLog, run_episode
from .mppi import (
    ControlResult,
    MPPIConfig,
    PlannerError,
    bundle_dynamics,
    mppi_defaults,
    mppi_plan,
)
from .paths import circle_refs, stadium_path

__all__ = [
    "wrap_angle",
    "monotone_nearest",
    "GoalReachCost",
    "VelocityCost",
    "PathTrackCost",
    "PoseTrackCost",
    "QuadraticCost",
    "stadium_path",
    "circle_refs",
    "MPPIConfig",
    "ControlResult",
    "PlannerError",
    "mppi_plan",
    "bundle_dynamics",
    "mppi_defaults",
    "MODES",
    "EpisodeLog",
    "run_episode",
]
