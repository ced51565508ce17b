"""Simulator, planning library and benchmark harness for informative path
planning over wind-drifted floating targets."""

from ._kernels import BACKEND
from .config import (
    ConfigError,
    RngStreams,
    ScenarioConfig,
    config_hash,
    load,
    require_valid,
    save,
    substream,
    validate,
)
from .geometry import GridGeometry, wrap_angle
from .harness import HarnessError, MonteCarloResult, run_episode, run_monte_carlo, trial_config
from .mapping import (
    OccupancyGrid,
    negative_sensor_model,
    positive_sensor_model,
    to_csv_text,
    to_pgm_text,
)
from .metrics import MetricSample, Summary, aggregate, mean_detections, mse, truth_grid
from .planner import (
    PlanResult,
    UtilityBreakdown,
    candidate_paths,
    forward_simulate,
    plan,
    tracking_utility,
    utility,
    weight_schedule,
)
from .predictor import (
    BinaryTargetGrid,
    PredictedGrid,
    binarize,
    generate_dataset,
    predict,
)
from .sensors import (
    Detection,
    SensorModelParams,
    camera_to_global,
    global_to_camera,
    in_fov,
    localization_sigma,
    simulate_detections,
)
from .trace import EpisodeTrace, TraceError, checksum, replay, write_trace
from .trajectory import Trajectory, lawnmower_trajectory
from .world import (
    Pose,
    TargetState,
    WindState,
    World,
    build_world,
    drift_step,
    step_asv,
    step_targets,
    step_wind,
)

__version__ = "0.1.0"
