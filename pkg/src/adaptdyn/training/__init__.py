from .defaults import WINDOW_LEN, phase1_defaults, phase2_defaults
from .losses import SegmentSampler, loss_multistep, rollout_model
from .online import OnlineConfig, online_learn
from .optim import Adam, exp_lr
from .phase1 import Phase1Config, TrainingDiverged, train_phase1
from .phase2 import Phase2Config, encode_factors, r_squared, train_phase2

__all__ = [
    "Adam",
    "exp_lr",
    "SegmentSampler",
    "loss_multistep",
    "rollout_model",
    "OnlineConfig",
    "online_learn",
    "Phase1Config",
    "Phase2Config",
    "TrainingDiverged",
    "train_phase1",
    "train_phase2",
    "encode_factors",
    "r_squared",
    "WINDOW_LEN",
    "phase1_defaults",
    "phase2_defaults",
]
