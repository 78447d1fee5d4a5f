from .collect import TRAJ_STEPS, collect_diffdrive, collect_msd, collect_quad
from .dataset import (
    Dataset,
    Trajectory,
    Transition,
    history_window,
    iter_windows,
    window_rows,
)
from .io import DatasetError, dataset_load, dataset_save
from .replay import ReplayBuffer

__all__ = [
    "Dataset",
    "Trajectory",
    "Transition",
    "history_window",
    "iter_windows",
    "window_rows",
    "ReplayBuffer",
    "collect_msd",
    "collect_diffdrive",
    "collect_quad",
    "TRAJ_STEPS",
    "DatasetError",
    "dataset_save",
    "dataset_load",
]
