"""Weightless spiking network that learns axonal delays instead of weights."""

from .config import NetworkConfig, load_config, save_config
from .engine import Network, evaluate, present, train_epoch
from .readout import Assignment, build_assignment, predict

__version__ = "0.1.0"

__all__ = [
    "Assignment", "Network", "NetworkConfig", "build_assignment", "evaluate", "load_config",
    "predict", "present", "save_config", "train_epoch",
]
