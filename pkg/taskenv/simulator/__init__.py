"""Discrete-time simulation: stepping, sensing, runs and task status"""

from .briefing import Briefing, goal_flags
from .channels import ActuatorChannels, Observation, quantize, sense
from .config import SimConfig
from .engine import Controller, Episode, RunResult, check_status, run, step
from .history import History, HistoryEntry
from .status import FailureCause, Outcome, TaskStatus, TaskTracker, build_tracker

__all__ = [
    "SimConfig",
    "History",
    "HistoryEntry",
    "Observation",
    "Briefing",
    "goal_flags",
    "quantize",
    "sense",
    "ActuatorChannels",
    "step",
    "run",
    "RunResult",
    "Episode",
    "Controller",
    "check_status",
    "Outcome",
    "FailureCause",
    "TaskStatus",
    "TaskTracker",
    "build_tracker",
]
