"""Simulator of a measurement-powered single-qubit microwave amplifier."""

from __future__ import annotations

__version__ = "0.1.0"

from .dynamics import BlochState, DriveConfig, QubitConfig, ideal_qubit
from .engine import (
    CycleSchedule,
    ReadoutConfig,
    TrajectoryResult,
    ideal_readout,
    run_engine,
    run_engine_averaged,
    run_engine_batch,
)
from .ensemble import TlsEnsemble, TlsSpec, expand, default_tls, run_ensemble

__all__ = [
    "BlochState",
    "CycleSchedule",
    "DriveConfig",
    "QubitConfig",
    "ReadoutConfig",
    "TlsEnsemble",
    "TlsSpec",
    "TrajectoryResult",
    "expand",
    "ideal_qubit",
    "ideal_readout",
    "default_tls",
    "run_engine",
    "run_engine_averaged",
    "run_engine_batch",
    "run_ensemble",
]
