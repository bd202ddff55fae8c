"""Delay-Doppler fingerprint synchronization of CFO and timing drift in passive OFDM sensing."""
from .core_types import ClockOffsets, GridMeta, PathParams, SystemConfig
from .channel_sim import Scenario, SnapshotMatrix, reference_scenario, synthesize_gamma

__version__ = "0.1.0"
__all__ = ["ClockOffsets", "GridMeta", "PathParams", "SystemConfig", "Scenario",
           "SnapshotMatrix", "reference_scenario", "synthesize_gamma"]
