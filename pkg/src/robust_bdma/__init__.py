"""Robust secure beamforming for BDMA massive MIMO downlinks."""
from .beamformer import (
    AN_SPLIT,
    NON_ROBUST,
    ROBUST,
    BeamformingSolution,
    InfeasibleGeometryError,
    TargetSinrs,
    covariance_views,
    solve,
    solve_an_split,
    solve_non_robust,
    solve_robust,
)
from .channel import ChannelError, ChannelSet, make_channel_set, sample_all_true_channels
from .config import ConfigError, ScenarioConfig, SweepSpec

__version__ = "0.1.0"
