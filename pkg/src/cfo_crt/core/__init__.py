"""Core numerical model: range systems, waveforms and performance theory."""

from .base import (
    EstimatorType, CFOException, ValidationError, ProcessingError,
    InfeasibleConfigurationError, UndefinedPhaseError,
    BaseEstimator, EstimatorRegistry
)
from .crt_engine import ModuliSet, RemainderObservation, CommonRemainderSolution, build_moduli_set
from .signal_model import WaveformSpec, ChannelParams, IQBuffer, PreambleLayout, TrainingWaveform
from .theory import PerformanceModel, ThresholdQuery, ConfigCandidate

__all__ = [
    "EstimatorType", "CFOException", "ValidationError", "ProcessingError",
    "InfeasibleConfigurationError", "UndefinedPhaseError",
    "BaseEstimator", "EstimatorRegistry",
    "ModuliSet", "RemainderObservation", "CommonRemainderSolution", "build_moduli_set",
    "WaveformSpec", "ChannelParams", "IQBuffer", "PreambleLayout", "TrainingWaveform",
    "PerformanceModel", "ThresholdQuery", "ConfigCandidate",
]
