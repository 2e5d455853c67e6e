"""Operations module: estimators and Monte Carlo sweeps."""

from .estimators import (
    EstimatorConfig, CfoEstimate, CrtEstimator,
    CcmleEstimator, ClassicCrtEstimator, ClosedFormCrtEstimator, MooseEstimator,
    estimate, ccmle_estimate, classic_crt_estimate, closed_form_crt_estimate, moose_estimate,
)
from .montecarlo import CfoMode, SweepSpec, SweepPoint, SweepResult, run_trial, run_sweep

__all__ = [
    "EstimatorConfig", "CfoEstimate", "CrtEstimator",
    "CcmleEstimator", "ClassicCrtEstimator", "ClosedFormCrtEstimator", "MooseEstimator",
    "estimate", "ccmle_estimate", "classic_crt_estimate", "closed_form_crt_estimate", "moose_estimate",
    "CfoMode", "SweepSpec", "SweepPoint", "SweepResult", "run_trial", "run_sweep",
]
