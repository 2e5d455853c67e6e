"""cfo-crt - CRT-based carrier frequency offset estimation for OFDM."""

__version__ = "0.1.0"
__author__ = "cfo-crt developers"
__description__ = "Robust CRT carrier frequency offset estimation with Monte Carlo evaluation"

from .core.crt_engine import ModuliSet, build_moduli_set, reconstruct_mle
from .core.signal_model import WaveformSpec, ChannelParams, build_preamble, apply_channel
from .operations.estimators import EstimatorConfig, CfoEstimate, estimate

__all__ = [
    "ModuliSet", "build_moduli_set", "reconstruct_mle",
    "WaveformSpec", "ChannelParams", "build_preamble", "apply_channel",
    "EstimatorConfig", "CfoEstimate", "estimate",
]
