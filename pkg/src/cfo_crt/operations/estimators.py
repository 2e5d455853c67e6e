"""End-to-end CFO estimators operating on received preambles."""

from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

from ..config.manager import config_manager
from ..core.base import BaseEstimator, EstimatorRegistry, EstimatorType, ValidationError
from ..core.crt_engine import (
    RemainderObservation,
    mod_real,
    reconstruct_classic,
    reconstruct_from_common_remainder,
    reconstruct_mle,
    solve_common_remainder_search,
)
from ..core.signal_model import (
    IQBuffer,
    WaveformSpec,
    correlate,
    estimate_single_interval,
    wrap_to_symmetric,
)
from ..core.theory import variance_model
from ..utils.validation import Validator


@dataclass(frozen=True)
class EstimatorConfig:
    """Waveform, method and method-specific knobs.

    Without ``snr_hint_db`` the variance model is evaluated at unit SNR; the
    weights are ``∝ L_i³`` either way, only the reported variances change.
    ``search_step`` falls back to the process-wide setting.
    """

    spec: WaveformSpec
    method: EstimatorType = EstimatorType.CCMLE
    search_step: Optional[float] = None
    snr_hint_db: Optional[float] = None

    def __post_init__(self):
        try:
            object.__setattr__(self, "method", EstimatorType(self.method))
        except ValueError as e:
            raise ValidationError(f"Unknown estimator: {self.method}") from e

        if self.search_step is None:
            object.__setattr__(self, "search_step", config_manager.get("search_step"))
        step = Validator.validate_positive_float(self.search_step, "search_step")
        object.__setattr__(self, "search_step", step)
        limit = self.spec.mset.m_scale / 10.0
        if step > limit:
            raise ValidationError(f"search_step must lie in (0, {limit}], got: {step}")

        if self.snr_hint_db is not None:
            Validator.validate_positive_float(10.0 ** (float(self.snr_hint_db) / 10.0), "snr_hint")

    @property
    def snr_hint_linear(self) -> float:
        if self.snr_hint_db is None:
            return 1.0
        return 10.0 ** (float(self.snr_hint_db) / 10.0)


@dataclass(frozen=True)
class CfoEstimate:
    eps_n: float
    eps_m: float
    per_interval: Tuple[Tuple[float, float], ...]
    method: EstimatorType
    unambiguous_half_range: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "method": self.method.value,
            "eps_n": self.eps_n,
            "eps_m": self.eps_m,
            "per_interval": [{"eps_mi": v, "sigma_sq": s} for v, s in self.per_interval],
            "unambiguous_half_range": self.unambiguous_half_range,
        }


class CrtEstimator(BaseEstimator):
    """Shared front end of the CRT-based estimators.

    Each segment yields ``eps_{M_i}`` in ``[0, M*Gamma_i)`` from its lag-L_i
    correlation; subclasses turn those remainders into ``eps_m``.
    """

    def observe(self, buf: IQBuffer, cfg: EstimatorConfig) -> RemainderObservation:
        mset = cfg.spec.mset
        values = [
            estimate_single_interval(correlate(buf, i, cfg.spec), mset.full_range, interval)
            for i, interval in enumerate(mset.sample_intervals)
        ]
        variances = variance_model(mset, cfg.snr_hint_linear)
        return RemainderObservation(values=tuple(values), variances=tuple(variances))

    def reconstruct(self, obs: RemainderObservation, cfg: EstimatorConfig) -> float:
        raise NotImplementedError

    def estimate(self, buf: IQBuffer, cfg: EstimatorConfig) -> CfoEstimate:
        mset = cfg.spec.mset
        obs = self.observe(buf, cfg)
        eps_m = self.reconstruct(obs, cfg)
        n = cfg.spec.n_fft
        eps_n = wrap_to_symmetric(n / mset.full_range * eps_m, n)

        return CfoEstimate(
            eps_n=eps_n,
            eps_m=eps_m,
            per_interval=tuple(zip(obs.values, obs.variances)),
            method=self.estimator_type,
            unambiguous_half_range=n / 2.0,
        )


class CcmleEstimator(CrtEstimator):
    """Inverse-variance weighted common remainder, then CRT over the folding numbers."""

    def __init__(self):
        super().__init__(EstimatorType.CCMLE)

    def reconstruct(self, obs: RemainderObservation, cfg: EstimatorConfig) -> float:
        return reconstruct_mle(obs, cfg.spec.mset)


class ClassicCrtEstimator(CrtEstimator):
    def __init__(self):
        super().__init__(EstimatorType.CLASSIC_CRT)

    def reconstruct(self, obs: RemainderObservation, cfg: EstimatorConfig) -> float:
        return reconstruct_classic(obs, cfg.spec.mset)


class ClosedFormCrtEstimator(CrtEstimator):
    """Common remainder from an unweighted grid search with step ``search_step``."""

    def __init__(self):
        super().__init__(EstimatorType.CLOSED_FORM_CRT)

    def reconstruct(self, obs: RemainderObservation, cfg: EstimatorConfig) -> float:
        mset = cfg.spec.mset
        r_hat = solve_common_remainder_search(obs, mset, cfg.search_step)
        return reconstruct_from_common_remainder(obs, mset, r_hat)


class MooseEstimator(BaseEstimator):
    """Single-interval estimate from the longest segment, range ``±N/(2L_1)``."""

    def __init__(self):
        super().__init__(EstimatorType.MOOSE)

    def estimate(self, buf: IQBuffer, cfg: EstimatorConfig) -> CfoEstimate:
        mset = cfg.spec.mset
        n = cfg.spec.n_fft
        interval = mset.sample_intervals[0]
        width = n / interval

        raw = estimate_single_interval(correlate(buf, 0, cfg.spec), n, interval)
        eps_n = wrap_to_symmetric(raw, width)
        eps_m = float(mod_real(eps_n, n)) * mset.full_range / n
        sigma_sq = float(variance_model(mset, cfg.snr_hint_linear)[0])

        return CfoEstimate(
            eps_n=eps_n,
            eps_m=eps_m,
            per_interval=((raw, sigma_sq),),
            method=self.estimator_type,
            unambiguous_half_range=width / 2.0,
        )


registry = EstimatorRegistry()
for _estimator in (CcmleEstimator(), ClassicCrtEstimator(), ClosedFormCrtEstimator(), MooseEstimator()):
    registry.register(_estimator)


def estimate(buf: IQBuffer, cfg: EstimatorConfig) -> CfoEstimate:
    """Run the estimator named by ``cfg.method``."""
    return registry.get(cfg.method)(buf, cfg)


def _run(expected: EstimatorType, buf: IQBuffer, cfg: EstimatorConfig) -> CfoEstimate:
    if cfg.method is not expected:
        raise ValidationError(f"Config selects {cfg.method.value}, expected {expected.value}")
    return estimate(buf, cfg)


def ccmle_estimate(buf: IQBuffer, cfg: EstimatorConfig) -> CfoEstimate:
    return _run(EstimatorType.CCMLE, buf, cfg)


def classic_crt_estimate(buf: IQBuffer, cfg: EstimatorConfig) -> CfoEstimate:
    return _run(EstimatorType.CLASSIC_CRT, buf, cfg)


def closed_form_crt_estimate(buf: IQBuffer, cfg: EstimatorConfig) -> CfoEstimate:
    return _run(EstimatorType.CLOSED_FORM_CRT, buf, cfg)


def moose_estimate(buf: IQBuffer, cfg: EstimatorConfig) -> CfoEstimate:
    return _run(EstimatorType.MOOSE, buf, cfg)
