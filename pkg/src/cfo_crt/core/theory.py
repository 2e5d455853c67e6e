"""Closed-form performance of CRT-based CFO estimation.

Covers the per-interval variance model, the inverse-variance combined MSE
(which attains the CRB), the subset quantity ``xi`` that governs how likely a
common-remainder error is, and the SNR threshold above which the combined
estimate reaches the CRB with probability at least ``1 - delta``.
"""

import bisect
from dataclasses import dataclass, field
from math import gcd, log10, pi, prod, sqrt
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.special import erfc

from .base import ValidationError
from .crt_engine import ModuliSet, build_moduli_set
from ..utils.logging import get_logger
from ..utils.validation import Validator

logger = get_logger("theory")

Q_INVERSE_BRACKET = (0.0, 40.0)
DEFAULT_DELTA = 1e-6


@dataclass(frozen=True)
class PerformanceModel:
    """Analytic accuracy of one configuration at one SNR."""

    mset: ModuliSet
    n_fft: int
    snr_linear: float
    sigma_sq: Tuple[float, ...]
    weights: Tuple[float, ...]
    delta_mse_m: float
    delta_mse: float
    xi_star: float
    sigma_l: int

    def to_dict(self) -> Dict:
        return {
            "gammas": list(self.mset.gammas),
            "m_scale": self.mset.m_scale,
            "n_fft": self.n_fft,
            "snr_linear": self.snr_linear,
            "sigma_sq": list(self.sigma_sq),
            "weights": list(self.weights),
            "delta_mse_m": self.delta_mse_m,
            "delta_mse": self.delta_mse,
            "xi_star": self.xi_star,
            "sigma_l": self.sigma_l,
        }


@dataclass(frozen=True)
class ThresholdQuery:
    """SNR threshold for a target probability ``delta`` of a common-remainder error."""

    delta: float
    x_delta: float
    eta_th_linear: float
    eta_th_db: float

    def to_dict(self) -> Dict:
        return {
            "delta": self.delta,
            "x_delta": self.x_delta,
            "eta_th_linear": self.eta_th_linear,
            "eta_th_db": self.eta_th_db,
        }


@dataclass(frozen=True)
class ConfigCandidate:
    """One feasible range system with its accuracy and threshold.

    ``model`` is evaluated at the candidate's own threshold SNR.
    """

    mset: ModuliSet
    model: PerformanceModel
    threshold: ThresholdQuery
    pareto_layer: int = field(default=0, compare=False)

    def to_dict(self) -> Dict:
        return {
            "gammas": list(self.mset.gammas),
            "sample_intervals": list(self.mset.sample_intervals),
            "sigma_l": self.model.sigma_l,
            "eta_th_db": self.threshold.eta_th_db,
            "delta": self.threshold.delta,
            "delta_mse_at_threshold": self.model.delta_mse,
            "pareto_layer": self.pareto_layer,
        }


def _check_snr(snr_linear: float) -> float:
    return Validator.validate_positive_float(snr_linear, "snr_linear")


def sigma_l(mset: ModuliSet) -> int:
    """``sum_i L_i**3``, exact."""
    return sum(l ** 3 for l in mset.sample_intervals)


def variance_model(mset: ModuliSet, snr_linear: float) -> np.ndarray:
    """Per-interval error variance ``M²Γ² / (4π² L_i³ η)`` of ``eps_{M_i}``."""
    eta = _check_snr(snr_linear)
    cubes = np.asarray(mset.sample_intervals, dtype=float) ** 3
    scale = float(mset.full_range) ** 2
    return scale / (4.0 * pi ** 2 * cubes * eta)


def delta_mse(mset: ModuliSet, n_fft: int, snr_linear: float) -> float:
    """CRB of the normalized CFO, ``N² / (4π² η Σ L_i³)``."""
    eta = _check_snr(snr_linear)
    n = Validator.validate_positive_int(n_fft, "n_fft", minimum=2)
    return n ** 2 / (4.0 * pi ** 2 * eta * sigma_l(mset))


def delta_mse_m(mset: ModuliSet, snr_linear: float) -> float:
    """MSE of the inverse-variance combination in ``eps_m`` units, ``Σ w_i²σ_i²``."""
    variances = variance_model(mset, snr_linear)
    return float(1.0 / np.sum(1.0 / variances))


def xi_psi_subset(l_cubes: Sequence[float], subset_mask: int) -> float:
    """``1/Σ_S L³ + 1/Σ_{not S} L³`` for a proper subset, ``1/Σ L³`` otherwise."""
    if len(l_cubes) < 2:
        raise ValidationError(f"At least two intervals are required, got {len(l_cubes)}")

    inside = sum(c for i, c in enumerate(l_cubes) if subset_mask >> i & 1)
    outside = sum(c for i, c in enumerate(l_cubes) if not subset_mask >> i & 1)
    if inside == 0 or outside == 0:
        return 1.0 / (inside + outside)
    return 1.0 / inside + 1.0 / outside


def xi_psi_max_from_intervals(intervals: Sequence[int]) -> float:
    """Maximum of :func:`xi_psi_subset` over all subsets, in closed form.

    The maximum isolates the smallest interval: ``1/L_K³ + 1/Σ_{j≠K} L_j³``.
    """
    values = [Validator.validate_positive_int(l, "interval") for l in intervals]
    if len(values) < 2:
        raise ValidationError(f"At least two intervals are required, got {len(values)}")
    if any(b >= a for a, b in zip(values, values[1:])):
        raise ValidationError(f"Intervals must be strictly decreasing, got: {values}")

    rest = sum(l ** 3 for l in values[:-1])
    return 1.0 / values[-1] ** 3 + 1.0 / rest


def xi_psi_max(mset: ModuliSet) -> float:
    return xi_psi_max_from_intervals(mset.sample_intervals)


def performance_model(mset: ModuliSet, n_fft: int, snr_linear: float) -> PerformanceModel:
    variances = variance_model(mset, snr_linear)
    inv = 1.0 / variances
    return PerformanceModel(
        mset=mset,
        n_fft=int(n_fft),
        snr_linear=float(snr_linear),
        sigma_sq=tuple(float(v) for v in variances),
        weights=tuple(float(w) for w in inv / inv.sum()),
        delta_mse_m=float(1.0 / inv.sum()),
        delta_mse=delta_mse(mset, n_fft, snr_linear),
        xi_star=xi_psi_max(mset),
        sigma_l=sigma_l(mset),
    )


def q_function(t):
    """Gaussian tail probability ``Q(t) = erfc(t/√2)/2``."""
    value = 0.5 * erfc(np.asarray(t, dtype=float) / sqrt(2.0))
    return float(value) if np.ndim(value) == 0 else value


def q_inverse(p: float) -> float:
    """Solve ``Q(x) = p`` for ``p`` in ``(0, 0.5]``.

    Raises:
        ValidationError: If ``p`` is outside ``(0, 0.5]``
    """
    try:
        p = float(p)
    except (TypeError, ValueError):
        raise ValidationError(f"Tail probability must be a number, got: {p!r}")
    if not 0.0 < p <= 0.5:
        raise ValidationError(f"Tail probability must lie in (0, 0.5], got: {p}")
    if p == 0.5:
        return 0.0

    lo, hi = Q_INVERSE_BRACKET
    return float(brentq(lambda x: q_function(x) - p, lo, hi, xtol=1e-13, maxiter=200))


def tabulated_x_delta(delta: float) -> float:
    """``x_delta`` rounded to one decimal, as printed in threshold tables."""
    delta = Validator.validate_probability(delta, "delta", upper=0.5)
    return round(q_inverse(delta / 2.0), 1)


def snr_threshold(mset: ModuliSet, delta: float, x_delta: Optional[float] = None) -> ThresholdQuery:
    """``eta_th = Γ² x_δ² ξ* / π²`` with ``2 Q(x_δ) = δ``.

    ``x_delta`` overrides the solved value (e.g. with :func:`tabulated_x_delta`).

    Raises:
        ValidationError: If ``delta`` is outside ``(0, 0.5)``
    """
    delta = Validator.validate_probability(delta, "delta", upper=0.5)
    if x_delta is None:
        x = q_inverse(delta / 2.0)
    else:
        x = Validator.validate_positive_float(x_delta, "x_delta")

    eta = float(mset.gamma_prod) ** 2 * x ** 2 * xi_psi_max(mset) / pi ** 2
    return ThresholdQuery(delta=delta, x_delta=x, eta_th_linear=eta, eta_th_db=10.0 * log10(eta))


def threshold_table(mset: ModuliSet, deltas: Sequence[float], tabulated: bool = False) -> List[ThresholdQuery]:
    rows = []
    for delta in deltas:
        x = tabulated_x_delta(delta) if tabulated else None
        rows.append(snr_threshold(mset, delta, x_delta=x))
    return rows


def approx_gamma_xi(mset: ModuliSet) -> float:
    """``Γ_K² / (Γ_1 ⋯ Γ_{K-1})``, a lower bound on ``Γ² ξ*``."""
    gammas = mset.gammas
    return gammas[-1] ** 2 / prod(gammas[:-1])


def _coprime_tuples(k: int, bound: int) -> Iterator[Tuple[int, ...]]:
    """Ascending pairwise-coprime k-tuples whose product without the first entry is below ``bound``."""

    def extend(prefix: Tuple[int, ...], rest_product: int) -> Iterator[Tuple[int, ...]]:
        if len(prefix) == k:
            yield prefix
            return
        remaining = k - len(prefix)
        g = prefix[-1] + 1
        while True:
            # smallest possible completion: g, g+1, ... for the remaining slots
            if prod(range(g, g + remaining)) * rest_product >= bound:
                break
            if all(gcd(g, p) == 1 for p in prefix):
                yield from extend(prefix + (g,), rest_product * g)
            g += 1

    first = 2
    while prod(range(first + 1, first + k)) < bound:
        yield from extend((first,), 1)
        first += 1


def _assign_pareto_layers(candidates: List[ConfigCandidate]) -> List[ConfigCandidate]:
    """Peel Pareto layers over (max Σ_L, min η_th)."""
    ordered = sorted(candidates, key=lambda c: (-c.model.sigma_l, c.threshold.eta_th_linear))
    frontier: List[float] = []
    layered = []
    for cand in ordered:
        eta = cand.threshold.eta_th_linear
        layer = bisect.bisect_right(frontier, eta)
        if layer == len(frontier):
            frontier.append(eta)
        else:
            frontier[layer] = eta
        layered.append(ConfigCandidate(cand.mset, cand.model, cand.threshold, pareto_layer=layer))

    layered.sort(key=lambda c: (c.pareto_layer, c.threshold.eta_th_linear, -c.model.sigma_l))
    return layered


def config_search(n_fft: int, k_targets: Sequence[int], delta: float = DEFAULT_DELTA,
                  m_scale: int = 2) -> List[ConfigCandidate]:
    """Enumerate feasible range systems for a DFT size and rank them.

    Every ascending pairwise-coprime tuple with ``L_1 = Γ/Γ_1 < N`` and a
    length in ``k_targets`` is a candidate. Candidates are ranked by Pareto
    layer over accuracy (``Σ L³``, larger is better) and threshold SNR
    (smaller is better), then by threshold within a layer. An empty list
    means nothing is feasible.
    """
    n = Validator.validate_positive_int(n_fft, "n_fft", minimum=8)
    ks = sorted({Validator.validate_positive_int(k, "K", minimum=2) for k in k_targets})
    if not ks:
        raise ValidationError("At least one K is required")
    delta = Validator.validate_probability(delta, "delta", upper=0.5)
    x = q_inverse(delta / 2.0)

    candidates = []
    for k in ks:
        for gammas in _coprime_tuples(k, n):
            mset = build_moduli_set(gammas, m_scale)
            threshold = snr_threshold(mset, delta, x_delta=x)
            model = performance_model(mset, n, threshold.eta_th_linear)
            candidates.append(ConfigCandidate(mset, model, threshold))

    logger.debug(f"config_search: N={n}, K={ks}, {len(candidates)} feasible tuples")
    return _assign_pareto_layers(candidates)
