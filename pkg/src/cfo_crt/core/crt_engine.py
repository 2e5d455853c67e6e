"""Modular arithmetic over co-prime range systems and MLE-based robust CRT.

A real number ``eps_m`` in ``[0, M*Gamma)`` is reconstructed from its noisy
remainders modulo the scaled moduli ``M_i = M*Gamma_i``. The common remainder
``eps_m mod M`` is estimated first by minimizing the inverse-variance weighted
circular distance to the per-interval common remainders; the integer parts
then follow from the ordinary CRT over the ``Gamma_i``.

All reductions of reals return the representative in ``[0, modulus)`` and
rounding is half-away-from-zero throughout.
"""

from dataclasses import dataclass
from math import prod
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .base import ValidationError
from ..utils.validation import Validator

ArrayLike = Union[float, Sequence[float], np.ndarray]


@dataclass(frozen=True)
class ModuliSet:
    """Co-prime range widths, common-remainder modulus and derived constants."""

    gammas: Tuple[int, ...]
    m_scale: int
    gamma_prod: int
    sample_intervals: Tuple[int, ...]
    inverses: Tuple[int, ...]
    scaled_moduli: Tuple[int, ...]

    @property
    def k(self) -> int:
        """Number of sample intervals."""
        return len(self.gammas)

    @property
    def full_range(self) -> int:
        """Unambiguous range ``M*Gamma`` of the internal normalization."""
        return self.m_scale * self.gamma_prod

    @property
    def crt_coefficients(self) -> Tuple[int, ...]:
        """``L̄_i * L_i``, the CRT basis over the Gamma_i."""
        return tuple(b * l for b, l in zip(self.inverses, self.sample_intervals))

    def to_dict(self) -> dict:
        return {
            "gammas": list(self.gammas),
            "m_scale": self.m_scale,
            "gamma_prod": self.gamma_prod,
            "sample_intervals": list(self.sample_intervals),
            "inverses": list(self.inverses),
            "scaled_moduli": list(self.scaled_moduli),
        }


@dataclass(frozen=True)
class RemainderObservation:
    """Noisy remainders ``eps_{M_i}`` and their error variances."""

    values: Tuple[float, ...]
    variances: Tuple[float, ...]

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        variances = tuple(float(v) for v in self.variances)
        if len(values) != len(variances):
            raise ValidationError(
                f"Got {len(values)} remainders but {len(variances)} variances"
            )
        if any(v < 0 for v in values):
            raise ValidationError(f"Remainders must be non-negative, got: {values}")
        if any(not v > 0 for v in variances):
            raise ValidationError(f"Variances must be positive, got: {variances}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "variances", variances)


@dataclass(frozen=True)
class CommonRemainderSolution:
    """Selected common remainder, the candidate set it came from and its cost."""

    r_hat: float
    candidates: Tuple[float, ...]
    objective: float


def round_half_away(value: ArrayLike) -> np.ndarray:
    """Round to the nearest integer, halves away from zero."""
    arr = np.asarray(value, dtype=float)
    return np.copysign(np.floor(np.abs(arr) + 0.5), arr)


def mod_real(value: ArrayLike, modulus: float) -> np.ndarray:
    """Reduce reals to ``[0, modulus)``."""
    reduced = np.mod(np.asarray(value, dtype=float), modulus)
    # np.mod of a tiny negative number can round up to exactly `modulus`
    return np.where(reduced >= modulus, reduced - modulus, reduced)


def _egcd(a: int, b: int) -> Tuple[int, int]:
    """Return ``(g, x)`` with ``a*x ≡ g (mod b)`` and ``g = gcd(a, b)``."""
    old_r, r = a, b
    old_s, s = 1, 0
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
    return old_r, old_s


def mod_inverse(a: int, n: int) -> int:
    """Modular multiplicative inverse of ``a`` modulo ``n``.

    Raises:
        ValidationError: If ``n < 2`` or ``gcd(a, n) != 1``
    """
    n = Validator.validate_positive_int(n, "modulus", minimum=2)
    g, x = _egcd(int(a) % n, n)
    if g != 1:
        raise ValidationError(f"{a} has no inverse modulo {n} (gcd={g})")
    return x % n


def integer_crt(residues: Sequence[int], moduli: Sequence[int]) -> Tuple[int, int]:
    """Fold ``x ≡ residues[i] (mod moduli[i])`` over pairwise-coprime moduli.

    Returns:
        ``(x, m)`` with ``0 <= x < m`` and ``m`` the product of the moduli

    Raises:
        ValidationError: If the inputs are empty, mismatched or not coprime
    """
    if len(residues) != len(moduli) or not residues:
        raise ValidationError("integer_crt needs equally many residues and moduli (at least one)")

    a, m = int(residues[0]) % int(moduli[0]), int(moduli[0])
    for r, p in zip(residues[1:], moduli[1:]):
        p = int(p)
        inv = mod_inverse(m % p, p)
        t = ((int(r) - a) % p) * inv % p
        a, m = a + m * t, m * p
    return a % m, m


def build_moduli_set(gammas: Sequence[int], m_scale: int) -> ModuliSet:
    """Build the range system for ``gammas`` and common-remainder modulus ``m_scale``.

    Raises:
        ValidationError: For K < 2, non-ascending or non-coprime ranges,
            any range below 2, or ``m_scale < 2``
    """
    values = Validator.validate_gammas(gammas)
    m = Validator.validate_positive_int(m_scale, "m_scale", minimum=2)

    gamma_prod = prod(values)
    intervals = tuple(gamma_prod // g for g in values)
    inverses = tuple(mod_inverse(l, g) for l, g in zip(intervals, values))

    return ModuliSet(
        gammas=tuple(values),
        m_scale=m,
        gamma_prod=gamma_prod,
        sample_intervals=intervals,
        inverses=inverses,
        scaled_moduli=tuple(m * g for g in values),
    )


def circular_distance(a: ArrayLike, x: ArrayLike, modulus: float) -> np.ndarray:
    """Signed circular distance ``a - x - [(a - x)/M]*M``, in ``[-M/2, M/2]``."""
    if not modulus > 0:
        raise ValidationError(f"Modulus must be positive, got: {modulus}")
    d = np.asarray(a, dtype=float) - np.asarray(x, dtype=float)
    return d - round_half_away(d / modulus) * modulus


def mle_weights(variances: ArrayLike) -> np.ndarray:
    """Inverse-variance weights normalized to sum to one.

    Raises:
        ValidationError: If any variance is not strictly positive
    """
    var = np.atleast_1d(np.asarray(variances, dtype=float))
    if var.size == 0 or not np.all(np.isfinite(var)) or np.any(var <= 0):
        raise ValidationError(f"Variances must be positive and finite, got: {var.tolist()}")
    inv = 1.0 / var
    return inv / inv.sum()


def weighted_objective(common_remainders: ArrayLike, weights: ArrayLike, x: float, modulus: float) -> float:
    """``sum_i w_i * d_M(r_i, x)**2``."""
    d = circular_distance(common_remainders, x, modulus)
    return float(np.dot(np.asarray(weights, dtype=float), d * d))


def candidate_set(common_remainders: ArrayLike, weights: ArrayLike, modulus: float) -> np.ndarray:
    """Stationary points of the weighted circular cost, one per wrap branch.

    With the remainders sorted ascending, branch ``t`` lifts the ``t``
    smallest of them by ``M``; ``t = K`` coincides with the plain weighted
    mean. Returned sorted ascending with exact duplicates removed.
    """
    r = np.atleast_1d(np.asarray(common_remainders, dtype=float))
    w = np.atleast_1d(np.asarray(weights, dtype=float))
    if r.shape != w.shape:
        raise ValidationError(f"Got {r.size} remainders but {w.size} weights")

    order = np.argsort(r, kind="stable")
    base = float(np.dot(w, r))
    lifted = base + modulus * np.cumsum(w[order])
    return np.unique(mod_real(lifted, modulus))


def estimate_common_remainder(common_remainders: ArrayLike, weights: ArrayLike,
                              modulus: float) -> CommonRemainderSolution:
    """Pick the candidate with the smallest weighted cost; ties go to the smallest value."""
    r = np.atleast_1d(np.asarray(common_remainders, dtype=float))
    w = np.atleast_1d(np.asarray(weights, dtype=float))
    candidates = candidate_set(r, w, modulus)

    d = circular_distance(r[np.newaxis, :], candidates[:, np.newaxis], modulus)
    costs = (d * d) @ w
    best = int(np.argmin(costs))

    return CommonRemainderSolution(
        r_hat=float(candidates[best]),
        candidates=tuple(float(c) for c in candidates),
        objective=float(costs[best]),
    )


def _check_observation(obs: RemainderObservation, mset: ModuliSet) -> np.ndarray:
    if len(obs.values) != mset.k:
        raise ValidationError(
            f"Observation carries {len(obs.values)} remainders, moduli set expects {mset.k}"
        )
    values = np.asarray(obs.values, dtype=float)
    upper = np.asarray(mset.scaled_moduli, dtype=float)
    if np.any(values >= upper):
        raise ValidationError(
            f"Remainders {obs.values} exceed their moduli {mset.scaled_moduli}"
        )
    return values


def solve_common_remainder(obs: RemainderObservation, mset: ModuliSet) -> CommonRemainderSolution:
    """Maximum-likelihood common remainder of an observation."""
    values = _check_observation(obs, mset)
    common = mod_real(values, mset.m_scale)
    weights = mle_weights(obs.variances)
    return estimate_common_remainder(common, weights, mset.m_scale)


def reconstruct_from_common_remainder(obs: RemainderObservation, mset: ModuliSet, r_hat: float) -> float:
    """Rebuild ``eps_m`` in ``[0, M*Gamma)`` given a common-remainder estimate.

    Each folding number is rounded against ``r_hat`` itself, so remainders
    whose own common part fell across the 0/M seam still land on the right
    integer.
    """
    values = _check_observation(obs, mset)
    m = mset.m_scale
    quotients = round_half_away((values - r_hat) / m).astype(np.int64)
    folded = sum(c * int(q) for c, q in zip(mset.crt_coefficients, quotients)) % mset.gamma_prod
    return float(mod_real(m * folded + r_hat, mset.full_range))


def reconstruct_mle(obs: RemainderObservation, mset: ModuliSet) -> float:
    """MLE-based robust CRT estimate of ``eps_m`` in ``[0, M*Gamma)``."""
    solution = solve_common_remainder(obs, mset)
    return reconstruct_from_common_remainder(obs, mset, solution.r_hat)


def reconstruct_classic(obs: RemainderObservation, mset: ModuliSet) -> float:
    """Classic CRT: integer CRT of fraction-aligned remainders plus the L_1 fraction.

    The fractional part of the first (longest) interval is removed from every
    remainder before rounding, so all K integer remainders share one offset.
    They are reduced to a common residue taken from the first interval and
    the folding numbers over the Gamma_i are combined with the ordinary
    integer CRT.
    """
    values = _check_observation(obs, mset)
    m = mset.m_scale

    fraction = float(values[0] - round_half_away(values[0]))
    rounded = round_half_away(values - fraction).astype(np.int64)
    integers = [int(a) % mi for a, mi in zip(rounded, mset.scaled_moduli)]

    common = integers[0] % m
    quotients = round_half_away((np.asarray(integers, dtype=float) - common) / m).astype(np.int64)
    folded, _ = integer_crt([int(q) % g for q, g in zip(quotients, mset.gammas)], mset.gammas)

    return float(mod_real(m * folded + common + fraction, mset.full_range))


def solve_common_remainder_search(obs: RemainderObservation, mset: ModuliSet, step: float,
                                  weights: Optional[ArrayLike] = None) -> float:
    """Grid search for the common remainder over ``{0, step, 2*step, ...} ∩ [0, M)``.

    Without ``weights`` every remainder counts equally (closed-form robust CRT
    assumption); passing weights turns this into a brute-force oracle for
    :func:`solve_common_remainder`.

    Raises:
        ValidationError: If ``step`` is outside ``(0, M/10]``
    """
    m = mset.m_scale
    if not 0 < step <= m / 10:
        raise ValidationError(f"Search step must lie in (0, {m / 10}], got: {step}")

    values = _check_observation(obs, mset)
    common = mod_real(values, m)
    if weights is None:
        w = np.full(mset.k, 1.0 / mset.k)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != common.shape:
            raise ValidationError(f"Expected {mset.k} weights, got {w.size}")

    grid = np.arange(int(np.ceil(m / step))) * step
    grid = grid[grid < m]
    d = circular_distance(common[np.newaxis, :], grid[:, np.newaxis], m)
    return float(grid[int(np.argmin((d * d) @ w))])
