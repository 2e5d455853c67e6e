"""Seeded Monte Carlo sweeps of estimator accuracy over SNR."""

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from ..config.manager import config_manager
from ..core.base import EstimatorType, ValidationError
from ..core.signal_model import (
    ChannelParams,
    TrainingWaveform,
    WaveformSpec,
    apply_channel,
    build_preamble,
    wrap_to_symmetric,
)
from ..core.theory import delta_mse, snr_threshold
from ..utils.files import atomic_path, atomic_write_text
from ..utils.logging import ProgressLogger, get_logger
from ..utils.validation import Validator, handle_cfo_errors
from .estimators import EstimatorConfig, estimate

logger = get_logger("montecarlo")

NOISELESS = math.inf
# spawn key of the CFO draw; segment noise streams use keys 0..K-1
CFO_STREAM_KEY = 2 ** 16
MSE_COLUMNS = ["method", "snr_db", "mse", "ier", "trials", "delta_mse_theory"]
IER_COLUMNS = ["method", "snr_db", "ier", "integer_errors", "trials", "eta_th_db"]


class CfoMode(Enum):
    FIXED = "fixed"
    UNIFORM = "uniform"
    GRID = "grid"


@dataclass(frozen=True)
class SweepSpec:
    """What to simulate: estimators, SNR grid, trial count, CFO law and seed.

    All configs must share one waveform; trials are paired across methods
    (same received samples for every method). In grid mode every CFO in
    ``cfo_values`` is simulated at every SNR.
    """

    configs: Tuple[EstimatorConfig, ...]
    snr_grid_db: Tuple[float, ...]
    trials_per_point: int
    cfo_mode: CfoMode = CfoMode.FIXED
    cfo_value: float = 0.0
    cfo_values: Tuple[float, ...] = ()
    master_seed: int = 0
    noiseless: bool = False
    max_workers: Optional[int] = None
    chunk_size: Optional[int] = None

    def __post_init__(self):
        configs = tuple(self.configs)
        if not configs:
            raise ValidationError("At least one estimator config is required")
        if any(c.spec != configs[0].spec for c in configs[1:]):
            raise ValidationError("All estimator configs of a sweep must share one waveform")
        object.__setattr__(self, "configs", configs)
        object.__setattr__(self, "cfo_mode", CfoMode(self.cfo_mode))

        if self.noiseless:
            object.__setattr__(self, "snr_grid_db", (NOISELESS,))
        else:
            object.__setattr__(self, "snr_grid_db", tuple(Validator.validate_snr_grid(self.snr_grid_db)))

        Validator.validate_positive_int(self.trials_per_point, "trials_per_point")
        Validator.validate_positive_int(self.master_seed, "master_seed", minimum=0)
        if self.max_workers is not None:
            Validator.validate_positive_int(self.max_workers, "max_workers")
        if self.chunk_size is not None:
            Validator.validate_positive_int(self.chunk_size, "chunk_size")

        half = self.spec.n_fft / 2.0
        if self.cfo_mode is CfoMode.FIXED and not -half <= float(self.cfo_value) <= half:
            raise ValidationError(f"Fixed CFO {self.cfo_value} outside [-{half}, {half}]")
        if self.cfo_mode is CfoMode.GRID:
            values = tuple(float(v) for v in self.cfo_values)
            if not values:
                raise ValidationError("Grid CFO mode needs at least one value")
            outside = [v for v in values if not -half <= v <= half]
            if outside:
                raise ValidationError(f"Grid CFOs {outside} outside [-{half}, {half}]")
            object.__setattr__(self, "cfo_values", values)

    @property
    def spec(self) -> WaveformSpec:
        return self.configs[0].spec

    @property
    def methods(self) -> List[EstimatorType]:
        return [c.method for c in self.configs]

    def cfo_points(self) -> List[Optional[float]]:
        """CFO of each simulated block; None means drawn per trial."""
        if self.cfo_mode is CfoMode.GRID:
            return list(self.cfo_values)
        if self.cfo_mode is CfoMode.UNIFORM:
            return [None]
        return [float(self.cfo_value)]


@dataclass(frozen=True)
class SweepPoint:
    method: str
    snr_db: float
    mse: float
    ier: float
    trials: int
    delta_mse_theory: float
    integer_errors: int = 0
    eps_n: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        keyed = {} if self.eps_n is None else {"eps_n": self.eps_n}
        return {
            **keyed,
            "method": self.method,
            "snr_db": self.snr_db,
            "mse": self.mse,
            "ier": self.ier,
            "trials": self.trials,
            "delta_mse_theory": self.delta_mse_theory,
            "integer_errors": self.integer_errors,
        }


@dataclass
class SweepResult:
    points: List[SweepPoint]
    master_seed: int
    trials_per_point: int
    cfo_mode: str
    cfo_value: Optional[float]
    eta_th_db: Optional[float] = None
    eta_th_delta: Optional[float] = None
    cfo_values: Optional[Tuple[float, ...]] = None
    elapsed: float = field(default=0.0, compare=False)

    def for_method(self, method: Union[EstimatorType, str]) -> List[SweepPoint]:
        name = EstimatorType(method).value
        return [p for p in self.points if p.method == name]

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame([p.to_dict() for p in self.points])
        frame["eta_th_db"] = self.eta_th_db
        return frame

    def columns(self, base: List[str]) -> List[str]:
        """CSV columns; rows of a CFO grid are keyed by ``eps_n`` too."""
        return list(base) if self.cfo_values is None else ["eps_n"] + list(base)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "master_seed": self.master_seed,
            "trials_per_point": self.trials_per_point,
            "cfo_mode": self.cfo_mode,
            "cfo_value": self.cfo_value,
            "cfo_values": None if self.cfo_values is None else list(self.cfo_values),
            "eta_th_db": self.eta_th_db,
            "eta_th_delta": self.eta_th_delta,
            "points": [p.to_dict() for p in self.points],
        }


def derive_trial_seed(master_seed: int, point_index: int, trial_index: int) -> int:
    """64-bit seed of one trial, a pure function of its coordinates."""
    state = np.random.SeedSequence([int(master_seed), int(point_index), int(trial_index)])
    return int(state.generate_state(1, dtype=np.uint64)[0])


def draw_uniform_cfo(trial_seed: int, n_fft: int) -> float:
    """Uniform CFO on ``[-N/2, N/2)`` from the trial's dedicated stream."""
    rng = np.random.default_rng(np.random.SeedSequence(int(trial_seed), spawn_key=(CFO_STREAM_KEY,)))
    return float(rng.uniform(-n_fft / 2.0, n_fft / 2.0))


def estimation_error(estimates, truths, n_fft: Optional[int] = None) -> np.ndarray:
    """``estimate - truth``, wrapped to ``[-N/2, N/2)`` when ``n_fft`` is given."""
    est = np.atleast_1d(np.asarray(estimates, dtype=float))
    truth = np.broadcast_to(np.asarray(truths, dtype=float), est.shape)
    err = est - truth
    return np.atleast_1d(wrap_to_symmetric(err, n_fft)) if n_fft else err


def compute_ier(estimates, truths, n_fft: Optional[int] = None) -> float:
    """Fraction of trials with ``|estimate - truth| > 1``.

    Raises:
        ValidationError: On empty or mismatched inputs
    """
    est = np.atleast_1d(np.asarray(estimates, dtype=float))
    truth = np.atleast_1d(np.asarray(truths, dtype=float))
    if est.size == 0:
        raise ValidationError("Cannot compute IER of an empty trial set")
    if truth.size not in (1, est.size):
        raise ValidationError(f"Got {est.size} estimates but {truth.size} truths")
    return float(np.mean(np.abs(estimation_error(est, truth, n_fft)) > 1.0))


def run_trial(cfg: EstimatorConfig, eps_n: float, snr_db: float, trial_seed: int,
              wave: Optional[TrainingWaveform] = None) -> float:
    """Synthesize one received preamble and return the estimated ``eps_n``."""
    if wave is None:
        wave = build_preamble(cfg.spec)
    buf = apply_channel(wave, ChannelParams(eps_n, snr_db), cfg.spec, trial_seed)
    return estimate(buf, cfg).eps_n


def _run_chunk(spec: SweepSpec, wave: TrainingWaveform, point_index: int, snr_db: float,
               eps_n: Optional[float], start: int, stop: int) -> np.ndarray:
    """Errors of trials ``[start, stop)`` at one point, shape (methods, trials).

    ``eps_n=None`` draws a uniform CFO per trial.
    """
    n = spec.spec.n_fft
    errors = np.empty((len(spec.configs), stop - start))
    for col, trial in enumerate(range(start, stop)):
        seed = derive_trial_seed(spec.master_seed, point_index, trial)
        truth = draw_uniform_cfo(seed, n) if eps_n is None else eps_n
        buf = apply_channel(wave, ChannelParams(truth, snr_db), spec.spec, seed)
        for row, cfg in enumerate(spec.configs):
            errors[row, col] = estimate(buf, cfg).eps_n - truth
    return wrap_to_symmetric(errors, n)


def _resolve_workers(spec: SweepSpec) -> Tuple[int, int]:
    workers = spec.max_workers or config_manager.get("max_workers") or 1
    chunk = spec.chunk_size or config_manager.get("chunk_size", 2000)
    return int(workers), int(chunk)


def _run_point(spec: SweepSpec, wave: TrainingWaveform, point_index: int, snr_db: float,
               eps_n: Optional[float], executor: Optional[ThreadPoolExecutor], chunk: int) -> np.ndarray:
    bounds = [(s, min(s + chunk, spec.trials_per_point)) for s in range(0, spec.trials_per_point, chunk)]
    label = f"SNR {snr_db} dB" if spec.cfo_mode is not CfoMode.GRID else f"eps_N {eps_n:g}, SNR {snr_db} dB"
    progress = ProgressLogger(logger, len(bounds), label)
    blocks: Dict[int, np.ndarray] = {}

    if executor is None:
        for start, stop in bounds:
            blocks[start] = _run_chunk(spec, wave, point_index, snr_db, eps_n, start, stop)
            progress.update()
    else:
        futures = {
            executor.submit(_run_chunk, spec, wave, point_index, snr_db, eps_n, start, stop): start
            for start, stop in bounds
        }
        for future in as_completed(futures):
            try:
                blocks[futures[future]] = future.result()
            except Exception as e:
                progress.error(str(e))
                for remaining in futures:
                    remaining.cancel()
                raise
            progress.update()

    progress.finish()
    return np.concatenate([blocks[start] for start, _ in bounds], axis=1)


def run_sweep(spec: SweepSpec) -> SweepResult:
    """Estimate MSE and integer-error rate per (method, SNR), and per CFO on a grid.

    Errors are wrapped to ``[-N/2, N/2)`` before squaring. Trial seeds depend
    only on ``(master_seed, point_index, trial_index)`` with
    ``point_index = cfo_index * len(snr_grid) + snr_index``, and per-chunk
    results are reassembled in trial order, so the outcome does not depend on
    the number of workers.
    """
    started = time.time()
    wave = build_preamble(spec.spec)
    mset = spec.spec.mset
    workers, chunk = _resolve_workers(spec)
    grid = spec.cfo_mode is CfoMode.GRID
    cfo_points = spec.cfo_points()
    logger.info(
        f"Sweep: methods={[m.value for m in spec.methods]}, gammas={mset.gammas}, "
        f"{len(cfo_points)} CFO x {len(spec.snr_grid_db)} SNR points x {spec.trials_per_point} trials, "
        f"workers={workers}"
    )

    points: List[SweepPoint] = []
    executor = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for cfo_index, eps_n in enumerate(cfo_points):
            for snr_index, snr_db in enumerate(spec.snr_grid_db):
                point_index = cfo_index * len(spec.snr_grid_db) + snr_index
                errors = _run_point(spec, wave, point_index, snr_db, eps_n, executor, chunk)
                theory = 0.0 if math.isinf(snr_db) else delta_mse(mset, spec.spec.n_fft, 10.0 ** (snr_db / 10.0))
                for row, method in enumerate(spec.methods):
                    err = errors[row]
                    failures = int(np.count_nonzero(np.abs(err) > 1.0))
                    points.append(SweepPoint(
                        method=method.value,
                        snr_db=float(snr_db),
                        mse=float(np.sum(err * err) / err.size),
                        ier=failures / err.size,
                        trials=int(err.size),
                        delta_mse_theory=theory,
                        integer_errors=failures,
                        eps_n=eps_n if grid else None,
                    ))
    finally:
        if executor is not None:
            executor.shutdown(wait=True)

    delta = 1.0 / spec.trials_per_point
    eta_th_db = snr_threshold(mset, delta).eta_th_db if delta < 0.5 else None
    result = SweepResult(
        points=points,
        master_seed=spec.master_seed,
        trials_per_point=spec.trials_per_point,
        cfo_mode=spec.cfo_mode.value,
        cfo_value=float(spec.cfo_value) if spec.cfo_mode is CfoMode.FIXED else None,
        cfo_values=spec.cfo_values if grid else None,
        eta_th_db=eta_th_db,
        eta_th_delta=delta if eta_th_db is not None else None,
        elapsed=time.time() - started,
    )
    logger.info(f"Sweep completed in {result.elapsed:.2f}s")
    return result


def simulated_threshold(result: SweepResult, method: Union[EstimatorType, str], target_ier: float) -> Optional[float]:
    """Lowest simulated SNR whose IER is below ``target_ier``, or None.

    On a CFO grid the integer errors at each SNR are pooled over the grid.
    """
    target = Validator.validate_probability(target_ier, "target_ier")
    pooled: Dict[float, List[int]] = {}
    for point in result.for_method(method):
        counts = pooled.setdefault(point.snr_db, [0, 0])
        counts[0] += point.integer_errors
        counts[1] += point.trials
    for snr_db in sorted(pooled):
        failures, trials = pooled[snr_db]
        if failures / trials < target:
            return snr_db
    return None


@handle_cfo_errors
def write_sweep_csv(result: SweepResult, out_dir: Union[str, Path],
                    mse_name: str = "mse_sweep.csv", ier_name: str = "ier_sweep.csv") -> List[Path]:
    """Write the MSE and IER tables of a sweep."""
    out_dir = Path(out_dir)
    frame = result.to_frame()
    written = []
    for name, columns in ((mse_name, MSE_COLUMNS), (ier_name, IER_COLUMNS)):
        target = out_dir / name
        with atomic_path(target) as tmp:
            frame[result.columns(columns)].to_csv(tmp, index=False)
        written.append(target)
    logger.info(f"Wrote {', '.join(str(p) for p in written)}")
    return written


@handle_cfo_errors
def write_sweep_json(result: SweepResult, path: Union[str, Path]) -> Path:
    return atomic_write_text(path, json.dumps(result.to_dict(), indent=2, default=_json_default) + "\n")


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")
