"""JSON experiment configuration."""

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from ..core.base import EstimatorType, ValidationError
from ..core.crt_engine import build_moduli_set
from ..core.signal_model import WaveformSpec
from ..operations.estimators import EstimatorConfig
from ..operations.montecarlo import CfoMode, SweepSpec
from ..utils.logging import get_logger
from ..utils.validation import ErrorCollector, Validator, handle_cfo_errors

logger = get_logger("run_config")

DEFAULT_SUBCARRIER_SPACING = 15e3
DEFAULT_OUTPUT = {
    "dir": None,
    "mse_csv": "mse_sweep.csv",
    "ier_csv": "ier_sweep.csv",
    "json": "sweep.json",
    "manifest": "manifest.json",
}
KNOWN_KEYS = {
    "name", "description", "n_fft", "sample_period", "gammas", "m_scale", "zc_root",
    "methods", "snr_grid_db", "trials_per_point", "cfo", "master_seed", "search_step",
    "snr_hint_db", "deltas", "tabulated_x_delta", "noiseless", "output",
}
REQUIRED_KEYS = ("n_fft", "gammas")


@dataclass(frozen=True)
class RunConfig:
    """Validated experiment description plus the raw document it came from."""

    n_fft: int
    sample_period: float
    gammas: Tuple[int, ...]
    m_scale: int = 2
    zc_root: int = 1
    methods: Tuple[EstimatorType, ...] = tuple(EstimatorType)
    snr_grid_db: Tuple[float, ...] = (10.0,)
    trials_per_point: Optional[int] = None
    cfo_mode: CfoMode = CfoMode.FIXED
    cfo_value: float = 0.0
    cfo_values: Tuple[float, ...] = ()
    master_seed: Optional[int] = None
    search_step: Optional[float] = None
    snr_hint_db: Optional[float] = None
    deltas: Tuple[float, ...] = (1e-6,)
    tabulated_x_delta: bool = False
    noiseless: bool = False
    output: Dict[str, Optional[str]] = field(default_factory=lambda: dict(DEFAULT_OUTPUT))
    name: Optional[str] = None
    raw: Dict[str, Any] = field(default_factory=dict, compare=False)

    @property
    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON form of the raw document."""
        canonical = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def waveform_spec(self) -> WaveformSpec:
        return WaveformSpec(
            n_fft=self.n_fft,
            sample_period=self.sample_period,
            mset=build_moduli_set(self.gammas, self.m_scale),
            zc_root=self.zc_root,
        )

    def estimator_configs(self) -> List[EstimatorConfig]:
        spec = self.waveform_spec()
        return [
            EstimatorConfig(spec=spec, method=m, search_step=self.search_step, snr_hint_db=self.snr_hint_db)
            for m in self.methods
        ]

    def sweep_spec(self, master_seed: int, trials: int, noiseless: bool = False,
                   max_workers: Optional[int] = None, chunk_size: Optional[int] = None) -> SweepSpec:
        return SweepSpec(
            configs=tuple(self.estimator_configs()),
            snr_grid_db=self.snr_grid_db,
            trials_per_point=trials,
            cfo_mode=self.cfo_mode,
            cfo_value=self.cfo_value,
            cfo_values=self.cfo_values,
            master_seed=master_seed,
            noiseless=noiseless or self.noiseless,
            max_workers=max_workers,
            chunk_size=chunk_size,
        )


def _as_list(value: Any, name: str) -> List[Any]:
    if not isinstance(value, list):
        raise ValidationError(f"{name} must be a list, got: {value!r}")
    return value


def _check_bool(value: Any, name: str) -> bool:
    if not isinstance(value, bool):
        raise ValidationError(f"{name} must be true or false, got: {value!r}")
    return value


def _check_methods(value: Any) -> Tuple[EstimatorType, ...]:
    names = _as_list(value, "methods")
    if not names:
        raise ValidationError("methods cannot be empty")
    methods = []
    for name in names:
        try:
            methods.append(EstimatorType(name))
        except ValueError:
            allowed = ", ".join(m.value for m in EstimatorType)
            raise ValidationError(f"Unknown method {name!r}; expected one of: {allowed}")
    if len(set(methods)) != len(methods):
        raise ValidationError(f"Duplicate methods: {names}")
    return tuple(methods)


def _is_number(value: Any) -> bool:
    return not isinstance(value, bool) and isinstance(value, (int, float)) and math.isfinite(value)


def _check_cfo(value: Any) -> Tuple[CfoMode, float, Tuple[float, ...]]:
    if not isinstance(value, dict):
        raise ValidationError(f"cfo must be an object, got: {value!r}")
    unknown = set(value) - {"mode", "value", "values"}
    if unknown:
        raise ValidationError(f"Unknown keys: {sorted(unknown)}")
    try:
        mode = CfoMode(value.get("mode", "fixed"))
    except ValueError:
        raise ValidationError(f"cfo.mode must be 'fixed', 'uniform' or 'grid', got: {value.get('mode')!r}")

    if mode is CfoMode.GRID:
        values = _as_list(value.get("values"), "cfo.values")
        if not values or not all(_is_number(v) for v in values):
            raise ValidationError(f"cfo.values must be a non-empty list of finite numbers, got: {values!r}")
        return mode, 0.0, tuple(float(v) for v in values)

    raw = value.get("value", 0.0)
    if mode is CfoMode.FIXED and not _is_number(raw):
        raise ValidationError(f"cfo.value must be a finite number, got: {raw!r}")
    return mode, float(raw) if mode is CfoMode.FIXED else 0.0, ()


def _check_output(value: Any) -> Dict[str, Optional[str]]:
    if not isinstance(value, dict):
        raise ValidationError(f"output must be an object, got: {value!r}")
    unknown = set(value) - set(DEFAULT_OUTPUT)
    if unknown:
        raise ValidationError(f"Unknown keys: {sorted(unknown)}")
    merged = dict(DEFAULT_OUTPUT)
    for key, name in value.items():
        if name is not None and not isinstance(name, str):
            raise ValidationError(f"output.{key} must be a string, got: {name!r}")
        merged[key] = name
    return merged


def parse_run_config(data: Any) -> RunConfig:
    """Validate a decoded JSON document; every problem is reported at once.

    Raises:
        ValidationError: Listing all schema violations
    """
    if not isinstance(data, dict):
        raise ValidationError(f"Run config must be a JSON object, got: {type(data).__name__}")

    errors = ErrorCollector()
    for key in sorted(set(data) - KNOWN_KEYS):
        errors.add_error("unknown key", key)
    for key in REQUIRED_KEYS:
        if key not in data:
            errors.add_error("required key missing", key)

    values: Dict[str, Any] = {}
    if "n_fft" in data:
        values["n_fft"] = errors.check("n_fft", Validator.validate_positive_int, data["n_fft"], "n_fft", 2)
    if "gammas" in data:
        gammas = errors.check("gammas", _as_list, data["gammas"], "gammas")
        if gammas is not None:
            checked = errors.check("gammas", Validator.validate_gammas, gammas)
            values["gammas"] = tuple(checked) if checked is not None else None
    if "m_scale" in data:
        values["m_scale"] = errors.check("m_scale", Validator.validate_positive_int, data["m_scale"], "m_scale", 2)
    if "zc_root" in data:
        values["zc_root"] = errors.check("zc_root", Validator.validate_positive_int, data["zc_root"], "zc_root")
    if "sample_period" in data:
        values["sample_period"] = errors.check(
            "sample_period", Validator.validate_positive_float, data["sample_period"], "sample_period")
    if "methods" in data:
        values["methods"] = errors.check("methods", _check_methods, data["methods"])
    if "snr_grid_db" in data:
        grid = errors.check("snr_grid_db", _as_list, data["snr_grid_db"], "snr_grid_db")
        if grid is not None:
            checked = errors.check("snr_grid_db", Validator.validate_snr_grid, grid)
            values["snr_grid_db"] = tuple(checked) if checked is not None else None
    if "trials_per_point" in data:
        values["trials_per_point"] = errors.check(
            "trials_per_point", Validator.validate_positive_int, data["trials_per_point"], "trials_per_point")
    if "cfo" in data:
        cfo = errors.check("cfo", _check_cfo, data["cfo"])
        if cfo is not None:
            values["cfo_mode"], values["cfo_value"], values["cfo_values"] = cfo
    if data.get("master_seed") is not None:
        values["master_seed"] = errors.check(
            "master_seed", Validator.validate_positive_int, data["master_seed"], "master_seed", 0)
    if "search_step" in data:
        values["search_step"] = errors.check(
            "search_step", Validator.validate_positive_float, data["search_step"], "search_step")
    if data.get("snr_hint_db") is not None:
        hint = data["snr_hint_db"]
        if not _is_number(hint):
            errors.add_error(f"must be a finite number, got: {hint!r}", "snr_hint_db")
        else:
            values["snr_hint_db"] = float(hint)
    if "deltas" in data:
        deltas = errors.check("deltas", _as_list, data["deltas"], "deltas")
        if deltas is not None:
            checked = [errors.check("deltas", Validator.validate_probability, d, "delta", 0.5) for d in deltas]
            values["deltas"] = tuple(checked)
    for flag in ("tabulated_x_delta", "noiseless"):
        if flag in data:
            values[flag] = errors.check(flag, _check_bool, data[flag], flag)
    if "output" in data:
        values["output"] = errors.check("output", _check_output, data["output"])
    if data.get("name") is not None:
        values["name"] = str(data["name"])

    errors.raise_if_errors()

    if "sample_period" not in values:
        values["sample_period"] = 1.0 / (values["n_fft"] * DEFAULT_SUBCARRIER_SPACING)

    config = RunConfig(raw=dict(data), **values)
    # cross-field checks (range system vs DFT size, step vs M) live in the domain types
    config.waveform_spec()
    config.estimator_configs()
    return config


@handle_cfo_errors
def load_run_config(path: Union[str, Path]) -> RunConfig:
    """Read and validate a JSON run config.

    Raises:
        ValidationError: If the file is missing, not JSON or fails validation
    """
    path = Validator.validate_file_path(path, extensions=[".json"])
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ValidationError(f"Invalid JSON in {path}: {e}") from e

    config = parse_run_config(data)
    logger.debug(f"Loaded run config {path} (sha256 {config.config_hash[:12]})")
    return config
