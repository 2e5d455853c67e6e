"""Test configuration and fixtures for cfo-crt tests."""

import json
import pytest
import tempfile
import shutil
from pathlib import Path
from typing import Any, Callable, Dict, Generator

from src.cfo_crt.config.manager import ConfigManager, SimConfig
from src.cfo_crt.core.crt_engine import ModuliSet, build_moduli_set
from src.cfo_crt.core.signal_model import WaveformSpec
from src.cfo_crt.operations.estimators import EstimatorConfig
from src.cfo_crt.utils.logging import get_logger

REF_N = 64
REF_GAMMAS = (3, 5, 7)
REF_M = 2


@pytest.fixture
def temp_dir() -> Generator[Path, None, None]:
    """Create a temporary directory for tests."""
    temp_path = Path(tempfile.mkdtemp())
    yield temp_path
    shutil.rmtree(temp_path)


@pytest.fixture
def test_config(temp_dir: Path) -> Generator[ConfigManager, None, None]:
    """Create a test configuration manager."""
    config_file = temp_dir / "test_config.yaml"
    config_manager = ConfigManager(str(config_file))
    yield config_manager


@pytest.fixture
def logger():
    """Get a test logger."""
    return get_logger("test")


@pytest.fixture
def sim_config() -> SimConfig:
    return SimConfig(max_workers=2, chunk_size=50, default_trials=1000, log_level="DEBUG")


@pytest.fixture
def ref_mset() -> ModuliSet:
    """Ranges 3,5,7 with M=2 (L = 35, 21, 15)."""
    return build_moduli_set(REF_GAMMAS, REF_M)


@pytest.fixture
def ref_spec(ref_mset: ModuliSet) -> WaveformSpec:
    return WaveformSpec(n_fft=REF_N, sample_period=1.0 / (REF_N * 15e3), mset=ref_mset)


@pytest.fixture
def make_cfg(ref_spec: WaveformSpec) -> Callable[..., EstimatorConfig]:
    """Factory for estimator configs on the 3,5,7 waveform."""
    def factory(method: str = "ccmle", **kwargs) -> EstimatorConfig:
        return EstimatorConfig(spec=ref_spec, method=method, **kwargs)
    return factory


@pytest.fixture
def run_config_doc() -> Dict[str, Any]:
    """A small valid run config document."""
    return {
        "name": "test",
        "n_fft": REF_N,
        "gammas": list(REF_GAMMAS),
        "m_scale": REF_M,
        "methods": ["ccmle", "classic_crt"],
        "snr_grid_db": [10, 14],
        "trials_per_point": 40,
        "cfo": {"mode": "fixed", "value": 0.1},
        "master_seed": 7,
        "deltas": [0.01, 0.000001],
    }


@pytest.fixture
def write_run_config(temp_dir: Path) -> Callable[[Dict[str, Any]], Path]:
    """Write a run config document to a temp JSON file."""
    def writer(doc: Dict[str, Any], name: str = "run.json") -> Path:
        path = temp_dir / name
        path.write_text(json.dumps(doc), encoding="utf-8")
        return path
    return writer
