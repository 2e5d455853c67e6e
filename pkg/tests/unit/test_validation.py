"""Unit tests for validation helpers and the error hierarchy."""

import numpy as np
import pytest

from src.cfo_crt.core.base import (
    CFOException,
    InfeasibleConfigurationError,
    ProcessingError,
    UndefinedPhaseError,
    ValidationError,
)
from src.cfo_crt.utils.files import atomic_path, atomic_write_text
from src.cfo_crt.utils.validation import ErrorCollector, Validator, handle_cfo_errors


class TestValidator:

    def test_positive_int_accepts_numpy_and_integral_floats(self):
        assert Validator.validate_positive_int(np.int64(5), "n") == 5
        assert Validator.validate_positive_int(4.0, "n") == 4

    @pytest.mark.parametrize("value", [True, 2.5, "3", None])
    def test_positive_int_rejects_non_integers(self, value):
        with pytest.raises(ValidationError, match="must be an integer"):
            Validator.validate_positive_int(value, "n")

    def test_positive_int_minimum(self):
        with pytest.raises(ValidationError, match=">= 2"):
            Validator.validate_positive_int(1, "m_scale", minimum=2)

    def test_positive_float(self):
        assert Validator.validate_positive_float("1e-3", "step") == 1e-3
        assert Validator.validate_positive_float(float("inf"), "snr", allow_inf=True) == float("inf")
        with pytest.raises(ValidationError, match="finite"):
            Validator.validate_positive_float(float("inf"), "snr")
        with pytest.raises(ValidationError, match="> 0"):
            Validator.validate_positive_float(0.0, "step")

    def test_probability(self):
        assert Validator.validate_probability(1e-6, upper=0.5) == 1e-6
        for bad in (0.0, 0.5, -0.1):
            with pytest.raises(ValidationError):
                Validator.validate_probability(bad, upper=0.5)

    def test_gammas_valid(self):
        assert Validator.validate_gammas([3, 5, 7]) == [3, 5, 7]

    def test_gammas_names_offending_pair(self):
        with pytest.raises(ValidationError, match="Ranges 4 and 6 are not coprime") as exc_info:
            Validator.validate_gammas([3, 4, 6])
        assert exc_info.value.details == {"pair": (4, 6), "gcd": 2}

    @pytest.mark.parametrize("gammas, message", [
        ([7], "At least two"),
        ([5, 3], "ascending"),
        ([1, 3], ">= 2"),
    ])
    def test_gammas_structure(self, gammas, message):
        with pytest.raises(ValidationError, match=message):
            Validator.validate_gammas(gammas)

    def test_snr_grid(self):
        assert Validator.validate_snr_grid([0, 2.5, 10]) == [0.0, 2.5, 10.0]
        with pytest.raises(ValidationError, match="sorted"):
            Validator.validate_snr_grid([10, 0])
        with pytest.raises(ValidationError, match="empty"):
            Validator.validate_snr_grid([])
        with pytest.raises(ValidationError, match="finite"):
            Validator.validate_snr_grid([0, float("nan")])


class TestErrorHierarchy:

    def test_subclassing(self):
        assert issubclass(ValidationError, CFOException)
        assert issubclass(InfeasibleConfigurationError, ProcessingError)
        assert issubclass(UndefinedPhaseError, ProcessingError)

    def test_details_default(self):
        assert ProcessingError("boom").details == {}


class TestHandleErrors:

    def test_passes_cfo_exceptions_through(self):
        @handle_cfo_errors
        def fails():
            raise UndefinedPhaseError("zero")

        with pytest.raises(UndefinedPhaseError):
            fails()

    def test_maps_os_errors(self):
        @handle_cfo_errors
        def missing():
            raise FileNotFoundError("nope.iq")

        with pytest.raises(ValidationError, match="File not found"):
            missing()

    def test_maps_unexpected_errors(self):
        @handle_cfo_errors
        def broken():
            raise KeyError("x")

        with pytest.raises(ProcessingError, match="Unexpected error in broken"):
            broken()


class TestErrorCollector:

    def test_collects_and_raises_once(self):
        collector = ErrorCollector()
        assert collector.check("n_fft", Validator.validate_positive_int, 0, "n_fft") is None
        assert collector.check("zc_root", Validator.validate_positive_int, 3, "zc_root") == 3
        collector.add_error("unknown key", "colour")

        assert collector.has_errors()
        with pytest.raises(ValidationError, match="n_fft: n_fft must be >= 1; colour: unknown key"):
            collector.raise_if_errors()

    def test_summary_and_clear(self):
        collector = ErrorCollector()
        collector.add_warning("large trial count", "trials_per_point")
        summary = collector.get_summary()
        assert summary["warning_count"] == 1
        assert summary["error_count"] == 0

        collector.clear()
        assert not collector.has_warnings()
        collector.raise_if_errors()


class TestAtomicWrites:

    def test_write_text(self, temp_dir):
        target = atomic_write_text(temp_dir / "sub" / "out.txt", "hello\n")
        assert target.read_text() == "hello\n"
        assert [p.name for p in target.parent.iterdir()] == ["out.txt"]

    def test_failed_write_leaves_nothing(self, temp_dir):
        target = temp_dir / "out.csv"
        with pytest.raises(RuntimeError):
            with atomic_path(target) as tmp:
                tmp.write_text("partial")
                raise RuntimeError("interrupted")

        assert not target.exists()
        assert list(temp_dir.iterdir()) == []
