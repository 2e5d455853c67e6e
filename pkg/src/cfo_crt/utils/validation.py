"""Error handling and validation utilities."""

import functools
import math
import numbers
from math import gcd
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

from ..core.base import CFOException, ValidationError, ProcessingError
from ..utils.logging import get_logger


class Validator:
    """Utility class for common validation operations."""

    @staticmethod
    def validate_file_path(file_path: Union[str, Path],
                           must_exist: bool = True,
                           extensions: Optional[List[str]] = None) -> Path:
        """Validate file path.

        Args:
            file_path: Path to validate
            must_exist: Whether file must exist
            extensions: Allowed file extensions (including dot)

        Returns:
            Validated Path object

        Raises:
            ValidationError: If validation fails
        """
        path = Path(file_path)

        if must_exist and not path.exists():
            raise ValidationError(f"File does not exist: {path}")

        if must_exist and not path.is_file():
            raise ValidationError(f"Not a regular file: {path}")

        if extensions and path.exists():
            if path.suffix.lower() not in [ext.lower() for ext in extensions]:
                raise ValidationError(f"File extension not allowed. Expected: {extensions}, Got: {path.suffix}")

        return path

    @staticmethod
    def validate_positive_int(value: Any, name: str, minimum: int = 1) -> int:
        """Validate an integer that must be at least ``minimum``.

        Raises:
            ValidationError: If validation fails
        """
        if isinstance(value, bool):
            raise ValidationError(f"{name} must be an integer, got: {value!r}")
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if not isinstance(value, numbers.Integral):
            raise ValidationError(f"{name} must be an integer, got: {value!r}")

        value = int(value)
        if value < minimum:
            raise ValidationError(f"{name} must be >= {minimum}, got: {value}")

        return value

    @staticmethod
    def validate_positive_float(value: Any, name: str, allow_inf: bool = False) -> float:
        """Validate a strictly positive real number.

        Raises:
            ValidationError: If validation fails
        """
        try:
            number = float(value)
        except (ValueError, TypeError):
            raise ValidationError(f"{name} must be a number, got: {value!r}")

        if math.isnan(number) or (math.isinf(number) and not allow_inf):
            raise ValidationError(f"{name} must be finite, got: {number}")

        if number <= 0:
            raise ValidationError(f"{name} must be > 0, got: {number}")

        return number

    @staticmethod
    def validate_probability(value: Any, name: str = "delta", upper: float = 1.0) -> float:
        """Validate a probability in the open interval (0, upper).

        Raises:
            ValidationError: If validation fails
        """
        try:
            p = float(value)
        except (ValueError, TypeError):
            raise ValidationError(f"{name} must be a number, got: {value!r}")

        if not 0.0 < p < upper:
            raise ValidationError(f"{name} must lie in (0, {upper}), got: {p}")

        return p

    @staticmethod
    def validate_gammas(gammas: Sequence[Any]) -> List[int]:
        """Validate a co-prime range system Γ_1 < ... < Γ_K.

        Raises:
            ValidationError: If validation fails; the message names the
                offending pair for coprimality violations
        """
        if len(gammas) < 2:
            raise ValidationError(f"At least two ranges are required, got K={len(gammas)}")

        values = [Validator.validate_positive_int(g, "gamma", minimum=2) for g in gammas]

        for left, right in zip(values, values[1:]):
            if right <= left:
                raise ValidationError(f"Ranges must be strictly ascending, got: {values}")

        for i in range(len(values)):
            for j in range(i + 1, len(values)):
                common = gcd(values[i], values[j])
                if common != 1:
                    raise ValidationError(
                        f"Ranges {values[i]} and {values[j]} are not coprime (gcd={common})",
                        details={"pair": (values[i], values[j]), "gcd": common},
                    )

        return values

    @staticmethod
    def validate_snr_grid(grid: Sequence[Any]) -> List[float]:
        """Validate a finite, ascending SNR grid in dB.

        Raises:
            ValidationError: If validation fails
        """
        if len(grid) == 0:
            raise ValidationError("SNR grid cannot be empty")

        try:
            values = [float(v) for v in grid]
        except (ValueError, TypeError):
            raise ValidationError(f"SNR grid must contain numbers, got: {list(grid)}")

        if not all(math.isfinite(v) for v in values):
            raise ValidationError(f"SNR grid must be finite, got: {values}")

        if values != sorted(values):
            raise ValidationError(f"SNR grid must be sorted ascending, got: {values}")

        return values


def handle_cfo_errors(func):
    """Decorator to handle I/O and unexpected errors consistently.

    Args:
        func: Function to wrap
    """
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        logger = get_logger(func.__module__.rsplit(".", 1)[-1])

        try:
            return func(*args, **kwargs)
        except CFOException:
            raise
        except FileNotFoundError as e:
            error_msg = f"File not found: {e}"
            logger.error(error_msg)
            raise ValidationError(error_msg) from e
        except PermissionError as e:
            error_msg = f"Permission denied: {e}"
            logger.error(error_msg)
            raise ValidationError(error_msg) from e
        except OSError as e:
            error_msg = f"I/O failure in {func.__name__}: {e}"
            logger.error(error_msg)
            raise ValidationError(error_msg) from e
        except Exception as e:
            error_msg = f"Unexpected error in {func.__name__}: {e}"
            logger.error(error_msg)
            raise ProcessingError(error_msg) from e

    return wrapper


class ErrorCollector:
    """Collects and manages multiple validation errors."""

    def __init__(self):
        """Initialize error collector."""
        self.errors = []
        self.warnings = []
        self.logger = get_logger("error_collector")

    def add_error(self, message: str, field: Optional[str] = None):
        """Add an error.

        Args:
            message: Error message
            field: Related field name (optional)
        """
        error = {"message": message, "field": field}
        self.errors.append(error)
        self.logger.debug(f"Validation error: {message}" + (f" (field: {field})" if field else ""))

    def add_warning(self, message: str, field: Optional[str] = None):
        """Add a warning.

        Args:
            message: Warning message
            field: Related field name (optional)
        """
        warning = {"message": message, "field": field}
        self.warnings.append(warning)
        self.logger.warning(f"Validation warning: {message}" + (f" (field: {field})" if field else ""))

    def check(self, field: str, func, *args, **kwargs) -> Any:
        """Run a validator, recording its ValidationError under ``field``.

        Returns:
            The validator's result, or None when it failed
        """
        try:
            return func(*args, **kwargs)
        except ValidationError as e:
            self.add_error(str(e), field)
            return None

    def has_errors(self) -> bool:
        """Check if there are any errors."""
        return len(self.errors) > 0

    def has_warnings(self) -> bool:
        """Check if there are any warnings."""
        return len(self.warnings) > 0

    def get_errors(self) -> List[Dict[str, Optional[str]]]:
        """Get all errors."""
        return self.errors.copy()

    def get_warnings(self) -> List[Dict[str, Optional[str]]]:
        """Get all warnings."""
        return self.warnings.copy()

    def raise_if_errors(self):
        """Raise ValidationError if there are any errors."""
        if self.has_errors():
            error_messages = [
                f"{error['field']}: {error['message']}" if error["field"] else error["message"]
                for error in self.errors
            ]
            raise ValidationError(
                f"Validation failed: {'; '.join(error_messages)}",
                details={"errors": self.get_errors()},
            )

    def clear(self):
        """Clear all errors and warnings."""
        self.errors.clear()
        self.warnings.clear()
        self.logger.debug("Cleared all errors and warnings")

    def get_summary(self) -> Dict[str, Any]:
        """Get summary of collected issues.

        Returns:
            Summary dictionary
        """
        return {
            "error_count": len(self.errors),
            "warning_count": len(self.warnings),
            "errors": self.get_errors(),
            "warnings": self.get_warnings()
        }
