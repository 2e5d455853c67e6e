"""Base classes and interfaces for CFO estimators."""

from abc import ABC, abstractmethod
from typing import Any, Dict, List, Optional, Union, TYPE_CHECKING
from enum import Enum

from ..utils.logging import get_logger

if TYPE_CHECKING:
    from .signal_model import IQBuffer


class EstimatorType(Enum):
    """Types of CFO estimators."""

    # CRT-based methods
    CCMLE = "ccmle"
    CLASSIC_CRT = "classic_crt"
    CLOSED_FORM_CRT = "closed_form_crt"

    # Single-interval methods
    MOOSE = "moose"


class CFOException(Exception):
    """Base exception for CFO estimation."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.details = details or {}


class ValidationError(CFOException):
    """Exception raised for invalid inputs or configurations."""


class ProcessingError(CFOException):
    """Exception raised during estimation or simulation."""


class InfeasibleConfigurationError(ProcessingError):
    """No parameter configuration satisfies the requested constraints."""


class UndefinedPhaseError(ProcessingError):
    """Correlation is exactly zero, so its phase carries no CFO information."""


class BaseEstimator(ABC):
    """Base class for all CFO estimators."""

    def __init__(self, estimator_type: Union[EstimatorType, str]):
        """Initialize estimator.

        Args:
            estimator_type: Type of estimator (Enum or string)
        """
        if isinstance(estimator_type, str):
            self.estimator_type = EstimatorType(estimator_type)
        else:
            self.estimator_type = estimator_type

        self.logger = get_logger(f"estimator.{self.estimator_type.value}")

    def validate(self, buf: "IQBuffer", cfg: Any) -> None:
        """Check that the buffer carries the preamble layout of the config.

        Raises:
            ValidationError: If the buffer does not match the configuration
        """
        from .signal_model import preamble_layout

        layout = preamble_layout(cfg.spec)
        if buf.layout != layout:
            raise ValidationError(
                "Buffer layout does not match the configured preamble",
                details={"expected": layout.total, "actual": buf.length},
            )

    @abstractmethod
    def estimate(self, buf: "IQBuffer", cfg: Any) -> Any:
        """Estimate the normalized CFO carried by the buffer.

        Args:
            buf: Received samples
            cfg: Estimator configuration

        Returns:
            CfoEstimate
        """

    def __call__(self, buf: "IQBuffer", cfg: Any) -> Any:
        self.validate(buf, cfg)
        return self.estimate(buf, cfg)


class EstimatorRegistry:
    """Maps estimator types to estimator instances."""

    def __init__(self):
        """Initialize estimator registry."""
        self.logger = get_logger("estimator_registry")
        self.estimators: Dict[EstimatorType, BaseEstimator] = {}

    def register(self, estimator: BaseEstimator) -> None:
        """Register an estimator.

        Args:
            estimator: Estimator to register
        """
        self.estimators[estimator.estimator_type] = estimator
        self.logger.debug(f"Registered estimator: {estimator.estimator_type.value}")

    def get(self, estimator_type: Union[EstimatorType, str]) -> BaseEstimator:
        """Get estimator by type.

        Raises:
            ValidationError: If no estimator is registered for the type
        """
        try:
            key = EstimatorType(estimator_type)
        except ValueError as e:
            raise ValidationError(f"Unknown estimator: {estimator_type}") from e

        if key not in self.estimators:
            raise ValidationError(f"No estimator registered for: {key.value}")
        return self.estimators[key]

    def list_estimators(self) -> List[str]:
        """List all registered estimator names."""
        return [key.value for key in self.estimators]
