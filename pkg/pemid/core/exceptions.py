"""Custom exceptions for the pemid toolkit."""

from typing import Any, Dict, Optional, Sequence


class PemidError(Exception):
    """Base class for all pemid exceptions."""

    pass


class NumericalError(PemidError):
    """Base class for numerical failures."""

    pass


class NonFiniteValueError(NumericalError):
    """Raised when an objective, gradient or rollout produces NaN/Inf."""

    def __init__(self, where: str, detail: str = "") -> None:
        self.where = where
        self.detail = detail
        message = f"Non-finite value encountered in {where}"
        if detail:
            message += f": {detail}"
        super().__init__(message)


class DimensionMismatchError(PemidError):
    """Raised when an array does not have the expected shape or length."""

    def __init__(self, what: str, expected: Any, found: Any) -> None:
        self.what = what
        self.expected = expected
        self.found = found
        super().__init__(f"Dimension mismatch for {what}: expected {expected}, found {found}")


class ModelError(PemidError):
    """Base exception for model structure and model file errors."""

    pass


class ModelStructureError(ModelError):
    """Raised when a model structure is inconsistent."""

    pass


class MissingSchedulingError(ModelError):
    """Raised when an externally scheduled model is evaluated without p."""

    def __init__(self, family: str) -> None:
        self.family = family
        super().__init__(
            f"Model family '{family}' requires a scheduling signal p, but none was given"
        )


class ModelFileError(ModelError):
    """Raised when a model file cannot be read or written."""

    pass


class ModelFormatVersionError(ModelFileError):
    """Raised when a model file format version is incompatible."""

    def __init__(self, path: str, required: str, found: str) -> None:
        self.path = path
        self.required = required
        self.found = found
        super().__init__(
            f"Model file '{path}' has format version {found}, but {required} is required"
        )


class TrainingError(PemidError):
    """Raised when no training run produced a usable model."""

    def __init__(self, message: str, failures: Optional[Dict[int, str]] = None) -> None:
        self.failures = failures or {}
        super().__init__(message)


class SelectionError(PemidError):
    """Base exception for structure selection."""

    pass


class AllGroupsPrunedError(SelectionError):
    """Raised when every group norm falls below the pruning threshold."""

    def __init__(self, eps_g: float, group_norms: Dict[str, float]) -> None:
        self.eps_g = eps_g
        self.group_norms = group_norms
        largest = max(group_norms.values()) if group_norms else 0.0
        super().__init__(
            f"All {len(group_norms)} groups fall below eps_g={eps_g:g} "
            f"(largest group norm {largest:g})"
        )


class DataError(PemidError):
    """Base exception for dataset and metric input errors."""

    pass


class DatasetParseError(DataError):
    """Raised when a dataset file cannot be parsed."""

    def __init__(self, path: str, message: str, line: Optional[int] = None) -> None:
        self.path = path
        self.line = line
        location = f"{path}, line {line}" if line is not None else path
        super().__init__(f"Failed to parse dataset {location}: {message}")


class DatasetSchemaError(DataError):
    """Raised when a dataset file does not follow the column schema."""

    pass


class DegenerateReferenceError(DataError):
    """Raised when a fit metric is computed against a constant reference."""

    pass


class TooShortError(DataError):
    """Raised when a series is too short for the requested statistic."""

    def __init__(self, what: str, required: int, found: int) -> None:
        self.what = what
        self.required = required
        self.found = found
        super().__init__(f"{what} needs at least {required} samples, found {found}")


class ConfigError(PemidError):
    """Base exception for configuration errors."""

    pass


class ExperimentConfigError(ConfigError):
    """Raised when an experiment configuration cannot be loaded or is invalid."""

    pass


class BenchmarkError(PemidError):
    """Base exception for benchmark generators."""

    pass


class BenchmarkNotFoundError(BenchmarkError):
    """Raised when a benchmark generator cannot be found."""

    def __init__(self, name: str, available: Sequence[str] = ()) -> None:
        self.name = name
        self.available = list(available)
        hint = f" (available: {', '.join(sorted(available))})" if available else ""
        super().__init__(f"Benchmark '{name}' not found{hint}")


class BenchmarkLoadError(BenchmarkError):
    """Raised when a benchmark generator fails to load."""

    def __init__(self, name: str, error: Exception) -> None:
        self.name = name
        self.error = error
        super().__init__(f"Failed to load benchmark '{name}': {error}")


class BenchmarkVersionError(BenchmarkError):
    """Raised when a benchmark generator API version is incompatible."""

    def __init__(self, name: str, required: str, found: str) -> None:
        self.name = name
        self.required = required
        self.found = found
        super().__init__(
            f"Benchmark '{name}' requires API version {required}, but found {found}"
        )


class ExperimentError(PemidError):
    """Base exception for experiment runs."""

    pass


class ExperimentStageError(ExperimentError):
    """Raised when a stage of an experiment run fails."""

    def __init__(self, stage: str, error: Exception) -> None:
        self.stage = stage
        self.error = error
        super().__init__(f"Error occurred in stage '{stage}': {error}")
