"""smoothot error classes: maps domain failures to typed exceptions and CLI exit codes."""

from __future__ import annotations

from typing import Any


class SmoothOTError(Exception):
    """Base exception for all smoothot errors."""

    def __init__(
        self,
        code: str,
        exit_code: int,
        message: str,
        details: dict[str, Any] | None = None,
    ):
        self.code = code
        self.exit_code = exit_code
        self.message = message
        self.details = details
        super().__init__(message)


class DimensionMismatchError(SmoothOTError):
    def __init__(self, message: str = "Dimensions do not match.", **kwargs: Any):
        super().__init__(code="dimension_mismatch", exit_code=10, message=message, **kwargs)


class NonPositiveMassError(SmoothOTError):
    def __init__(self, message: str = "Histogram has a non-positive entry.", **kwargs: Any):
        super().__init__(code="non_positive_mass", exit_code=11, message=message, **kwargs)


class NotNormalizedError(SmoothOTError):
    def __init__(self, message: str = "Histogram does not sum to 1.", **kwargs: Any):
        super().__init__(code="not_normalized", exit_code=12, message=message, **kwargs)


class NegativeCostError(SmoothOTError):
    def __init__(self, message: str = "Cost matrix has a negative entry.", **kwargs: Any):
        super().__init__(code="negative_cost", exit_code=13, message=message, **kwargs)


class NonFiniteInputError(SmoothOTError):
    def __init__(self, message: str = "Input contains NaN or infinity.", **kwargs: Any):
        super().__init__(code="non_finite_input", exit_code=14, message=message, **kwargs)


class UnsupportedRegularizerError(SmoothOTError):
    def __init__(
        self, message: str = "Regularizer not supported here.", **kwargs: Any
    ):
        super().__init__(code="unsupported_regularizer", exit_code=20, message=message, **kwargs)


class InvalidConfigError(SmoothOTError):
    def __init__(self, message: str = "Invalid configuration.", **kwargs: Any):
        super().__init__(code="invalid_config", exit_code=21, message=message, **kwargs)


class MaxItersExceededError(SmoothOTError):
    def __init__(
        self, message: str = "Maximum number of iterations reached.", **kwargs: Any
    ):
        super().__init__(code="max_iters_exceeded", exit_code=22, message=message, **kwargs)


class SizeLimitExceededError(SmoothOTError):
    def __init__(self, message: str = "Instance too large for the exact solver.", **kwargs: Any):
        super().__init__(code="size_limit_exceeded", exit_code=30, message=message, **kwargs)


class ZeroReferenceError(SmoothOTError):
    def __init__(self, message: str = "Reference quantity is zero.", **kwargs: Any):
        super().__init__(code="zero_reference", exit_code=31, message=message, **kwargs)


class TooFewColorsError(SmoothOTError):
    def __init__(self, message: str = "Image has fewer distinct colors than k.", **kwargs: Any):
        super().__init__(code="too_few_colors", exit_code=40, message=message, **kwargs)


class EmptyRowError(SmoothOTError):
    def __init__(self, message: str = "Transport plan row has no mass.", **kwargs: Any):
        super().__init__(code="empty_row", exit_code=41, message=message, **kwargs)


class ImageFetchError(SmoothOTError):
    def __init__(self, message: str = "Could not fetch image.", **kwargs: Any):
        super().__init__(code="image_fetch_failed", exit_code=42, message=message, **kwargs)


class InputFileError(SmoothOTError):
    def __init__(self, message: str = "Could not read input file.", **kwargs: Any):
        super().__init__(code="input_file", exit_code=50, message=message, **kwargs)


_EXIT_CODES: dict[type[SmoothOTError], int] = {
    DimensionMismatchError: 10,
    NonPositiveMassError: 11,
    NotNormalizedError: 12,
    NegativeCostError: 13,
    NonFiniteInputError: 14,
    UnsupportedRegularizerError: 20,
    InvalidConfigError: 21,
    MaxItersExceededError: 22,
    SizeLimitExceededError: 30,
    ZeroReferenceError: 31,
    TooFewColorsError: 40,
    EmptyRowError: 41,
    ImageFetchError: 42,
    InputFileError: 50,
}


def exit_code_for(error: BaseException) -> int:
    """Map an exception to the process exit code the CLI reports."""
    if isinstance(error, SmoothOTError):
        return _EXIT_CODES.get(type(error), 1)
    return 1


def exit_code_table() -> str:
    """Render the exit-code table shown in ``--help``."""
    rows = [f"  {code:>3}  {cls.__name__}" for cls, code in _EXIT_CODES.items()]
    return "exit codes:\n    0  success\n    1  other error\n" + "\n".join(rows)
