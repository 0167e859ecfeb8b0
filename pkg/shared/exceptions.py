"""
Custom exception classes for the GLTR library.

Every error raised by the numeric kernels, the network, the trainer, the
evaluation harness and the feature/checkpoint readers derives from
``GltrError`` so the CLI can map them onto exit codes and readable messages.
"""

from typing import Any, Dict, Optional, Sequence


class GltrError(Exception):
    """
    Base exception class for all GLTR errors.

    Carries an optional context dictionary that is rendered after the message.
    """

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        """
        Initialize the GltrError.

        Args:
            message: Human-readable error message
            context: Additional context information about the error
        """
        super().__init__(message)
        self.message = message
        self.context = context or {}

    def __str__(self) -> str:
        """Return a formatted error message with context."""
        if self.context:
            context_str = ", ".join(f"{k}={v}" for k, v in self.context.items())
            return f"{self.message} (Context: {context_str})"
        return self.message


class ShapeMismatchError(GltrError, ValueError):
    """
    Raised when operand shapes are incompatible.

    Covers matmul inner-dimension mismatches, channel mismatches between a
    sequence and a kernel or batch-norm state, and gallery vectors of
    differing length.
    """

    def __init__(self, message: str, expected: Optional[Sequence[int] | int] = None,
                 actual: Optional[Sequence[int] | int] = None, operation: Optional[str] = None):
        """
        Initialize the ShapeMismatchError.

        Args:
            message: Human-readable error message
            expected: Expected shape or dimension
            actual: Shape or dimension that was received
            operation: Name of the operation that rejected the input
        """
        context: Dict[str, Any] = {}
        if operation:
            context['operation'] = operation
        if expected is not None:
            context['expected'] = expected
        if actual is not None:
            context['actual'] = actual

        super().__init__(message, context)
        self.expected = expected
        self.actual = actual
        self.operation = operation


class InvalidParameterError(GltrError, ValueError):
    """Raised when a scalar parameter is outside its allowed domain."""

    def __init__(self, message: str, parameter: Optional[str] = None, value: Optional[Any] = None):
        """
        Initialize the InvalidParameterError.

        Args:
            message: Human-readable error message
            parameter: Name of the offending parameter
            value: The rejected value
        """
        context: Dict[str, Any] = {}
        if parameter:
            context['parameter'] = parameter
        if value is not None:
            context['value'] = str(value)[:100]

        super().__init__(message, context)
        self.parameter = parameter
        self.value = value


class ConfigurationError(GltrError):
    """Raised when an experiment configuration is invalid or cannot be loaded."""

    def __init__(self, message: str, config_path: Optional[str] = None,
                 validation_errors: Optional[list[str]] = None):
        context: Dict[str, Any] = {}
        if config_path:
            context['config_path'] = config_path
        if validation_errors:
            context['validation_errors'] = validation_errors

        super().__init__(message, context)
        self.config_path = config_path
        self.validation_errors = validation_errors or []


class DegenerateDatasetError(GltrError):
    """
    Raised when a dataset cannot support the requested operation.

    Examples are an empty training set, an identity without tracklets,
    too few identities or cameras for a benchmark, or an empty gallery.
    """

    def __init__(self, message: str, num_items: Optional[int] = None,
                 num_identities: Optional[int] = None):
        context: Dict[str, Any] = {}
        if num_items is not None:
            context['num_items'] = num_items
        if num_identities is not None:
            context['num_identities'] = num_identities

        super().__init__(message, context)
        self.num_items = num_items
        self.num_identities = num_identities


class FeatureFileError(GltrError):
    """Raised when a feature file is malformed, truncated or inconsistent."""

    def __init__(self, message: str, file_path: Optional[str] = None,
                 byte_offset: Optional[int] = None):
        context: Dict[str, Any] = {}
        if file_path:
            context['file_path'] = file_path
        if byte_offset is not None:
            context['byte_offset'] = byte_offset

        super().__init__(message, context)
        self.file_path = file_path
        self.byte_offset = byte_offset


class CheckpointError(GltrError):
    """Raised when a network checkpoint cannot be written or decoded."""

    def __init__(self, message: str, file_path: Optional[str] = None,
                 group: Optional[str] = None):
        context: Dict[str, Any] = {}
        if file_path:
            context['file_path'] = file_path
        if group:
            context['group'] = group

        super().__init__(message, context)
        self.file_path = file_path
        self.group = group


class NumericalCheckError(GltrError):
    """Raised when analytic and numeric gradients disagree beyond tolerance."""

    def __init__(self, message: str, failing_groups: Optional[Dict[str, float]] = None,
                 tolerance: Optional[float] = None):
        context: Dict[str, Any] = {}
        if failing_groups:
            context['failing_groups'] = sorted(failing_groups)
        if tolerance is not None:
            context['tolerance'] = tolerance

        super().__init__(message, context)
        self.failing_groups = failing_groups or {}
        self.tolerance = tolerance


def create_user_friendly_error_message(error: GltrError) -> str:
    """
    Create a user-friendly error message with suggestions for resolution.

    Args:
        error: The GLTR error to format

    Returns:
        Formatted error message with suggestions
    """
    base_message = str(error)
    suggestions = []

    if isinstance(error, ConfigurationError):
        suggestions.extend([
            "• Check the configuration file for misspelled or unknown keys",
            "• Compare field values against the documented ranges",
        ])
        if error.config_path:
            suggestions.append(f"• Re-validate {error.config_path} before re-running")

    elif isinstance(error, FeatureFileError):
        suggestions.extend([
            "• Regenerate the feature file with the `gen` command",
            "• Verify that all files of one experiment share the same feature dimension",
        ])

    elif isinstance(error, CheckpointError):
        suggestions.extend([
            "• Make sure the checkpoint was written by the `train` command",
            "• A truncated checkpoint usually means the run was interrupted",
        ])

    elif isinstance(error, DegenerateDatasetError):
        suggestions.extend([
            "• Increase the number of identities, cameras or tracklets",
            "• Check that the query and gallery files are not empty",
        ])

    elif isinstance(error, NumericalCheckError):
        suggestions.append("• Inspect the per-group report; a single failing group points at its backward pass")

    elif isinstance(error, (ShapeMismatchError, InvalidParameterError)):
        suggestions.append("• Check the model dimensions (d, N, w, alpha) against the input features")

    if suggestions:
        suggestion_text = "\n".join(suggestions)
        return f"{base_message}\n\nSuggestions:\n{suggestion_text}"

    return base_message
