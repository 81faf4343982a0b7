"""
Utils Package
Helper functions and utility modules
Location: backend/utils/__init__.py
"""

from .validators import (
    # Exceptions
    EvaluationError,
    ValidationError,
    NoEvaluatedPixelsError,
    LoadError,
    ConsistencyError,

    # Basic validators
    validate_num_classes,
    validate_num_bins,
    validate_unit_interval,
    validate_threshold,
    validate_weights,
    parse_weights,

    # Array validators
    validate_matching_shapes,
    validate_probability_values,
    validate_label_values,

    # Comprehensive validators
    validate_manifest_input
)

__all__ = [
    # Exceptions
    'EvaluationError',
    'ValidationError',
    'NoEvaluatedPixelsError',
    'LoadError',
    'ConsistencyError',

    # Basic validators
    'validate_num_classes',
    'validate_num_bins',
    'validate_unit_interval',
    'validate_threshold',
    'validate_weights',
    'parse_weights',

    # Array validators
    'validate_matching_shapes',
    'validate_probability_values',
    'validate_label_values',

    # Comprehensive validators
    'validate_manifest_input'
]
