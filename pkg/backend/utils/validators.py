"""
Validators Module
Input validation utilities and error types for the Segmentation Reliability Evaluator
Location: backend/utils/validators.py
"""

import math
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from config import WEIGHT_PRESETS


class EvaluationError(Exception):
    """Base class for every error the evaluator raises on purpose"""
    exit_code = 1


class ValidationError(EvaluationError):
    """Usage error: invalid arguments or mismatched inputs"""
    exit_code = 2


class NoEvaluatedPixelsError(ValidationError):
    """Raised when a metric is finalized over zero counted pixels"""
    pass


class LoadError(EvaluationError):
    """Raised when a file cannot be loaded into a valid domain object"""
    exit_code = 3


class ConsistencyError(EvaluationError):
    """Raised when accumulators disagree about the evaluated pixel set"""
    exit_code = 4


# ============================================
# Scalar Validation
# ============================================

def validate_num_classes(num_classes: int) -> Tuple[bool, Optional[str]]:
    """
    Validate a class count

    Args:
        num_classes: Number of classes C
    Returns:
        Tuple of (is_valid, error_message)
    """
    if isinstance(num_classes, bool) or not isinstance(num_classes, (int, np.integer)):
        return False, f"num_classes must be an integer, got {num_classes!r}"

    if num_classes < 2:
        return False, f"num_classes must be at least 2, got {num_classes}"

    return True, None


def validate_num_bins(num_bins: int) -> Tuple[bool, Optional[str]]:
    """
    Validate a calibration bin count

    Args:
        num_bins: Number of equal-width bins M
    Returns:
        Tuple of (is_valid, error_message)
    """
    if isinstance(num_bins, bool) or not isinstance(num_bins, (int, np.integer)):
        return False, f"num_bins must be an integer, got {num_bins!r}"

    if num_bins < 1:
        return False, f"num_bins must be at least 1, got {num_bins}"

    return True, None


def validate_unit_interval(value: float, field_name: str) -> Tuple[bool, Optional[str]]:
    """
    Validate that a metric component lies in [0, 1]

    Args:
        value: Value to check
        field_name: Name used in the error message
    Returns:
        Tuple of (is_valid, error_message)
    """
    try:
        value = float(value)
    except (ValueError, TypeError):
        return False, f"{field_name} must be a number, got {value!r}"

    if not math.isfinite(value):
        return False, f"{field_name} must be finite, got {value}"

    if value < 0.0 or value > 1.0:
        return False, f"{field_name} must lie in [0, 1], got {value}"

    return True, None


def validate_threshold(threshold: float) -> Tuple[bool, Optional[str]]:
    """Validate an entropy threshold (finite, non-negative)"""
    try:
        threshold = float(threshold)
    except (ValueError, TypeError):
        return False, f"threshold must be a number, got {threshold!r}"

    if not math.isfinite(threshold) or threshold < 0.0:
        return False, f"threshold must be finite and >= 0, got {threshold}"

    return True, None


def validate_weights(values: Sequence[float]) -> Tuple[bool, Optional[str]]:
    """
    Validate the four RSS weights

    Args:
        values: Weights for (mIoU, ECE, p(acc|cer), p(unc|inacc))
    Returns:
        Tuple of (is_valid, error_message)
    """
    if len(values) != 4:
        return False, f"exactly 4 weights are required, got {len(values)}"

    for value in values:
        if not math.isfinite(value):
            return False, f"weights must be finite, got {list(values)}"
        if value < 0.0:
            return False, f"weights must be non-negative, got {list(values)}"

    if not any(value > 0.0 for value in values):
        return False, "at least one weight must be strictly positive"

    return True, None


def parse_weights(text: str) -> Tuple[float, float, float, float]:
    """
    Parse a weight string: either a preset name or four comma-separated numbers

    Args:
        text: e.g. "1,1,1,1" or "accuracy_first"
    Returns:
        Tuple of four weights
    Raises:
        ValidationError: if the text does not describe valid weights
    """
    text = (text or '').strip()

    if text in WEIGHT_PRESETS:
        return tuple(WEIGHT_PRESETS[text])

    try:
        values = tuple(float(part) for part in text.split(','))
    except ValueError:
        presets = ', '.join(sorted(WEIGHT_PRESETS))
        raise ValidationError(
            f"Invalid weights '{text}' (expected w1,w2,w3,w4 or one of: {presets})"
        )

    is_valid, error = validate_weights(values)
    if not is_valid:
        raise ValidationError(error)

    return values


# ============================================
# Array Validation
# ============================================

def validate_matching_shapes(prob_shape: Tuple[int, ...],
                             label_shape: Tuple[int, ...]) -> Tuple[bool, Optional[str]]:
    """
    Check that a (C, H, W) probability map and an (H, W) label map line up

    Args:
        prob_shape: Shape of the probability array
        label_shape: Shape of the label array
    Returns:
        Tuple of (is_valid, error_message)
    """
    if tuple(prob_shape[1:]) != tuple(label_shape):
        return False, (
            f"shape mismatch: probabilities are {prob_shape[1]}x{prob_shape[2]}, "
            f"labels are {label_shape[0]}x{label_shape[1]}"
        )

    return True, None


def validate_probability_values(values: np.ndarray,
                                tolerance: float) -> Tuple[bool, Optional[str]]:
    """
    Validate a (C, H, W) probability array, naming the first offending pixel

    Args:
        values: Probability array
        tolerance: Allowed deviation of each pixel's channel sum from 1
    Returns:
        Tuple of (is_valid, error_message)
    """
    if values.ndim != 3:
        return False, f"expected rank 3 (C, H, W), got shape {values.shape}"

    if values.shape[0] < 2:
        return False, f"at least 2 classes are required, got {values.shape[0]}"

    finite = np.isfinite(values)
    if not finite.all():
        c, row, col = np.argwhere(~finite)[0]
        return False, f"non-finite value {values[c, row, col]} at class {c}, pixel ({row}, {col})"

    out_of_range = (values < 0.0) | (values > 1.0)
    if out_of_range.any():
        c, row, col = np.argwhere(out_of_range)[0]
        return False, (
            f"value {values[c, row, col]:.6g} outside [0, 1] at class {c}, pixel ({row}, {col}); "
            "these look like logits: apply softmax before export "
            "(--renormalize only rescales probabilities, it does not fix logits)"
        )

    sums = values.sum(axis=0, dtype=np.float64)
    off = np.abs(sums - 1.0) > tolerance
    if off.any():
        row, col = np.argwhere(off)[0]
        message = (
            f"channel sum {sums[row, col]:.6g} at pixel ({row}, {col}) "
            f"deviates from 1 by more than {tolerance:g}"
        )
        if sums[row, col] > 1.5:
            message += (
                "; these look like logits: apply softmax before export "
                "(--renormalize only rescales probabilities, it does not fix logits)"
            )
        return False, message

    return True, None


def validate_label_values(labels: np.ndarray, num_classes: int,
                          ignore_index: int) -> Tuple[bool, Optional[str]]:
    """
    Validate an (H, W) label array against a class count and ignore index

    Args:
        labels: Label array
        num_classes: Number of classes C
        ignore_index: Sentinel excluded from all metrics
    Returns:
        Tuple of (is_valid, error_message)
    """
    if labels.ndim != 2:
        return False, f"expected rank 2 (H, W), got shape {labels.shape}"

    bad = (labels >= num_classes) & (labels != ignore_index)
    if np.issubdtype(labels.dtype, np.signedinteger):
        bad |= labels < 0

    if bad.any():
        row, col = np.argwhere(bad)[0]
        return False, (
            f"label {int(labels[row, col])} at pixel ({row}, {col}) is neither "
            f"< {num_classes} nor the ignore index {ignore_index}"
        )

    return True, None


# ============================================
# Manifest Validation
# ============================================

def validate_manifest_input(data: dict) -> Tuple[bool, Dict[str, str]]:
    """
    Validate a parsed manifest document

    Args:
        data: Dictionary loaded from the manifest JSON
    Returns:
        Tuple of (is_valid, errors_dict)
    """
    errors = {}

    if not isinstance(data, dict):
        return False, {'manifest': "top-level JSON value must be an object"}

    if 'num_classes' in data:
        is_valid, error = validate_num_classes(data['num_classes'])
        if not is_valid:
            errors['num_classes'] = error
    else:
        errors['num_classes'] = "num_classes is required"

    ignore_index = data.get('ignore_index', 255)
    if isinstance(ignore_index, bool) or not isinstance(ignore_index, int) or ignore_index < 0:
        errors['ignore_index'] = f"ignore_index must be a non-negative integer, got {ignore_index!r}"

    if 'renormalize' in data and not isinstance(data['renormalize'], bool):
        errors['renormalize'] = "renormalize must be true or false"

    entries = data.get('entries')
    if not isinstance(entries, list) or not entries:
        errors['entries'] = "entries must be a non-empty list"
        return False, errors

    seen = {}
    for position, entry in enumerate(entries):
        if not isinstance(entry, dict):
            errors[f'entries[{position}]'] = "entry must be an object"
            continue

        missing = [key for key in ('image_id', 'prediction_path', 'label_path')
                   if not isinstance(entry.get(key), str) or not entry.get(key)]
        if missing:
            errors[f'entries[{position}]'] = f"missing or empty: {', '.join(missing)}"
            continue

        image_id = entry['image_id']
        if image_id in seen:
            errors[f'entries[{position}]'] = (
                f"duplicate image_id '{image_id}' (entries {seen[image_id]} and {position})"
            )
        else:
            seen[image_id] = position

    return len(errors) == 0, errors
