"""
Map Models
Per-image probability and label fields
"""

from typing import Optional, Tuple

import numpy as np

from config import EVAL_CONFIG
from backend.utils.validators import (
    ValidationError,
    validate_label_values,
    validate_matching_shapes,
    validate_probability_values,
)


class ProbabilityMap:
    """
    Per-pixel class probabilities for one image, shape (C, H, W)

    The array is stored read-only; derived fields (prediction, confidence)
    are computed once and cached because every metric reads them.
    """

    def __init__(self, values: np.ndarray, validate: bool = True,
                 tolerance: Optional[float] = None):
        """
        Initialize ProbabilityMap object

        Args:
            values: Array of shape (C, H, W), values in [0, 1]
            validate: Check the range and per-pixel sum invariants
            tolerance: Allowed per-pixel sum deviation (defaults to config)
        Raises:
            ValidationError: if the array violates an invariant
        """
        values = np.asarray(values)
        if validate:
            tolerance = EVAL_CONFIG['probability_tolerance'] if tolerance is None else tolerance
            is_valid, error = validate_probability_values(values, tolerance)
            if not is_valid:
                raise ValidationError(error)
        elif values.ndim != 3 or values.shape[0] < 2:
            raise ValidationError(f"expected shape (C>=2, H, W), got {values.shape}")

        self._values = values.view()
        self._values.flags.writeable = False
        self._prediction = None
        self._confidence = None

    # Getters
    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def num_classes(self) -> int:
        return self._values.shape[0]

    @property
    def height(self) -> int:
        return self._values.shape[1]

    @property
    def width(self) -> int:
        return self._values.shape[2]

    @property
    def shape(self) -> Tuple[int, int]:
        return self._values.shape[1], self._values.shape[2]

    # Methods
    def prediction(self) -> np.ndarray:
        """Argmax class per pixel; ties go to the lowest class index"""
        if self._prediction is None:
            self._prediction = np.argmax(self._values, axis=0)
        return self._prediction

    def confidence(self) -> np.ndarray:
        """Maximum softmax probability per pixel, as float64"""
        if self._confidence is None:
            self._confidence = self._values.max(axis=0).astype(np.float64)
        return self._confidence

    @classmethod
    def renormalized(cls, values: np.ndarray,
                     tolerance: Optional[float] = None) -> 'ProbabilityMap':
        """
        Build a map after dividing every pixel by its channel sum

        Args:
            values: Array of shape (C, H, W) with non-negative entries
            tolerance: Sum tolerance checked after rescaling
        Returns:
            ProbabilityMap with per-pixel sums of 1
        """
        sums = values.sum(axis=0, keepdims=True)
        if (sums <= 0).any():
            _, row, col = np.argwhere(sums <= 0)[0]
            raise ValidationError(f"channel sum is zero at pixel ({row}, {col}), cannot renormalize")
        return cls((values / sums).astype(values.dtype, copy=False), tolerance=tolerance)

    def __str__(self) -> str:
        return f"ProbabilityMap(classes={self.num_classes}, height={self.height}, width={self.width})"

    def __repr__(self) -> str:
        return self.__str__()


class LabelMap:
    """
    Per-pixel ground-truth class indices with an ignore sentinel
    """

    def __init__(self, labels: np.ndarray, ignore_index: Optional[int] = None):
        """
        Initialize LabelMap object

        Args:
            labels: Integer array of shape (H, W)
            ignore_index: Label value excluded from all metrics
        """
        labels = np.asarray(labels)
        if labels.ndim != 2:
            raise ValidationError(f"expected label shape (H, W), got {labels.shape}")
        if not np.issubdtype(labels.dtype, np.integer):
            raise ValidationError(f"labels must be integers, got dtype {labels.dtype}")

        self._labels = labels.view()
        self._labels.flags.writeable = False
        self._ignore_index = EVAL_CONFIG['ignore_index'] if ignore_index is None else int(ignore_index)
        self._valid = None

    # Getters
    @property
    def labels(self) -> np.ndarray:
        return self._labels

    @property
    def ignore_index(self) -> int:
        return self._ignore_index

    @property
    def height(self) -> int:
        return self._labels.shape[0]

    @property
    def width(self) -> int:
        return self._labels.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self._labels.shape

    # Methods
    def valid_mask(self) -> np.ndarray:
        """Boolean mask of pixels that take part in evaluation"""
        if self._valid is None:
            self._valid = self._labels != self._ignore_index
        return self._valid

    def evaluated_pixels(self) -> int:
        return int(self.valid_mask().sum())

    def check_against(self, num_classes: int) -> None:
        """
        Raise if any non-ignored label is outside [0, num_classes - 1]

        Args:
            num_classes: Class count of the paired ProbabilityMap
        """
        is_valid, error = validate_label_values(self._labels, num_classes, self._ignore_index)
        if not is_valid:
            raise ValidationError(error)

    def __str__(self) -> str:
        return f"LabelMap(height={self.height}, width={self.width}, ignore_index={self._ignore_index})"

    def __repr__(self) -> str:
        return self.__str__()


def check_pair(probs: ProbabilityMap, labels: LabelMap) -> None:
    """
    Validate that a probability map and a label map describe the same image

    Raises:
        ValidationError: on shape mismatch or out-of-range labels
    """
    is_valid, error = validate_matching_shapes(probs.values.shape, labels.shape)
    if not is_valid:
        raise ValidationError(error)
    labels.check_against(probs.num_classes)
