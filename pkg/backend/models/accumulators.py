"""
Accumulator Models
Mergeable per-image tallies behind every metric

Each accumulator is immutable once built. Merging is a pure entrywise sum,
so per-image results can be produced in any order and reduced afterwards;
the all-zero instance is the identity.
"""

from typing import Dict, Sequence

import numpy as np

from backend.utils.validators import ValidationError


def _frozen(array: np.ndarray, dtype) -> np.ndarray:
    array = np.array(array, dtype=dtype, copy=True)
    array.flags.writeable = False
    return array


class ConfusionMatrix:
    """
    C x C pixel counts; entry (g, p) counts ground truth g predicted as p
    """

    def __init__(self, counts: np.ndarray):
        counts = _frozen(counts, np.int64)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise ValidationError(f"confusion counts must be square, got shape {counts.shape}")
        if (counts < 0).any():
            raise ValidationError("confusion counts must be non-negative")
        self._counts = counts

    @classmethod
    def zeros(cls, num_classes: int) -> 'ConfusionMatrix':
        return cls(np.zeros((num_classes, num_classes), dtype=np.int64))

    # Getters
    @property
    def counts(self) -> np.ndarray:
        return self._counts

    @property
    def num_classes(self) -> int:
        return self._counts.shape[0]

    @property
    def total(self) -> int:
        return int(self._counts.sum())

    def true_positives(self) -> np.ndarray:
        return np.diag(self._counts)

    def false_positives(self) -> np.ndarray:
        """Column sums minus the diagonal"""
        return self._counts.sum(axis=0) - self.true_positives()

    def false_negatives(self) -> np.ndarray:
        """Row sums minus the diagonal"""
        return self._counts.sum(axis=1) - self.true_positives()

    def merge(self, other: 'ConfusionMatrix') -> 'ConfusionMatrix':
        """
        Entrywise sum of two matrices

        Raises:
            ValidationError: if the class counts differ
        """
        if self.num_classes != other.num_classes:
            raise ValidationError(
                f"cannot merge confusion matrices with {self.num_classes} "
                f"and {other.num_classes} classes"
            )
        return ConfusionMatrix(self._counts + other._counts)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ConfusionMatrix):
            return NotImplemented
        return np.array_equal(self._counts, other._counts)

    def __str__(self) -> str:
        return f"ConfusionMatrix(classes={self.num_classes}, total={self.total})"

    def __repr__(self) -> str:
        return self.__str__()


class CalibrationBins:
    """
    Equal-width confidence bins: per-bin pixel count, confidence sum and correct count
    """

    def __init__(self, counts: Sequence[int], sum_confidence: Sequence[float],
                 sum_correct: Sequence[int]):
        """
        Initialize CalibrationBins object

        Args:
            counts: |B_m| per bin
            sum_confidence: Sum of max-softmax values per bin
            sum_correct: Number of correctly predicted pixels per bin
        Raises:
            ValidationError: if the per-bin arrays are inconsistent
        """
        self._counts = _frozen(counts, np.int64)
        self._sum_confidence = _frozen(sum_confidence, np.float64)
        self._sum_correct = _frozen(sum_correct, np.int64)

        if not (self._counts.shape == self._sum_confidence.shape == self._sum_correct.shape):
            raise ValidationError("bin arrays must have the same length")
        if self._counts.ndim != 1 or self._counts.size < 1:
            raise ValidationError("at least one bin is required")
        if (self._counts < 0).any() or (self._sum_correct < 0).any():
            raise ValidationError("bin counts must be non-negative")
        if (self._sum_correct > self._counts).any():
            raise ValidationError("sum_correct cannot exceed the bin count")

    @classmethod
    def empty(cls, num_bins: int) -> 'CalibrationBins':
        return cls(np.zeros(num_bins, np.int64), np.zeros(num_bins), np.zeros(num_bins, np.int64))

    # Getters
    @property
    def num_bins(self) -> int:
        return self._counts.size

    @property
    def counts(self) -> np.ndarray:
        return self._counts

    @property
    def sum_confidence(self) -> np.ndarray:
        return self._sum_confidence

    @property
    def sum_correct(self) -> np.ndarray:
        return self._sum_correct

    @property
    def total_pixels(self) -> int:
        return int(self._counts.sum())

    def merge(self, other: 'CalibrationBins') -> 'CalibrationBins':
        """
        Per-bin fieldwise sum

        Raises:
            ValidationError: if the bin counts differ
        """
        if self.num_bins != other.num_bins:
            raise ValidationError(
                f"cannot merge calibration bins with {self.num_bins} and {other.num_bins} bins"
            )
        return CalibrationBins(
            self._counts + other._counts,
            self._sum_confidence + other._sum_confidence,
            self._sum_correct + other._sum_correct,
        )

    def to_dict(self) -> Dict:
        return {
            'counts': self._counts.tolist(),
            'sum_confidence': self._sum_confidence.tolist(),
            'sum_correct': self._sum_correct.tolist()
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'CalibrationBins':
        return cls(data['counts'], data['sum_confidence'], data['sum_correct'])

    def __eq__(self, other) -> bool:
        if not isinstance(other, CalibrationBins):
            return NotImplemented
        return (np.array_equal(self._counts, other._counts)
                and np.array_equal(self._sum_confidence, other._sum_confidence)
                and np.array_equal(self._sum_correct, other._sum_correct))

    def __str__(self) -> str:
        return f"CalibrationBins(bins={self.num_bins}, total_pixels={self.total_pixels})"

    def __repr__(self) -> str:
        return self.__str__()


class UncertaintyCounts:
    """
    Accurate/inaccurate x certain/uncertain pixel tallies
    """

    FIELDS = ('n_ac', 'n_ic', 'n_iu', 'n_au')

    def __init__(self, n_ac: int = 0, n_ic: int = 0, n_iu: int = 0, n_au: int = 0):
        """
        Initialize UncertaintyCounts object

        Args:
            n_ac: Accurate and certain
            n_ic: Inaccurate and certain
            n_iu: Inaccurate and uncertain
            n_au: Accurate and uncertain
        """
        values = tuple(int(v) for v in (n_ac, n_ic, n_iu, n_au))
        if any(v < 0 for v in values):
            raise ValidationError(f"uncertainty counts must be non-negative, got {values}")
        self._n_ac, self._n_ic, self._n_iu, self._n_au = values

    # Getters
    @property
    def n_ac(self) -> int:
        return self._n_ac

    @property
    def n_ic(self) -> int:
        return self._n_ic

    @property
    def n_iu(self) -> int:
        return self._n_iu

    @property
    def n_au(self) -> int:
        return self._n_au

    @property
    def total(self) -> int:
        return self._n_ac + self._n_ic + self._n_iu + self._n_au

    def as_tuple(self):
        return self._n_ac, self._n_ic, self._n_iu, self._n_au

    def merge(self, other: 'UncertaintyCounts') -> 'UncertaintyCounts':
        return UncertaintyCounts(*(a + b for a, b in zip(self.as_tuple(), other.as_tuple())))

    def to_dict(self) -> Dict:
        return dict(zip(self.FIELDS, self.as_tuple()))

    @classmethod
    def from_dict(cls, data: Dict) -> 'UncertaintyCounts':
        return cls(*(data.get(name, 0) for name in cls.FIELDS))

    def __eq__(self, other) -> bool:
        if not isinstance(other, UncertaintyCounts):
            return NotImplemented
        return self.as_tuple() == other.as_tuple()

    def __hash__(self) -> int:
        return hash(self.as_tuple())

    def __str__(self) -> str:
        return "UncertaintyCounts(n_ac={}, n_ic={}, n_iu={}, n_au={})".format(*self.as_tuple())

    def __repr__(self) -> str:
        return self.__str__()


class ImageAccumulators:
    """
    The three accumulators produced by one pass over one image (or a merged set)
    """

    def __init__(self, confusion: ConfusionMatrix, bins: CalibrationBins,
                 uncertainty: UncertaintyCounts, image_count: int = 1):
        self._confusion = confusion
        self._bins = bins
        self._uncertainty = uncertainty
        self._image_count = image_count

    @property
    def confusion(self) -> ConfusionMatrix:
        return self._confusion

    @property
    def bins(self) -> CalibrationBins:
        return self._bins

    @property
    def uncertainty(self) -> UncertaintyCounts:
        return self._uncertainty

    @property
    def image_count(self) -> int:
        return self._image_count

    def merge(self, other: 'ImageAccumulators') -> 'ImageAccumulators':
        return ImageAccumulators(
            self._confusion.merge(other._confusion),
            self._bins.merge(other._bins),
            self._uncertainty.merge(other._uncertainty),
            self._image_count + other._image_count,
        )

    @classmethod
    def empty(cls, num_classes: int, num_bins: int) -> 'ImageAccumulators':
        return cls(ConfusionMatrix.zeros(num_classes), CalibrationBins.empty(num_bins),
                   UncertaintyCounts(), image_count=0)


# ============================================
# Merge Operations
# ============================================

def merge_confusion(a: ConfusionMatrix, b: ConfusionMatrix) -> ConfusionMatrix:
    """Entrywise sum; raises ValidationError on a class-count mismatch"""
    return a.merge(b)


def merge_bins(a: CalibrationBins, b: CalibrationBins) -> CalibrationBins:
    """Per-bin fieldwise sum; raises ValidationError on a bin-count mismatch"""
    return a.merge(b)


def merge_uncertainty(a: UncertaintyCounts, b: UncertaintyCounts) -> UncertaintyCounts:
    return a.merge(b)


def reduce_accumulators(parts, num_classes: int, num_bins: int) -> ImageAccumulators:
    """
    Fold per-image accumulators left to right

    Args:
        parts: Iterable of ImageAccumulators
        num_classes: Class count for the identity element
        num_bins: Bin count for the identity element
    Returns:
        Merged ImageAccumulators
    """
    total = ImageAccumulators.empty(num_classes, num_bins)
    for part in parts:
        total = total.merge(part)
    return total
