"""
Calibration Metrics
Max-softmax confidence binning, Expected Calibration Error and reliability diagrams

Bins are equal-width over [0, 1]: bin m covers [m/M, (m+1)/M), the last bin
is closed at 1.0, and a pixel lands in min(floor(confidence * M), M - 1).
"""

import csv
import math
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from config import EVAL_CONFIG
from backend.models.accumulators import CalibrationBins
from backend.models.maps import LabelMap, ProbabilityMap, check_pair
from backend.utils.validators import NoEvaluatedPixelsError, ValidationError, validate_num_bins

DIAGRAM_COLUMNS = ['bin_lo', 'bin_hi', 'count', 'mean_conf', 'accuracy']


def bin_indices(confidence: np.ndarray, num_bins: int) -> np.ndarray:
    """Bin index per confidence value"""
    index = np.floor(confidence * num_bins).astype(np.int64)
    return np.clip(index, 0, num_bins - 1)


def bins_from_arrays(confidence: np.ndarray, correct: np.ndarray, num_bins: int) -> CalibrationBins:
    """
    Fill calibration bins from flat arrays of evaluated pixels

    Args:
        confidence: Max-softmax value per evaluated pixel (float64)
        correct: Whether the argmax matched the label, per evaluated pixel
        num_bins: Number of bins M
    Returns:
        CalibrationBins
    """
    index = bin_indices(confidence, num_bins)
    counts = np.bincount(index, minlength=num_bins)
    sum_confidence = np.bincount(index, weights=confidence, minlength=num_bins)
    sum_correct = np.bincount(index[correct], minlength=num_bins)
    return CalibrationBins(counts, sum_confidence, sum_correct)


def accumulate_bins(probs: ProbabilityMap, labels: LabelMap,
                    num_bins: Optional[int] = None) -> CalibrationBins:
    """
    Bin the non-ignored pixels of one image by confidence

    Args:
        probs: Predicted class probabilities
        labels: Ground truth
        num_bins: Number of bins (defaults to config, 15)
    Returns:
        CalibrationBins for this image
    Raises:
        ValidationError: on invalid bin count, shape mismatch or bad labels
    """
    num_bins = EVAL_CONFIG['num_bins'] if num_bins is None else num_bins
    is_valid, error = validate_num_bins(num_bins)
    if not is_valid:
        raise ValidationError(error)
    check_pair(probs, labels)

    valid = labels.valid_mask()
    correct = probs.prediction()[valid] == labels.labels[valid]
    return bins_from_arrays(probs.confidence()[valid], correct, num_bins)


def compute_ece(bins: CalibrationBins) -> float:
    """
    ECE = sum_m (|B_m| / N) * |acc(B_m) - conf(B_m)|

    Written as sum_m |correct_m - confidence_sum_m| / N, which is the same
    quantity with empty bins contributing nothing.

    Raises:
        NoEvaluatedPixelsError: if no pixel was binned
    """
    total = bins.total_pixels
    if total == 0:
        raise NoEvaluatedPixelsError("no evaluated pixels")

    gaps = np.abs(bins.sum_correct.astype(np.float64) - bins.sum_confidence)
    return math.fsum(gaps.tolist()) / total


class DiagramRow:
    """One bin of a reliability diagram; statistics are None for empty bins"""

    def __init__(self, lower: float, upper: float, count: int,
                 mean_confidence: Optional[float], accuracy: Optional[float]):
        self.lower = lower
        self.upper = upper
        self.count = count
        self.mean_confidence = mean_confidence
        self.accuracy = accuracy

    @property
    def present(self) -> bool:
        return self.count > 0

    def to_dict(self) -> Dict:
        return {
            'bin_lo': self.lower,
            'bin_hi': self.upper,
            'count': self.count,
            'mean_conf': self.mean_confidence,
            'accuracy': self.accuracy
        }

    def __repr__(self) -> str:
        return f"DiagramRow([{self.lower:.3f}, {self.upper:.3f}), count={self.count})"


class ReliabilityDiagram:
    """
    Per-bin confidence vs. accuracy table underlying ECE
    """

    def __init__(self, rows: List[DiagramRow], total_pixels: int):
        self._rows = list(rows)
        self._total_pixels = total_pixels

    @property
    def rows(self) -> List[DiagramRow]:
        return list(self._rows)

    @property
    def total_pixels(self) -> int:
        return self._total_pixels

    def present_rows(self) -> List[DiagramRow]:
        return [row for row in self._rows if row.present]

    def recombined_ece(self) -> float:
        """ECE recomputed from the per-bin means"""
        terms = [row.count / self._total_pixels * abs(row.accuracy - row.mean_confidence)
                 for row in self.present_rows()]
        return math.fsum(terms)

    def to_csv(self, path: Path) -> None:
        """
        Write the diagram as CSV; empty bins keep count 0 and blank statistics

        Args:
            path: Output file
        """
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open('w', newline='') as f:
            writer = csv.DictWriter(f, fieldnames=DIAGRAM_COLUMNS)
            writer.writeheader()
            for row in self._rows:
                record = row.to_dict()
                writer.writerow({key: ('' if value is None else value) for key, value in record.items()})


def export_diagram(bins: CalibrationBins) -> ReliabilityDiagram:
    """
    Derive the reliability diagram of a set of bins

    Raises:
        NoEvaluatedPixelsError: if no pixel was binned
    """
    total = bins.total_pixels
    if total == 0:
        raise NoEvaluatedPixelsError("no evaluated pixels")

    num_bins = bins.num_bins
    rows = []
    for m in range(num_bins):
        count = int(bins.counts[m])
        if count > 0:
            mean_confidence = float(bins.sum_confidence[m]) / count
            accuracy = int(bins.sum_correct[m]) / count
        else:
            mean_confidence = accuracy = None
        rows.append(DiagramRow(m / num_bins, (m + 1) / num_bins, count, mean_confidence, accuracy))

    return ReliabilityDiagram(rows, total)
