"""
Segmentation Metrics
Confusion matrices and per-class / mean Intersection-over-Union
"""

import math
from typing import List, Optional

import numpy as np

from backend.models.accumulators import ConfusionMatrix
from backend.models.maps import LabelMap, ProbabilityMap, check_pair
from backend.utils.validators import NoEvaluatedPixelsError


class IoUResult:
    """
    Per-class IoU (None when TP + FP + FN = 0) and their mean over present classes
    """

    def __init__(self, per_class: List[Optional[float]]):
        self._per_class = list(per_class)
        present = [v for v in self._per_class if v is not None]
        self._num_present_classes = len(present)
        self._miou = math.fsum(present) / len(present) if present else 0.0

    @property
    def per_class(self) -> List[Optional[float]]:
        return list(self._per_class)

    @property
    def miou(self) -> float:
        return self._miou

    @property
    def num_present_classes(self) -> int:
        return self._num_present_classes

    def __str__(self) -> str:
        return f"IoUResult(miou={self._miou:.4f}, present={self._num_present_classes})"

    def __repr__(self) -> str:
        return self.__str__()


def confusion_from_arrays(prediction: np.ndarray, labels: np.ndarray,
                          valid: np.ndarray, num_classes: int) -> ConfusionMatrix:
    """
    Tally ground-truth / prediction pairs over the valid pixels

    Args:
        prediction: Argmax class per pixel
        labels: Ground-truth class per pixel
        valid: Mask of non-ignored pixels
        num_classes: Class count C
    Returns:
        ConfusionMatrix with counts[gt, pred]
    """
    gt = labels[valid].astype(np.int64)
    pred = prediction[valid].astype(np.int64)
    counts = np.bincount(gt * num_classes + pred, minlength=num_classes * num_classes)
    return ConfusionMatrix(counts.reshape(num_classes, num_classes))


def accumulate_confusion(probs: ProbabilityMap, labels: LabelMap) -> ConfusionMatrix:
    """
    Build the confusion matrix of one image

    Args:
        probs: Predicted class probabilities
        labels: Ground truth
    Returns:
        ConfusionMatrix over the non-ignored pixels
    Raises:
        ValidationError: on shape mismatch or out-of-range labels
    """
    check_pair(probs, labels)
    return confusion_from_arrays(probs.prediction(), labels.labels,
                                 labels.valid_mask(), probs.num_classes)


def compute_iou(cm: ConfusionMatrix) -> IoUResult:
    """
    IoU_c = TP_c / (TP_c + FP_c + FN_c), averaged over classes with a non-zero denominator

    Raises:
        NoEvaluatedPixelsError: if the matrix is empty
    """
    if cm.total == 0:
        raise NoEvaluatedPixelsError("no evaluated pixels")

    tp = cm.true_positives()
    union = tp + cm.false_positives() + cm.false_negatives()

    per_class = [float(t) / float(u) if u > 0 else None for t, u in zip(tp.tolist(), union.tolist())]
    return IoUResult(per_class)
