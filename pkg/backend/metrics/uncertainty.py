"""
Uncertainty Metrics
Shannon entropy per pixel, per-image median thresholding, p(acc|cer) and p(unc|inacc)

A pixel is certain when its entropy is strictly below the threshold and
uncertain otherwise (H >= threshold).
"""

from typing import NamedTuple, Optional

import numpy as np

from config import EVAL_CONFIG
from backend.models.accumulators import UncertaintyCounts
from backend.models.maps import LabelMap, ProbabilityMap, check_pair
from backend.utils.validators import (
    NoEvaluatedPixelsError,
    ValidationError,
    validate_matching_shapes,
    validate_threshold,
)


class UncertaintyMap:
    """
    Entropy in nats per pixel, shape (H, W); ignored pixels included
    """

    def __init__(self, entropy: np.ndarray):
        entropy = np.array(entropy, dtype=np.float64, copy=True)
        if entropy.ndim != 2:
            raise ValidationError(f"expected entropy shape (H, W), got {entropy.shape}")
        entropy.flags.writeable = False
        self._entropy = entropy

    @property
    def entropy(self) -> np.ndarray:
        return self._entropy

    @property
    def height(self) -> int:
        return self._entropy.shape[0]

    @property
    def width(self) -> int:
        return self._entropy.shape[1]

    def scaled(self, factor: float) -> 'UncertaintyMap':
        """Same map in another logarithm base (entropy times a positive factor)"""
        return UncertaintyMap(self._entropy * factor)

    def to_array(self) -> np.ndarray:
        """Single-channel float32 array, shape (1, H, W), for export"""
        return self._entropy.astype(np.float32)[np.newaxis]

    def __repr__(self) -> str:
        return f"UncertaintyMap(height={self.height}, width={self.width})"


class Conditionals(NamedTuple):
    """Finalized conditional probabilities with their degeneracy flags"""
    p_acc_given_cer: float
    p_unc_given_inacc: float
    acc_given_cer_degenerate: bool = False
    unc_given_inacc_degenerate: bool = False


def compute_entropy(probs: ProbabilityMap, epsilon: Optional[float] = None) -> UncertaintyMap:
    """
    H(x) = -sum_c p_c * ln(max(p_c, epsilon)) for every pixel

    Args:
        probs: Predicted class probabilities
        epsilon: Floor inside the logarithm (defaults to config, 1e-12)
    Returns:
        UncertaintyMap in nats
    """
    epsilon = EVAL_CONFIG['entropy_epsilon'] if epsilon is None else epsilon
    entropy = np.zeros(probs.shape, dtype=np.float64)

    # one class at a time keeps the float64 working set at a single plane
    for plane in probs.values:
        p = plane.astype(np.float64)
        entropy -= p * np.log(np.maximum(p, epsilon))

    return UncertaintyMap(entropy)


def median_threshold(umap: UncertaintyMap, labels: LabelMap) -> float:
    """
    Median entropy over the non-ignored pixels of one image

    Even counts take the lower of the two middle values, so the threshold
    is always one of the observed entropies.

    Raises:
        NoEvaluatedPixelsError: if every pixel is ignored
    """
    is_valid, error = validate_matching_shapes((0,) + umap.entropy.shape, labels.shape)
    if not is_valid:
        raise ValidationError(error)

    values = umap.entropy[labels.valid_mask()]
    if values.size == 0:
        raise NoEvaluatedPixelsError("no evaluated pixels in image")

    k = (values.size - 1) // 2
    return float(np.partition(values, k)[k])


def counts_from_arrays(correct: np.ndarray, entropy: np.ndarray, threshold: float) -> UncertaintyCounts:
    """
    Tally the four accuracy x certainty categories

    Args:
        correct: Argmax == label, per evaluated pixel
        entropy: Entropy per evaluated pixel
        threshold: Certainty threshold
    Returns:
        UncertaintyCounts
    """
    certain = entropy < threshold
    n_ac = int(np.count_nonzero(correct & certain))
    n_ic = int(np.count_nonzero(~correct & certain))
    n_iu = int(np.count_nonzero(~correct & ~certain))
    n_au = int(correct.size) - n_ac - n_ic - n_iu
    return UncertaintyCounts(n_ac, n_ic, n_iu, n_au)


def accumulate_uncertainty(probs: ProbabilityMap, labels: LabelMap, threshold: float,
                           umap: Optional[UncertaintyMap] = None) -> UncertaintyCounts:
    """
    Classify the non-ignored pixels of one image as accurate/inaccurate and certain/uncertain

    Args:
        probs: Predicted class probabilities
        labels: Ground truth
        threshold: Entropy threshold (usually median_threshold of the same image)
        umap: Precomputed entropy of probs, reused when given
    Returns:
        UncertaintyCounts for this image
    Raises:
        ValidationError: on an invalid threshold, shape mismatch or bad labels
    """
    is_valid, error = validate_threshold(threshold)
    if not is_valid:
        raise ValidationError(error)
    check_pair(probs, labels)

    if umap is None:
        umap = compute_entropy(probs)
    elif umap.entropy.shape != labels.shape:
        raise ValidationError("entropy map does not match the label map")

    valid = labels.valid_mask()
    correct = probs.prediction()[valid] == labels.labels[valid]
    return counts_from_arrays(correct, umap.entropy[valid], threshold)


def finalize_conditionals(counts: UncertaintyCounts) -> Conditionals:
    """
    p(acc|cer) = n_ac / (n_ac + n_ic) and p(unc|inacc) = n_iu / (n_iu + n_ic)

    A zero denominator yields 1.0 with the matching degenerate flag set.
    """
    certain = counts.n_ac + counts.n_ic
    inaccurate = counts.n_iu + counts.n_ic

    acc_degenerate = certain == 0
    unc_degenerate = inaccurate == 0

    p_acc_given_cer = 1.0 if acc_degenerate else counts.n_ac / certain
    p_unc_given_inacc = 1.0 if unc_degenerate else counts.n_iu / inaccurate

    return Conditionals(p_acc_given_cer, p_unc_given_inacc, acc_degenerate, unc_degenerate)
