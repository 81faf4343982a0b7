"""
Score Module
Reliable Segmentation Score composition, report assembly and run comparison
"""

import logging
from typing import Optional

from backend.metrics.calibration import compute_ece
from backend.metrics.segmentation import IoUResult
from backend.metrics.uncertainty import finalize_conditionals
from backend.models.accumulators import CalibrationBins, UncertaintyCounts
from backend.models.report import METRIC_NAMES, MetricReport, RunComparison, Weights
from backend.utils.validators import ConsistencyError, ValidationError, validate_unit_interval

logger = logging.getLogger(__name__)


def compute_rss(miou: float, ece: float, p_ac: float, p_ui: float,
                weights: Optional[Weights] = None) -> float:
    """
    Weighted harmonic mean of (mIoU, 1 - ECE, p(acc|cer), p(unc|inacc))

    RSS = sum(w) / (w1/mIoU + w2/(1 - ECE) + w3/p_ac + w4/p_ui). A zero term
    with a positive weight drives the score to its limit, 0. Terms with zero
    weight are left out of the denominator.

    Args:
        miou: Mean IoU in [0, 1]
        ece: Expected calibration error in [0, 1]
        p_ac: p(acc|cer) in [0, 1]
        p_ui: p(unc|inacc) in [0, 1]
        weights: Component weights (defaults to equal weighting)
    Returns:
        RSS in [0, 1]
    Raises:
        ValidationError: if a component lies outside [0, 1]
    """
    weights = weights or Weights()
    for name, value in (('miou', miou), ('ece', ece), ('p_acc_given_cer', p_ac), ('p_unc_given_inacc', p_ui)):
        is_valid, error = validate_unit_interval(value, name)
        if not is_valid:
            raise ValidationError(error)

    terms = (float(miou), 1.0 - float(ece), float(p_ac), float(p_ui))
    denominator = 0.0
    for weight, term in zip(weights.as_tuple(), terms):
        if weight == 0.0:
            continue
        if term == 0.0:
            return 0.0
        denominator += weight / term

    return sum(weights.as_tuple()) / denominator


def assemble_report(iou: IoUResult, bins: CalibrationBins, counts: UncertaintyCounts,
                    weights: Optional[Weights] = None, pixel_count: Optional[int] = None,
                    **metadata) -> MetricReport:
    """
    Finalize every component and compose them into a MetricReport

    Args:
        iou: IoU result over the dataset
        bins: Dataset-level calibration bins
        counts: Dataset-level uncertainty tallies
        weights: RSS weights (defaults to equal weighting)
        pixel_count: Pixel total of the confusion matrix behind iou, cross-checked
            against the bins and counts when given
        **metadata: name, manifest_path, timestamp, image_count
    Returns:
        MetricReport
    Raises:
        ConsistencyError: if the accumulators disagree on the evaluated pixel count
    """
    weights = weights or Weights()
    if pixel_count is None:
        pixel_count = bins.total_pixels
    if not (pixel_count == bins.total_pixels == counts.total):
        raise ConsistencyError(
            f"accumulators disagree on the evaluated pixels: confusion={pixel_count}, "
            f"bins={bins.total_pixels}, uncertainty={counts.total}"
        )

    ece = compute_ece(bins)
    conditionals = finalize_conditionals(counts)
    rss = compute_rss(iou.miou, ece, conditionals.p_acc_given_cer,
                      conditionals.p_unc_given_inacc, weights)

    flags = {
        'p_acc_given_cer_degenerate': conditionals.acc_given_cer_degenerate,
        'p_unc_given_inacc_degenerate': conditionals.unc_given_inacc_degenerate
    }

    return MetricReport(
        miou=iou.miou,
        ece=ece,
        p_acc_given_cer=conditionals.p_acc_given_cer,
        p_unc_given_inacc=conditionals.p_unc_given_inacc,
        rss=rss,
        weights=weights,
        num_bins=bins.num_bins,
        per_class_iou=iou.per_class,
        pixel_count=pixel_count,
        num_present_classes=iou.num_present_classes,
        flags=flags,
        uncertainty=counts,
        bins=bins,
        **metadata
    )


def compare_runs(baseline: MetricReport, shifted: MetricReport) -> RunComparison:
    """
    Raw signed differences shifted - baseline for every reported metric

    Reports built with different weights or bin counts are still compared,
    with a warning attached.
    """
    warnings = []
    if baseline.weights != shifted.weights:
        warnings.append(f"weights differ: baseline {baseline.weights}, shifted {shifted.weights}")
    if baseline.num_bins != shifted.num_bins:
        warnings.append(f"bin counts differ: baseline {baseline.num_bins}, shifted {shifted.num_bins}")

    for warning in warnings:
        logger.warning(warning)

    deltas = {name: shifted.metric(name) - baseline.metric(name) for name in METRIC_NAMES}
    return RunComparison(baseline, shifted, deltas, warnings)
