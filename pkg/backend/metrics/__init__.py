"""
Metrics Package
Per-image accumulation and dataset-level finalization of every metric
"""

from .segmentation import accumulate_confusion, compute_iou
from .calibration import accumulate_bins, compute_ece, export_diagram
from .uncertainty import accumulate_uncertainty, compute_entropy, finalize_conditionals, median_threshold
from .score import assemble_report, compare_runs, compute_rss

__all__ = [
    'accumulate_confusion',
    'compute_iou',
    'accumulate_bins',
    'compute_ece',
    'export_diagram',
    'accumulate_uncertainty',
    'compute_entropy',
    'finalize_conditionals',
    'median_threshold',
    'assemble_report',
    'compare_runs',
    'compute_rss'
]
