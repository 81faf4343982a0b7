"""
Models Package
Contains the data classes shared by the metric pipeline
"""

from .maps import LabelMap, ProbabilityMap
from .accumulators import CalibrationBins, ConfusionMatrix, ImageAccumulators, UncertaintyCounts
from .report import MetricReport, RunComparison, Weights

__all__ = [
    'LabelMap',
    'ProbabilityMap',
    'CalibrationBins',
    'ConfusionMatrix',
    'ImageAccumulators',
    'UncertaintyCounts',
    'MetricReport',
    'RunComparison',
    'Weights'
]
