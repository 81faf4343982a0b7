"""
Backend Package
Metric pipeline of the Reliable Segmentation Score evaluator
"""

__version__ = '1.0.0'
__author__ = 'Segmentation Reliability Team'
