"""
Managers Package
Contains the workflow managers: ingest, evaluation, synthesis and benchmarking
"""

from .ingest_manager import IngestManager
from .evaluation_manager import EvaluationManager
from .synth_manager import SynthSpec
from .bench_manager import BenchResult

__all__ = ['IngestManager', 'EvaluationManager', 'SynthSpec', 'BenchResult']
