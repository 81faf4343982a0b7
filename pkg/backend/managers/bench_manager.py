"""
Bench Manager
Throughput micro-benchmark of the evaluation pipeline on in-memory synthetic images
"""

import csv
import logging
import platform
import sys
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, Iterator, Optional, Tuple

from config import BENCH_CONFIG, EVAL_CONFIG
from backend.managers.evaluation_manager import EvaluationManager
from backend.managers.synth_manager import SynthSpec, generate_image
from backend.models.maps import LabelMap, ProbabilityMap
from backend.utils.validators import ValidationError

logger = logging.getLogger(__name__)

BENCH_COLUMNS = ['timestamp', 'machine', 'num_classes', 'height', 'width', 'num_images',
                 'jobs', 'seconds', 'images_per_second', 'pixels_per_second', 'peak_rss_mb']


def machine_descriptor() -> str:
    return f"{platform.node()} {platform.system()} {platform.machine()} python{platform.python_version()}"


def peak_rss_mb() -> float:
    """Peak resident set size of this process so far, 0.0 where the platform has no getrusage"""
    try:
        import resource
    except ImportError:
        return 0.0
    peak = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
    # kilobytes on Linux, bytes on macOS
    divisor = 1024 * 1024 if sys.platform == 'darwin' else 1024
    return peak / divisor


class BenchResult:
    """
    One benchmark measurement
    """

    def __init__(self, geometry: Tuple[int, int, int], num_images: int, jobs: int,
                 seconds: float, peak_rss: float, machine: Optional[str] = None,
                 timestamp: Optional[str] = None):
        self.geometry = tuple(geometry)
        self.num_images = num_images
        self.jobs = jobs
        self.seconds = seconds
        self.peak_rss_mb = peak_rss
        self.machine = machine or machine_descriptor()
        self.timestamp = timestamp or datetime.now(timezone.utc).isoformat(timespec='seconds')

    @property
    def pixels_per_image(self) -> int:
        return self.geometry[1] * self.geometry[2]

    @property
    def images_per_second(self) -> float:
        return self.num_images / self.seconds

    @property
    def pixels_per_second(self) -> float:
        return self.num_images * self.pixels_per_image / self.seconds

    def to_dict(self) -> Dict:
        num_classes, height, width = self.geometry
        return {
            'timestamp': self.timestamp,
            'machine': self.machine,
            'num_classes': num_classes,
            'height': height,
            'width': width,
            'num_images': self.num_images,
            'jobs': self.jobs,
            'seconds': round(self.seconds, 6),
            'images_per_second': round(self.images_per_second, 4),
            'pixels_per_second': round(self.pixels_per_second, 1),
            'peak_rss_mb': round(self.peak_rss_mb, 1)
        }

    def summary_line(self) -> str:
        num_classes, height, width = self.geometry
        return (f"{num_classes}x{height}x{width} x{self.num_images} jobs={self.jobs}: "
                f"{self.images_per_second:.2f} images/s | {self.pixels_per_second:.3g} pixels/s | "
                f"peak RSS {self.peak_rss_mb:.0f} MB")

    def __repr__(self) -> str:
        return f"BenchResult({self.summary_line()})"


def bench_workload(probs: ProbabilityMap, labels: LabelMap, count: int,
                   prefix: str = 'bench') -> Iterator[Tuple[str, ProbabilityMap, LabelMap]]:
    """Yield count fresh wrappers around the same arrays, each with empty derived-field caches"""
    for i in range(count):
        yield (f'{prefix}_{i}', ProbabilityMap(probs.values, validate=False),
               LabelMap(labels.labels, labels.ignore_index))


def run_bench(geometry: Tuple[int, int, int], num_images: int, jobs: int = 1,
              seed: int = 0) -> BenchResult:
    """
    Time the evaluation of num_images synthetic images

    One image is generated up front and re-wrapped for every evaluation, so
    the timed region does no generation and no disk I/O but still derives
    prediction and confidence per image. Warmup evaluations run first and
    are not timed.

    Args:
        geometry: (C, H, W)
        num_images: Timed evaluations
        jobs: Worker threads
        seed: Synth seed of the workload
    Returns:
        BenchResult
    """
    if num_images < 1:
        raise ValidationError(f"num_images must be >= 1, got {num_images}")

    num_classes, height, width = geometry
    spec = SynthSpec(num_classes, height, width, num_images=1, target_accuracy=0.8, seed=seed)
    probs, labels = generate_image(spec, 0)
    manager = EvaluationManager(num_bins=EVAL_CONFIG['num_bins'], jobs=jobs)

    manager.evaluate_pairs(bench_workload(probs, labels, BENCH_CONFIG['warmup_images'], 'warmup'), num_classes)

    start = time.perf_counter()
    manager.evaluate_pairs(bench_workload(probs, labels, num_images), num_classes)
    seconds = time.perf_counter() - start

    result = BenchResult(geometry, num_images, manager.jobs, seconds, peak_rss_mb())
    logger.info("Bench %s", result.summary_line())
    return result


def append_result(result: BenchResult, log_file: Optional[Path] = None) -> Path:
    """Append one row to the benchmark CSV log, writing the header on first use"""
    path = Path(log_file or BENCH_CONFIG['log_file'])
    path.parent.mkdir(parents=True, exist_ok=True)
    new_file = not path.exists() or path.stat().st_size == 0
    with path.open('a', newline='') as f:
        writer = csv.DictWriter(f, fieldnames=BENCH_COLUMNS)
        if new_file:
            writer.writeheader()
        writer.writerow(result.to_dict())
    logger.info("Appended benchmark result to %s", path)
    return path
