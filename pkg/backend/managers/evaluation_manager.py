"""
Evaluation Manager
Single-pass per-image evaluation and the ordered parallel reduction behind `eval`
"""

import logging
import os
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, Optional, Tuple, TypeVar

from config import EVAL_CONFIG
from backend.metrics.calibration import bins_from_arrays
from backend.metrics.score import assemble_report
from backend.metrics.segmentation import compute_iou, confusion_from_arrays
from backend.metrics.uncertainty import UncertaintyMap, compute_entropy, counts_from_arrays, median_threshold
from backend.models.accumulators import ImageAccumulators, reduce_accumulators
from backend.models.maps import LabelMap, ProbabilityMap, check_pair
from backend.models.report import MetricReport, Weights
from backend.managers.ingest_manager import IngestManager
from backend.utils.validators import ValidationError, validate_num_bins
from storage.array_store import write_array

logger = logging.getLogger(__name__)

T = TypeVar('T')


def resolve_jobs(jobs: Optional[int] = None) -> int:
    """Worker count: explicit value, else config, where 0 means one per CPU"""
    jobs = EVAL_CONFIG['jobs'] if jobs is None else jobs
    if jobs < 0:
        raise ValidationError(f"jobs must be >= 0, got {jobs}")
    return jobs or os.cpu_count() or 1


def evaluate_image(probs: ProbabilityMap, labels: LabelMap,
                   num_bins: int) -> Tuple[Optional[ImageAccumulators], UncertaintyMap]:
    """
    Fill all three accumulators from one traversal of one image

    Prediction, confidence and entropy are each computed once; the entropy
    map feeds both the median threshold and the tallies.

    Args:
        probs: Predicted class probabilities
        labels: Ground truth
        num_bins: Calibration bin count
    Returns:
        Tuple of (ImageAccumulators or None when every pixel is ignored, entropy map)
    """
    check_pair(probs, labels)
    umap = compute_entropy(probs)

    valid = labels.valid_mask()
    if not valid.any():
        return None, umap

    prediction = probs.prediction()
    correct = prediction[valid] == labels.labels[valid]
    threshold = median_threshold(umap, labels)

    accumulators = ImageAccumulators(
        confusion_from_arrays(prediction, labels.labels, valid, probs.num_classes),
        bins_from_arrays(probs.confidence()[valid], correct, num_bins),
        counts_from_arrays(correct, umap.entropy[valid], threshold),
    )
    return accumulators, umap


class EvaluationManager:
    """
    Manager class for dataset evaluation
    Runs evaluate_image over many images and reduces the results in input order
    """

    def __init__(self, num_bins: Optional[int] = None, weights: Optional[Weights] = None,
                 jobs: Optional[int] = None, entropy_dir: Optional[Path] = None):
        """
        Initialize evaluation manager

        Args:
            num_bins: Calibration bin count (defaults to config)
            weights: RSS weights (defaults to config)
            jobs: Worker threads, 0 for one per CPU (defaults to config)
            entropy_dir: Write <image_id>_entropy.npy per image here when given
        """
        self.num_bins = EVAL_CONFIG['num_bins'] if num_bins is None else num_bins
        is_valid, error = validate_num_bins(self.num_bins)
        if not is_valid:
            raise ValidationError(error)

        self.weights = weights or Weights.parse(EVAL_CONFIG['weights'])
        self.jobs = resolve_jobs(jobs)
        self.entropy_dir = Path(entropy_dir) if entropy_dir is not None else None

    def _evaluate(self, image_id: str, probs: ProbabilityMap,
                  labels: LabelMap) -> Optional[ImageAccumulators]:
        accumulators, umap = evaluate_image(probs, labels, self.num_bins)
        if self.entropy_dir is not None:
            write_array(self.entropy_dir / f"{image_id}_entropy.npy", umap.to_array())

        if accumulators is None:
            logger.warning("Image %s has no evaluated pixels, skipped", image_id)
        else:
            logger.debug("Evaluated %s: %d pixels", image_id, accumulators.confusion.total)
        return accumulators

    def run_ordered(self, items: Iterable[T],
                    work: Callable[[T], Optional[ImageAccumulators]]) -> Iterable[Optional[ImageAccumulators]]:
        """
        Apply work to every item on the worker pool, yielding results in input order

        At most jobs * inflight_per_job items are in flight, so memory stays
        bounded however long the input is.
        """
        if self.jobs == 1:
            for item in items:
                yield work(item)
            return

        window = self.jobs * EVAL_CONFIG['inflight_per_job']
        pending = deque()
        with ThreadPoolExecutor(max_workers=self.jobs) as pool:
            for item in items:
                pending.append(pool.submit(work, item))
                if len(pending) >= window:
                    yield pending.popleft().result()
            while pending:
                yield pending.popleft().result()

    def reduce(self, results: Iterable[Optional[ImageAccumulators]],
               num_classes: int) -> ImageAccumulators:
        """Merge per-image accumulators left to right, skipping empty images"""
        return reduce_accumulators((r for r in results if r is not None), num_classes, self.num_bins)

    def evaluate_pairs(self, pairs: Iterable[Tuple[str, ProbabilityMap, LabelMap]],
                       num_classes: int) -> ImageAccumulators:
        """
        Evaluate in-memory (image_id, probs, labels) triples

        Returns:
            Dataset-level ImageAccumulators
        """
        results = self.run_ordered(pairs, lambda pair: self._evaluate(*pair))
        return self.reduce(results, num_classes)

    def evaluate_manifest(self, ingest: IngestManager, name: str = '') -> MetricReport:
        """
        Load, evaluate and score every entry of a manifest

        Args:
            ingest: IngestManager over the manifest
            name: Run name stored in the report
        Returns:
            MetricReport
        Raises:
            LoadError: if any entry fails to load
            NoEvaluatedPixelsError: if no entry has an evaluated pixel
            ConsistencyError: if the accumulators disagree on the pixel count
        """
        manifest = ingest.manifest
        logger.info("Evaluating %d images with %d worker(s), %d bins",
                    len(manifest), self.jobs, self.num_bins)

        def work(entry):
            probs, labels = ingest.load_pair(entry)
            return self._evaluate(entry.image_id, probs, labels)

        total = self.reduce(self.run_ordered(manifest.entries, work), manifest.num_classes)
        return self.build_report(
            total,
            name=name,
            manifest_path=str(manifest.path) if manifest.path else ''
        )

    def build_report(self, total: ImageAccumulators, name: str = '',
                     manifest_path: str = '') -> MetricReport:
        """Finalize dataset-level accumulators into a report"""
        return assemble_report(
            compute_iou(total.confusion),
            total.bins,
            total.uncertainty,
            self.weights,
            pixel_count=total.confusion.total,
            name=name,
            manifest_path=manifest_path,
            image_count=total.image_count
        )
