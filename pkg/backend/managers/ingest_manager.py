"""
Ingest Manager
Loads prediction / label pairs listed in a manifest and streams them to the pipeline
"""

import logging
from pathlib import Path
from typing import Iterator, Optional, Tuple

import numpy as np

from config import EVAL_CONFIG
from backend.models.maps import LabelMap, ProbabilityMap
from backend.utils.validators import (
    LoadError,
    ValidationError,
    validate_label_values,
    validate_matching_shapes,
    validate_probability_values,
)
from storage.array_store import LABEL_DTYPES, PROBABILITY_DTYPES, read_array
from storage.manifest_store import Manifest, ManifestEntry, read_manifest

logger = logging.getLogger(__name__)


def load_probability_map(path: Path, num_classes: int, renormalize: bool = False) -> ProbabilityMap:
    """
    Load a float32 (C, H, W) probability array

    Args:
        path: .npy file
        num_classes: Expected class count C
        renormalize: Divide each pixel by its channel sum before checking sums
    Returns:
        Validated ProbabilityMap
    Raises:
        LoadError: on wrong dtype/shape/rank, non-finite values, values outside
            [0, 1] or a channel sum outside tolerance; the message names the
            path and the first offending pixel
    """
    values = read_array(path, PROBABILITY_DTYPES, rank=3)
    if values.shape[0] != num_classes:
        raise LoadError(f"{path}: expected {num_classes} classes, got shape {values.shape}")

    tolerance = EVAL_CONFIG['probability_tolerance']
    if renormalize:
        # range and finiteness still apply; only the sum is rescaled
        is_valid, error = validate_probability_values(values, tolerance=np.inf)
        if not is_valid:
            raise LoadError(f"{path}: {error}")
        try:
            return ProbabilityMap.renormalized(values, tolerance=tolerance)
        except ValidationError as e:
            raise LoadError(f"{path}: {e}")

    is_valid, error = validate_probability_values(values, tolerance)
    if not is_valid:
        raise LoadError(f"{path}: {error}")

    return ProbabilityMap(values, validate=False)


def load_label_map(path: Path, num_classes: int, ignore_index: Optional[int] = None) -> LabelMap:
    """
    Load an unsigned 8- or 16-bit (H, W) label array

    Args:
        path: .npy file
        num_classes: Class count C
        ignore_index: Sentinel value (defaults to config, 255)
    Returns:
        Validated LabelMap; an all-ignore image is accepted
    Raises:
        LoadError: on wrong dtype/rank or a label that is neither < C nor the ignore index
    """
    ignore_index = EVAL_CONFIG['ignore_index'] if ignore_index is None else ignore_index
    labels = read_array(path, LABEL_DTYPES, rank=2)

    is_valid, error = validate_label_values(labels, num_classes, ignore_index)
    if not is_valid:
        raise LoadError(f"{path}: {error}")

    return LabelMap(labels, ignore_index=ignore_index)


class IngestManager:
    """
    Manager class for dataset loading
    Resolves manifest entries into validated map pairs, one image at a time
    """

    def __init__(self, manifest: Manifest, ignore_index: Optional[int] = None,
                 renormalize: Optional[bool] = None):
        """
        Initialize ingest manager

        Args:
            manifest: Loaded manifest
            ignore_index: Override of the manifest's ignore index
            renormalize: Override of the manifest's renormalize flag
        """
        self.manifest = manifest
        self.ignore_index = manifest.ignore_index if ignore_index is None else ignore_index
        self.renormalize = manifest.renormalize if renormalize is None else renormalize

    @classmethod
    def from_path(cls, path: Path, **overrides) -> 'IngestManager':
        manifest = read_manifest(path)
        logger.info("Loaded manifest %s: %d entries, %d classes",
                    path, len(manifest), manifest.num_classes)
        return cls(manifest, **overrides)

    def load_pair(self, entry: ManifestEntry) -> Tuple[ProbabilityMap, LabelMap]:
        """
        Load and cross-check one entry

        Returns:
            Tuple of (ProbabilityMap, LabelMap)
        Raises:
            LoadError: if either file is invalid or their sizes differ
        """
        probs = load_probability_map(entry.prediction_path, self.manifest.num_classes, self.renormalize)
        labels = load_label_map(entry.label_path, self.manifest.num_classes, self.ignore_index)

        is_valid, error = validate_matching_shapes(probs.values.shape, labels.shape)
        if not is_valid:
            raise LoadError(f"{entry.image_id}: {error} ({entry.prediction_path}, {entry.label_path})")

        return probs, labels

    def iter_pairs(self) -> Iterator[Tuple[ManifestEntry, ProbabilityMap, LabelMap]]:
        """Yield entries lazily; only the current pair is held in memory"""
        for entry in self.manifest.entries:
            probs, labels = self.load_pair(entry)
            yield entry, probs, labels

    def validate(self) -> Optional[str]:
        """
        Load every entry once

        Returns:
            None when the whole manifest loads, else the first error message
        """
        for entry in self.manifest.entries:
            try:
                self.load_pair(entry)
            except LoadError as e:
                return str(e)
        return None
