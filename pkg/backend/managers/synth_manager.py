"""
Synth Manager
Deterministic synthetic datasets with controllable accuracy, calibration and error entropy

Sampling model, per pixel:
    q        ~ Uniform[a - w, a + w]   correctness probability, w = min(spread, a - floor, 1 - a)
    correct  ~ Bernoulli(q)
    conf     = clamp(q + bias, floor, 1)   with floor = 1.01 / C
The predicted class carries conf. The remaining mass is either flat over the
other C - 1 classes or peaked on one runner-up class. In mode "high" errors
are flat (high entropy) and correct pixels peaked; mode "low" is the reverse.

Image i draws from PCG64(SeedSequence(seed, spawn_key=(i,))), so any image can
be regenerated alone and in any order.
"""

import json
import logging
from pathlib import Path
from typing import Dict, Iterator, Tuple

import numpy as np

from config import SYNTH_CONFIG
from backend.models.maps import LabelMap, ProbabilityMap
from backend.utils.validators import LoadError, ValidationError, validate_num_classes
from storage.array_store import write_array
from storage.manifest_store import Manifest, ManifestEntry, write_manifest

logger = logging.getLogger(__name__)

ERROR_ENTROPY_MODES = ('low', 'high')


class SynthSpec:
    """
    Parameters of a synthetic dataset
    """

    FIELDS = ('num_classes', 'height', 'width', 'num_images', 'target_accuracy',
              'confidence_bias', 'error_entropy_mode', 'seed')

    def __init__(self, num_classes: int, height: int, width: int, num_images: int,
                 target_accuracy: float, confidence_bias: float = 0.0,
                 error_entropy_mode: str = 'high', seed: int = 0):
        """
        Initialize SynthSpec object

        Args:
            num_classes: Class count C (labels fit in 8 bits below 255 classes)
            height: Image height
            width: Image width
            num_images: Number of images
            target_accuracy: Expected pixel accuracy in (0, 1]
            confidence_bias: Added to the correctness probability to get the
                reported confidence; positive means overconfident
            error_entropy_mode: 'high' gives errors flat distributions, 'low' peaked ones
            seed: Root seed (64-bit)
        Raises:
            ValidationError: if a field is out of range
        """
        is_valid, error = validate_num_classes(num_classes)
        if not is_valid:
            raise ValidationError(error)
        for field, value in (('height', height), ('width', width), ('num_images', num_images)):
            if int(value) != value or value < 1:
                raise ValidationError(f"{field} must be a positive integer, got {value}")
        if not 0.0 < target_accuracy <= 1.0:
            raise ValidationError(f"target_accuracy must be in (0, 1], got {target_accuracy}")
        if error_entropy_mode not in ERROR_ENTROPY_MODES:
            raise ValidationError(
                f"error_entropy_mode must be one of {', '.join(ERROR_ENTROPY_MODES)}, "
                f"got {error_entropy_mode!r}"
            )
        if not 0 <= int(seed) < 2 ** 64:
            raise ValidationError(f"seed must be a 64-bit unsigned integer, got {seed}")

        self.num_classes = int(num_classes)
        self.height = int(height)
        self.width = int(width)
        self.num_images = int(num_images)
        self.target_accuracy = float(target_accuracy)
        self.confidence_bias = float(confidence_bias)
        self.error_entropy_mode = error_entropy_mode
        self.seed = int(seed)

    @property
    def label_dtype(self) -> np.dtype:
        return np.dtype(np.uint8) if self.num_classes < 255 else np.dtype('<u2')

    @property
    def ignore_index(self) -> int:
        return 255 if self.num_classes < 255 else 65535

    def to_dict(self) -> Dict:
        return {field: getattr(self, field) for field in self.FIELDS}

    @classmethod
    def from_dict(cls, data: Dict) -> 'SynthSpec':
        """
        Create SynthSpec object from dictionary

        Raises:
            ValidationError: on missing or unknown keys
        """
        unknown = sorted(set(data) - set(cls.FIELDS))
        if unknown:
            raise ValidationError(f"unknown synth spec field(s): {', '.join(unknown)}")
        try:
            return cls(**data)
        except TypeError as e:
            raise ValidationError(f"invalid synth spec: {e}")

    @classmethod
    def load(cls, path: Path) -> 'SynthSpec':
        """Read a spec from a JSON file"""
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except FileNotFoundError:
            raise LoadError(f"synth spec not found: {path}")
        except json.JSONDecodeError as e:
            raise LoadError(f"synth spec {path} is not valid JSON: {e}")
        if not isinstance(data, dict):
            raise LoadError(f"synth spec {path} must be a JSON object")
        return cls.from_dict(data)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SynthSpec):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __repr__(self) -> str:
        return (f"SynthSpec(C={self.num_classes}, {self.height}x{self.width}, "
                f"images={self.num_images}, accuracy={self.target_accuracy}, "
                f"bias={self.confidence_bias}, mode={self.error_entropy_mode})")


def image_rng(seed: int, image_index: int) -> np.random.Generator:
    """Independent stream for one image"""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(image_index,))))


def generate_image(spec: SynthSpec, image_index: int) -> Tuple[ProbabilityMap, LabelMap]:
    """
    Draw one (ProbabilityMap, LabelMap) pair

    Args:
        spec: Dataset parameters
        image_index: Position in the dataset, selects the random stream
    Returns:
        Tuple of (ProbabilityMap, LabelMap)
    """
    rng = image_rng(spec.seed, image_index)
    num_classes = spec.num_classes
    size = (spec.height, spec.width)
    a = spec.target_accuracy
    floor = SYNTH_CONFIG['confidence_floor_ratio'] / num_classes

    labels = rng.integers(0, num_classes, size=size)
    spread = max(0.0, min(SYNTH_CONFIG['confidence_spread'], a - floor, 1.0 - a))
    q = rng.uniform(a - spread, a + spread, size=size)
    correct = rng.random(size) < q
    offset = rng.integers(1, num_classes, size=size)

    prediction = np.where(correct, labels, (labels + offset) % num_classes)
    # errors fall back on the true class, correct pixels on the next class
    runner_up = np.where(correct, (prediction + 1) % num_classes, labels)
    confidence = np.clip(q + spec.confidence_bias, floor, 1.0)

    peaked = correct if spec.error_entropy_mode == 'high' else ~correct
    remaining = 1.0 - confidence
    flat = remaining / (num_classes - 1)
    second = np.minimum(remaining, SYNTH_CONFIG['runner_up_ratio'] * confidence)
    rest = np.maximum(remaining - second, 0.0) / (num_classes - 2) if num_classes > 2 else np.zeros(size)

    values = np.empty((num_classes,) + size, dtype=np.float64)
    values[:] = np.where(peaked, rest, flat)
    np.put_along_axis(values, runner_up[np.newaxis], np.where(peaked, second, flat)[np.newaxis], axis=0)
    np.put_along_axis(values, prediction[np.newaxis], confidence[np.newaxis], axis=0)

    probs = ProbabilityMap(values.astype(np.float32))
    return probs, LabelMap(labels.astype(spec.label_dtype), ignore_index=spec.ignore_index)


def generate(spec: SynthSpec) -> Iterator[Tuple[ProbabilityMap, LabelMap]]:
    """
    Yield the dataset's pairs in image order; a fixed spec always yields the same arrays
    """
    for index in range(spec.num_images):
        yield generate_image(spec, index)


def image_id(index: int) -> str:
    return f"synth_{index:05d}"


def write_dataset(spec: SynthSpec, out_dir: Path) -> Path:
    """
    Write a dataset as .npy pairs plus a manifest readable by ingest

    Layout:
        out_dir/manifest.json
        out_dir/predictions/<image_id>.npy
        out_dir/labels/<image_id>.npy

    Returns:
        Path of the manifest
    """
    out_dir = Path(out_dir)
    entries = []
    for index, (probs, labels) in enumerate(generate(spec)):
        name = image_id(index)
        prediction_path = out_dir / 'predictions' / f'{name}.npy'
        label_path = out_dir / 'labels' / f'{name}.npy'
        write_array(prediction_path, probs.values)
        write_array(label_path, labels.labels)
        entries.append(ManifestEntry(name, prediction_path.resolve(), label_path.resolve()))

    manifest_path = out_dir / 'manifest.json'
    write_manifest(manifest_path, Manifest(spec.num_classes, entries, ignore_index=spec.ignore_index))
    logger.info("Wrote %d synthetic images to %s", len(entries), out_dir)
    return manifest_path
