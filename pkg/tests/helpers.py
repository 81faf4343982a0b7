"""
Shared builders for hand-made maps, datasets and reports
"""

import json
from pathlib import Path
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
from click.testing import CliRunner

from backend.metrics.score import compute_rss
from backend.models.report import MetricReport, Weights
from storage.array_store import write_array


def probs_from_prediction(prediction: np.ndarray, num_classes: int,
                          confidence=1.0, dtype=np.float32) -> np.ndarray:
    """(C, H, W) map whose argmax is prediction, with the rest of the mass spread flat"""
    prediction = np.asarray(prediction)
    confidence = np.broadcast_to(np.asarray(confidence, dtype=np.float64), prediction.shape)
    values = np.empty((num_classes,) + prediction.shape, dtype=np.float64)
    values[:] = (1.0 - confidence) / (num_classes - 1)
    np.put_along_axis(values, prediction[np.newaxis], confidence[np.newaxis], axis=0)
    return values.astype(dtype)


def near_perfect_pairs(num_images: int, num_classes: int = 4, height: int = 8, width: int = 8,
                       seed: int = 0):
    """
    Correct predictions where one pixel in four is one-hot and the rest carry
    confidence 0.9999, so each image has some strictly-below-median entropies
    """
    rng = np.random.default_rng(seed)
    index = np.arange(height * width).reshape(height, width)
    confidence = np.where(index % 4 == 0, 1.0, 0.9999)
    for _ in range(num_images):
        labels = rng.integers(0, num_classes, size=(height, width)).astype(np.uint8)
        yield probs_from_prediction(labels, num_classes, confidence), labels


def write_manifest_dir(root: Path, pairs: Iterable[Tuple[np.ndarray, np.ndarray]], num_classes: int,
                       ignore_index: Optional[int] = None, renormalize: Optional[bool] = None,
                       ids: Optional[Sequence[str]] = None) -> Path:
    """Write pairs as pred/<id>.npy and gt/<id>.npy with a hand-written manifest"""
    root = Path(root)
    entries = []
    for position, (probs, labels) in enumerate(pairs):
        image_id = ids[position] if ids is not None else f'img_{position:03d}'
        write_array(root / 'pred' / f'{image_id}.npy', probs)
        write_array(root / 'gt' / f'{image_id}.npy', labels)
        entries.append({
            'image_id': image_id,
            'prediction_path': f'pred/{image_id}.npy',
            'label_path': f'gt/{image_id}.npy'
        })

    document = {'schema_version': 1, 'num_classes': num_classes, 'entries': entries}
    if ignore_index is not None:
        document['ignore_index'] = ignore_index
    if renormalize is not None:
        document['renormalize'] = renormalize

    path = root / 'manifest.json'
    path.write_text(json.dumps(document))
    return path


def make_report(miou: float, ece: float, p_ac: float, p_ui: float,
                weights: Optional[Weights] = None, num_bins: int = 15, name: str = '') -> MetricReport:
    """Report with hand-entered components, as read off a results table"""
    weights = weights or Weights()
    return MetricReport(
        miou=miou,
        ece=ece,
        p_acc_given_cer=p_ac,
        p_unc_given_inacc=p_ui,
        rss=compute_rss(miou, ece, p_ac, p_ui, weights),
        weights=weights,
        num_bins=num_bins,
        per_class_iou=[miou],
        pixel_count=100,
        name=name
    )


def cli_runner() -> CliRunner:
    """Runner with stderr kept apart from stdout (click 8.2 always separates them)"""
    try:
        return CliRunner(mix_stderr=False)
    except TypeError:
        return CliRunner()
