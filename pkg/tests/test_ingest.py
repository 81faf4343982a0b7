import json

import numpy as np
import pytest

from backend.managers.ingest_manager import IngestManager, load_label_map, load_probability_map
from backend.utils.validators import LoadError
from storage.array_store import read_array, read_header, write_array
from storage.manifest_store import Manifest, ManifestEntry, read_manifest, write_manifest
from tests.helpers import probs_from_prediction, write_manifest_dir


def save(tmp_path, name, array):
    path = tmp_path / name
    write_array(path, array)
    return path


def uniform(num_classes=2, height=3, width=4):
    return np.full((num_classes, height, width), 1.0 / num_classes, dtype=np.float32)


# ============================================
# Manifest
# ============================================

def test_minimal_manifest_gets_defaults(tmp_path):
    path = tmp_path / 'manifest.json'
    path.write_text(json.dumps({
        'num_classes': 3,
        'entries': [{'image_id': 'a', 'prediction_path': 'p/a.npy', 'label_path': 'g/a.npy'}]
    }))
    manifest = read_manifest(path)
    assert manifest.num_classes == 3
    assert manifest.ignore_index == 255
    assert manifest.renormalize is False
    assert manifest.entries[0].prediction_path == tmp_path.resolve() / 'p' / 'a.npy'


def test_manifest_with_one_class_rejected(tmp_path):
    path = tmp_path / 'manifest.json'
    path.write_text(json.dumps({
        'num_classes': 1,
        'entries': [{'image_id': 'a', 'prediction_path': 'a.npy', 'label_path': 'b.npy'}]
    }))
    with pytest.raises(LoadError, match='num_classes'):
        read_manifest(path)


def test_duplicate_image_id_names_both_positions(tmp_path):
    entry = {'image_id': 'frame', 'prediction_path': 'a.npy', 'label_path': 'b.npy'}
    path = tmp_path / 'manifest.json'
    path.write_text(json.dumps({'num_classes': 2, 'entries': [entry, dict(entry)]}))
    with pytest.raises(LoadError, match=r"duplicate image_id 'frame' \(entries 0 and 1\)"):
        read_manifest(path)


@pytest.mark.parametrize('document', [
    {'num_classes': 2, 'entries': []},
    {'num_classes': 2, 'entries': [{'image_id': 'a', 'prediction_path': 'a.npy'}]},
    {'num_classes': 2, 'ignore_index': -1,
     'entries': [{'image_id': 'a', 'prediction_path': 'a.npy', 'label_path': 'b.npy'}]},
    {'schema_version': 2, 'num_classes': 2,
     'entries': [{'image_id': 'a', 'prediction_path': 'a.npy', 'label_path': 'b.npy'}]},
    [1, 2, 3],
])
def test_malformed_manifest_rejected(tmp_path, document):
    path = tmp_path / 'manifest.json'
    path.write_text(json.dumps(document))
    with pytest.raises(LoadError):
        read_manifest(path)


def test_manifest_not_json(tmp_path):
    path = tmp_path / 'manifest.json'
    path.write_text('{"num_classes": 2,')
    with pytest.raises(LoadError, match='not valid JSON'):
        read_manifest(path)


def test_missing_manifest(tmp_path):
    with pytest.raises(LoadError, match='manifest not found'):
        read_manifest(tmp_path / 'absent.json')


def test_written_manifest_uses_relative_paths(tmp_path):
    root = tmp_path.resolve()
    manifest = Manifest(4, [ManifestEntry('x', root / 'pred' / 'x.npy', root / 'gt' / 'x.npy')],
                        ignore_index=0)
    path = tmp_path / 'manifest.json'
    write_manifest(path, manifest)

    document = json.loads(path.read_text())
    assert document['entries'][0]['prediction_path'] == 'pred/x.npy'
    assert read_manifest(path).ignore_index == 0


# ============================================
# Probability maps
# ============================================

def test_uniform_probabilities_load(tmp_path):
    probs = load_probability_map(save(tmp_path, 'p.npy', uniform()), 2)
    assert probs.num_classes == 2
    assert probs.shape == (3, 4)


def test_sum_outside_tolerance_names_pixel(tmp_path):
    values = uniform()
    values[0, 1, 2] = 0.502
    path = save(tmp_path, 'p.npy', values)
    with pytest.raises(LoadError, match=r"pixel \(1, 2\)") as excinfo:
        load_probability_map(path, 2)
    assert str(path) in str(excinfo.value)


def test_renormalize_accepts_small_drift(tmp_path):
    values = uniform()
    values[0, 1, 2] = 0.502
    probs = load_probability_map(save(tmp_path, 'p.npy', values), 2, renormalize=True)
    assert probs.values.sum(axis=0) == pytest.approx(np.ones((3, 4)), abs=1e-6)
    assert probs.prediction()[1, 2] == 0


def test_renormalize_still_rejects_negative_values(tmp_path):
    values = uniform()
    values[1, 0, 0] = -0.5
    with pytest.raises(LoadError, match='logits'):
        load_probability_map(save(tmp_path, 'p.npy', values), 2, renormalize=True)


def test_values_above_one_look_like_logits(tmp_path):
    values = uniform()
    values[0, 2, 3] = 3.7
    with pytest.raises(LoadError, match=r'logits.*--renormalize'):
        load_probability_map(save(tmp_path, 'p.npy', values), 2)


def test_large_channel_sum_looks_like_logits(tmp_path):
    values = np.zeros((3, 1, 1), dtype=np.float32)
    values[:, 0, 0] = [0.9, 0.9, 0.0]
    with pytest.raises(LoadError, match='logits'):
        load_probability_map(save(tmp_path, 'p.npy', values), 3)


def test_non_finite_value_rejected(tmp_path):
    values = uniform()
    values[1, 0, 3] = np.nan
    with pytest.raises(LoadError, match=r"non-finite value nan at class 1, pixel \(0, 3\)"):
        load_probability_map(save(tmp_path, 'p.npy', values), 2)


def test_float64_probabilities_rejected(tmp_path):
    with pytest.raises(LoadError, match='dtype <f8'):
        load_probability_map(save(tmp_path, 'p.npy', uniform().astype(np.float64)), 2)


def test_channel_count_must_match_manifest(tmp_path):
    with pytest.raises(LoadError, match='expected 3 classes'):
        load_probability_map(save(tmp_path, 'p.npy', uniform(2)), 3)


def test_rank_two_prediction_rejected(tmp_path):
    with pytest.raises(LoadError, match='expected rank 3'):
        load_probability_map(save(tmp_path, 'p.npy', np.full((3, 4), 0.5, dtype=np.float32)), 2)


def test_fortran_order_rejected(tmp_path):
    path = tmp_path / 'p.npy'
    np.save(path, np.asfortranarray(uniform()))
    with pytest.raises(LoadError, match='Fortran'):
        load_probability_map(path, 2)


def test_missing_prediction_file(tmp_path):
    with pytest.raises(LoadError, match='file not found'):
        load_probability_map(tmp_path / 'absent.npy', 2)


def test_truncated_file_rejected(tmp_path):
    path = save(tmp_path, 'p.npy', uniform(2, 8, 8))
    path.write_bytes(path.read_bytes()[:-40])
    with pytest.raises(LoadError):
        load_probability_map(path, 2)


def test_header_is_version_one(tmp_path):
    path = save(tmp_path, 'p.npy', uniform())
    assert path.read_bytes()[:8] == b'\x93NUMPY\x01\x00'
    shape, dtype = read_header(path)
    assert shape == (2, 3, 4)
    assert dtype.str == '<f4'


# ============================================
# Label maps
# ============================================

def test_all_ignore_labels_accepted(tmp_path):
    labels = load_label_map(save(tmp_path, 'g.npy', np.full((3, 4), 255, dtype=np.uint8)), 19)
    assert labels.evaluated_pixels() == 0


def test_label_equal_to_class_count_rejected(tmp_path):
    labels = np.zeros((3, 4), dtype=np.uint8)
    labels[2, 1] = 4
    with pytest.raises(LoadError, match=r"label 4 at pixel \(2, 1\)"):
        load_label_map(save(tmp_path, 'g.npy', labels), 4)


def test_custom_ignore_index(tmp_path):
    labels = np.array([[0, 7], [1, 7]], dtype=np.uint8)
    label_map = load_label_map(save(tmp_path, 'g.npy', labels), 2, ignore_index=7)
    assert label_map.evaluated_pixels() == 2


def test_sixteen_bit_labels_accepted(tmp_path):
    labels = np.array([[0, 299], [65535, 1]], dtype=np.uint16)
    label_map = load_label_map(save(tmp_path, 'g.npy', labels), 300, ignore_index=65535)
    assert label_map.evaluated_pixels() == 3


def test_signed_labels_rejected(tmp_path):
    with pytest.raises(LoadError, match='dtype <i4'):
        load_label_map(save(tmp_path, 'g.npy', np.zeros((2, 2), dtype=np.int32)), 2)


def test_stored_labels_read_back_unchanged(tmp_path, rng):
    labels = rng.integers(0, 19, size=(5, 7)).astype(np.uint8)
    assert np.array_equal(read_array(save(tmp_path, 'g.npy', labels), ('|u1',), rank=2), labels)


# ============================================
# IngestManager
# ============================================

def test_pairs_stream_in_manifest_order(tmp_path, rng):
    pairs = []
    for _ in range(3):
        labels = rng.integers(0, 3, size=(4, 4)).astype(np.uint8)
        pairs.append((probs_from_prediction(labels, 3), labels))
    path = write_manifest_dir(tmp_path, pairs, 3, ids=['c', 'a', 'b'])

    ingest = IngestManager.from_path(path)
    assert [entry.image_id for entry, _, _ in ingest.iter_pairs()] == ['c', 'a', 'b']
    assert ingest.validate() is None


def test_size_mismatch_names_both_files(tmp_path):
    pairs = [(uniform(2, 3, 4), np.zeros((3, 5), dtype=np.uint8))]
    ingest = IngestManager.from_path(write_manifest_dir(tmp_path, pairs, 2))
    entry = ingest.manifest.entries[0]
    with pytest.raises(LoadError, match='shape mismatch') as excinfo:
        ingest.load_pair(entry)
    assert str(entry.label_path) in str(excinfo.value)


def test_validate_reports_first_error(tmp_path):
    good = (uniform(2, 2, 2), np.zeros((2, 2), dtype=np.uint8))
    bad_labels = np.zeros((2, 2), dtype=np.uint8)
    bad_labels[1, 1] = 9
    path = write_manifest_dir(tmp_path, [good, (uniform(2, 2, 2), bad_labels), good], 2)

    error = IngestManager.from_path(path).validate()
    assert 'img_001.npy' in error
    assert 'label 9 at pixel (1, 1)' in error


def test_overrides_take_precedence(tmp_path):
    pairs = [(uniform(2, 2, 2), np.zeros((2, 2), dtype=np.uint8))]
    path = write_manifest_dir(tmp_path, pairs, 2, ignore_index=7, renormalize=False)
    ingest = IngestManager.from_path(path, ignore_index=3, renormalize=True)
    assert ingest.ignore_index == 3
    assert ingest.renormalize is True
    assert IngestManager.from_path(path).ignore_index == 7
