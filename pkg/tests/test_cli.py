import csv
import json

import numpy as np
import pytest
from main import cli
from backend.models.report import Weights
from tests.helpers import cli_runner, make_report, near_perfect_pairs, write_manifest_dir

NEAR_PERFECT_LINE = "mIoU 1.000 | ECE 0.000 | p(acc|cer) 1.000 | p(unc|inacc) 1.000* | RSS 1.000"


@pytest.fixture
def runner():
    return cli_runner()


@pytest.fixture
def near_perfect_manifest(tmp_path):
    return write_manifest_dir(tmp_path / 'toy', near_perfect_pairs(3), 4)


def invoke(runner, *args, **kwargs):
    return runner.invoke(cli, [str(arg) for arg in args], catch_exceptions=False, **kwargs)


# ============================================
# eval
# ============================================

def test_eval_prints_summary_and_writes_report(runner, near_perfect_manifest, tmp_path):
    out = tmp_path / 'report.json'
    result = invoke(runner, 'eval', '--manifest', near_perfect_manifest, '--out', out, '--jobs', 1)

    assert result.exit_code == 0, result.stderr
    lines = result.stdout.splitlines()
    assert lines[0] == NEAR_PERFECT_LINE
    assert lines[1].startswith('* degenerate')

    document = json.loads(out.read_text())
    assert document['schema_version'] == 1
    assert document['metadata']['name'] == 'toy'
    assert document['flags']['p_unc_given_inacc_degenerate'] is True
    assert document['pixel_count'] == 3 * 64


def test_eval_csv_and_weights(runner, near_perfect_manifest, tmp_path):
    csv_path = tmp_path / 'components.csv'
    result = invoke(runner, 'eval', '--manifest', near_perfect_manifest, '--out', tmp_path / 'r.json',
                    '--weights', 'accuracy_first', '--csv', csv_path, '--name', 'clean')
    assert result.exit_code == 0, result.stderr

    with csv_path.open(newline='') as f:
        rows = list(csv.DictReader(f))
    assert rows[0]['name'] == 'clean'
    saved = json.loads((tmp_path / 'r.json').read_text())
    assert Weights.from_dict(saved['weights']) == Weights.parse('accuracy_first')


def test_eval_missing_prediction_is_load_error(runner, tmp_path):
    path = write_manifest_dir(tmp_path, near_perfect_pairs(2), 4)
    missing = tmp_path / 'pred' / 'img_001.npy'
    missing.unlink()

    result = invoke(runner, 'eval', '--manifest', path, '--out', tmp_path / 'r.json')
    assert result.exit_code == 3
    assert str(missing.resolve()) in result.stderr
    assert not (tmp_path / 'r.json').exists()


def test_eval_missing_manifest(runner, tmp_path):
    result = invoke(runner, 'eval', '--manifest', tmp_path / 'absent.json')
    assert result.exit_code == 3
    assert 'manifest not found' in result.stderr


def test_eval_all_ignored_dataset_is_usage_error(runner, tmp_path):
    labels = np.full((4, 4), 255, dtype=np.uint8)
    probs = np.full((2, 4, 4), 0.5, dtype=np.float32)
    path = write_manifest_dir(tmp_path, [(probs, labels)], 2)
    result = invoke(runner, 'eval', '--manifest', path, '--out', tmp_path / 'r.json')
    assert result.exit_code == 2
    assert 'no evaluated pixels' in result.stderr


def test_eval_invalid_weights(runner, near_perfect_manifest):
    result = invoke(runner, 'eval', '--manifest', near_perfect_manifest, '--weights', '0,0,0,0')
    assert result.exit_code == 2


def test_eval_worker_count_does_not_change_report(runner, synth_manifest, tmp_path):
    manifest = synth_manifest(num_images=200)
    documents = []
    for jobs in (1, 8):
        out = tmp_path / f'jobs_{jobs}.json'
        result = invoke(runner, 'eval', '--manifest', manifest, '--out', out, '--jobs', jobs)
        assert result.exit_code == 0, result.stderr
        documents.append(json.loads(out.read_text()))

    first, second = documents
    assert first['components'] == second['components']
    assert first['rss'] == second['rss']
    assert first['accumulators'] == second['accumulators']


def test_jobs_from_environment(runner, near_perfect_manifest, tmp_path):
    result = invoke(runner, 'eval', '--manifest', near_perfect_manifest, '--out', tmp_path / 'r.json',
                    env={'RSS_JOBS': '2'})
    assert result.exit_code == 0, result.stderr
    assert result.stdout.splitlines()[0] == NEAR_PERFECT_LINE


# ============================================
# compare
# ============================================

def write_reports(tmp_path, baseline, shifted):
    a, b = tmp_path / 'baseline.json', tmp_path / 'shifted.json'
    baseline.save(a)
    shifted.save(b)
    return a, b


def test_compare_prints_value_and_delta(runner, tmp_path):
    a, b = write_reports(tmp_path, make_report(0.736, 0.016, 0.880, 0.663),
                         make_report(0.573, 0.063, 0.880, 0.663))
    out, csv_path = tmp_path / 'delta.json', tmp_path / 'delta.csv'
    result = invoke(runner, 'compare', a, b, '--no-color', '--out', out, '--csv', csv_path)

    assert result.exit_code == 0, result.stderr
    lines = result.stdout.splitlines()
    assert lines[0] == "mIoU          0.736  0.573 (-0.163)"
    assert lines[1] == "ECE           0.016  0.063 (+0.047)"
    assert lines[2].endswith("0.880 (+0.000)")
    assert len(lines) == 5
    assert result.stderr == ''

    assert json.loads(out.read_text())['deltas']['miou'] == pytest.approx(-0.163)
    assert csv_path.read_text().splitlines()[0] == 'metric,baseline,shifted,delta'


def test_compare_warns_on_different_weights(runner, tmp_path):
    a, b = write_reports(tmp_path, make_report(0.7, 0.02, 0.9, 0.8),
                         make_report(0.7, 0.02, 0.9, 0.8, weights=Weights(2, 1, 1, 1)))
    result = invoke(runner, 'compare', a, b)
    assert result.exit_code == 0
    assert 'warning: weights differ' in result.stderr


def test_compare_rejects_other_schema(runner, tmp_path):
    a, b = write_reports(tmp_path, make_report(0.7, 0.02, 0.9, 0.8), make_report(0.6, 0.02, 0.9, 0.8))
    document = json.loads(b.read_text())
    document['schema_version'] = 2
    b.write_text(json.dumps(document))

    result = invoke(runner, 'compare', a, b)
    assert result.exit_code == 2
    assert 'schema_version' in result.stderr


def test_compare_rejects_non_numeric_component(runner, tmp_path):
    a, b = write_reports(tmp_path, make_report(0.7, 0.02, 0.9, 0.8), make_report(0.6, 0.02, 0.9, 0.8))
    document = json.loads(b.read_text())
    document['components']['miou'] = 'n/a'
    b.write_text(json.dumps(document))

    result = invoke(runner, 'compare', a, b)
    assert result.exit_code == 2
    assert 'malformed' in result.stderr


# ============================================
# diagram, synth, validate
# ============================================

def test_diagram_of_near_perfect_data(runner, near_perfect_manifest, tmp_path):
    out = tmp_path / 'diagram.csv'
    result = invoke(runner, 'diagram', '--manifest', near_perfect_manifest, '--out', out)

    assert result.exit_code == 0, result.stderr
    assert result.stdout.strip() == "1 of 15 bins populated, ECE 0.000"
    with out.open(newline='') as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 15
    assert [row['count'] for row in rows if row['count'] != '0'] == ['192']
    assert rows[14]['accuracy'] == '1.0'


def test_synth_is_byte_for_byte_deterministic(runner, tmp_path):
    spec = tmp_path / 'spec.json'
    spec.write_text(json.dumps({
        'num_classes': 4, 'height': 8, 'width': 8, 'num_images': 3, 'target_accuracy': 0.8,
        'confidence_bias': 0.0, 'error_entropy_mode': 'high', 'seed': 11
    }))

    for name in ('one', 'two'):
        result = invoke(runner, 'synth', '--spec', spec, '--out', tmp_path / name)
        assert result.exit_code == 0, result.stderr

    def snapshot(root):
        return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob('*')) if p.is_file()}

    first, second = snapshot(tmp_path / 'one'), snapshot(tmp_path / 'two')
    assert len(first) == 7
    assert first == second


def test_synth_rejects_bad_spec(runner, tmp_path):
    spec = tmp_path / 'spec.json'
    spec.write_text(json.dumps({'num_classes': 4, 'height': 8}))
    result = invoke(runner, 'synth', '--spec', spec, '--out', tmp_path / 'out')
    assert result.exit_code == 2


def test_validate_ok(runner, near_perfect_manifest):
    result = invoke(runner, 'validate', '--manifest', near_perfect_manifest)
    assert result.exit_code == 0
    assert result.stdout.strip() == 'OK'


def test_validate_names_file_and_pixel(runner, tmp_path):
    pairs = list(near_perfect_pairs(2))
    probs, labels = pairs[1]
    labels = labels.copy()
    labels[5, 6] = 9
    path = write_manifest_dir(tmp_path, [pairs[0], (probs, labels)], 4)

    result = invoke(runner, 'validate', '--manifest', path)
    assert result.exit_code == 3
    assert 'img_001.npy' in result.stdout
    assert 'pixel (5, 6)' in result.stdout


# ============================================
# rss and help
# ============================================

def test_rss_from_components(runner):
    result = invoke(runner, 'rss', '--miou', 0.788, '--ece', 0.020, '--p-acc-cer', 0.926, '--p-unc-inacc', 0.794)
    assert result.exit_code == 0
    assert result.stdout.strip() == 'RSS 0.864'


def test_rss_with_preset(runner):
    result = invoke(runner, 'rss', '--miou', 0.788, '--ece', 0.020, '--p-acc-cer', 0.926,
                    '--p-unc-inacc', 0.794, '--weights', 'accuracy_first')
    assert result.stdout.strip() == 'RSS 0.837'


@pytest.mark.parametrize('extra', [['--weights', '1,1,1'], ['--weights', '1,-1,1,1'], ['--weights', 'heavy']])
def test_rss_invalid_weights(runner, extra):
    result = invoke(runner, 'rss', '--miou', 0.5, '--ece', 0.1, '--p-acc-cer', 0.5, '--p-unc-inacc', 0.5, *extra)
    assert result.exit_code == 2


def test_rss_component_out_of_range(runner):
    result = invoke(runner, 'rss', '--miou', 1.5, '--ece', 0.1, '--p-acc-cer', 0.5, '--p-unc-inacc', 0.5)
    assert result.exit_code == 2
    assert 'miou' in result.stderr


def test_help_documents_exit_codes(runner):
    result = invoke(runner, 'eval', '--help')
    assert result.exit_code == 0
    assert 'Exit codes' in result.stdout
    assert 'internal-consistency error' in result.stdout
