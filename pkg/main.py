"""
Main Application Entry Point
Command-line interface of the Segmentation Reliability Evaluator
"""

import logging
import sys
from functools import wraps
from pathlib import Path

import click

from config import BENCH_CONFIG, EVAL_CONFIG, LOGGING_CONFIG
from backend.managers.bench_manager import append_result, run_bench
from backend.managers.evaluation_manager import EvaluationManager
from backend.managers.ingest_manager import IngestManager
from backend.managers.synth_manager import SynthSpec, write_dataset
from backend.metrics.calibration import export_diagram
from backend.metrics.score import compare_runs, compute_rss
from backend.models.report import METRIC_LABELS, METRIC_NAMES, Weights, load_report, write_reports_csv
from backend.utils.validators import EvaluationError, ValidationError

logger = logging.getLogger(__name__)

EXIT_CODES_HELP = """
Exit codes:

\b
  0  success
  1  unexpected error
  2  usage error (bad arguments, invalid weights, mismatched inputs)
  3  load error (missing file, bad manifest, dtype/shape/range violation)
  4  internal-consistency error (accumulators disagree on the pixel count)
"""


# Error handling decorator
def exit_on_error(f):
    """Map evaluator exceptions to their documented exit codes"""
    @wraps(f)
    def decorated_function(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except EvaluationError as e:
            click.echo(f"error: {e}", err=True)
            sys.exit(e.exit_code)
        except click.ClickException:
            raise
        except Exception as e:
            logger.exception("Unexpected failure")
            click.echo(f"unexpected error: {e}", err=True)
            sys.exit(1)
    return decorated_function


def parse_weights_option(ctx, param, value):
    try:
        return Weights.parse(value)
    except ValidationError as e:
        raise click.BadParameter(str(e))


# Shared options
manifest_option = click.option('--manifest', required=True, type=click.Path(path_type=Path),
                               help='Dataset manifest JSON.')
bins_option = click.option('--bins', type=click.IntRange(min=1), default=EVAL_CONFIG['num_bins'],
                           show_default=True, help='Number of equal-width calibration bins.')
weights_option = click.option('--weights', default=EVAL_CONFIG['weights'], show_default=True,
                              callback=parse_weights_option,
                              help='RSS weights "w1,w2,w3,w4" for (mIoU, ECE, p(acc|cer), p(unc|inacc)) '
                                   'or a preset name (equal, accuracy_first).')
ignore_option = click.option('--ignore-index', type=click.IntRange(min=0), default=None,
                             help="Label value excluded from all metrics (overrides the manifest).")
jobs_option = click.option('--jobs', type=click.IntRange(min=0), default=None, envvar='RSS_JOBS',
                           show_envvar=True, help='Worker threads; 0 = one per CPU.')
renormalize_option = click.option('--renormalize', is_flag=True, default=False,
                                  help='Divide each pixel by its channel sum before validation. '
                                       'Does not turn logits into probabilities.')


def open_manifest(manifest: Path, ignore_index, renormalize: bool) -> IngestManager:
    return IngestManager.from_path(manifest, ignore_index=ignore_index,
                                   renormalize=True if renormalize else None)


@click.group(epilog=EXIT_CODES_HELP)
@click.option('--verbose', '-v', is_flag=True, help='Log at DEBUG level.')
def cli(verbose):
    """Evaluate segmentation predictions with the Reliable Segmentation Score (RSS)."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else LOGGING_CONFIG['level'],
        format=LOGGING_CONFIG['format'],
        stream=sys.stderr
    )


# ============================================
# Evaluation
# ============================================

@cli.command('eval', epilog=EXIT_CODES_HELP)
@manifest_option
@bins_option
@weights_option
@ignore_option
@click.option('--out', type=click.Path(path_type=Path), default=Path('report.json'),
              show_default=True, help='Report JSON destination.')
@jobs_option
@renormalize_option
@click.option('--name', default=None, help="Run name stored in the report (default: manifest directory name).")
@click.option('--csv', 'csv_path', type=click.Path(path_type=Path), default=None,
              help='Also write the component table as CSV.')
@click.option('--entropy-dir', type=click.Path(path_type=Path), default=None,
              help='Write a <image_id>_entropy.npy map per image here.')
@exit_on_error
def cmd_eval(manifest, bins, weights, ignore_index, out, jobs, renormalize, name, csv_path, entropy_dir):
    """Evaluate a manifest and print mIoU, ECE, p(acc|cer), p(unc|inacc) and RSS."""
    ingest = open_manifest(manifest, ignore_index, renormalize)
    manager = EvaluationManager(num_bins=bins, weights=weights, jobs=jobs, entropy_dir=entropy_dir)

    run_name = name if name is not None else manifest.resolve().parent.name
    report = manager.evaluate_manifest(ingest, name=run_name)

    report.save(out)
    logger.info("Report written to %s", out)
    if csv_path is not None:
        write_reports_csv([report], csv_path)

    click.echo(report.summary_line())
    if any(report.flags.values()):
        click.echo("* degenerate: no certain or no inaccurate pixels, value defined as 1.0")


@cli.command('compare', epilog=EXIT_CODES_HELP)
@click.argument('baseline', type=click.Path(path_type=Path))
@click.argument('shifted', type=click.Path(path_type=Path))
@click.option('--out', type=click.Path(path_type=Path), default=None, help='Comparison JSON destination.')
@click.option('--csv', 'csv_path', type=click.Path(path_type=Path), default=None,
              help='Write metric, baseline, shifted, delta rows as CSV.')
@click.option('--no-color', is_flag=True, default=False, help='Do not colour the deltas.')
@exit_on_error
def cmd_compare(baseline, shifted, out, csv_path, no_color):
    """Show each metric of SHIFTED as "value (delta)" against BASELINE."""
    comparison = compare_runs(load_report(baseline), load_report(shifted))

    for warning in comparison.warnings:
        click.echo(f"warning: {warning}", err=True)

    for name in METRIC_NAMES:
        cell = comparison.format_cell(name)
        if not no_color and comparison.delta(name) != 0:
            cell = click.style(cell, fg='green' if comparison.is_improvement(name) else 'red')
        click.echo(f"{METRIC_LABELS[name]:<13} {comparison.baseline.metric(name):.3f}  {cell}")

    if out is not None:
        comparison.save(out)
    if csv_path is not None:
        comparison.to_csv(csv_path)


@cli.command('diagram', epilog=EXIT_CODES_HELP)
@manifest_option
@bins_option
@ignore_option
@click.option('--out', type=click.Path(path_type=Path), required=True, help='Reliability diagram CSV.')
@jobs_option
@renormalize_option
@exit_on_error
def cmd_diagram(manifest, bins, ignore_index, out, jobs, renormalize):
    """Write the reliability diagram (per-bin confidence vs. accuracy) as CSV."""
    ingest = open_manifest(manifest, ignore_index, renormalize)
    report = EvaluationManager(num_bins=bins, jobs=jobs).evaluate_manifest(ingest)

    diagram = export_diagram(report.bins)
    diagram.to_csv(out)
    click.echo(f"{len(diagram.present_rows())} of {bins} bins populated, ECE {report.ece:.3f}")


# ============================================
# Data
# ============================================

@cli.command('synth', epilog=EXIT_CODES_HELP)
@click.option('--spec', 'spec_path', required=True, type=click.Path(path_type=Path),
              help='Synthetic dataset spec JSON.')
@click.option('--out', type=click.Path(path_type=Path), required=True, help='Output directory.')
@exit_on_error
def cmd_synth(spec_path, out):
    """Generate a deterministic synthetic dataset (arrays + manifest)."""
    spec = SynthSpec.load(spec_path)
    manifest_path = write_dataset(spec, out)
    click.echo(f"wrote {spec.num_images} images, manifest {manifest_path}")


@cli.command('validate', epilog=EXIT_CODES_HELP)
@manifest_option
@ignore_option
@renormalize_option
@exit_on_error
def cmd_validate(manifest, ignore_index, renormalize):
    """Check that every entry of a manifest loads; print the first error or OK."""
    ingest = open_manifest(manifest, ignore_index, renormalize)
    error = ingest.validate()
    if error is not None:
        click.echo(error)
        sys.exit(3)
    click.echo("OK")


# ============================================
# Scoring and Benchmarks
# ============================================

@cli.command('rss', epilog=EXIT_CODES_HELP)
@click.option('--miou', type=float, required=True)
@click.option('--ece', type=float, required=True)
@click.option('--p-acc-cer', type=float, required=True, help='p(acc|cer)')
@click.option('--p-unc-inacc', type=float, required=True, help='p(unc|inacc)')
@weights_option
@exit_on_error
def cmd_rss(miou, ece, p_acc_cer, p_unc_inacc, weights):
    """Compose RSS from already known component values."""
    click.echo(f"RSS {compute_rss(miou, ece, p_acc_cer, p_unc_inacc, weights):.3f}")


@cli.command('bench', epilog=EXIT_CODES_HELP)
@click.option('--classes', type=click.IntRange(min=2), default=19, show_default=True)
@click.option('--height', type=click.IntRange(min=1), default=1024, show_default=True)
@click.option('--width', type=click.IntRange(min=1), default=2048, show_default=True)
@click.option('--images', type=click.IntRange(min=1), default=10, show_default=True)
@jobs_option
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--log', 'log_file', type=click.Path(path_type=Path), default=None,
              help=f"CSV log to append to (default {BENCH_CONFIG['log_file']}).")
@exit_on_error
def cmd_bench(classes, height, width, images, jobs, seed, log_file):
    """Time the evaluation pipeline on in-memory synthetic images."""
    result = run_bench((classes, height, width), images, jobs=1 if jobs is None else jobs, seed=seed)
    path = append_result(result, log_file)
    click.echo(result.summary_line())
    click.echo(f"appended to {path}")


if __name__ == '__main__':
    cli()
