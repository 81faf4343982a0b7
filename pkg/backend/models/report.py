"""
Report Models
RSS weights, the serializable metric report and run-to-run comparisons
"""

import csv
import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from config import REPORT_CONFIG
from backend.models.accumulators import CalibrationBins, UncertaintyCounts
from backend.utils.validators import ValidationError, parse_weights, validate_weights

# Display order of the five reported metrics
METRIC_NAMES = ['miou', 'ece', 'p_acc_given_cer', 'p_unc_given_inacc', 'rss']

# ECE is the only metric where a decrease is an improvement
HIGHER_IS_BETTER = {
    'miou': True,
    'ece': False,
    'p_acc_given_cer': True,
    'p_unc_given_inacc': True,
    'rss': True
}

METRIC_LABELS = {
    'miou': 'mIoU',
    'ece': 'ECE',
    'p_acc_given_cer': 'p(acc|cer)',
    'p_unc_given_inacc': 'p(unc|inacc)',
    'rss': 'RSS'
}

REPORT_CSV_COLUMNS = ['name'] + METRIC_NAMES + ['pixel_count']


class Weights:
    """
    Application-specific weights for (mIoU, ECE, p(acc|cer), p(unc|inacc))
    """

    FIELDS = ('w_miou', 'w_ece', 'w_pac', 'w_pui')

    def __init__(self, w_miou: float = 1.0, w_ece: float = 1.0,
                 w_pac: float = 1.0, w_pui: float = 1.0):
        values = tuple(float(v) for v in (w_miou, w_ece, w_pac, w_pui))
        is_valid, error = validate_weights(values)
        if not is_valid:
            raise ValidationError(error)
        self._values = values

    @classmethod
    def parse(cls, text: str) -> 'Weights':
        """Build from "w1,w2,w3,w4" or a preset name"""
        return cls(*parse_weights(text))

    # Getters
    @property
    def w_miou(self) -> float:
        return self._values[0]

    @property
    def w_ece(self) -> float:
        return self._values[1]

    @property
    def w_pac(self) -> float:
        return self._values[2]

    @property
    def w_pui(self) -> float:
        return self._values[3]

    def as_tuple(self):
        return self._values

    def scaled(self, factor: float) -> 'Weights':
        return Weights(*(w * factor for w in self._values))

    def to_dict(self) -> Dict:
        return dict(zip(self.FIELDS, self._values))

    @classmethod
    def from_dict(cls, data: Dict) -> 'Weights':
        return cls(*(data[name] for name in cls.FIELDS))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Weights):
            return NotImplemented
        return self._values == other._values

    def __hash__(self) -> int:
        return hash(self._values)

    def __str__(self) -> str:
        return "Weights({:g}, {:g}, {:g}, {:g})".format(*self._values)

    def __repr__(self) -> str:
        return self.__str__()


class MetricReport:
    """
    The four component metrics, RSS and everything needed to recompute RSS
    """

    def __init__(
        self,
        miou: float,
        ece: float,
        p_acc_given_cer: float,
        p_unc_given_inacc: float,
        rss: float,
        weights: Weights,
        num_bins: int,
        per_class_iou: Sequence[Optional[float]],
        pixel_count: int,
        num_present_classes: Optional[int] = None,
        flags: Optional[Dict[str, bool]] = None,
        uncertainty: Optional[UncertaintyCounts] = None,
        bins: Optional[CalibrationBins] = None,
        name: str = '',
        manifest_path: str = '',
        timestamp: Optional[str] = None,
        image_count: int = 0
    ):
        """
        Initialize MetricReport object

        Args:
            miou: Mean IoU over present classes
            ece: Expected calibration error
            p_acc_given_cer: p(acc|cer)
            p_unc_given_inacc: p(unc|inacc)
            rss: Weighted harmonic mean of the four components
            weights: Weights used for rss
            num_bins: Calibration bin count used for ece
            per_class_iou: IoU per class, None for classes absent from both sets
            pixel_count: Number of evaluated (non-ignored) pixels
            num_present_classes: Classes that entered the mean
            flags: Degeneracy flags of the conditional probabilities
            uncertainty: Raw uncertainty tallies
            bins: Raw calibration bins
            name: Run name
            manifest_path: Manifest the run evaluated
            timestamp: ISO-8601 creation time (UTC); defaults to now
            image_count: Number of images evaluated
        """
        self._miou = float(miou)
        self._ece = float(ece)
        self._p_acc_given_cer = float(p_acc_given_cer)
        self._p_unc_given_inacc = float(p_unc_given_inacc)
        self._rss = float(rss)
        self._weights = weights
        self._num_bins = int(num_bins)
        self._per_class_iou = [None if v is None else float(v) for v in per_class_iou]
        self._pixel_count = int(pixel_count)
        if num_present_classes is None:
            num_present_classes = sum(v is not None for v in self._per_class_iou)
        self._num_present_classes = int(num_present_classes)
        self._flags = dict(flags or {})
        self._uncertainty = uncertainty
        self._bins = bins
        self._name = name
        self._manifest_path = manifest_path
        self._timestamp = timestamp or datetime.now(timezone.utc).isoformat(timespec='seconds')
        self._image_count = int(image_count)

    # Getters
    @property
    def miou(self) -> float:
        return self._miou

    @property
    def ece(self) -> float:
        return self._ece

    @property
    def p_acc_given_cer(self) -> float:
        return self._p_acc_given_cer

    @property
    def p_unc_given_inacc(self) -> float:
        return self._p_unc_given_inacc

    @property
    def rss(self) -> float:
        return self._rss

    @property
    def weights(self) -> Weights:
        return self._weights

    @property
    def num_bins(self) -> int:
        return self._num_bins

    @property
    def per_class_iou(self) -> List[Optional[float]]:
        return list(self._per_class_iou)

    @property
    def num_present_classes(self) -> int:
        return self._num_present_classes

    @property
    def pixel_count(self) -> int:
        return self._pixel_count

    @property
    def flags(self) -> Dict[str, bool]:
        return dict(self._flags)

    @property
    def uncertainty(self) -> Optional[UncertaintyCounts]:
        return self._uncertainty

    @property
    def bins(self) -> Optional[CalibrationBins]:
        return self._bins

    @property
    def name(self) -> str:
        return self._name

    @property
    def manifest_path(self) -> str:
        return self._manifest_path

    @property
    def timestamp(self) -> str:
        return self._timestamp

    @property
    def image_count(self) -> int:
        return self._image_count

    # Methods
    def metric(self, name: str) -> float:
        """Look up one of METRIC_NAMES by name"""
        if name not in METRIC_NAMES:
            raise ValidationError(f"unknown metric '{name}'")
        return getattr(self, name)

    def components(self) -> Dict[str, float]:
        return {
            'miou': self._miou,
            'ece': self._ece,
            'p_acc_given_cer': self._p_acc_given_cer,
            'p_unc_given_inacc': self._p_unc_given_inacc
        }

    def summary_line(self, decimals: Optional[int] = None) -> str:
        """
        One parseable line with the five metrics; '*' marks a degenerate value

        Returns:
            e.g. "mIoU 0.812 | ECE 0.021 | p(acc|cer) 0.930 | p(unc|inacc) 0.701 | RSS 0.842"
        """
        decimals = REPORT_CONFIG['display_decimals'] if decimals is None else decimals
        parts = []
        for name in METRIC_NAMES:
            marker = '*' if self._flags.get(f'{name}_degenerate') else ''
            parts.append(f"{METRIC_LABELS[name]} {self.metric(name):.{decimals}f}{marker}")
        return ' | '.join(parts)

    def to_dict(self) -> Dict:
        """Convert report to its versioned JSON document"""
        accumulators = {}
        if self._uncertainty is not None:
            accumulators['uncertainty'] = self._uncertainty.to_dict()
        if self._bins is not None:
            accumulators['bins'] = self._bins.to_dict()

        return {
            'schema_version': REPORT_CONFIG['schema_version'],
            'components': self.components(),
            'rss': self._rss,
            'weights': self._weights.to_dict(),
            'num_bins': self._num_bins,
            'per_class_iou': list(self._per_class_iou),
            'num_present_classes': self._num_present_classes,
            'flags': dict(self._flags),
            'pixel_count': self._pixel_count,
            'accumulators': accumulators,
            'metadata': {
                'name': self._name,
                'manifest_path': self._manifest_path,
                'timestamp': self._timestamp,
                'image_count': self._image_count
            }
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'MetricReport':
        """
        Create MetricReport object from its JSON document

        Args:
            data: Dictionary produced by to_dict
        Returns:
            MetricReport object
        Raises:
            ValidationError: on a schema version mismatch, missing keys or malformed values
        """
        version = data.get('schema_version') if isinstance(data, dict) else None
        if version != REPORT_CONFIG['schema_version']:
            raise ValidationError(
                f"unsupported report schema_version {version!r} "
                f"(expected {REPORT_CONFIG['schema_version']})"
            )

        try:
            components = data['components']
            metadata = data.get('metadata', {})
            accumulators = data.get('accumulators', {})
            return cls(
                miou=components['miou'],
                ece=components['ece'],
                p_acc_given_cer=components['p_acc_given_cer'],
                p_unc_given_inacc=components['p_unc_given_inacc'],
                rss=data['rss'],
                weights=Weights.from_dict(data['weights']),
                num_bins=data['num_bins'],
                per_class_iou=data['per_class_iou'],
                pixel_count=data['pixel_count'],
                num_present_classes=data.get('num_present_classes'),
                flags=data.get('flags', {}),
                uncertainty=(UncertaintyCounts.from_dict(accumulators['uncertainty'])
                             if 'uncertainty' in accumulators else None),
                bins=(CalibrationBins.from_dict(accumulators['bins'])
                      if 'bins' in accumulators else None),
                name=metadata.get('name', ''),
                manifest_path=metadata.get('manifest_path', ''),
                timestamp=metadata.get('timestamp'),
                image_count=metadata.get('image_count', 0)
            )
        except KeyError as e:
            raise ValidationError(f"report document is missing a required field: {e}")
        except (TypeError, ValueError) as e:
            raise ValidationError(f"report document has a malformed field: {e}")

    def save(self, path: Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2) + '\n')

    def __str__(self) -> str:
        return f"MetricReport(name={self._name!r}, rss={self._rss:.3f}, pixels={self._pixel_count})"

    def __repr__(self) -> str:
        return self.__str__()


def load_report(path: Path) -> MetricReport:
    """
    Read a report JSON file

    Raises:
        ValidationError: if the file is missing, not JSON, or not a report
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise ValidationError(f"report file not found: {path}")
    except json.JSONDecodeError as e:
        raise ValidationError(f"report file {path} is not valid JSON: {e}")
    return MetricReport.from_dict(data)


def write_reports_csv(reports: Sequence[MetricReport], path: Path) -> None:
    """Component table, one row per report, full precision"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', newline='') as f:
        writer = csv.DictWriter(f, fieldnames=REPORT_CSV_COLUMNS)
        writer.writeheader()
        for report in reports:
            row = {name: report.metric(name) for name in METRIC_NAMES}
            row.update(name=report.name, pixel_count=report.pixel_count)
            writer.writerow(row)


class RunComparison:
    """
    Signed differences (shifted - baseline) between two reports
    """

    def __init__(self, baseline: MetricReport, shifted: MetricReport,
                 deltas: Dict[str, float], warnings: Optional[List[str]] = None):
        self._baseline = baseline
        self._shifted = shifted
        self._deltas = dict(deltas)
        self._warnings = list(warnings or [])

    # Getters
    @property
    def baseline(self) -> MetricReport:
        return self._baseline

    @property
    def shifted(self) -> MetricReport:
        return self._shifted

    @property
    def deltas(self) -> Dict[str, float]:
        return dict(self._deltas)

    @property
    def warnings(self) -> List[str]:
        return list(self._warnings)

    def delta(self, name: str) -> float:
        return self._deltas[name]

    def is_improvement(self, name: str) -> bool:
        """True when the change moves the metric in its better direction"""
        value = self._deltas[name]
        return value > 0 if HIGHER_IS_BETTER[name] else value < 0

    def format_cell(self, name: str, decimals: Optional[int] = None) -> str:
        """
        Format a metric as "shifted (delta)", e.g. "0.573 (-0.163)"
        """
        decimals = REPORT_CONFIG['display_decimals'] if decimals is None else decimals
        delta = round(self._deltas[name], decimals)
        if delta == 0:
            delta = 0.0
        return f"{self._shifted.metric(name):.{decimals}f} ({delta:+.{decimals}f})"

    def to_dict(self) -> Dict:
        return {
            'schema_version': REPORT_CONFIG['schema_version'],
            'deltas': dict(self._deltas),
            'warnings': list(self._warnings),
            'baseline': self._baseline.to_dict(),
            'shifted': self._shifted.to_dict()
        }

    def save(self, path: Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2) + '\n')

    def to_csv(self, path: Path) -> None:
        """Rows of metric, baseline, shifted, delta"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open('w', newline='') as f:
            writer = csv.writer(f)
            writer.writerow(['metric', 'baseline', 'shifted', 'delta'])
            for name in METRIC_NAMES:
                writer.writerow([name, self._baseline.metric(name),
                                 self._shifted.metric(name), self._deltas[name]])

    def __str__(self) -> str:
        return f"RunComparison(baseline={self._baseline.name!r}, shifted={self._shifted.name!r})"

    def __repr__(self) -> str:
        return self.__str__()
