"""
Manifest Store Module
Reads and writes the dataset manifest JSON

Manifest schema (version 1):
    {
      "schema_version": 1,
      "num_classes": 19,
      "ignore_index": 255,          # optional, default 255
      "renormalize": false,         # optional, default false
      "entries": [
        {"image_id": "...", "prediction_path": "...", "label_path": "..."}
      ]
    }

Relative paths are resolved against the manifest's directory.
"""

import json
from pathlib import Path
from typing import Dict, List, Optional

from config import EVAL_CONFIG
from backend.utils.validators import LoadError, validate_manifest_input

MANIFEST_SCHEMA_VERSION = 1


class ManifestEntry:
    """One prediction / label pair"""

    def __init__(self, image_id: str, prediction_path: Path, label_path: Path):
        self.image_id = image_id
        self.prediction_path = Path(prediction_path)
        self.label_path = Path(label_path)

    def to_dict(self, relative_to: Optional[Path] = None) -> Dict:
        def _render(path: Path) -> str:
            if relative_to is not None:
                try:
                    return path.relative_to(relative_to).as_posix()
                except ValueError:
                    pass
            return str(path)

        return {
            'image_id': self.image_id,
            'prediction_path': _render(self.prediction_path),
            'label_path': _render(self.label_path)
        }

    def __repr__(self) -> str:
        return f"ManifestEntry(image_id={self.image_id!r})"


class Manifest:
    """
    Validated dataset description: class count, ignore index and entries
    """

    def __init__(self, num_classes: int, entries: List[ManifestEntry],
                 ignore_index: Optional[int] = None, renormalize: bool = False,
                 path: Optional[Path] = None):
        self._num_classes = int(num_classes)
        self._entries = list(entries)
        self._ignore_index = EVAL_CONFIG['ignore_index'] if ignore_index is None else int(ignore_index)
        self._renormalize = bool(renormalize)
        self._path = Path(path) if path is not None else None

    # Getters
    @property
    def num_classes(self) -> int:
        return self._num_classes

    @property
    def entries(self) -> List[ManifestEntry]:
        return list(self._entries)

    @property
    def ignore_index(self) -> int:
        return self._ignore_index

    @property
    def renormalize(self) -> bool:
        return self._renormalize

    @property
    def path(self) -> Optional[Path]:
        return self._path

    def __len__(self) -> int:
        return len(self._entries)

    def to_dict(self) -> Dict:
        base = self._path.parent if self._path is not None else None
        return {
            'schema_version': MANIFEST_SCHEMA_VERSION,
            'num_classes': self._num_classes,
            'ignore_index': self._ignore_index,
            'renormalize': self._renormalize,
            'entries': [entry.to_dict(relative_to=base) for entry in self._entries]
        }

    def __repr__(self) -> str:
        return f"Manifest(classes={self._num_classes}, entries={len(self._entries)})"


def read_manifest(path: Path) -> Manifest:
    """
    Load and validate a manifest file

    Args:
        path: Manifest JSON file
    Returns:
        Manifest with absolute entry paths
    Raises:
        LoadError: if the file is missing, is not JSON, or violates the schema
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise LoadError(f"manifest not found: {path}")
    except json.JSONDecodeError as e:
        raise LoadError(f"manifest {path} is not valid JSON: {e}")

    version = data.get('schema_version', MANIFEST_SCHEMA_VERSION) if isinstance(data, dict) else None
    if version != MANIFEST_SCHEMA_VERSION:
        raise LoadError(f"manifest {path}: unsupported schema_version {version!r}")

    is_valid, errors = validate_manifest_input(data)
    if not is_valid:
        details = '; '.join(f"{key}: {message}" for key, message in errors.items())
        raise LoadError(f"manifest {path} is invalid: {details}")

    base = path.resolve().parent
    entries = [
        ManifestEntry(
            image_id=entry['image_id'],
            prediction_path=base / entry['prediction_path'],
            label_path=base / entry['label_path']
        )
        for entry in data['entries']
    ]

    return Manifest(
        num_classes=data['num_classes'],
        entries=entries,
        ignore_index=data.get('ignore_index', 255),
        renormalize=data.get('renormalize', False),
        path=path.resolve()
    )


def write_manifest(path: Path, manifest: Manifest) -> None:
    """Write a manifest with entry paths relative to its own directory"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    base = path.resolve().parent
    document = manifest.to_dict()
    document['entries'] = [entry.to_dict(relative_to=base) for entry in manifest.entries]
    path.write_text(json.dumps(document, indent=2) + '\n')
