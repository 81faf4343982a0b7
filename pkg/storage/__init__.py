"""
Storage Package
File formats: .npy array containers and the dataset manifest
"""

from .array_store import read_array, read_header, write_array
from .manifest_store import Manifest, ManifestEntry, read_manifest, write_manifest

__all__ = [
    'read_array',
    'read_header',
    'write_array',
    'Manifest',
    'ManifestEntry',
    'read_manifest',
    'write_manifest'
]
