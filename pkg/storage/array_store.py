"""
Array Store Module
Reads and writes single-array .npy containers (format version 1.0)

Only the plain, C-ordered, little-endian layout is accepted; anything else
is a LoadError, never a silent conversion.
"""

from pathlib import Path
from typing import Iterable, Tuple

import numpy as np
from numpy.lib import format as npy_format

from backend.utils.validators import LoadError

PROBABILITY_DTYPES = ('<f4',)
LABEL_DTYPES = ('|u1', '<u2')


def read_header(path: Path) -> Tuple[Tuple[int, ...], np.dtype]:
    """
    Parse and check the header of a .npy file

    Args:
        path: File to inspect
    Returns:
        Tuple of (shape, dtype)
    Raises:
        LoadError: if the file is missing or the header is not a version 1.0 C-order array
    """
    path = Path(path)
    try:
        with path.open('rb') as f:
            version = npy_format.read_magic(f)
            if version != (1, 0):
                raise LoadError(f"{path}: unsupported .npy version {version[0]}.{version[1]} (expected 1.0)")
            shape, fortran_order, dtype = npy_format.read_array_header_1_0(f)
    except FileNotFoundError:
        raise LoadError(f"file not found: {path}")
    except ValueError as e:
        raise LoadError(f"{path}: not a valid .npy file ({e})")

    if fortran_order:
        raise LoadError(f"{path}: Fortran-ordered arrays are not supported, save with C order")

    return shape, dtype


def read_array(path: Path, allowed_dtypes: Iterable[str], rank: int) -> np.ndarray:
    """
    Load a .npy array after checking its dtype descriptor and rank

    Args:
        path: File to load
        allowed_dtypes: Accepted dtype descriptors, e.g. ('<f4',)
        rank: Required number of dimensions
    Returns:
        The array
    Raises:
        LoadError: on any dtype, rank or size deviation
    """
    shape, dtype = read_header(path)
    allowed = tuple(allowed_dtypes)

    if dtype.str not in allowed:
        raise LoadError(f"{path}: dtype {dtype.str} not accepted (expected one of {', '.join(allowed)})")

    if len(shape) != rank:
        raise LoadError(f"{path}: expected rank {rank}, got shape {shape}")

    if any(dim <= 0 for dim in shape):
        raise LoadError(f"{path}: every dimension must be positive, got shape {shape}")

    try:
        array = np.load(path, allow_pickle=False)
    except ValueError as e:
        raise LoadError(f"{path}: truncated or corrupt array data ({e})")

    return array


def write_array(path: Path, array: np.ndarray) -> None:
    """
    Write an array as a version 1.0 .npy container

    Args:
        path: Destination file; parent directories are created
        array: Array to store (written C-contiguous)
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('wb') as f:
        npy_format.write_array(f, np.ascontiguousarray(array), version=(1, 0), allow_pickle=False)
