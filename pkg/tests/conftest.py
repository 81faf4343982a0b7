import numpy as np
import pytest

from backend.managers.synth_manager import SynthSpec, write_dataset


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def synth_manifest(tmp_path):
    """Factory: write a synthetic dataset under tmp_path and return its manifest path"""
    def _make(subdir='synth', **fields):
        params = dict(num_classes=4, height=16, width=16, num_images=5,
                      target_accuracy=0.8, confidence_bias=0.0,
                      error_entropy_mode='high', seed=7)
        params.update(fields)
        return write_dataset(SynthSpec(**params), tmp_path / subdir)
    return _make
