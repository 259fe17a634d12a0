import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import nnrw


def build_model(seed=0, n_layers=2, d=16, c_in=32, k=3, spike=0.40,
                spike_value=0.25, exotics=True):
    """Synthetic conv model with a digit-pair spike for embedding capacity.

    The base population is uniform over one decade with both signs, so its
    pairs stay below 50 and the spike at pair 50 always has an empty bin to
    its right.  A few exact dyadics, subnormals and zeros are sprinkled in
    to exercise bit-exactness and the exclusion machinery.
    """
    r = np.random.default_rng(seed)
    tensors, manifest = [], []
    for i in range(n_layers):
        w = r.uniform(0.10, 0.149, size=(d, c_in, k, k)).astype(np.float32)
        w *= r.choice([-1.0, 1.0], size=w.shape).astype(np.float32)
        flat = w.reshape(-1)
        idx = r.choice(flat.size, size=int(flat.size * spike), replace=False)
        flat[idx] = np.float32(spike_value)
        if exotics:
            exotic = np.array([0.0, -0.0, 1.4012984643e-45, -1.4012984643e-45,
                               2.8025969286e-45, 0.5, -0.125, 1.0],
                              dtype=np.float32)
            pos = r.choice(flat.size, size=exotic.size, replace=False)
            flat[pos] = exotic
        tensors.append(nnrw.WeightTensor(name=f"conv{i}.weight",
                                         shape=w.shape, data=flat))
        manifest.append(nnrw.LayerSpec(layer_index=i,
                                       weight_tensor=f"conv{i}.weight",
                                       stride=1, padding=1))
    return nnrw.ModelContainer(tensors=tensors, manifest=manifest)


@pytest.fixture
def toy_model():
    return build_model(seed=1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
