"""Shared fixtures: the 16-feature benchmark generator used across tests.

The benchmark mimics a preprocessed tabular dataset: four strong features
whose class means form a cycle so that rotating them lands each value just
past the next feature's decision threshold (a genuine, partially ambiguous
drift), four medium and four weak supporting features, and four label-free
noise features with distinct means (so rotating them changes the raw feature
distribution without touching anything a classifier uses).
"""

import numpy as np
import pytest

from driftbench.seeding import seed_for
from driftbench.synth import GaussianBlobSpec, sample_blobs

BENCH16_NEG = (
    0.26, 0.68, 0.40, 0.68,
    0.44, 0.56, 0.45, 0.57,
    0.47, 0.53, 0.47, 0.53,
    0.34, 0.66, 0.42, 0.58,
)
BENCH16_POS = (
    0.90, 0.04, 0.96, 0.12,
    0.56, 0.44, 0.57, 0.45,
    0.53, 0.47, 0.53, 0.47,
    0.34, 0.66, 0.42, 0.58,
)
BENCH16_SIGMA = 0.05
BENCH16_TOP = (0, 1, 2, 3)
BENCH16_BOTTOM = frozenset({12, 13, 14, 15})


def make_bench16(n_per_class=750, seed=0):
    """Balanced 16-feature two-class stream; 1500 rows at the default size."""
    return sample_blobs(
        [
            GaussianBlobSpec(BENCH16_NEG, BENCH16_SIGMA, n_per_class, -1),
            GaussianBlobSpec(BENCH16_POS, BENCH16_SIGMA, n_per_class, +1),
        ],
        seed_for(seed, "bench16"),
        feature_names=[f"f{i + 1:02d}" for i in range(16)],
    )


@pytest.fixture(scope="session")
def bench16():
    return make_bench16(750, 100)


@pytest.fixture(scope="session")
def blobs_1d():
    """Two separable 1-D blobs at 0.1 and 0.9, sigma 0.02, 200 per class."""
    rng = np.random.default_rng(7)
    lo = np.clip(rng.normal(0.1, 0.02, 200), 0, 1)
    hi = np.clip(rng.normal(0.9, 0.02, 200), 0, 1)
    X = np.concatenate([lo, hi]).reshape(-1, 1)
    y = np.array([-1] * 200 + [1] * 200)
    perm = rng.permutation(400)
    from driftbench.data import Dataset

    return Dataset(X[perm], y[perm])
