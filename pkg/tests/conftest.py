import time

import pytest

from datactrl import neighbors, systems
from datactrl.lipschitz import estimate_all


@pytest.fixture(scope="session")
def ms_dataset():
    """Benchmark-scale mass-spring dataset shared across the suite."""
    spec = systems.make_system("mass_spring")
    return systems.sample_dataset(spec, systems.SamplingConfig(n_samples=5000, seed=0))


@pytest.fixture(scope="session")
def ms_index(ms_dataset):
    return neighbors.build(ms_dataset.xs)


@pytest.fixture(scope="session")
def ms_lipschitz(ms_dataset, ms_index):
    """(estimates, wall_seconds) for the benchmark-scale estimation run."""
    t0 = time.perf_counter()
    est = estimate_all(ms_dataset, 0.2, index=ms_index)
    return est, time.perf_counter() - t0


@pytest.fixture(scope="session")
def ms_small():
    """A 400-sample mass-spring dataset for cheaper exactness checks."""
    spec = systems.make_system("mass_spring")
    return systems.sample_dataset(spec, systems.SamplingConfig(n_samples=400, seed=3))
