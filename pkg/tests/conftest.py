import time

import numpy as np
import pytest

from fuse3d import PointCloud, SyntheticSceneSpec, generate_scene

_SESSION_START = time.perf_counter()


@pytest.fixture(scope="session")
def session_start() -> float:
    return _SESSION_START


@pytest.fixture(scope="session")
def standard_scene():
    """The default clustered scene shared across study tests."""
    return generate_scene(SyntheticSceneSpec())


def make_cloud(rng: np.random.Generator, n: int, spread: float = 10.0) -> PointCloud:
    return PointCloud(rng.uniform(-spread, spread, size=(n, 3)))
