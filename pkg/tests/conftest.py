import numpy as np
import pytest

from thermaldwell import BathParams, DriveField, SystemParams


@pytest.fixture
def rng():
    return np.random.default_rng(20241018)


@pytest.fixture
def reference():
    """g = omega = 1, delta = 0.5, lambda = i."""
    return SystemParams(omega=1.0, delta=0.5, g=1.0), DriveField(0.0, 1.0)


def random_params(rng):
    sys = SystemParams(
        omega=float(rng.uniform(0.1, 5.0)),
        delta=float(rng.uniform(0.01, 2.0)),
        g=float(rng.uniform(0.1, 3.0)),
    )
    drive = DriveField(float(rng.uniform(-3.0, 3.0)), float(rng.uniform(0.01, 3.0)))
    bath = BathParams(float(10.0 ** rng.uniform(-3, 3)) * sys.omega)
    return sys, bath, drive
