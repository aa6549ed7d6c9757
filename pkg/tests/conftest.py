import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from multisc.panel import DesignSplit


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_split(rng, t0=8, m=2, n=3, t1=2, scale=1.0):
    """Small random design with everything finite and generic."""
    return DesignSplit(
        y_pre=scale * rng.standard_normal((t0, m)),
        x_pre=scale * rng.standard_normal((t0, n)),
        y_post=scale * rng.standard_normal((t1, m)),
        x_post=scale * rng.standard_normal((t1, n)),
        m=m,
        n=n,
    )
