import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from reprank.rating_core import RatingScale, RatingTable  # noqa: E402


def random_table(rng: np.random.Generator, max_users: int = 5, max_objects: int = 5, scale=None) -> RatingTable:
    """Small random table where every user and object has at least one rating."""
    scale = scale or RatingScale()
    nu = int(rng.integers(1, max_users + 1))
    no = int(rng.integers(1, max_objects + 1))
    mask = rng.random((nu, no)) < 0.6
    for i in range(nu):
        mask[i, rng.integers(no)] = True
    for a in range(no):
        mask[rng.integers(nu), a] = True
    u, o = np.nonzero(mask)
    vals = rng.uniform(scale.min, scale.max, len(u))
    # sprinkle exact ties and constant rows
    vals[rng.random(len(u)) < 0.2] = scale.max
    return RatingTable.from_arrays(nu, no, u, o, vals, scale)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
