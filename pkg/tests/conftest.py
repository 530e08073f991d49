import numpy as np
import pytest

from odesfs.dataio import Dataset, ObservationMask, SparseWindow


def full_mask(m, d, missing_rate=0.0, seed=0):
    return ObservationMask(np.ones((m, d), dtype=bool), missing_rate, seed)


def window_from(values, observed=None, window_index=1, start_id=0):
    """Build a SparseWindow directly from a dense grid and optional mask."""
    values = np.asarray(values, dtype=float)
    if observed is None:
        observed = np.ones_like(values, dtype=bool)
    observed = np.asarray(observed, dtype=bool)
    vals = values.copy()
    vals[~observed] = np.nan
    ids = list(range(start_id, start_id + values.shape[1]))
    return SparseWindow(window_index, ids, vals, observed)


@pytest.fixture
def toy_dataset():
    rng = np.random.default_rng(42)
    values = rng.normal(size=(12, 4))
    labels = np.array([0, 1] * 6)
    return Dataset(values, labels)
