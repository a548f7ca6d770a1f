import numpy as np

from gtsim.partition import SearchSet


def make_set(probs, bin=1, fullness=0.5):
    """Hand-built SearchSet with items numbered 1..k (test helper)."""
    probs = np.asarray(probs, dtype=np.float64)
    total = float(probs.sum())
    return SearchSet(
        items=np.arange(1, probs.size + 1, dtype=np.int64),
        probs=probs,
        bin=bin,
        total_prob=total,
        full=total >= fullness,
    )
