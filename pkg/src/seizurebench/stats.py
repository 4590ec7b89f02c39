"""Small numeric helpers shared by the dataset and preprocessing code."""

import numpy as np


def quantile_sorted(sorted_values: np.ndarray, q: float) -> np.ndarray:
    """Linear-interpolated quantile of data already sorted along axis 0.

    The quantile sits at fractional position ``q * (n - 1)`` and is
    interpolated between the two neighbouring order statistics. Works
    column-wise on 2-D input.
    """
    s = np.asarray(sorted_values, dtype=np.float64)
    n = s.shape[0]
    if n == 0:
        raise ValueError("quantile of an empty sequence")
    pos = q * (n - 1)
    lo = int(np.floor(pos))
    hi = min(lo + 1, n - 1)
    frac = pos - lo
    if frac == 0.0:
        return s[lo].copy() if s.ndim > 1 else np.float64(s[lo])
    return s[lo] + (s[hi] - s[lo]) * frac


def quantile(values, q: float) -> np.ndarray:
    """Column-wise linear-interpolated quantile (sorts a copy first)."""
    return quantile_sorted(np.sort(np.asarray(values, dtype=np.float64), axis=0), q)
