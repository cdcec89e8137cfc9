from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import InvalidInputError


def count_local_peaks(values: Sequence) -> int:
    """Number of strict interior local maxima in a decision-value trajectory.

    Endpoints and plateaus never count.

    >>> count_local_peaks([0.2, 0.6, 0.4])
    1
    """
    values = list(values)
    if not values:
        raise InvalidInputError("empty trajectory")
    return sum(
        1
        for i in range(1, len(values) - 1)
        if values[i] > values[i - 1] and values[i] > values[i + 1]
    )


def count_local_peaks_rows(values: np.ndarray) -> np.ndarray:
    """Row-wise :func:`count_local_peaks` for a 2-D array of trajectories."""
    if values.shape[1] < 3:
        return np.zeros(values.shape[0], dtype=np.int64)
    mid = values[:, 1:-1]
    return ((mid > values[:, :-2]) & (mid > values[:, 2:])).sum(axis=1)
