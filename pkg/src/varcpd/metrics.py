"""Evaluation of estimated change points against ground truth."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .model import ModelError


def hausdorff_scaled(est: Sequence[int], truth: Sequence[int], n: int) -> float:
    """Two-sided Hausdorff distance between point sets, divided by n.

    An empty estimate scores 1 by convention; an empty truth set is an
    error.  For non-empty subsets of [1, n] the value lies in [0, 1].
    """
    if len(truth) == 0:
        raise ModelError("truth change point set must be non-empty")
    if n < 1:
        raise ModelError(f"n must be positive, got {n}")
    if len(est) == 0:
        return 1.0
    a = np.asarray(est, dtype=np.float64)
    b = np.asarray(truth, dtype=np.float64)
    gaps = np.abs(a[:, None] - b[None, :])
    d = max(gaps.min(axis=1).max(), gaps.min(axis=0).max())
    return float(d) / n


def abs_k_error(est: Sequence[int], truth: Sequence[int]) -> int:
    """| |est| - |truth| |, the absolute error in the number of change points."""
    return abs(len(est) - len(truth))
