"""Shared dataset builders for the test suite."""

from __future__ import annotations

import numpy as np

from detforest import Dataset


def duplicated_feature_dataset(copies_per_value: int = 3) -> Dataset:
    """Two identical informative features; labels separate cleanly at 2.5.

    Every split on feature 0 has an exact-tie twin on feature 1 with the
    identical partition, so tie-breaking by draw order changes the chosen
    feature but can never change any node's samples, counts or impurity.
    """
    values = np.repeat(np.array([1.0, 2.0, 3.0, 4.0]), copies_per_value)
    features = np.column_stack([values, values])
    labels = (values >= 3.0).astype(np.int64)
    return Dataset(features, labels, ["a", "b"])


def tiny_dataset(columns: list[list[float]], labels: list[int]) -> Dataset:
    """Dataset from feature columns (not rows) and labels, names f0, f1, ..."""
    features = np.column_stack([np.asarray(c, dtype=np.float64) for c in columns])
    names = [f"f{i}" for i in range(features.shape[1])]
    return Dataset(features, np.asarray(labels, dtype=np.int64), names)
