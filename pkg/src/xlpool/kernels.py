"""Precomputed linear kernels and a kernel ridge one-vs-rest classifier.

The classifier stands in for an SVM in desk-scale experiments on
descriptor Gram matrices: it is dependency-free, deterministic, and takes
the same precomputed-kernel inputs.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, ShapeError
from .pooling import Descriptor


def _stack(descriptors) -> np.ndarray:
    if isinstance(descriptors, np.ndarray):
        arr = descriptors
    else:
        rows = [d.values if isinstance(d, Descriptor) else np.asarray(d)
                for d in descriptors]
        arr = np.stack(rows)
    if arr.ndim != 2:
        raise ShapeError("descriptor set must stack into a 2-D (n, D) matrix")
    return arr.astype(np.float64)


def gram(a, b=None, block: int = 256, jobs: int = 1) -> np.ndarray:
    """Inner-product matrix K[i, j] = <a_i, b_j> in float64.

    Accepts (n, D) arrays or sequences of Descriptors / 1-D vectors.
    Computation is blocked over rows of ``a``; blocks may run on
    ``jobs`` threads, and totals are deterministic either way since each
    entry is an independent 64-bit dot product.
    """
    mat_a = _stack(a)
    mat_b = mat_a if b is None else _stack(b)
    if mat_a.shape[1] != mat_b.shape[1]:
        raise ShapeError(
            f"descriptor dims differ: {mat_a.shape[1]} vs {mat_b.shape[1]}")
    out = np.empty((mat_a.shape[0], mat_b.shape[0]), dtype=np.float64)
    starts = range(0, mat_a.shape[0], block)

    def fill(i0):
        out[i0:i0 + block] = mat_a[i0:i0 + block] @ mat_b.T

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(fill, starts))
    else:
        for i0 in starts:
            fill(i0)
    return out


@dataclass(frozen=True)
class RidgeOvrModel:
    """One-vs-rest kernel ridge model: dual coefficients per class."""

    classes: np.ndarray      # sorted class labels
    dual_coef: np.ndarray    # (n_train, n_classes) float64


def train_linear_ovr(k_train: np.ndarray, labels, ridge: float) -> RidgeOvrModel:
    """Fit one-vs-rest kernel ridge on a precomputed train x train kernel.

    Targets are +1 for the positive class and -1 otherwise; the dual
    coefficients solve (K + ridge*I) alpha = Y. ridge must be positive.
    """
    k = np.asarray(k_train, dtype=np.float64)
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise ShapeError(f"train kernel must be square, got {k.shape}")
    if not ridge > 0:
        raise ArgumentError(f"ridge must be > 0 (got {ridge}); the "
                            f"unregularized system may be singular")
    y = np.asarray(labels)
    if y.shape != (k.shape[0],):
        raise ShapeError(
            f"need one label per kernel row: {y.shape} vs {k.shape[0]}")
    classes = np.unique(y)
    if classes.size < 2:
        raise ArgumentError("labels must cover at least 2 classes")
    targets = np.where(y[:, None] == classes[None, :], 1.0, -1.0)
    dual = np.linalg.solve(k + ridge * np.eye(k.shape[0]), targets)
    return RidgeOvrModel(classes=classes, dual_coef=dual)


def predict(model: RidgeOvrModel, k_test_train: np.ndarray) -> np.ndarray:
    """Predict by argmax decision value; ties go to the lowest class."""
    k = np.asarray(k_test_train, dtype=np.float64)
    if k.ndim != 2 or k.shape[1] != model.dual_coef.shape[0]:
        raise ShapeError(
            f"test kernel must be (n_test, {model.dual_coef.shape[0]}), "
            f"got {k.shape}")
    decisions = k @ model.dual_coef
    return model.classes[np.argmax(decisions, axis=1)]
