"""Activation tensors and the spatial-unit view used by all pooling ops.

A convolutional layer's activations are held as an H x W x D float32 grid,
row-major with depth innermost, so the feature vector of one spatial unit
is a contiguous D-slice. Tensors are immutable after construction and safe
to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import PairingError, SchemaError
from .npyio import read_npy, write_npy


@dataclass(frozen=True)
class FeatureTensor:
    """An H x W x D activation grid with D-dimensional unit feature vectors."""

    data: np.ndarray
    nonneg: bool = field(default=False, compare=False)

    def __post_init__(self):
        arr = self.data
        if not isinstance(arr, np.ndarray) or arr.ndim != 3:
            raise SchemaError("tensor data must be a 3-D array (H, W, D)")
        if arr.dtype != np.float32:
            raise SchemaError(f"tensor dtype must be float32, got {arr.dtype}")
        if not arr.flags.c_contiguous:
            raise SchemaError("tensor data must be C-contiguous (depth innermost)")
        if min(arr.shape) < 1:
            raise SchemaError(f"tensor dimensions must be positive, got {arr.shape}")
        if not np.isfinite(arr).all():
            raise SchemaError("tensor contains non-finite values (NaN or Inf)")
        if self.nonneg and (arr < 0).any():
            raise SchemaError("tensor flagged nonneg contains negative activations")
        arr.flags.writeable = False

    @classmethod
    def from_array(cls, array, nonneg: bool = False) -> "FeatureTensor":
        """Build a tensor from any array-like, casting to float32 C-order."""
        return cls(np.ascontiguousarray(array, dtype=np.float32), nonneg=nonneg)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def depth(self) -> int:
        return self.data.shape[2]

    @property
    def unit_count(self) -> int:
        """Number of spatial units, height * width."""
        return self.data.shape[0] * self.data.shape[1]

    def units(self) -> np.ndarray:
        """(N, D) view of the unit feature vectors, row-major spatial order.

        Row i is the depth slice at spatial unit i; no data is copied.
        """
        return self.data.reshape(self.unit_count, self.depth)


@dataclass(frozen=True)
class LayerPair:
    """Two layers over the same spatial grid: ``local`` supplies the feature
    vectors, ``guide`` supplies the pooling weights."""

    local: FeatureTensor
    guide: FeatureTensor

    def __post_init__(self):
        ls, gs = self.local.data.shape, self.guide.data.shape
        if ls[:2] != gs[:2]:
            raise PairingError(
                f"spatial grids differ: local is {ls[0]}x{ls[1]} "
                f"but guide is {gs[0]}x{gs[1]}")


def pair_layers(local: FeatureTensor, guide: FeatureTensor) -> LayerPair:
    """Pair two tensors, requiring identical H and W. Depths may differ."""
    return LayerPair(local=local, guide=guide)


def load_tensor(path, nonneg: bool = False) -> FeatureTensor:
    """Load a float32 NPY file with shape [H, W, D] as a FeatureTensor."""
    arr = read_npy(path)
    if arr.ndim != 3:
        raise SchemaError(f"{path}: tensor file must have 3 dimensions "
                          f"[H, W, D], got {arr.ndim}")
    return FeatureTensor(arr, nonneg=nonneg)


def save_tensor(path, tensor: FeatureTensor) -> None:
    """Write a tensor back to NPY; load_tensor round-trips bit-exactly."""
    write_npy(path, tensor.data)
