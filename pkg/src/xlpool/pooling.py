"""Indicator-map pooling and cross-layer pooling.

Each feature map of the guide layer acts as a real-valued indicator map:
channel k of the output is the sum of local feature vectors weighted by
that map. The full descriptor is the channel-major concatenation, length
D_local * D_guide, which is also the flattened cross-layer outer-product
(Gram-style) matrix.

Sums are accumulated in float64 and rounded to float32 on output so the
result is insensitive to spatial permutation at the 1e-6 level.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SchemaError, ShapeError
from .tensor import FeatureTensor, LayerPair


@dataclass(frozen=True)
class Descriptor:
    """A pooled descriptor: ``channels`` contiguous subvectors of length
    ``channel_dim``, stored as one float32 vector."""

    values: np.ndarray
    channels: int
    channel_dim: int

    def __post_init__(self):
        v = self.values
        if not isinstance(v, np.ndarray) or v.ndim != 1 or v.dtype != np.float32:
            raise SchemaError("descriptor values must be a 1-D float32 array")
        if self.channels < 0 or self.channel_dim < 0:
            raise SchemaError("descriptor channel counts must be nonnegative")
        if v.size != self.channels * self.channel_dim:
            raise SchemaError(
                f"descriptor length {v.size} != channels {self.channels} "
                f"x channel_dim {self.channel_dim}")
        if not np.isfinite(v).all():
            raise SchemaError("descriptor contains non-finite values")
        v.flags.writeable = False

    @classmethod
    def from_matrix(cls, matrix) -> "Descriptor":
        """Build from a (channels, channel_dim) array, row k = channel k."""
        m = np.ascontiguousarray(matrix, dtype=np.float32)
        return cls(m.reshape(-1), m.shape[0], m.shape[1])

    def as_matrix(self) -> np.ndarray:
        """(channels, channel_dim) view; row k is subvector k."""
        return self.values.reshape(self.channels, self.channel_dim)

    def channel(self, k: int) -> np.ndarray:
        """View of subvector k, occupying [k*d, (k+1)*d)."""
        d = self.channel_dim
        return self.values[k * d:(k + 1) * d]


@dataclass(frozen=True)
class IndicatorMaps:
    """K pooling maps, one weight per spatial unit per map, shape (K, N)."""

    weights: np.ndarray

    def __post_init__(self):
        w = self.weights
        if not isinstance(w, np.ndarray) or w.ndim != 2 or w.dtype != np.float32:
            raise SchemaError("indicator weights must be a 2-D float32 array (K, N)")
        if not np.isfinite(w).all():
            raise SchemaError("indicator weights contain non-finite values")
        w.flags.writeable = False

    @classmethod
    def from_array(cls, array) -> "IndicatorMaps":
        return cls(np.ascontiguousarray(array, dtype=np.float32))

    @property
    def count(self) -> int:
        return self.weights.shape[0]

    @property
    def unit_count(self) -> int:
        return self.weights.shape[1]


def indicator_maps_from_guide(guide: FeatureTensor) -> IndicatorMaps:
    """One indicator map per guide feature map: map k weights unit i by
    the guide activation of filter k at unit i."""
    return IndicatorMaps.from_array(guide.units().T)


def pool_with_indicators(local: FeatureTensor, maps: IndicatorMaps) -> Descriptor:
    """Weighted sum-pooling: channel k = sum_i x_i * w_{k,i}."""
    if maps.unit_count != local.unit_count:
        raise ShapeError(
            f"indicator maps cover {maps.unit_count} units but the tensor "
            f"has {local.unit_count}")
    pooled = maps.weights.astype(np.float64) @ local.units().astype(np.float64)
    return Descriptor.from_matrix(pooled)


def cross_layer_pool(pair: LayerPair) -> Descriptor:
    """Pool local features with every guide feature map as weights.

    Channel k of the output is sum_i x_i * g_{i,k}; the stacked result is
    G^T X for unit matrices X (N, D_local) and G (N, D_guide), i.e. the
    cross-layer outer-product sum. Output length is always
    D_local * D_guide.
    """
    x = pair.local.units().astype(np.float64)
    g = pair.guide.units().astype(np.float64)
    return Descriptor.from_matrix(g.T @ x)


def cross_layer_pool_oracle(pair: LayerPair) -> Descriptor:
    """Reference implementation of cross_layer_pool as the literal
    unit/channel/dimension triple loop. Exists for equivalence testing;
    do not use on large tensors."""
    x_rows = pair.local.units().tolist()
    g_rows = pair.guide.units().tolist()
    d = pair.local.depth
    k_count = pair.guide.depth
    acc = [[0.0] * d for _ in range(k_count)]
    for i in range(len(x_rows)):
        xi = x_rows[i]
        gi = g_rows[i]
        for k in range(k_count):
            w = gi[k]
            row = acc[k]
            for dim in range(d):
                row[dim] += xi[dim] * w
    values = np.asarray(acc, dtype=np.float64).reshape(-1)
    return Descriptor(values.astype(np.float32), k_count, d)


def max_channel_pool(pair: LayerPair) -> Descriptor:
    """Variant replacing the channel sum with an elementwise max:
    channel k, dim j = max_i (x_i[j] * g_{i,k}). Same shape as
    cross_layer_pool output."""
    x = pair.local.units()
    g = pair.guide.units()
    out = np.empty((pair.guide.depth, pair.local.depth), dtype=np.float32)
    for k in range(pair.guide.depth):
        out[k] = (x * g[:, k:k + 1]).max(axis=0)
    return Descriptor.from_matrix(out)
