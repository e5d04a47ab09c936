"""Sign-quantized descriptors packed two bits per dimension.

Encoding per trit: 00 = 0, 01 = +1, 11 = -1; 10 is reserved and never
produced. The low bit is therefore a nonzero mask and the high bit a
negative-sign flag. Trit j lives in byte j // 4 at bit offset 2 * (j % 4),
and payloads are zero-padded to whole bytes, giving ceil(len / 4) bytes.

For similarity the payload is expanded once into two per-channel bitplanes
(mask and sign) packed into uint64 words, so channel dot products reduce
to AND/XOR plus popcount.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import SchemaError, ShapeError

_RESERVED = 2  # bit pattern 10


def payload_size(length: int) -> int:
    """Bytes needed for ``length`` trits."""
    return (length + 3) // 4


def pack_trits(trits: np.ndarray) -> np.ndarray:
    """Pack an int8 array of {-1, 0, +1} into the 2-bit payload."""
    t = np.asarray(trits, dtype=np.int8)
    if t.ndim != 1:
        raise SchemaError("trits must be a 1-D array")
    if not np.isin(t, (-1, 0, 1)).all():
        raise SchemaError("trits must only contain -1, 0, +1")
    pairs = (t != 0).astype(np.uint8) | ((t < 0).astype(np.uint8) << 1)
    padded = np.zeros(payload_size(t.size) * 4, dtype=np.uint8)
    padded[:t.size] = pairs
    quads = padded.reshape(-1, 4)
    return (quads[:, 0] | (quads[:, 1] << 2)
            | (quads[:, 2] << 4) | (quads[:, 3] << 6)).astype(np.uint8)


def unpack_trits(payload: np.ndarray, length: int) -> np.ndarray:
    """Inverse of pack_trits; validates the payload first."""
    validate_payload(payload, length)
    pairs = _pairs(payload)[:length]
    return ((pairs & 1).astype(np.int8) - ((pairs >> 1) << 1).astype(np.int8))


def _pairs(payload: np.ndarray) -> np.ndarray:
    p = np.asarray(payload, dtype=np.uint8)
    out = np.empty(p.size * 4, dtype=np.uint8)
    for j in range(4):
        out[j::4] = (p >> (2 * j)) & 3
    return out


def validate_payload(payload: np.ndarray, length: int) -> None:
    """Reject reserved bit patterns and nonzero padding."""
    p = np.asarray(payload, dtype=np.uint8)
    if p.ndim != 1 or p.size != payload_size(length):
        raise SchemaError(
            f"payload must be {payload_size(length)} bytes for {length} trits, "
            f"got {p.size}")
    pairs = _pairs(p)
    if (pairs[:length] == _RESERVED).any():
        raise SchemaError("payload contains the reserved trit pattern 10")
    if pairs[length:].any():
        raise SchemaError("payload padding must be zero")


@dataclass(frozen=True)
class SignVector:
    """A packed trit descriptor retaining its (channels, channel_dim) layout."""

    payload: np.ndarray
    channels: int
    channel_dim: int

    def __post_init__(self):
        if self.channels < 0 or self.channel_dim < 0:
            raise SchemaError("channel counts must be nonnegative")
        validate_payload(self.payload, self.length)
        p = np.asarray(self.payload)
        p.flags.writeable = False

    @classmethod
    def pack(cls, trits, channels: int, channel_dim: int) -> "SignVector":
        t = np.asarray(trits, dtype=np.int8)
        if t.size != channels * channel_dim:
            raise ShapeError(
                f"{t.size} trits do not fill {channels} channels of "
                f"dim {channel_dim}")
        return cls(pack_trits(t), channels, channel_dim)

    @property
    def length(self) -> int:
        return self.channels * self.channel_dim

    def unpack(self) -> np.ndarray:
        """int8 trit vector of length channels * channel_dim."""
        # payload was validated at construction and is immutable
        pairs = _pairs(self.payload)[:self.length]
        return ((pairs & 1).astype(np.int8) - ((pairs >> 1) << 1).astype(np.int8))

    @cached_property
    def planes(self) -> tuple[np.ndarray, np.ndarray]:
        """(mask, sign) uint64 bitplanes of shape (channels, words)."""
        trits = self.unpack().reshape(self.channels, self.channel_dim)
        return (_pack_bool_rows(trits != 0), _pack_bool_rows(trits < 0))

    def nonzero_count(self) -> int:
        mask, _ = self.planes
        return int(np.bitwise_count(mask).sum())


def words_per_channel(channel_dim: int) -> int:
    return (channel_dim + 63) // 64


def _pack_bool_rows(rows: np.ndarray) -> np.ndarray:
    """Pack a (K, d) bool array into (K, ceil(d/64)) uint64 words."""
    k = rows.shape[0]
    packed = np.packbits(rows, axis=1, bitorder="little")
    width = words_per_channel(rows.shape[1]) * 8
    if packed.shape[1] < width:
        packed = np.pad(packed, ((0, 0), (0, width - packed.shape[1])))
    return packed.view("<u8").reshape(k, -1)


def planes_dot(mask_a, sign_a, mask_b, sign_b) -> np.ndarray:
    """Trit dot product from bitplanes: agreements minus disagreements over
    positions where both sides are nonzero. The last axis holds the uint64
    words of one channel and is reduced; leading axes broadcast, so a
    (n, k, w) gallery against a (k, w) query yields an (n, k) score array."""
    both = mask_a & mask_b
    disagree = both & (sign_a ^ sign_b)
    per_word = (np.bitwise_count(both).astype(np.int64)
                - 2 * np.bitwise_count(disagree).astype(np.int64))
    return per_word.sum(axis=-1)
