"""Binarized descriptor retrieval with adaptive pooling-channel selection.

Similarity between two descriptors is the sum of per-channel dot products
restricted to a small channel subset S; S is chosen per query as the
channels whose guide feature maps have the largest average activation.
On sign-quantized descriptors the score is an exact integer computed from
bit-packed planes.

Index file layout (little-endian): magic "XLPIDX1\\0"; header u32
version=1, u32 channels, u32 channel_dim, u64 entry_count; then per entry
u16 id length, UTF-8 id bytes, ceil(channels*channel_dim/4) payload bytes,
channels float32 channel stats.
"""

from __future__ import annotations

import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (ArgumentError, BuildError, FormatError, SchemaError,
                     ShapeError)
from .pooling import Descriptor
from .postprocess import PipelineConfig, sign_quantize, standard_pipeline
from .tensor import FeatureTensor, LayerPair
from .trits import SignVector, payload_size, planes_dot, validate_payload

MAGIC = b"XLPIDX1\x00"
VERSION = 1
_HEADER = struct.Struct("<IIIQ")
_ID_LEN = struct.Struct("<H")


@dataclass(frozen=True)
class ChannelStats:
    """Per-channel mean activation of a guide layer over its spatial units."""

    values: np.ndarray

    def __post_init__(self):
        v = self.values
        if not isinstance(v, np.ndarray) or v.ndim != 1 or v.dtype != np.float32:
            raise SchemaError("channel stats must be a 1-D float32 array")
        if not np.isfinite(v).all():
            raise SchemaError("channel stats contain non-finite values")
        v.flags.writeable = False

    @property
    def channels(self) -> int:
        return self.values.shape[0]


def channel_stats(guide: FeatureTensor) -> ChannelStats:
    """Mean activation per feature map: stat[k] = mean_i x_{i,k}."""
    means = guide.units().astype(np.float64).mean(axis=0)
    return ChannelStats(means.astype(np.float32))


def select_channels(stats: ChannelStats, k: int) -> np.ndarray:
    """Indices of the k channels with the largest average activation,
    returned sorted ascending. Ties resolve to the lower channel index."""
    if not 1 <= k <= stats.channels:
        raise ArgumentError(
            f"k must be in [1, {stats.channels}], got {k}")
    order = np.argsort(-stats.values.astype(np.float64), kind="stable")
    return np.sort(order[:k]).astype(np.int64)


def _check_channel_set(s, channels: int) -> np.ndarray:
    idx = np.asarray(s, dtype=np.int64).reshape(-1)
    if idx.size == 0:
        raise ArgumentError("channel set must not be empty")
    if ((idx < 0) | (idx >= channels)).any():
        raise ArgumentError(
            f"channel set contains indices outside [0, {channels})")
    if np.unique(idx).size != idx.size:
        raise ArgumentError("channel set contains duplicate indices")
    return idx


def similarity(query, ref, s) -> float | int:
    """Sum of per-channel dot products over the channel set ``s``.

    Both arguments must be SignVectors (exact integer result via bit
    operations) or both Descriptors (float result). Shapes must agree.
    """
    if isinstance(query, SignVector) and isinstance(ref, SignVector):
        if (query.channels, query.channel_dim) != (ref.channels, ref.channel_dim):
            raise ShapeError(
                f"sign vector layouts differ: {query.channels}x{query.channel_dim}"
                f" vs {ref.channels}x{ref.channel_dim}")
        idx = _check_channel_set(s, query.channels)
        mq, sq = query.planes
        mr, sr = ref.planes
        return int(planes_dot(mq[idx], sq[idx], mr[idx], sr[idx]).sum())
    if isinstance(query, Descriptor) and isinstance(ref, Descriptor):
        if (query.channels, query.channel_dim) != (ref.channels, ref.channel_dim):
            raise ShapeError(
                f"descriptor layouts differ: {query.channels}x{query.channel_dim}"
                f" vs {ref.channels}x{ref.channel_dim}")
        idx = _check_channel_set(s, query.channels)
        a = query.as_matrix()[idx].astype(np.float64)
        b = ref.as_matrix()[idx].astype(np.float64)
        return float((a * b).sum())
    raise ArgumentError("query and ref must both be SignVector or both Descriptor")


@dataclass
class GalleryIndex:
    """Immutable-after-build collection of binarized gallery descriptors."""

    channels: int
    channel_dim: int
    ids: list[str]
    payloads: np.ndarray   # (n, payload_bytes) uint8
    stats: np.ndarray      # (n, channels) float32
    _planes: tuple[np.ndarray, np.ndarray] | None = field(
        default=None, repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.ids)

    def entry(self, i: int) -> tuple[str, SignVector, ChannelStats]:
        sv = SignVector(self.payloads[i].copy(), self.channels, self.channel_dim)
        return self.ids[i], sv, ChannelStats(self.stats[i].copy())

    def planes(self) -> tuple[np.ndarray, np.ndarray]:
        """(masks, signs) uint64 arrays of shape (n, channels, words)."""
        if self._planes is None:
            masks, signs = [], []
            for i in range(len(self)):
                sv = SignVector(self.payloads[i], self.channels, self.channel_dim)
                m, s = sv.planes
                masks.append(m)
                signs.append(s)
            n = len(self)
            if n:
                self._planes = (np.stack(masks), np.stack(signs))
            else:
                self._planes = (np.zeros((0, self.channels, 0), dtype=np.uint64),) * 2
        return self._planes

    def score_all(self, query: SignVector, s) -> np.ndarray:
        """Integer similarity of the query against every entry, vectorized."""
        if (query.channels, query.channel_dim) != (self.channels, self.channel_dim):
            raise SchemaError(
                f"query layout {query.channels}x{query.channel_dim} does not "
                f"match index {self.channels}x{self.channel_dim}")
        idx = _check_channel_set(s, self.channels)
        masks, signs = self.planes()
        mq, sq = query.planes
        per_channel = planes_dot(masks[:, idx, :], signs[:, idx, :],
                                 mq[idx], sq[idx])
        return per_channel.sum(axis=1)

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    def to_bytes(self) -> bytes:
        buf = bytearray(MAGIC)
        buf += _HEADER.pack(VERSION, self.channels, self.channel_dim, len(self))
        for i, image_id in enumerate(self.ids):
            id_bytes = image_id.encode("utf-8")
            if len(id_bytes) > 0xFFFF:
                raise BuildError(f"image id too long to serialize: {image_id!r}")
            buf += _ID_LEN.pack(len(id_bytes))
            buf += id_bytes
            buf += self.payloads[i].tobytes()
            buf += self.stats[i].astype("<f4").tobytes()
        return bytes(buf)

    @classmethod
    def load(cls, path) -> "GalleryIndex":
        return cls.from_bytes(Path(path).read_bytes(), name=str(path))

    @classmethod
    def from_bytes(cls, raw: bytes, name: str = "index") -> "GalleryIndex":
        if len(raw) < len(MAGIC) or raw[:len(MAGIC)] != MAGIC:
            raise FormatError(f"{name}: bad index magic")
        off = len(MAGIC)
        if len(raw) < off + _HEADER.size:
            raise FormatError(f"{name}: truncated header")
        version, channels, dim, count = _HEADER.unpack_from(raw, off)
        off += _HEADER.size
        if version != VERSION:
            raise SchemaError(f"{name}: unsupported index version {version}")
        plen = payload_size(channels * dim)
        ids: list[str] = []
        payloads = np.zeros((count, plen), dtype=np.uint8)
        stats = np.zeros((count, channels), dtype=np.float32)
        for i in range(count):
            if len(raw) < off + _ID_LEN.size:
                raise FormatError(f"{name}: truncated at entry {i}")
            (id_len,) = _ID_LEN.unpack_from(raw, off)
            off += _ID_LEN.size
            need = id_len + plen + channels * 4
            if len(raw) < off + need:
                raise FormatError(f"{name}: truncated at entry {i}")
            try:
                image_id = raw[off:off + id_len].decode("utf-8")
            except UnicodeDecodeError as exc:
                raise FormatError(f"{name}: entry {i} id is not UTF-8: {exc}")
            off += id_len
            payload = np.frombuffer(raw, dtype=np.uint8, count=plen, offset=off)
            validate_payload(payload, channels * dim)
            payloads[i] = payload
            off += plen
            stat = np.frombuffer(raw, dtype="<f4", count=channels, offset=off)
            if not np.isfinite(stat).all():
                raise SchemaError(f"{name}: entry {i} ({image_id}) has "
                                  f"non-finite channel stats")
            stats[i] = stat
            off += channels * 4
            ids.append(image_id)
        if off != len(raw):
            raise FormatError(f"{name}: {len(raw) - off} trailing bytes")
        if len(set(ids)) != len(ids):
            raise SchemaError(f"{name}: duplicate image ids")
        return cls(channels=channels, channel_dim=dim, ids=ids,
                   payloads=payloads, stats=stats)


def _process_entry(image_id: str, pair: LayerPair,
                   config: PipelineConfig) -> tuple[str, SignVector, ChannelStats]:
    desc = standard_pipeline(pair, config)
    return image_id, sign_quantize(desc), channel_stats(pair.guide)


def build_index(entries, config: PipelineConfig = PipelineConfig(),
                jobs: int = 1) -> GalleryIndex:
    """Run the pipeline plus sign quantization over (image_id, LayerPair)
    entries, preserving input order. All entries must agree on descriptor
    layout; duplicate ids are rejected."""
    entries = list(entries)
    seen: set[str] = set()
    for image_id, _ in entries:
        if image_id in seen:
            raise BuildError(f"duplicate image id {image_id!r}")
        seen.add(image_id)

    if jobs > 1 and len(entries) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            processed = list(pool.map(
                lambda e: _process_entry(e[0], e[1], config), entries))
    else:
        processed = [_process_entry(i, p, config) for i, p in entries]

    if not processed:
        return GalleryIndex(channels=0, channel_dim=0, ids=[],
                            payloads=np.zeros((0, 0), dtype=np.uint8),
                            stats=np.zeros((0, 0), dtype=np.float32))
    channels = processed[0][1].channels
    dim = processed[0][1].channel_dim
    payloads = np.zeros((len(processed), payload_size(channels * dim)),
                        dtype=np.uint8)
    stats = np.zeros((len(processed), channels), dtype=np.float32)
    ids = []
    for i, (image_id, sv, cs) in enumerate(processed):
        if (sv.channels, sv.channel_dim) != (channels, dim):
            raise BuildError(
                f"entry {image_id!r} has layout {sv.channels}x{sv.channel_dim}, "
                f"expected {channels}x{dim}")
        payloads[i] = sv.payload
        stats[i] = cs.values
        ids.append(image_id)
    return GalleryIndex(channels=channels, channel_dim=dim, ids=ids,
                        payloads=payloads, stats=stats)


def query(index: GalleryIndex, query_pair: LayerPair, k_channels: int,
          top_n: int, config: PipelineConfig = PipelineConfig(),
          select_side: str = "query") -> list[tuple[str, int]]:
    """Rank gallery entries against a query image.

    The channel subset is chosen from the query's own guide statistics
    (``select_side="query"``, the default) or per gallery entry from its
    stored statistics (``select_side="gallery"``). Results are sorted by
    descending score, ties by ascending image id, truncated to ``top_n``.
    The query must be processed with the same pipeline options used to
    build the index.
    """
    if top_n < 1:
        raise ArgumentError(f"top_n must be positive, got {top_n}")
    if select_side not in ("query", "gallery"):
        raise ArgumentError(f"select_side must be 'query' or 'gallery', "
                            f"got {select_side!r}")
    if len(index) == 0:
        return []
    desc = standard_pipeline(query_pair, config)
    sv = sign_quantize(desc)
    if select_side == "query":
        s = select_channels(channel_stats(query_pair.guide), k_channels)
        scores = index.score_all(sv, s)
    else:
        if (sv.channels, sv.channel_dim) != (index.channels, index.channel_dim):
            raise SchemaError(
                f"query layout {sv.channels}x{sv.channel_dim} does not "
                f"match index {index.channels}x{index.channel_dim}")
        masks, signs = index.planes()
        mq, sq = sv.planes
        scores = np.empty(len(index), dtype=np.int64)
        for i in range(len(index)):
            s = select_channels(ChannelStats(index.stats[i].copy()), k_channels)
            scores[i] = planes_dot(masks[i, s, :], signs[i, s, :],
                                   mq[s], sq[s]).sum()
    ranked = sorted(zip(index.ids, scores.tolist()),
                    key=lambda item: (-item[1], item[0]))
    return ranked[:min(top_n, len(ranked))]
