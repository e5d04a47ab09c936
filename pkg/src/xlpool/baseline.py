"""Spatial-pyramid pooling of a single layer: the max / sum-sqrt baselines.

Pyramid level L pools over the grids {1x1}, {1x1, 2x2} or
{1x1, 2x2, 4x4}, giving 1, 5 or 21 cells. Units are binned
proportionally: unit (r, c) falls in cell (floor(r*g/H), floor(c*g/W)) of
a g x g grid, so every unit lands in exactly one cell per grid and grids
that do not divide H or W still cover the tensor. Cells that receive no
units (possible when H or W < g) pool to the zero vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError
from .pooling import Descriptor
from .tensor import FeatureTensor

_GRIDS = {0: (1,), 1: (1, 2), 2: (1, 2, 4)}
METHODS = ("max", "sum_sqrt")


@dataclass(frozen=True)
class SpmConfig:
    """Pyramid level 0, 1 or 2."""

    level: int

    def __post_init__(self):
        if self.level not in _GRIDS:
            raise ArgumentError(f"SPM level must be 0, 1 or 2, got {self.level}")

    @property
    def grids(self) -> tuple[int, ...]:
        return _GRIDS[self.level]

    @property
    def cells(self) -> int:
        return sum(g * g for g in self.grids)


def cell_assignment(height: int, width: int, grid: int) -> np.ndarray:
    """Row-major cell index per spatial unit for a grid x grid partition."""
    rows = (np.arange(height) * grid) // height
    cols = (np.arange(width) * grid) // width
    return (rows[:, None] * grid + cols[None, :]).reshape(-1)


def spm_pool(t: FeatureTensor, cfg: SpmConfig, method: str = "sum_sqrt",
             l2: bool = False) -> Descriptor:
    """Pool each pyramid cell and concatenate in level order, cells
    row-major within a level.

    ``max`` takes the elementwise maximum over member units; ``sum_sqrt``
    sums then applies the signed square root. ``l2`` optionally normalizes
    the final concatenated vector.
    """
    if method not in METHODS:
        raise ArgumentError(f"method must be one of {METHODS}, got {method!r}")
    x = t.units()
    parts = []
    for grid in cfg.grids:
        cells = grid * grid
        idx = cell_assignment(t.height, t.width, grid)
        if method == "max":
            acc = np.full((cells, t.depth), -np.inf, dtype=np.float32)
            np.maximum.at(acc, idx, x)
            occupied = np.bincount(idx, minlength=cells) > 0
            acc[~occupied] = 0.0
            parts.append(acc)
        else:
            acc = np.zeros((cells, t.depth), dtype=np.float64)
            np.add.at(acc, idx, x.astype(np.float64))
            parts.append((np.sign(acc) * np.sqrt(np.abs(acc))).astype(np.float32))
    stacked = np.concatenate(parts, axis=0).astype(np.float32)
    if l2:
        norm = float(np.linalg.norm(stacked.astype(np.float64)))
        if norm > 1e-12:
            stacked = (stacked / norm).astype(np.float32)
    return Descriptor.from_matrix(stacked)


def concat_layers(a: Descriptor, b: Descriptor) -> Descriptor:
    """Concatenate two descriptors. An empty descriptor is the identity.

    When both sides share a channel_dim the channel structure is kept
    (channels add); otherwise the result is a flat single-channel vector.
    """
    if a.values.size == 0:
        return b
    if b.values.size == 0:
        return a
    values = np.concatenate([a.values, b.values])
    if a.channel_dim == b.channel_dim:
        return Descriptor(values, a.channels + b.channels, a.channel_dim)
    return Descriptor(values, 1, values.size)
