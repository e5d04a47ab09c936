"""Descriptor postprocessing: PCA on local features, per-channel l2
normalization, signed-sqrt power normalization, and sign quantization.

The pipeline order is fixed: PCA is applied to local feature vectors
before pooling, l2 normalization acts per pooling channel, and power
normalization comes last. Swapping the two normalizations is not
equivalent and the tests pin the order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ArgumentError, FitError, SchemaError, ShapeError
from .npyio import read_npy, write_npy
from .pooling import Descriptor, cross_layer_pool
from .tensor import FeatureTensor, LayerPair
from .trits import SignVector

L2_EPS = 1e-12


@dataclass(frozen=True)
class PcaModel:
    """Mean and orthonormal projection fitted on local feature vectors.

    ``projection`` rows are the top eigenvectors of the sample covariance,
    eigenvalues descending, each row's largest-magnitude entry positive so
    fits are reproducible across runs and platforms.
    """

    mean: np.ndarray          # (input_dim,) float64
    projection: np.ndarray    # (output_dim, input_dim) float64
    eigenvalues: np.ndarray   # (output_dim,) float64, descending

    @property
    def input_dim(self) -> int:
        return self.mean.shape[0]

    @property
    def output_dim(self) -> int:
        return self.projection.shape[0]

    def __post_init__(self):
        if self.projection.shape != (self.output_dim, self.input_dim):
            raise SchemaError("projection shape does not match mean/eigenvalues")
        if self.eigenvalues.shape != (self.output_dim,):
            raise SchemaError("eigenvalue count does not match projection rows")


def pca_fit(samples, output_dim: int | None = None) -> PcaModel:
    """Fit PCA on a (n, D) sample matrix via covariance eigendecomposition.

    ``output_dim=None`` keeps all D components (de-correlation without
    reduction). Requires n >= 2 and output_dim <= min(D, n - 1).
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 2:
        raise SchemaError("samples must form a 2-D (n, D) matrix")
    n, dim = x.shape
    if n < 2:
        raise FitError(f"PCA needs at least 2 samples, got {n}")
    if output_dim is None:
        output_dim = dim
    limit = min(dim, n - 1)
    if not 1 <= output_dim <= limit:
        raise ArgumentError(
            f"output_dim must be in [1, {limit}] for {n} samples of dim {dim}, "
            f"got {output_dim}")

    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (n - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1][:output_dim]
    components = eigvecs[:, order].T
    # deterministic sign: largest-|entry| coordinate positive, first on ties
    for row in components:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return PcaModel(mean=mean,
                    projection=np.ascontiguousarray(components),
                    eigenvalues=np.clip(eigvals[order], 0.0, None))


def pca_apply(model: PcaModel, x) -> np.ndarray:
    """Project ``x`` (one vector or an (n, D) batch): projection @ (x - mean)."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.shape[-1] != model.input_dim:
        raise ShapeError(
            f"vector dim {arr.shape[-1]} != model input_dim {model.input_dim}")
    return (arr - model.mean) @ model.projection.T


def pca_transform_tensor(model: PcaModel, t: FeatureTensor) -> FeatureTensor:
    """Apply the projection to every spatial unit of a tensor."""
    projected = pca_apply(model, t.units())
    shape = (t.height, t.width, model.output_dim)
    return FeatureTensor.from_array(projected.reshape(shape))


def save_pca(model: PcaModel, directory) -> None:
    """Persist a model as mean.npy / projection.npy / eigenvalues.npy
    (float32) plus meta.json."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_npy(directory / "mean.npy", model.mean)
    write_npy(directory / "projection.npy", model.projection)
    write_npy(directory / "eigenvalues.npy", model.eigenvalues)
    meta = {"input_dim": model.input_dim, "output_dim": model.output_dim}
    (directory / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")


def load_pca(directory) -> PcaModel:
    directory = Path(directory)
    meta = json.loads((directory / "meta.json").read_text())
    mean = read_npy(directory / "mean.npy").astype(np.float64)
    projection = read_npy(directory / "projection.npy").astype(np.float64)
    eigenvalues = read_npy(directory / "eigenvalues.npy").astype(np.float64)
    if mean.ndim != 1 or projection.ndim != 2 or eigenvalues.ndim != 1:
        raise SchemaError(f"{directory}: malformed PCA bundle ranks")
    model = PcaModel(mean=mean, projection=projection, eigenvalues=eigenvalues)
    if (model.input_dim != meta.get("input_dim")
            or model.output_dim != meta.get("output_dim")):
        raise SchemaError(f"{directory}: meta.json does not match array shapes")
    return model


def normalize_channels(desc: Descriptor, eps: float = L2_EPS) -> Descriptor:
    """l2-normalize each channel subvector; channels with norm <= eps are
    left untouched so all-zero channels stay zero."""
    mat = desc.as_matrix().astype(np.float64)
    norms = np.linalg.norm(mat, axis=1, keepdims=True)
    scale = np.where(norms > eps, norms, 1.0)
    return Descriptor.from_matrix(mat / scale)


def power_normalize(desc: Descriptor) -> Descriptor:
    """Signed square root, sign(v) * sqrt(|v|), elementwise. Preserves the
    sign and the zero set exactly."""
    v = desc.values
    out = np.sign(v) * np.sqrt(np.abs(v))
    return Descriptor(out.astype(np.float32), desc.channels, desc.channel_dim)


def sign_quantize(desc: Descriptor) -> SignVector:
    """Quantize to {-1, 0, +1} by sign; exact zeros map to 0."""
    trits = np.sign(desc.values).astype(np.int8)
    return SignVector.pack(trits, desc.channels, desc.channel_dim)


@dataclass(frozen=True)
class PipelineConfig:
    """Toggleable postprocessing stages applied around cross-layer pooling."""

    pca: PcaModel | None = None
    l2: bool = True
    power: bool = True

    def describe(self) -> dict:
        return {"pca": self.pca is not None, "l2": self.l2, "power": self.power}


def standard_pipeline(pair: LayerPair, config: PipelineConfig = PipelineConfig()) -> Descriptor:
    """PCA (optional) -> cross-layer pool -> per-channel l2 (optional) ->
    power normalization (optional), in that order."""
    local = pair.local
    if config.pca is not None:
        if config.pca.input_dim != local.depth:
            raise ShapeError(
                f"PCA input_dim {config.pca.input_dim} != local depth "
                f"{local.depth}")
        local = pca_transform_tensor(config.pca, local)
    desc = cross_layer_pool(LayerPair(local=local, guide=pair.guide))
    if config.l2:
        desc = normalize_channels(desc)
    if config.power:
        desc = power_normalize(desc)
    return desc
