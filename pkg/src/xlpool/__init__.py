"""Cross-layer pooled image descriptors.

Turns pairs of convolutional activation tensors into pooled descriptors,
postprocesses them (PCA, per-channel l2, signed sqrt, sign quantization),
and searches galleries of binarized descriptors with adaptive channel
selection. See the README for the CLI surface.
"""

from .baseline import SpmConfig, concat_layers, spm_pool
from .errors import (ArgumentError, BuildError, FitError, FormatError,
                     PairingError, SchemaError, ShapeError, XlpoolError)
from .kernels import RidgeOvrModel, gram, predict, train_linear_ovr
from .manifest import ManifestEntry, load_manifest
from .npyio import read_npy, write_npy
from .pooling import (Descriptor, IndicatorMaps, cross_layer_pool,
                      cross_layer_pool_oracle, indicator_maps_from_guide,
                      max_channel_pool, pool_with_indicators)
from .postprocess import (PcaModel, PipelineConfig, load_pca,
                          normalize_channels, pca_apply, pca_fit,
                          pca_transform_tensor, power_normalize, save_pca,
                          sign_quantize, standard_pipeline)
from .retrieval import (ChannelStats, GalleryIndex, build_index,
                        channel_stats, query, select_channels, similarity)
from .tensor import (FeatureTensor, LayerPair, load_tensor, pair_layers,
                     save_tensor)
from .trits import SignVector, pack_trits, unpack_trits

__version__ = "0.1.0"

__all__ = [
    "ArgumentError", "BuildError", "ChannelStats", "Descriptor",
    "FeatureTensor", "FitError", "FormatError", "GalleryIndex",
    "IndicatorMaps", "LayerPair", "ManifestEntry", "PairingError",
    "PcaModel", "PipelineConfig", "RidgeOvrModel", "SchemaError",
    "ShapeError", "SignVector", "SpmConfig", "XlpoolError",
    "build_index", "channel_stats", "concat_layers", "cross_layer_pool",
    "cross_layer_pool_oracle", "gram", "indicator_maps_from_guide",
    "load_manifest", "load_pca", "load_tensor", "max_channel_pool",
    "normalize_channels", "pack_trits", "pair_layers", "pca_apply",
    "pca_fit", "pca_transform_tensor", "pool_with_indicators",
    "power_normalize", "predict", "query", "read_npy", "save_pca",
    "save_tensor", "select_channels", "sign_quantize", "similarity",
    "spm_pool", "standard_pipeline", "train_linear_ovr", "unpack_trits",
    "write_npy",
]
