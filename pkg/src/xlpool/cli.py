"""Command-line front end.

Exit codes: 0 success, 1 I/O failure, 2 schema/shape/format problem,
3 selftest failure. Machine-readable outputs go to files only; stdout
stays free of data (the selftest's human-readable pass/fail table is the
one thing printed there) and logs go to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import report
from .baseline import SpmConfig, concat_layers, spm_pool
from .errors import ArgumentError, SchemaError, XlpoolError
from .kernels import gram
from .manifest import load_manifest
from .npyio import read_npy, write_npy
from .postprocess import (PipelineConfig, load_pca, pca_fit, save_pca,
                          sign_quantize, standard_pipeline)
from .retrieval import GalleryIndex, build_index, query
from .selftest import format_report, run_selftest
from .tensor import LayerPair, load_tensor

log = logging.getLogger("xlpool")


def _default_jobs() -> int:
    try:
        return max(1, int(os.environ.get("XLPOOL_JOBS", "1")))
    except ValueError:
        return 1


def _add_pipeline_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--pca", metavar="DIR", default=None,
                        help="directory with a fitted PCA bundle to apply "
                             "to local features")
    parser.add_argument("--l2", action="store_true",
                        help="l2-normalize each pooling channel")
    parser.add_argument("--power", action="store_true",
                        help="apply signed-sqrt power normalization")


def _pipeline_config(args) -> PipelineConfig:
    pca = load_pca(args.pca) if args.pca else None
    return PipelineConfig(pca=pca, l2=args.l2, power=args.power)


def _sidecar(out: Path, suffix: str) -> Path:
    return out.with_suffix("").parent / (out.with_suffix("").name + suffix)


def _write_meta(out: Path, desc, args, extra=None) -> None:
    meta = {
        "K": desc.channels,
        "d": desc.channel_dim,
        "pca": args.pca if getattr(args, "pca", None) else None,
        "l2": bool(getattr(args, "l2", False)),
        "power": bool(getattr(args, "power", False)),
    }
    if extra:
        meta.update(extra)
    _sidecar(out, ".meta.json").write_text(json.dumps(meta, indent=2) + "\n")


def _load_pair(local_path, guide_path) -> LayerPair:
    return LayerPair(local=load_tensor(local_path), guide=load_tensor(guide_path))


def cmd_pool(args) -> int:
    config = _pipeline_config(args)
    pair = _load_pair(args.local, args.guide)
    desc = standard_pipeline(pair, config)
    out = Path(args.out)
    write_npy(out, desc.values)
    _write_meta(out, desc, args, {"quantize": bool(args.quantize)})
    if args.quantize:
        sv = sign_quantize(desc)
        _sidecar(out, ".trits").write_bytes(sv.payload.tobytes())
    log.info("pooled %dx%d descriptor -> %s", desc.channels, desc.channel_dim, out)
    return 0


def cmd_pca_fit(args) -> int:
    entries = load_manifest(args.pairs)
    if not entries:
        raise SchemaError(f"{args.pairs}: manifest is empty")
    rng = np.random.default_rng(args.seed)
    blocks = []
    for entry in entries:
        blocks.append(load_tensor(entry.local_path).units())
    samples = np.concatenate(blocks, axis=0)
    if samples.shape[0] > args.max_samples:
        keep = np.sort(rng.choice(samples.shape[0], size=args.max_samples,
                                  replace=False))
        samples = samples[keep]
    output_dim = args.pca_dim
    if args.target_dim is not None:
        guide_depth = load_tensor(entries[0].guide_path).depth
        output_dim = max(1, args.target_dim // guide_depth)
        limit = min(samples.shape[1], samples.shape[0] - 1)
        output_dim = min(output_dim, limit)
        log.info("target dim %d with %d guide channels -> local dim %d",
                 args.target_dim, guide_depth, output_dim)
    model = pca_fit(samples, output_dim)
    save_pca(model, args.out)
    log.info("fitted PCA %d -> %d on %d samples -> %s",
             model.input_dim, model.output_dim, samples.shape[0], args.out)
    return 0


def cmd_spm(args) -> int:
    cfg = SpmConfig(level=args.level)
    descs = [spm_pool(load_tensor(p), cfg, args.method, l2=args.l2)
             for p in args.tensor]
    desc = descs[0]
    for other in descs[1:]:
        desc = concat_layers(desc, other)
    out = Path(args.out)
    write_npy(out, desc.values)
    meta = {"K": desc.channels, "d": desc.channel_dim, "level": args.level,
            "method": args.method, "l2": bool(args.l2)}
    _sidecar(out, ".meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    log.info("SPM level %d %s descriptor of %d dims -> %s",
             args.level, args.method, desc.values.size, out)
    return 0


def cmd_index(args) -> int:
    config = _pipeline_config(args)
    entries = [(e.image_id, _load_pair(e.local_path, e.guide_path))
               for e in load_manifest(args.pairs)]
    index = build_index(entries, config, jobs=args.jobs)
    index.save(args.out)
    log.info("indexed %d images (K=%d, d=%d) -> %s",
             len(index), index.channels, index.channel_dim, args.out)
    return 0


def cmd_query(args) -> int:
    config = _pipeline_config(args)
    index = GalleryIndex.load(args.index)
    pair = _load_pair(args.local, args.guide)
    results = query(index, pair, k_channels=args.k_channels, top_n=args.top,
                    config=config, select_side=args.select_side)
    out = Path(args.out)
    report.write_query_tsv(out, results)
    log.info("wrote %d results -> %s", len(results), out)
    if args.plot:
        fig_path = out.with_suffix(".png")
        report.plot_query_scores(fig_path, results,
                                 title=f"top {len(results)} of {len(index)}")
        log.info("rendered %s", fig_path)
    return 0


def _load_descriptor_dir(directory) -> np.ndarray:
    directory = Path(directory)
    files = sorted(directory.glob("*.npy"))
    if not files:
        raise SchemaError(f"{directory}: no .npy descriptor files found")
    rows = []
    for path in files:
        arr = read_npy(path)
        if arr.ndim != 1:
            raise SchemaError(f"{path}: descriptors must be 1-D, got {arr.ndim}-D")
        rows.append(arr)
    if len({r.size for r in rows}) != 1:
        raise SchemaError(f"{directory}: descriptor lengths differ")
    return np.stack(rows)


def cmd_gram(args) -> int:
    a = _load_descriptor_dir(args.a)
    b = a if args.b is None else _load_descriptor_dir(args.b)
    k = gram(a, b, jobs=args.jobs)
    write_npy(args.out, k)
    log.info("wrote %dx%d kernel -> %s", k.shape[0], k.shape[1], args.out)
    return 0


def cmd_selftest(args) -> int:
    results = run_selftest(seed=args.seed, index_path=args.index)
    print(format_report(results))
    if args.report:
        out_dir = Path(args.report)
        out_dir.mkdir(parents=True, exist_ok=True)
        report.write_selftest_tsv(out_dir / "selftest.tsv", results)
        report.plot_selftest(out_dir / "selftest.png", results)
        log.info("wrote report files to %s", out_dir)
    return 0 if all(r.passed for r in results) else 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xlpool",
        description="Cross-layer pooled descriptors: pooling, postprocessing, "
                    "retrieval, and kernels.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pool", help="pool one local/guide tensor pair")
    p.add_argument("--local", required=True)
    p.add_argument("--guide", required=True)
    p.add_argument("--out", required=True)
    _add_pipeline_flags(p)
    p.add_argument("--quantize", action="store_true",
                   help="also write the packed trit payload as <out>.trits")
    p.set_defaults(func=cmd_pool)

    p = sub.add_parser("pca-fit", help="fit PCA on local features of a manifest")
    p.add_argument("--pairs", required=True, help="manifest JSON")
    p.add_argument("--out", required=True, help="output bundle directory")
    dim = p.add_mutually_exclusive_group()
    dim.add_argument("--pca-dim", type=int, default=None,
                     help="projected local-feature dimension "
                          "(default: keep all, de-correlate only)")
    dim.add_argument("--target-dim", type=int, default=None,
                     help="total descriptor budget; local dim becomes "
                          "floor(target / guide channels)")
    p.add_argument("--max-samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_pca_fit)

    p = sub.add_parser("spm", help="spatial-pyramid baseline pooling")
    p.add_argument("--tensor", action="append", required=True,
                   help="tensor file; repeat to concatenate layers")
    p.add_argument("--level", type=int, choices=(0, 1, 2), default=2)
    p.add_argument("--method", choices=("max", "sum_sqrt"), default="sum_sqrt")
    p.add_argument("--l2", action="store_true",
                   help="l2-normalize the final concatenated vector")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_spm)

    p = sub.add_parser("index", help="build a gallery index from a manifest")
    p.add_argument("--pairs", required=True)
    p.add_argument("--out", required=True)
    _add_pipeline_flags(p)
    p.add_argument("--jobs", type=int, default=_default_jobs())
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("query", help="rank gallery entries against a query pair")
    p.add_argument("--index", required=True)
    p.add_argument("--local", required=True)
    p.add_argument("--guide", required=True)
    p.add_argument("--k-channels", type=int, required=True)
    p.add_argument("--top", type=int, default=10)
    _add_pipeline_flags(p)
    p.add_argument("--select-side", choices=("query", "gallery"),
                   default="query")
    p.add_argument("--out", default="query_results.tsv",
                   help="results TSV path")
    p.add_argument("--plot", action="store_true",
                   help="render a score figure next to the TSV")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("gram", help="linear kernel between descriptor sets")
    p.add_argument("--a", required=True, help="directory of descriptor .npy files")
    p.add_argument("--b", default=None,
                   help="second directory (default: same as --a)")
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=_default_jobs())
    p.set_defaults(func=cmd_gram)

    p = sub.add_parser("selftest", help="run the oracle-equivalence suite")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--index", default=None,
                   help="verify this index file round-trips instead of a "
                        "synthetic one")
    p.add_argument("--report", default=None,
                   help="directory for selftest.tsv and selftest.png")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ArgumentError as exc:
        print(f"xlpool: {exc}", file=sys.stderr)
        return 2
    except XlpoolError as exc:
        print(f"xlpool: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"xlpool: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
