"""Built-in oracle-equivalence suite behind ``xlpool selftest``.

Every check re-derives expected values from an independent path (naive
loops, unpacked arithmetic, byte comparison) and the whole run is
deterministic for a given seed, so the report text is stable across runs.
"""

from __future__ import annotations

import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .baseline import SpmConfig, cell_assignment, spm_pool
from .pooling import cross_layer_pool, cross_layer_pool_oracle
from .postprocess import (PipelineConfig, normalize_channels, power_normalize,
                          sign_quantize, standard_pipeline)
from .pooling import Descriptor, indicator_maps_from_guide, pool_with_indicators
from .retrieval import GalleryIndex, build_index, similarity
from .tensor import FeatureTensor, LayerPair, load_tensor, save_tensor
from .trits import SignVector, pack_trits, unpack_trits


@dataclass
class CheckResult:
    name: str
    cases: int
    passed: bool
    detail: str = ""


def _random_pair(rng, max_hw=8, max_depth=16) -> LayerPair:
    h, w = rng.integers(1, max_hw + 1, size=2)
    dt, dg = rng.integers(1, max_depth + 1, size=2)
    local = FeatureTensor.from_array(rng.standard_normal((h, w, dt)))
    guide = FeatureTensor.from_array(rng.standard_normal((h, w, dg)))
    return LayerPair(local=local, guide=guide)


def _rel_err(got, want) -> float:
    scale = max(float(np.abs(want).max()), 1e-30)
    return float(np.abs(got - want).max()) / scale


def _check_pool_oracle(rng):
    worst = 0.0
    cases = 25
    for _ in range(cases):
        pair = _random_pair(rng)
        worst = max(worst, _rel_err(cross_layer_pool(pair).values,
                                    cross_layer_pool_oracle(pair).values))
    return cases, worst <= 1e-6, f"max rel err {worst:.2e}"


def _check_indicator_equivalence(rng):
    worst = 0.0
    cases = 25
    for _ in range(cases):
        pair = _random_pair(rng)
        via_maps = pool_with_indicators(pair.local,
                                        indicator_maps_from_guide(pair.guide))
        worst = max(worst, _rel_err(via_maps.values,
                                    cross_layer_pool(pair).values))
    return cases, worst <= 1e-6, f"max rel err {worst:.2e}"


def _check_max_pool(rng):
    from .pooling import max_channel_pool
    cases = 25
    for _ in range(cases):
        pair = _random_pair(rng, max_hw=4, max_depth=8)
        got = max_channel_pool(pair).as_matrix()
        x, g = pair.local.units(), pair.guide.units()
        for k in range(pair.guide.depth):
            for dim in range(pair.local.depth):
                want = max(np.float32(x[i, dim]) * np.float32(g[i, k])
                           for i in range(x.shape[0]))
                if got[k, dim] != want:
                    return cases, False, f"mismatch at channel {k} dim {dim}"
    return cases, True, ""


def _check_trit_roundtrip(rng):
    cases = 200
    for _ in range(cases):
        n = int(rng.integers(1, 200))
        trits = rng.integers(-1, 2, size=n).astype(np.int8)
        back = unpack_trits(pack_trits(trits), n)
        if not np.array_equal(back, trits):
            return cases, False, "pack/unpack mismatch"
    return cases, True, ""


def _check_packed_similarity(rng):
    cases = 2000
    for _ in range(cases):
        k = int(rng.integers(1, 9))
        d = int(rng.integers(1, 40))
        a = rng.integers(-1, 2, size=k * d).astype(np.int8)
        b = rng.integers(-1, 2, size=k * d).astype(np.int8)
        n_sel = int(rng.integers(1, k + 1))
        sel = np.sort(rng.choice(k, size=n_sel, replace=False))
        sva = SignVector.pack(a, k, d)
        svb = SignVector.pack(b, k, d)
        packed = similarity(sva, svb, sel)
        mask = np.zeros(k * d, dtype=bool)
        for ch in sel:
            mask[ch * d:(ch + 1) * d] = True
        naive = int(np.dot(a[mask].astype(np.int64), b[mask].astype(np.int64)))
        if packed != naive:
            return cases, False, f"packed {packed} != naive {naive}"
    return cases, True, ""


def _check_npy_roundtrip(rng):
    cases = 20
    with tempfile.TemporaryDirectory() as tmp:
        for i in range(cases):
            shape = tuple(int(v) for v in rng.integers(1, 7, size=3))
            t = FeatureTensor.from_array(
                rng.standard_normal(shape).astype(np.float32))
            path = Path(tmp) / f"t{i}.npy"
            save_tensor(path, t)
            back = load_tensor(path)
            if back.data.tobytes() != t.data.tobytes():
                return cases, False, f"round trip not bit-exact for {shape}"
    return cases, True, ""


def _check_index_roundtrip(rng, index_path=None):
    if index_path is not None:
        original = Path(index_path).read_bytes()
        idx = GalleryIndex.from_bytes(original, name=str(index_path))
        if idx.to_bytes() != original:
            return 1, False, "re-serialized bytes differ"
        return 1, True, ""
    entries = []
    for i in range(10):
        h, w = 4, 4
        local = FeatureTensor.from_array(rng.standard_normal((h, w, 6)))
        guide = FeatureTensor.from_array(rng.standard_normal((h, w, 5)))
        entries.append((f"img-{i:03d}", LayerPair(local=local, guide=guide)))
    idx = build_index(entries, PipelineConfig(l2=True, power=True))
    raw = idx.to_bytes()
    back = GalleryIndex.from_bytes(raw)
    if back.to_bytes() != raw:
        return 10, False, "save/load not byte-identical"
    return 10, True, ""


def _check_sign_power_commute(rng):
    cases = 2000
    for _ in range(cases):
        k = int(rng.integers(1, 6))
        d = int(rng.integers(1, 20))
        values = rng.standard_normal(k * d).astype(np.float32)
        values[rng.random(k * d) < 0.2] = 0.0
        desc = Descriptor(values, k, d)
        if not np.array_equal(sign_quantize(power_normalize(desc)).unpack(),
                              sign_quantize(desc).unpack()):
            return cases, False, "quantization not invariant under power norm"
    return cases, True, ""


def _check_l2_idempotent(rng):
    worst = 0.0
    cases = 2000
    for _ in range(cases):
        k = int(rng.integers(1, 6))
        d = int(rng.integers(1, 20))
        desc = Descriptor(rng.standard_normal(k * d).astype(np.float32), k, d)
        once = normalize_channels(desc)
        twice = normalize_channels(once)
        worst = max(worst, float(np.abs(once.values - twice.values).max()))
    return cases, worst <= 1e-6, f"max drift {worst:.2e}"


def _check_spm_oracle(rng):
    cases = 10
    for _ in range(cases):
        h, w = (int(v) for v in rng.integers(1, 9, size=2))
        d = int(rng.integers(1, 9))
        t = FeatureTensor.from_array(rng.standard_normal((h, w, d)))
        cfg = SpmConfig(level=int(rng.integers(0, 3)))
        for method in ("max", "sum_sqrt"):
            got = spm_pool(t, cfg, method).as_matrix()
            want = _spm_reference(t, cfg, method)
            if not np.array_equal(got, want):
                return cases, False, f"{method} level {cfg.level} mismatch"
    return cases, True, ""


def _spm_reference(t, cfg, method):
    x = t.units()
    rows = []
    for grid in cfg.grids:
        idx = cell_assignment(t.height, t.width, grid)
        for cell in range(grid * grid):
            members = [i for i in range(x.shape[0]) if idx[i] == cell]
            if method == "max":
                if not members:
                    rows.append(np.zeros(t.depth, dtype=np.float32))
                else:
                    acc = x[members[0]].copy()
                    for i in members[1:]:
                        acc = np.maximum(acc, x[i])
                    rows.append(acc)
            else:
                acc = np.zeros(t.depth, dtype=np.float64)
                for i in members:
                    acc += x[i].astype(np.float64)
                rows.append((np.sign(acc) * np.sqrt(np.abs(acc))).astype(np.float32))
    return np.stack(rows)


def run_selftest(seed: int = 0, index_path=None) -> list[CheckResult]:
    """Run every check; exceptions count as failures, not crashes."""
    checks = [
        ("cross-layer pooling vs naive triple loop", _check_pool_oracle),
        ("indicator-map pooling equivalence", _check_indicator_equivalence),
        ("max-channel pooling vs naive max", _check_max_pool),
        ("trit pack/unpack round trip", _check_trit_roundtrip),
        ("packed similarity vs integer dot", _check_packed_similarity),
        ("tensor NPY round trip", _check_npy_roundtrip),
        ("index save/load round trip",
         lambda rng: _check_index_roundtrip(rng, index_path)),
        ("sign quantize commutes with power norm", _check_sign_power_commute),
        ("per-channel l2 idempotent", _check_l2_idempotent),
        ("spatial pyramid pooling vs membership loop", _check_spm_oracle),
    ]
    results = []
    for name, fn in checks:
        rng = np.random.default_rng(seed)
        try:
            cases, ok, detail = fn(rng)
        except Exception as exc:  # a raising check is a failing check
            cases, ok, detail = 0, False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name=name, cases=cases, passed=ok,
                                   detail=detail if not ok else ""))
    return results


def format_report(results: list[CheckResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'check'.ljust(width)}  cases  result"]
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        line = f"{r.name.ljust(width)}  {r.cases:5d}  {status}"
        if r.detail:
            line += f"  ({r.detail})"
        lines.append(line)
    overall = "PASS" if all(r.passed for r in results) else "FAIL"
    lines.append(f"overall: {overall}")
    return "\n".join(lines)
