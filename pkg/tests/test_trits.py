"""Two-bit trit packing and the bitplane dot-product kernel."""

import numpy as np
import pytest

from xlpool import SchemaError, SignVector, pack_trits, unpack_trits
from xlpool.trits import payload_size, planes_dot, validate_payload


class TestPacking:
    def test_roundtrip_identity_fuzz(self, rng):
        for _ in range(300):
            n = int(rng.integers(1, 130))
            trits = rng.integers(-1, 2, size=n).astype(np.int8)
            assert np.array_equal(unpack_trits(pack_trits(trits), n), trits)

    def test_payload_is_ceil_quarter_length(self):
        assert payload_size(1) == 1
        assert payload_size(4) == 1
        assert payload_size(5) == 2
        assert payload_size(4096) == 1024

    def test_encoding_values(self):
        payload = pack_trits(np.array([0, 1, -1, 0], dtype=np.int8))
        # 00 | 01<<2 | 11<<4 | 00<<6 = 0b00110100
        assert payload.tolist() == [0b00110100]

    def test_padding_is_zero(self):
        payload = pack_trits(np.array([-1], dtype=np.int8))
        assert payload.tolist() == [0b11]

    def test_reserved_pattern_rejected(self):
        bad = np.array([0b10], dtype=np.uint8)
        with pytest.raises(SchemaError, match="reserved"):
            validate_payload(bad, 1)

    def test_dirty_padding_rejected(self):
        bad = np.array([0b01_01_01_01], dtype=np.uint8)
        with pytest.raises(SchemaError, match="padding"):
            validate_payload(bad, 3)

    def test_out_of_alphabet_trits_rejected(self):
        with pytest.raises(SchemaError, match="-1, 0"):
            pack_trits(np.array([2], dtype=np.int8))


class TestSignVector:
    def test_pack_checks_layout(self, rng):
        trits = rng.integers(-1, 2, size=10).astype(np.int8)
        with pytest.raises(Exception, match="channels"):
            SignVector.pack(trits, 3, 4)

    def test_planes_shape(self, rng):
        trits = rng.integers(-1, 2, size=3 * 70).astype(np.int8)
        sv = SignVector.pack(trits, 3, 70)
        mask, sign = sv.planes
        assert mask.shape == (3, 2) and sign.shape == (3, 2)

    def test_nonzero_count(self, rng):
        trits = rng.integers(-1, 2, size=64).astype(np.int8)
        sv = SignVector.pack(trits, 4, 16)
        assert sv.nonzero_count() == int((trits != 0).sum())


class TestPlanesDot:
    def test_matches_integer_dot(self, rng):
        for _ in range(200):
            d = int(rng.integers(1, 200))
            a = rng.integers(-1, 2, size=d).astype(np.int8)
            b = rng.integers(-1, 2, size=d).astype(np.int8)
            sva = SignVector.pack(a, 1, d)
            svb = SignVector.pack(b, 1, d)
            got = int(planes_dot(*sva.planes, *svb.planes).sum())
            want = int(a.astype(np.int64) @ b.astype(np.int64))
            assert got == want

    def test_broadcasts_gallery_against_query(self, rng):
        d, n = 100, 17
        gallery = rng.integers(-1, 2, size=(n, d)).astype(np.int8)
        q = rng.integers(-1, 2, size=d).astype(np.int8)
        masks = np.stack([SignVector.pack(g, 1, d).planes[0] for g in gallery])
        signs = np.stack([SignVector.pack(g, 1, d).planes[1] for g in gallery])
        mq, sq = SignVector.pack(q, 1, d).planes
        got = planes_dot(masks, signs, mq, sq).reshape(n)
        want = gallery.astype(np.int64) @ q.astype(np.int64)
        assert np.array_equal(got, want)
