"""Tests for the BEVT tensor container."""

import struct

import numpy as np
import pytest

from kit_errors import ErrorKind, TensorFormatError
from tensor_io import MAGIC, atomic_write_bytes, decode_tensor, encode_tensor, load_tensor, save_tensor


def test_layout_of_small_tensor():
    blob = encode_tensor(np.zeros((2, 3)))
    assert len(blob) == 42
    assert blob[:4] == MAGIC
    assert blob[4:10] == bytes([1, 0]) + struct.pack("<I", 2)
    assert struct.unpack_from("<2I", blob, 10) == (2, 3)
    assert blob[18:] == bytes(24)


@pytest.mark.parametrize("shape", [(), (0,), (3, 0, 2), (1,), (4, 5), (2, 3, 4)])
def test_round_trip(rng, shape):
    array = rng.standard_normal(shape).astype(np.float32)
    decoded = decode_tensor(encode_tensor(array))
    assert decoded.shape == array.shape
    assert decoded.dtype == np.float32
    np.testing.assert_array_equal(decoded, array)


def test_values_are_stored_as_float32():
    decoded = decode_tensor(encode_tensor(np.array([0.1], dtype=np.float64)))
    assert decoded[0] == np.float32(0.1)


def test_non_contiguous_input(rng):
    array = rng.standard_normal((6, 8)).astype(np.float32)[::2, ::-1]
    np.testing.assert_array_equal(decode_tensor(encode_tensor(array)), array)


def _error_kind(blob):
    with pytest.raises(TensorFormatError) as info:
        decode_tensor(blob)
    return info.value.kind


class TestMalformed:
    GOOD = encode_tensor(np.arange(6, dtype=np.float32).reshape(2, 3))

    def test_bad_magic(self):
        assert _error_kind(b"BEVX" + self.GOOD[4:]) is ErrorKind.BAD_MAGIC
        assert _error_kind(b"XY") is ErrorKind.BAD_MAGIC

    def test_bad_version(self):
        assert _error_kind(self.GOOD[:4] + bytes([2]) + self.GOOD[5:]) is ErrorKind.BAD_VERSION

    def test_bad_dtype(self):
        assert _error_kind(self.GOOD[:5] + bytes([1]) + self.GOOD[6:]) is ErrorKind.BAD_DTYPE

    @pytest.mark.parametrize("cut", [0, 2, 9, 12, 17, 20, 41])
    def test_truncated(self, cut):
        assert _error_kind(self.GOOD[:cut]) is ErrorKind.TRUNCATED

    def test_trailing_data(self):
        assert _error_kind(self.GOOD + b"\x00") is ErrorKind.TRAILING_DATA


class TestFiles:
    def test_save_and_load(self, tmp_path, rng):
        array = rng.standard_normal((3, 4, 5)).astype(np.float32)
        path = tmp_path / "nested" / "bev.bevt"
        save_tensor(path, array)
        np.testing.assert_array_equal(load_tensor(path), array)
        assert sorted(p.name for p in path.parent.iterdir()) == ["bev.bevt"]

    def test_overwrite_is_complete(self, tmp_path):
        path = tmp_path / "t.bevt"
        save_tensor(path, np.ones((10, 10)))
        save_tensor(path, np.zeros(2))
        np.testing.assert_array_equal(load_tensor(path), np.zeros(2, dtype=np.float32))

    def test_failed_write_leaves_no_temporary(self, tmp_path):
        path = tmp_path / "out.bin"
        with pytest.raises(TypeError):
            atomic_write_bytes(path, "not bytes")
        assert list(tmp_path.iterdir()) == []
