import numpy as np
import pytest

from dancesearch import tdt
from dancesearch.errors import FormatError


def test_round_trip_f64(tmp_path):
    rng = np.random.default_rng(0)
    arr = rng.standard_normal((7, 3, 2))
    path = tmp_path / "a.tdt"
    tdt.write_tensor(path, arr)
    np.testing.assert_array_equal(tdt.read_tensor(path), arr)


def test_round_trip_f32(tmp_path):
    arr = np.arange(12, dtype=np.float32).reshape(3, 4)
    path = tmp_path / "b.tdt"
    tdt.write_tensor(path, arr)
    out = tdt.read_tensor(path)
    assert out.dtype == np.float32
    np.testing.assert_array_equal(out, arr)


def test_scalar_and_1d():
    for arr in (np.float64(3.5), np.array([1.0, 2.0, 3.0])):
        buf = tdt.tensor_bytes(np.asarray(arr))
        out, end = tdt.read_tensor_from(buf)
        assert end == len(buf)
        np.testing.assert_array_equal(out, arr)


def test_header_layout():
    buf = tdt.tensor_bytes(np.zeros((2, 5)))
    assert buf[:4] == b"TDT1"
    assert buf[4] == 0  # f64 code
    assert buf[5] == 2  # ndim
    assert int.from_bytes(buf[6:14], "little") == 2
    assert int.from_bytes(buf[14:22], "little") == 5
    assert len(buf) == 22 + 2 * 5 * 8


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "bad.tdt"
    path.write_bytes(b"NOPE" + b"\x00" * 20)
    with pytest.raises(FormatError, match="magic"):
        tdt.read_tensor(path)


def test_truncated_payload_rejected(tmp_path):
    buf = tdt.tensor_bytes(np.ones((4, 4)))
    path = tmp_path / "short.tdt"
    path.write_bytes(buf[:-8])
    with pytest.raises(FormatError, match="truncated"):
        tdt.read_tensor(path)


def test_trailing_bytes_rejected(tmp_path):
    buf = tdt.tensor_bytes(np.ones(3)) + b"junk"
    path = tmp_path / "trail.tdt"
    path.write_bytes(buf)
    with pytest.raises(FormatError, match="trailing"):
        tdt.read_tensor(path)


def test_blob_concatenation():
    a, b = np.ones((2, 2)), np.zeros(5)
    buf = tdt.tensor_bytes(a) + tdt.tensor_bytes(b)
    first, offset = tdt.read_tensor_from(buf)
    second, end = tdt.read_tensor_from(buf, offset)
    assert end == len(buf)
    np.testing.assert_array_equal(first, a)
    np.testing.assert_array_equal(second, b)
