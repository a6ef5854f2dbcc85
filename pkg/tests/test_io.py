from __future__ import annotations

import struct

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ewagg import io as mio

matrices = st.tuples(st.integers(1, 6), st.integers(1, 6)).flatmap(
    lambda s: arrays(np.float64, s, elements=st.floats(allow_nan=False, allow_infinity=False))
)


@settings(suppress_health_check=[HealthCheck.function_scoped_fixture], max_examples=60)
@given(matrices)
def test_csv_round_trip_bit_exact(tmp_path, m):
    p = tmp_path / "m.csv"
    mio.write_csv(p, m)
    back = mio.read_csv(p)
    assert back.tobytes() == m.tobytes()


@settings(suppress_health_check=[HealthCheck.function_scoped_fixture], max_examples=60)
@given(matrices)
def test_binary_round_trip_bit_exact(tmp_path, m):
    p = tmp_path / "m.bin"
    mio.write_binary(p, m)
    assert mio.read_binary(p).tobytes() == m.tobytes()
    assert mio.read_matrix(p).tobytes() == m.tobytes()


def test_binary_layout(tmp_path):
    m = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
    p = tmp_path / "m.bin"
    mio.write_binary(p, m)
    raw = p.read_bytes()
    assert raw[:4] == b"EWAM"
    assert struct.unpack("<III", raw[4:16]) == (2, 3, 0)
    # column-major payload
    assert np.frombuffer(raw[16:], "<f8").tolist() == [1, 4, 2, 5, 3, 6]
    assert len(raw) == 16 + 8 * 6


def test_write_matrix_dispatch(tmp_path):
    m = np.arange(6.0).reshape(2, 3)
    mio.write_matrix(tmp_path / "a.csv", m)
    mio.write_matrix(tmp_path / "a.dat", m)
    assert (tmp_path / "a.csv").read_text().startswith("0,1,2")
    assert (tmp_path / "a.dat").read_bytes()[:4] == b"EWAM"
    np.testing.assert_array_equal(mio.read_matrix(tmp_path / "a.csv"), m)


def test_bad_binary(tmp_path):
    p = tmp_path / "x.bin"
    p.write_bytes(b"EWAM" + struct.pack("<III", 2, 2, 0) + b"\0" * 8)
    with pytest.raises(mio.FormatError):
        mio.read_binary(p)
    p.write_bytes(b"NOPE" + struct.pack("<III", 1, 1, 0) + b"\0" * 8)
    with pytest.raises(mio.FormatError):
        mio.read_binary(p)
    p.write_bytes(b"EW")
    with pytest.raises(mio.FormatError):
        mio.read_binary(p)


def test_ppm_round_trip(tmp_path, rng):
    img = rng.integers(0, 256, size=(6, 9, 3)).astype(float)
    p = tmp_path / "x.ppm"
    mio.write_ppm(p, img)
    assert p.read_bytes().startswith(b"P6\n9 6\n255\n")
    np.testing.assert_array_equal(mio.read_ppm(p), img)


def test_pgm_round_trip_and_comments(tmp_path, rng):
    img = rng.integers(0, 256, size=(4, 5)).astype(float)
    p = tmp_path / "x.pgm"
    p.write_bytes(b"P5\n# a comment\n5 4\n255\n" + img.astype(np.uint8).tobytes())
    np.testing.assert_array_equal(mio.read_ppm(p)[:, :, 0], img)


def test_clamping_on_write(tmp_path):
    img = np.array([[[300.0, -5.0, 127.6]]])
    p = tmp_path / "c.ppm"
    mio.write_ppm(p, img)
    assert mio.read_ppm(p).ravel().tolist() == [255.0, 0.0, 128.0]


def test_ppm_rejects_other_formats(tmp_path):
    p = tmp_path / "x.ppm"
    p.write_bytes(b"P3\n1 1\n255\n0 0 0\n")
    with pytest.raises(mio.FormatError):
        mio.read_ppm(p)
    p.write_bytes(b"P6\n2 2\n255\n\0\0")
    with pytest.raises(mio.FormatError):
        mio.read_ppm(p)
