import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from mipr3d.errors import FormatError
from mipr3d.raster import HEADER_SIZE, decode, encode, read_intensity, read_raster, write_raster


def test_header_layout():
    data = np.arange(6, dtype=np.float32).reshape(2, 3)
    buf = encode(data, 0.25, 0.532)
    assert HEADER_SIZE == 29
    assert buf[:4] == b"MSF1"
    assert buf[4] == 1
    assert struct.unpack("<II", buf[5:13]) == (3, 2)  # width, height
    assert struct.unpack("<dd", buf[13:29]) == (0.25, 0.532)
    assert len(buf) == 29 + 6 * 4
    assert np.frombuffer(buf[29:], "<f4").tolist() == [0, 1, 2, 3, 4, 5]


def test_complex_payload_is_interleaved():
    buf = encode(np.array([[1 + 2j, 3 - 4j]], dtype=np.complex64), 1.0, 1.0)
    assert buf[4] == 2
    assert np.frombuffer(buf[29:], "<f4").tolist() == [1, 2, 3, -4]


shapes = hnp.array_shapes(min_dims=2, max_dims=2, min_side=1, max_side=9)


@settings(max_examples=50, deadline=None)
@given(
    data=hnp.arrays(np.float32, shapes, elements=st.floats(width=32)),
    pitch=st.floats(allow_nan=False),
    wavelength=st.floats(allow_nan=False),
)
def test_real_round_trip_bit_exact(data, pitch, wavelength):
    r = decode(encode(data, pitch, wavelength))
    assert r.data.dtype == np.float32
    assert r.data.tobytes() == data.astype("<f4").tobytes()
    assert struct.pack("<dd", r.pitch, r.wavelength) == struct.pack("<dd", pitch, wavelength)


@settings(max_examples=50, deadline=None)
@given(data=hnp.arrays(np.complex64, shapes, elements=st.complex_numbers(width=64)))
def test_complex_round_trip_bit_exact(data):
    buf = encode(data, 1.0, 0.5)
    assert decode(buf).data.tobytes() == data.astype("<c8").tobytes()
    assert encode(decode(buf).data, 1.0, 0.5) == buf


def test_file_round_trip(tmp_path):
    data = (np.arange(12).reshape(3, 4) * (1 - 0.5j)).astype(np.complex64)
    write_raster(tmp_path / "a.msf", data, 2.0, 3.0)
    r = read_raster(tmp_path / "a.msf")
    assert r.is_complex and r.data.shape == (3, 4)
    np.testing.assert_array_equal(r.data, data)
    assert (r.pitch, r.wavelength) == (2.0, 3.0)


@pytest.mark.parametrize(
    "mutate, offset",
    [
        (lambda b: b[:10], 10),
        (lambda b: b"MSF2" + b[4:], 0),
        (lambda b: b[:4] + b"\x07" + b[5:], 4),
        (lambda b: b[:-1], 29 + 7),
        (lambda b: b + b"\x00", 29 + 8),
    ],
)
def test_corrupt_files_report_offset(mutate, offset):
    buf = encode(np.zeros((2, 1), np.float32), 1.0, 1.0)
    with pytest.raises(FormatError) as info:
        decode(mutate(buf))
    assert info.value.offset == offset
    assert f"offset {offset}" in str(info.value)
    assert info.value.exit_code == 4


def test_missing_file(tmp_path):
    with pytest.raises(FormatError):
        read_raster(tmp_path / "nope.msf")


def test_non_2d_rejected():
    with pytest.raises(FormatError):
        encode(np.zeros(3), 1.0, 1.0)


def test_png_intensity(tmp_path):
    from PIL import Image

    img = (np.arange(16, dtype=np.uint16).reshape(4, 4) * 4000)
    Image.fromarray(img).save(tmp_path / "h.png")
    r = read_intensity(tmp_path / "h.png", pitch=1.375, wavelength=0.532)
    np.testing.assert_array_equal(r.data, img.astype(np.float32))
    assert r.pitch == 1.375
    with pytest.raises(FormatError):
        read_intensity(tmp_path / "h.png")
    write_raster(tmp_path / "c.msf", np.ones((2, 2), np.complex64), 1.0, 1.0)
    with pytest.raises(FormatError):
        read_intensity(tmp_path / "c.msf")
