import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image as PILImage

from stripedge.image_io import (
    Image, ImageFormatError, load_image, quantize, save_field, save_mask, save_pgm,
)


def write_bytes(path, data):
    path.write_bytes(data)
    return path


def test_8bit_pgm_normalized(tmp_path):
    p = write_bytes(tmp_path / "a.pgm", b"P5\n2 2\n255\n" + bytes([0, 255, 0, 255]))
    img = load_image(p)
    assert img.shape == (2, 2)
    np.testing.assert_array_equal(img.data.ravel(), [0.0, 1.0, 0.0, 1.0])


def test_constant_pgm(tmp_path):
    p = write_bytes(tmp_path / "c.pgm", b"P5\n2 2\n255\n" + bytes([128] * 4))
    np.testing.assert_array_equal(load_image(p).data, np.full((2, 2), 128 / 255))


def test_16bit_pgm_max_is_one(tmp_path):
    samples = np.zeros(9, dtype=">u2")
    samples[4] = 65535
    samples[0] = 1000
    p = write_bytes(tmp_path / "w.pgm", b"P5\n3 3\n65535\n" + samples.tobytes())
    img = load_image(p)
    assert img.data[1, 1] == 1.0
    assert img.data[0, 0] == pytest.approx(1000 / 65535)


def test_ascii_pgm_with_comments(tmp_path):
    p = write_bytes(tmp_path / "t.pgm", b"P2\n# comment\n3 2\n# more\n10\n0 5 10\n10 5 0\n")
    np.testing.assert_allclose(load_image(p).data, [[0, 0.5, 1], [1, 0.5, 0]])


def test_png_gray_and_rgb(tmp_path):
    gray = np.array([[0, 51], [102, 255]], dtype=np.uint8)
    PILImage.fromarray(gray).save(tmp_path / "g.png")
    np.testing.assert_allclose(load_image(tmp_path / "g.png").data, gray / 255)

    rgb = np.zeros((2, 2, 3), dtype=np.uint8)
    rgb[0, 0] = (255, 0, 0)
    rgb[1, 1] = (255, 255, 255)
    PILImage.fromarray(rgb).save(tmp_path / "c.png")
    data = load_image(tmp_path / "c.png").data
    assert data[0, 0] == pytest.approx(0.299)
    assert data[1, 1] == pytest.approx(1.0)
    assert data[0, 1] == 0.0


def test_h_from_config(tmp_path):
    p = write_bytes(tmp_path / "a.pgm", b"P5\n2 2\n255\n" + bytes(4))
    assert load_image(p, h=0.25).h == 0.25


@pytest.mark.parametrize("payload", [
    b"P6\n2 2\n255\n" + bytes(12),
    b"GIF89a....",
    b"P5\n2 2\n255\n" + bytes(2),
    b"P5\n0 2\n255\n",
])
def test_bad_files(tmp_path, payload):
    p = write_bytes(tmp_path / "bad.pgm", payload)
    with pytest.raises(ImageFormatError):
        load_image(p)


def test_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_image(tmp_path / "nope.pgm")


def test_image_invariants():
    with pytest.raises(ValueError):
        Image(np.zeros((1, 5)))
    with pytest.raises(ValueError):
        Image(np.full((3, 3), 1.5))


def test_save_mask_empty_and_single(tmp_path):
    save_mask(np.zeros((4, 5), bool), (4, 5), tmp_path / "e.pgm")
    assert not load_image(tmp_path / "e.pgm").data.any()

    save_mask([7], (4, 5), tmp_path / "s.pgm")
    data = load_image(tmp_path / "s.pgm").data
    assert data.sum() == 1.0 and data[1, 2] == 1.0


def test_save_field_quantization(tmp_path):
    save_field(np.full((3, 3), 0.5), tmp_path / "h.pgm")
    raw = (tmp_path / "h.pgm").read_bytes()
    assert raw.endswith(bytes([128] * 9))
    assert list(quantize(np.array([1.2, -0.1]))) == [255, 0]


def test_save_pgm_deterministic(tmp_path):
    arr = np.arange(12, dtype=np.uint8).reshape(3, 4)
    save_pgm(arr, tmp_path / "1.pgm")
    save_pgm(arr, tmp_path / "2.pgm")
    assert (tmp_path / "1.pgm").read_bytes() == (tmp_path / "2.pgm").read_bytes()


def test_unwritable_path(tmp_path):
    with pytest.raises(OSError):
        save_field(np.zeros((2, 2)), tmp_path / "missing" / "x.pgm")


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-0.5, 1.5, allow_nan=False), min_size=4, max_size=4))
def test_field_round_trip(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("rt") / "f.pgm"
    field = np.array(values).reshape(2, 2)
    save_field(field, path)
    back = load_image(path).data
    assert np.all(np.abs(back - np.clip(field, 0, 1)) <= 1 / 510 + 1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 65535), st.integers(0, 65535))
def test_normalization_monotone(tmp_path_factory, a, b):
    path = tmp_path_factory.mktemp("mono") / "m.pgm"
    samples = np.array([a, b, 0, 0], dtype=">u2")
    path.write_bytes(b"P5\n2 2\n65535\n" + samples.tobytes())
    data = load_image(path).data
    if a < b:
        assert data[0, 0] <= data[0, 1]
