import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ptxtriage.imaging import (
    ImageGray,
    MalformedHeader,
    OutOfBounds,
    Rect,
    TruncatedData,
    UnsupportedMaxval,
    crop,
    load_image,
    load_pgm,
    normalize_minmax,
    resize_bilinear,
    save_pgm,
)


def pgm(width, height, maxval, payload: bytes, header_extra=b"") -> bytes:
    return f"P5\n{header_extra.decode()}{width} {height}\n{maxval}\n".encode() + payload


class TestLoadPgm:
    def test_8bit_scaling(self):
        img = load_pgm(pgm(2, 2, 255, bytes([0, 255, 128, 64])))
        assert img.width == 2 and img.height == 2
        np.testing.assert_allclose(img.pixels.ravel(), [0.0, 1.0, 128 / 255, 64 / 255])

    def test_16bit_big_endian(self):
        img = load_pgm(pgm(1, 1, 65535, bytes([0xFF, 0xFF])))
        assert img.pixels[0, 0] == 1.0
        img = load_pgm(pgm(1, 1, 65535, bytes([0x01, 0x00])))
        assert img.pixels[0, 0] == pytest.approx(256 / 65535)

    def test_truncated_payload(self):
        with pytest.raises(TruncatedData):
            load_pgm(pgm(2, 2, 255, bytes([0, 1, 2])))

    def test_bad_magic(self):
        with pytest.raises(MalformedHeader):
            load_pgm(b"P6\n1 1\n255\n\x00")
        with pytest.raises(MalformedHeader):
            load_pgm(b"P55\n1 1\n255\n\x00")

    def test_non_numeric_fields(self):
        with pytest.raises(MalformedHeader):
            load_pgm(b"P5\nw h\n255\n\x00")

    def test_unsupported_maxval(self):
        with pytest.raises(UnsupportedMaxval):
            load_pgm(pgm(1, 1, 1023, bytes([0, 0])))

    def test_comments_skipped(self):
        img = load_pgm(pgm(1, 1, 255, bytes([200]), header_extra=b"# a comment\n"))
        assert img.pixels[0, 0] == pytest.approx(200 / 255)

    def test_trailing_bytes_ignored(self):
        img = load_pgm(pgm(1, 1, 255, bytes([7]) + b"\n"))
        assert img.pixels[0, 0] == pytest.approx(7 / 255)

    @given(st.integers(1, 8), st.integers(1, 8), st.integers(0, 2**32))
    def test_roundtrip_8bit_exact(self, w, h, seed):
        raw = np.random.default_rng(seed).integers(0, 256, size=(h, w), dtype=np.uint8)
        img = load_pgm(pgm(w, h, 255, raw.tobytes()))
        again = load_pgm(save_pgm(img))
        assert np.array_equal(img.pixels, again.pixels)

    def test_load_image_dispatch(self, image64):
        assert load_image(save_pgm(image64)).shape == image64.shape


class TestCrop:
    def test_identity(self, image64):
        out = crop(image64, Rect(0, 0, image64.width, image64.height))
        assert np.array_equal(out.pixels, image64.pixels)

    def test_center_pixel(self):
        pix = np.zeros((3, 3))
        pix[1, 1] = 0.5
        out = crop(ImageGray.from_array(pix), Rect(1, 1, 1, 1))
        assert out.pixels.tolist() == [[0.5]]

    def test_out_of_bounds(self):
        img = ImageGray.from_array(np.zeros((3, 3)))
        with pytest.raises(OutOfBounds):
            crop(img, Rect(2, 2, 2, 2))


class TestResize:
    def test_identity_dims(self, image64):
        out = resize_bilinear(image64, image64.width, image64.height)
        np.testing.assert_allclose(out.pixels, image64.pixels, atol=1e-6)

    def test_constant_stays_constant(self):
        img = ImageGray.from_array(np.full((5, 7), 0.7))
        out = resize_bilinear(img, 13, 3)
        np.testing.assert_allclose(out.pixels, 0.7, atol=1e-6)

    def test_upscale_2x1_to_4x1(self):
        # hand evaluation of src = (dst+0.5)*(2/4)-0.5 at dst x = 0..3
        img = ImageGray.from_array(np.array([[0.0, 1.0]]))
        out = resize_bilinear(img, 4, 1)
        np.testing.assert_allclose(out.pixels, [[0.0, 0.25, 0.75, 1.0]], atol=1e-12)

    @given(st.integers(1, 12), st.integers(1, 12), st.integers(1, 12), st.integers(1, 12), st.integers(0, 99))
    @settings(max_examples=60)
    def test_convex_range_bound(self, sw, sh, w, h, seed):
        src = np.random.default_rng(seed).uniform(0, 1, (sh, sw))
        img = ImageGray.from_array(src)
        out = resize_bilinear(img, w, h).pixels
        assert out.min() >= src.min() - 1e-9
        assert out.max() <= src.max() + 1e-9

    @given(st.integers(1, 10), st.integers(1, 10), st.integers(0, 99))
    @settings(max_examples=40)
    def test_full_crop_commutes(self, w, h, seed):
        src = np.random.default_rng(seed).uniform(0, 1, (6, 5))
        resized = resize_bilinear(ImageGray.from_array(src), w, h)
        assert np.array_equal(crop(resized, Rect(0, 0, w, h)).pixels, resized.pixels)


class TestNormalize:
    def test_stretch(self):
        out = normalize_minmax(ImageGray.from_array(np.array([[0.2, 0.6]])))
        np.testing.assert_allclose(out.pixels, [[0.0, 1.0]])

    def test_constant_maps_to_zeros(self):
        out = normalize_minmax(ImageGray.from_array(np.full((2, 2), 0.4)))
        assert out.pixels.max() == 0.0

    def test_spanning_unchanged(self):
        src = np.array([[0.0, 0.25], [0.75, 1.0]])
        out = normalize_minmax(ImageGray.from_array(src))
        np.testing.assert_allclose(out.pixels, src, atol=1e-9)


class TestInvariants:
    def test_pixels_validated(self):
        with pytest.raises(ValueError):
            ImageGray.from_array(np.array([[1.5]]))
        with pytest.raises(ValueError):
            ImageGray.from_array(np.array([[np.nan]]))
        with pytest.raises(ValueError):
            ImageGray.from_array(np.zeros((0, 3)))

    def test_rect_positive_extent(self):
        with pytest.raises(ValueError):
            Rect(0, 0, 0, 1)
