import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fingercount import raster
from fingercount.raster import ParseError


def naive_blur(img):
    """Direct 25-tap convolution with clamped borders."""
    k1 = [1, 4, 6, 4, 1]
    h, w = img.shape
    out = np.zeros((h, w), dtype=np.uint8)
    for y in range(h):
        for x in range(w):
            s = 0
            for j in range(5):
                for i in range(5):
                    yy = min(max(y + j - 2, 0), h - 1)
                    xx = min(max(x + i - 2, 0), w - 1)
                    s += k1[j] * k1[i] * int(img[yy, xx])
            out[y, x] = (s + 128) // 256
    return out


def window_oracle(img):
    h, w = img.shape
    out = np.zeros((h, w), dtype=bool)
    for y in range(h):
        for x in range(w):
            n = 0
            for dy in (-1, 0, 1):
                for dx in (-1, 0, 1):
                    yy, xx = y + dy, x + dx
                    if 0 <= yy < h and 0 <= xx < w and img[yy, xx]:
                        n += 1
            out[y, x] = n >= 7
    return out


binary_images = arrays(np.bool_, st.tuples(st.integers(1, 12), st.integers(1, 12)))
gray_images = arrays(np.uint8, st.tuples(st.integers(1, 10), st.integers(1, 10)))
color_images = arrays(np.uint8, st.tuples(st.integers(1, 8), st.integers(1, 8), st.just(3)))


class TestGrayscale:
    @pytest.mark.parametrize("rgb,expected", [
        ((0, 0, 0), 0),
        ((255, 255, 255), 255),
        ((255, 0, 0), 76),
    ])
    def test_examples(self, rgb, expected):
        img = np.array([[rgb]], dtype=np.uint8)
        assert raster.to_grayscale(img)[0, 0] == expected

    def test_rejects_gray(self):
        with pytest.raises(TypeError):
            raster.to_grayscale(np.zeros((2, 2), np.uint8))


class TestBlur:
    def test_constant(self):
        img = np.full((7, 9), 100, np.uint8)
        assert (raster.gaussian_blur_5x5(img) == 100).all()

    def test_impulse_matches_naive_oracle(self):
        img = np.zeros((9, 9), np.uint8)
        img[4, 4] = 255  # 256 does not fit in uint8; 255 keeps the same shape
        got = raster.gaussian_blur_5x5(img)
        assert np.array_equal(got, naive_blur(img))
        # frozen from the oracle: 255/256 of each tap rounds back to the tap
        k1 = np.array([1, 4, 6, 4, 1])
        assert np.array_equal(got[2:7, 2:7], np.outer(k1, k1))
        assert got.sum() == 256

    def test_one_by_one(self):
        assert raster.gaussian_blur_5x5(np.array([[77]], np.uint8))[0, 0] == 77

    @settings(max_examples=40, deadline=None)
    @given(gray_images)
    def test_matches_oracle_and_stays_in_range(self, img):
        got = raster.gaussian_blur_5x5(img)
        assert np.array_equal(got, naive_blur(img))
        assert got.min() >= img.min() and got.max() <= img.max()


class TestBackgroundSubtract:
    def test_identical(self):
        img = np.random.default_rng(0).integers(0, 256, (5, 6)).astype(np.uint8)
        assert not raster.background_subtract(img, img, 30).any()

    def test_full_difference(self):
        bg = np.zeros((4, 4), np.uint8)
        assert raster.background_subtract(np.full((4, 4), 255, np.uint8), bg, 30).all()

    def test_threshold_straddle(self):
        bg = np.full((3, 3), 100, np.uint8)
        frame = np.full((3, 3), 120, np.uint8)
        assert not raster.background_subtract(frame, bg, 30).any()
        assert raster.background_subtract(frame, bg, 19).all()

    def test_mismatch(self):
        with pytest.raises(ValueError):
            raster.background_subtract(np.zeros((2, 3), np.uint8), np.zeros((3, 2), np.uint8))


class TestDenoise:
    def test_isolated_pixel(self):
        img = np.zeros((5, 5), bool)
        img[2, 2] = True
        assert not raster.denoise_7of9(img).any()

    def test_five_by_five(self):
        img = np.ones((5, 5), bool)
        expected = window_oracle(img)
        assert np.array_equal(raster.denoise_7of9(img), expected)
        assert expected[1:4, 1:4].all() and expected.sum() == 9

    def test_interior_stays(self):
        img = np.zeros((6, 6), bool)
        img[1:5, 1:5] = True
        assert raster.denoise_7of9(img)[2, 2]

    @settings(max_examples=60, deadline=None)
    @given(binary_images)
    def test_matches_window_oracle(self, img):
        assert np.array_equal(raster.denoise_7of9(img), window_oracle(img))

    @settings(max_examples=60, deadline=None)
    @given(binary_images)
    def test_weakly_connected_pixels_vanish(self, img):
        out = raster.denoise_7of9(img)
        for y, x in zip(*np.nonzero(img)):
            nb = img[max(y - 1, 0):y + 2, max(x - 1, 0):x + 2].sum() - 1
            if nb <= 5:
                assert not out[y, x]

    def test_rectangle_shrinks_one_pixel_per_pass(self):
        img = np.zeros((15, 15), bool)
        img[2:11, 3:12] = True  # 9x9
        once = raster.denoise_7of9(img)
        twice = raster.denoise_7of9(once)
        assert once.sum() == 7 * 7 and twice.sum() == 5 * 5
        assert np.array_equal(once[3:10, 4:11], np.ones((7, 7), bool))


class TestDownsample:
    def test_all_white(self):
        assert raster.downsample3(np.ones((9, 9), bool)).all()
        assert raster.downsample3(np.ones((9, 9), bool)).shape == (3, 3)

    def test_grid_hit(self):
        img = np.zeros((6, 6), bool)
        img[0, 0] = True
        out = raster.downsample3(img)
        assert out.shape == (2, 2) and out[0, 0] and out.sum() == 1

    def test_grid_miss(self):
        img = np.zeros((6, 6), bool)
        img[1, 1] = True
        assert not raster.downsample3(img).any()

    def test_too_small(self):
        with pytest.raises(ValueError):
            raster.downsample3(np.ones((2, 5), bool))

    def test_floor_dims(self):
        assert raster.downsample3(np.ones((11, 7), bool)).shape == (3, 2)

    @given(binary_images)
    def test_never_adds_white(self, img):
        if min(img.shape) >= 3:
            assert raster.downsample3(img).sum() <= img.sum()


class TestPnm:
    def test_p5_example(self):
        img = raster.decode_pnm(b"P5 2 1 255\n" + bytes([0, 255]))
        assert img.dtype == np.uint8 and img.tolist() == [[0, 255]]

    def test_p4_example(self):
        img = raster.decode_pnm(b"P4 8 1\n" + bytes([0x80]))
        assert img.dtype == np.bool_
        # bit set = PBM black; with the default polarity only (0, 0) is not hand
        assert img.tolist() == [[False] + [True] * 7]
        inverted = raster.decode_pnm(b"P4 8 1\n" + bytes([0x80]), invert_pbm=True)
        assert inverted.tolist() == [[True] + [False] * 7]

    def test_p7_rejected(self):
        with pytest.raises(ParseError) as info:
            raster.decode_pnm(b"P7 1 1 255\n\x00")
        assert info.value.offset == 0

    @pytest.mark.parametrize("data", [
        b"P5 2 2 255\n\x00\x00\x00",
        b"P6 1 1 255\n\x00",
        b"P4 9 1\n\x00",
        b"P5 2 x 255\n",
        b"P5 2 1",
        b"P5 2 1 65535\n\x00\x00\x00\x00",
    ])
    def test_malformed(self, data):
        with pytest.raises(ParseError):
            raster.decode_pnm(data)

    def test_comment_in_header(self):
        img = raster.decode_pnm(b"P5\n# made by hand\n1 1\n255\n\x07")
        assert img.tolist() == [[7]]

    def test_white_pixel_pbm_bytes(self):
        assert raster.encode_pnm(np.ones((1, 1), bool)) == b"P4\n1 1\n\x00"

    @settings(max_examples=50, deadline=None)
    @given(binary_images)
    def test_round_trip_p4(self, img):
        assert np.array_equal(raster.decode_pnm(raster.encode_pnm(img)), img)

    @settings(max_examples=50, deadline=None)
    @given(gray_images)
    def test_round_trip_p5(self, img):
        out = raster.decode_pnm(raster.encode_pnm(img))
        assert out.dtype == np.uint8 and np.array_equal(out, img)

    @settings(max_examples=50, deadline=None)
    @given(color_images)
    def test_round_trip_p6(self, img):
        out = raster.decode_pnm(raster.encode_pnm(img))
        assert out.shape == img.shape and np.array_equal(out, img)

    def test_file_helpers(self, tmp_path):
        img = np.eye(4, dtype=bool)
        path = tmp_path / "x.pbm"
        raster.write_pnm(path, img)
        assert np.array_equal(raster.read_pnm(path), img)
