"""Pixel buffers, preprocessing filters and binary PNM I/O.

Images are plain numpy arrays indexed ``[y, x]`` with the origin at the
top-left corner:

* gray image   -- ``uint8`` array of shape ``(h, w)``
* color image  -- ``uint8`` array of shape ``(h, w, 3)`` holding R, G, B
* binary image -- ``bool`` array of shape ``(h, w)``, True = white = hand
"""

import re

import numpy as np

from . import kernels


class ParseError(ValueError):
    """Malformed PNM data.  ``offset`` is the byte position of the problem."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


def is_binary(img):
    return isinstance(img, np.ndarray) and img.dtype == np.bool_ and img.ndim == 2


def is_gray(img):
    return isinstance(img, np.ndarray) and img.dtype == np.uint8 and img.ndim == 2


def is_color(img):
    return (isinstance(img, np.ndarray) and img.dtype == np.uint8
            and img.ndim == 3 and img.shape[2] == 3)


def _check_nonempty(img):
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError(f"image must be at least 1x1, got shape {img.shape}")


def to_grayscale(img):
    """BT.601 luma, rounded half up and clamped to [0, 255]."""
    if not is_color(img):
        raise TypeError("expected a uint8 (h, w, 3) color image")
    rgb = img.astype(np.float64)
    luma = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    return np.clip(np.floor(luma + 0.5), 0, 255).astype(np.uint8)


def gaussian_blur_5x5(img):
    """Convolve with the 5x5 binomial kernel (1 4 6 4 1)^2 / 256.

    Borders replicate the edge pixel; the result is rounded half up.
    """
    if not is_gray(img):
        raise TypeError("expected a uint8 (h, w) gray image")
    _check_nonempty(img)
    return kernels.blur5(np.ascontiguousarray(img))


def background_subtract(frame, background_blurred, threshold=30):
    """White where the frame differs from the background by more than threshold."""
    if frame.shape != background_blurred.shape:
        raise ValueError(
            f"frame {frame.shape} and background {background_blurred.shape} differ in size")
    if not 1 <= threshold <= 255:
        raise ValueError(f"threshold must be in [1, 255], got {threshold}")
    diff = np.abs(frame.astype(np.int16) - background_blurred.astype(np.int16))
    return diff > threshold


def denoise_7of9(img):
    """Keep a pixel white only if at least 7 of its 3x3 window are white.

    Cells outside the image count as black.
    """
    if not is_binary(img):
        raise TypeError("expected a bool (h, w) binary image")
    return kernels.window_count3(np.ascontiguousarray(img)) >= 7


def downsample(img, factor=3):
    """Point-sample every ``factor``-th pixel in both directions."""
    if factor < 1:
        raise ValueError("downsample factor must be >= 1")
    h, w = img.shape[:2]
    if h // factor < 1 or w // factor < 1:
        raise ValueError(f"image {w}x{h} is smaller than the factor {factor}")
    out_h, out_w = h // factor, w // factor
    return img[:out_h * factor:factor, :out_w * factor:factor].copy()


def downsample3(img):
    if img.shape[0] < 3 or img.shape[1] < 3:
        raise ValueError(f"downsample3 needs at least 3x3, got {img.shape[1]}x{img.shape[0]}")
    return downsample(img, 3)


# ---------------------------------------------------------------------------
# PNM

_WS = b" \t\n\r\v\f"


def _read_header(data, nfields):
    """Parse magic plus ``nfields`` integers; return (magic, values, data offset)."""
    pos = 0
    if len(data) < 2:
        raise ParseError("truncated header", len(data))
    magic = data[:2]
    if magic not in (b"P4", b"P5", b"P6"):
        raise ParseError(f"unsupported magic {magic!r}", 0)
    pos = 2
    values = []
    while len(values) < nfields:
        if pos >= len(data):
            raise ParseError("truncated header", pos)
        ch = data[pos:pos + 1]
        if ch in (b" ", b"\t", b"\n", b"\r", b"\v", b"\f"):
            pos += 1
            continue
        if ch == b"#":
            nl = data.find(b"\n", pos)
            if nl < 0:
                raise ParseError("unterminated comment", pos)
            pos = nl + 1
            continue
        m = re.compile(rb"\d+").match(data, pos)
        if m is None:
            raise ParseError(f"expected an integer, got {ch!r}", pos)
        values.append(int(m.group()))
        pos = m.end()
    if pos >= len(data) or data[pos] not in _WS:
        raise ParseError("missing whitespace after header", pos)
    return magic, values, pos + 1


def decode_pnm(data, invert_pbm=False):
    """Decode binary P4/P5/P6 bytes into a bool, gray or color array.

    PBM stores 1 for black ink, so a 0 bit becomes a white (True) pixel unless
    ``invert_pbm`` is set.
    """
    data = bytes(data)
    magic = data[:2]
    nfields = 2 if magic == b"P4" else 3
    magic, values, pos = _read_header(data, nfields)
    w, h = values[0], values[1]
    if w < 1 or h < 1:
        raise ParseError(f"bad dimensions {w}x{h}", 3)
    if magic == b"P4":
        row_bytes = (w + 7) // 8
        need = row_bytes * h
        if len(data) - pos < need:
            raise ParseError(f"truncated raster: need {need} bytes", len(data))
        packed = np.frombuffer(data, dtype=np.uint8, count=need, offset=pos)
        bits = np.unpackbits(packed.reshape(h, row_bytes), axis=1)[:, :w].astype(bool)
        return bits if invert_pbm else ~bits
    maxval = values[2]
    if maxval != 255:
        raise ParseError(f"unsupported maxval {maxval}", pos - 1)
    channels = 1 if magic == b"P5" else 3
    need = w * h * channels
    if len(data) - pos < need:
        raise ParseError(f"truncated raster: need {need} bytes", len(data))
    arr = np.frombuffer(data, dtype=np.uint8, count=need, offset=pos)
    if channels == 1:
        return arr.reshape(h, w).copy()
    return arr.reshape(h, w, 3).copy()


def encode_pnm(img, invert_pbm=False):
    """Encode an image as P4 (bool), P5 (gray) or P6 (color) bytes."""
    if is_binary(img):
        h, w = img.shape
        bits = img if invert_pbm else ~img
        packed = np.packbits(bits.astype(np.uint8), axis=1)
        return f"P4\n{w} {h}\n".encode() + packed.tobytes()
    if is_gray(img):
        h, w = img.shape
        return f"P5\n{w} {h}\n255\n".encode() + np.ascontiguousarray(img).tobytes()
    if is_color(img):
        h, w = img.shape[:2]
        return f"P6\n{w} {h}\n255\n".encode() + np.ascontiguousarray(img).tobytes()
    raise TypeError(f"cannot encode array of dtype {img.dtype} and shape {img.shape}")


def read_pnm(path, invert_pbm=False):
    with open(path, "rb") as fh:
        return decode_pnm(fh.read(), invert_pbm=invert_pbm)


def write_pnm(path, img, invert_pbm=False):
    with open(path, "wb") as fh:
        fh.write(encode_pnm(img, invert_pbm=invert_pbm))
