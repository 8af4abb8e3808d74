"""Hot inner loops, each in two flavours.

Every kernel ``foo`` exists as ``foo_nb`` (numba, explicit loops) and
``foo_np`` (vectorized numpy).  The unsuffixed name is bound to one of them
according to :mod:`fingercount._accel`.  Both flavours must return identical
results; ``tests/test_kernels.py`` checks that on random inputs.
"""

import math

import numpy as np

from ._accel import USE_NUMBA, njit

# Tolerance added before flooring so that values a rounding error below an
# exact half still round away from zero.
ROUND_EPS = 1e-9

_BINOMIAL = np.array([1, 4, 6, 4, 1], dtype=np.int32)


def round_half_away_np(v):
    v = np.asarray(v, dtype=np.float64)
    return (np.sign(v) * np.floor(np.abs(v) + 0.5 + ROUND_EPS)).astype(np.int64)


@njit
def _round_half_away_scalar(v):
    r = math.floor(abs(v) + 0.5 + ROUND_EPS)
    if v < 0.0:
        return -r
    return r


# ---------------------------------------------------------------------------
# 5x5 binomial blur, replicate border, round half up


def blur5_np(img):
    src = np.pad(img.astype(np.int32), 2, mode="edge")
    h, w = img.shape
    tmp = np.zeros((h + 4, w), dtype=np.int32)
    for i, k in enumerate(_BINOMIAL):
        tmp += k * src[:, i:i + w]
    out = np.zeros((h, w), dtype=np.int32)
    for i, k in enumerate(_BINOMIAL):
        out += k * tmp[i:i + h, :]
    return ((out + 128) >> 8).astype(np.uint8)


@njit
def blur5_nb(img):
    h, w = img.shape
    weights = np.array([1, 4, 6, 4, 1], dtype=np.int32)
    tmp = np.zeros((h, w), dtype=np.int32)
    for y in range(h):
        for x in range(w):
            s = 0
            for i in range(5):
                xx = min(max(x + i - 2, 0), w - 1)
                s += weights[i] * np.int32(img[y, xx])
            tmp[y, x] = s
    out = np.empty((h, w), dtype=np.uint8)
    for y in range(h):
        for x in range(w):
            s = 0
            for i in range(5):
                yy = min(max(y + i - 2, 0), h - 1)
                s += weights[i] * tmp[yy, x]
            out[y, x] = (s + 128) >> 8
    return out


# ---------------------------------------------------------------------------
# 3x3 white count with black (zero) padding


def window_count3_np(img):
    h, w = img.shape
    src = np.pad(img.astype(np.uint8), 1)
    out = np.zeros((h, w), dtype=np.uint8)
    for dy in range(3):
        for dx in range(3):
            out += src[dy:dy + h, dx:dx + w]
    return out


@njit
def window_count3_nb(img):
    # separable: horizontal 3-sums, then vertical 3-sums of those
    h, w = img.shape
    rows = np.zeros((h + 2, w), dtype=np.uint8)
    for y in range(h):
        left = np.uint8(0)
        cur = np.uint8(img[y, 0])
        for x in range(w):
            right = np.uint8(img[y, x + 1]) if x + 1 < w else np.uint8(0)
            rows[y + 1, x] = left + cur + right
            left = cur
            cur = right
    out = np.empty((h, w), dtype=np.uint8)
    for y in range(h):
        for x in range(w):
            out[y, x] = rows[y, x] + rows[y + 1, x] + rows[y + 2, x]
    return out


# ---------------------------------------------------------------------------
# Valley scan.
#
# ``work`` is modified in place: every scan line before the one holding the
# valley is blackened.  ``y0[x]`` is the row of the k = 0 line in column x;
# line k sits at row y0[x] - k.  Returns (k, first black column, run length)
# or (-1, 0, 0).


def _last_white_line(work, y0):
    h = work.shape[0]
    has = work.any(axis=0)
    if not has.any():
        return -1
    top = np.argmax(work, axis=0)
    kt = y0 - top
    return int(kt[has].max())


def scan_valley_np(work, y0, min_white, min_black):
    h, w = work.shape
    kstop = _last_white_line(work, y0)
    if kstop < 0:
        return -1, 0, 0
    ks = np.arange(kstop + 1, dtype=np.int64)
    ys = y0[None, :] - ks[:, None]
    valid = (ys >= 0) & (ys < h)
    cols = np.broadcast_to(np.arange(w), ys.shape)
    samples = np.zeros((kstop + 1, w + 2), dtype=np.int8)
    samples[:, 1:-1] = work[np.clip(ys, 0, h - 1), cols] & valid
    flat = samples.ravel()
    d = np.diff(flat)
    starts = np.flatnonzero(d == 1) + 1
    ends = np.flatnonzero(d == -1) + 1
    found = -1
    if len(starts) > 1:
        stride = w + 2
        same_row = (starts[1:] // stride) == (starts[:-1] // stride)
        left = ends[:-1] - starts[:-1]
        gap = starts[1:] - ends[:-1]
        right = ends[1:] - starts[1:]
        ok = same_row & (left >= min_white) & (gap >= min_black) & (right >= min_white)
        hits = np.flatnonzero(ok)
        if len(hits):
            found = hits[0]
    if found < 0:
        work[ys[valid], cols[valid]] = False
        return -1, 0, 0
    stride = w + 2
    k = int(ends[found] // stride)
    x_start = int(ends[found] - k * stride - 1)
    length = int(starts[found + 1] - ends[found])
    before = valid[:k]
    work[ys[:k][before], cols[:k][before]] = False
    return k, x_start, length


@njit
def scan_valley_nb(work, y0, min_white, min_black):
    h, w = work.shape
    kstop = -1
    for x in range(w):
        for y in range(h):
            if work[y, x]:
                kt = y0[x] - y
                if kt > kstop:
                    kstop = kt
                break
    for k in range(kstop + 1):
        # runs: previous white length, black length, current run
        prev_white = 0
        black = 0
        black_start = 0
        cur_white = 0
        in_white = False
        for x in range(w):
            y = y0[x] - k
            if y < 0 or y >= h:
                continue
            if work[y, x]:
                if not in_white:
                    in_white = True
                    cur_white = 0
                cur_white += 1
                if (cur_white == min_white and black >= min_black
                        and prev_white >= min_white):
                    return k, black_start, black
            else:
                if in_white:
                    in_white = False
                    prev_white = cur_white
                    black = 0
                    black_start = x
                if prev_white > 0:
                    black += 1
        for x in range(w):
            y = y0[x] - k
            if 0 <= y < h:
                work[y, x] = False
    return -1, 0, 0


# ---------------------------------------------------------------------------
# Split-line search: index of the first line (a, b, c) whose rasterized locus
# touches no white pixel, or -1.


def first_clean_line_np(img, a, b, c):
    h, w = img.shape
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    dirty = np.ones(len(a), dtype=bool)
    horiz = np.abs(b) >= np.abs(a)
    if horiz.any():
        xs = np.arange(w, dtype=np.float64)
        ah, bh, ch = a[horiz, None], b[horiz, None], c[horiz, None]
        ys = round_half_away_np((-ch - ah * xs) / bh)
        valid = (ys >= 0) & (ys < h)
        hit = img[np.clip(ys, 0, h - 1), np.arange(w)[None, :]] & valid
        dirty[horiz] = hit.any(axis=1)
    vert = ~horiz
    if vert.any():
        ys = np.arange(h, dtype=np.float64)
        av, bv, cv = a[vert, None], b[vert, None], c[vert, None]
        xs = round_half_away_np((-cv - bv * ys) / av)
        valid = (xs >= 0) & (xs < w)
        hit = img[np.arange(h)[None, :], np.clip(xs, 0, w - 1)] & valid
        dirty[vert] = hit.any(axis=1)
    clean = np.flatnonzero(~dirty)
    return int(clean[0]) if len(clean) else -1


@njit
def first_clean_line_nb(img, a, b, c):
    h, w = img.shape
    for i in range(len(a)):
        dirty = False
        if abs(b[i]) >= abs(a[i]):
            for x in range(w):
                y = _round_half_away_scalar((-c[i] - a[i] * x) / b[i])
                if 0 <= y < h and img[y, x]:
                    dirty = True
                    break
        else:
            for y in range(h):
                x = _round_half_away_scalar((-c[i] - b[i] * y) / a[i])
                if 0 <= x < w and img[y, x]:
                    dirty = True
                    break
        if not dirty:
            return i
    return -1


if USE_NUMBA:
    blur5 = blur5_nb
    window_count3 = window_count3_nb
    scan_valley = scan_valley_nb
    first_clean_line = first_clean_line_nb
else:
    blur5 = blur5_np
    window_count3 = window_count3_np
    scan_valley = scan_valley_np
    first_clean_line = first_clean_line_np
