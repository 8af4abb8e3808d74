"""Recursive valley splitting and the finger test.

A region is scanned upward, line by line parallel to its base line, until a
scan line shows a gap between two white runs (a valley).  A straight line
through the valley that touches no white pixel splits the region in two and
both halves are processed again.  Regions without a valley are classified by
their area and by the ratio of their extent along and across the base line.
"""

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .geometry import (
    GeometryError,
    LineG,
    Point,
    line_at_angle,
    line_through,
    locus_arrays,
    perpendicular_at,
    translate_intercept,
)


class SplitDidNotConverge(RuntimeError):
    pass


class Verdict(enum.Enum):
    FINGER = "finger"
    REJECTED_AREA = "rejected_area"
    REJECTED_RATIO = "rejected_ratio"
    INTERNAL = "internal"


@dataclass(frozen=True)
class ScanParams:
    min_white_run: int = 4
    min_black_run: int = 2
    hw_ratio: float = 1.3
    angle_step: float = 1.0
    lift_offset: int = 2
    max_depth: int = 32

    def __post_init__(self):
        if self.min_white_run < 1:
            raise ValueError("min_white_run must be >= 1")
        if self.min_black_run < 1:
            raise ValueError("min_black_run must be >= 1")
        if not self.hw_ratio > 0:
            raise ValueError("hw_ratio must be > 0")
        if not 0 < self.angle_step <= 45:
            raise ValueError("angle_step must be in (0, 45]")
        if self.lift_offset < 0:
            raise ValueError("lift_offset must be >= 0")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")

    @property
    def area_threshold(self):
        return self.min_white_run ** 2


@dataclass(frozen=True)
class ValleyPoint:
    position: Point
    scan_line: LineG


@dataclass
class SegmentNode:
    image: np.ndarray
    centroid: Optional[Point]
    base_line: Optional[LineG]
    valley: Optional[ValleyPoint] = None
    split_line: Optional[LineG] = None
    children: list = field(default_factory=list)
    verdict: Verdict = Verdict.INTERNAL
    depth: int = 0

    @property
    def area(self):
        return int(np.count_nonzero(self.image))

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()

    def leaves(self):
        return [n for n in self.walk() if not n.children]


@dataclass
class DetectionResult:
    finger_count: int
    orientation_deg: float
    root: SegmentNode
    scale: int = 1


# ---------------------------------------------------------------------------
# centroids and base lines


def _mean_point(xs, ys):
    # integer sums keep the mean exact regardless of summation order
    n = len(xs)
    return Point(int(np.sum(xs, dtype=np.int64)) / n, int(np.sum(ys, dtype=np.int64)) / n)


def centroid(img):
    ys, xs = np.nonzero(img)
    if len(xs) == 0:
        raise ValueError("empty region")
    return _mean_point(xs, ys)


def row_anchor_centroid(img):
    """Mean of the white pixels on the lowest row that has any."""
    rows = np.flatnonzero(img.any(axis=1))
    if len(rows) == 0:
        raise ValueError("empty region")
    y = rows[-1]
    xs = np.flatnonzero(img[y])
    return Point(int(xs.sum()) / len(xs), float(y))


def line_anchor_centroid(img, line):
    h, w = img.shape
    xs, ys = locus_arrays(line, w, h)
    on = img[ys, xs]
    if not on.any():
        return None
    return _mean_point(xs[on], ys[on])


def initial_base_line(img):
    anchor = row_anchor_centroid(img)
    c = centroid(img)
    if math.hypot(c.x - anchor.x, c.y - anchor.y) < 1e-12:
        return LineG(0.0, 1.0, -anchor.y)
    return perpendicular_at(line_through(anchor, c), anchor)


def orientation_of(base):
    """Tilt of the hand axis from vertical, in degrees within (-90, 90].

    The hand axis is the base line's normal pointed toward the image top;
    a positive angle means the hand leans toward +x.
    """
    nx, ny = base.a, base.b
    if ny > 0 or (ny == 0 and nx < 0):
        nx, ny = -nx, -ny
    angle = math.degrees(math.atan2(nx, -ny))
    if angle <= -90.0:
        angle += 180.0
    return angle + 0.0


# ---------------------------------------------------------------------------
# valley scan and splitting


def _base_rows(base, width):
    """Row of the base line in every column (may fall outside the image)."""
    xs = np.arange(width, dtype=np.float64)
    return kernels.round_half_away_np((-base.c - base.a * xs) / base.b)


def find_lowest_valley(img, base, params=ScanParams()):
    """Scan upward from ``base`` for the first valley.

    Returns ``(valley or None, scanned)``.  In ``scanned`` every pixel below
    the base line and every fully scanned line is black; the line holding
    the valley is left as it was.
    """
    if not base.mostly_horizontal and abs(base.b) < abs(base.a) - 1e-12:
        raise GeometryError("base line steeper than 45 degrees")
    h, w = img.shape
    y0 = np.clip(_base_rows(base, w), -1, h + abs(int(h)) + w)
    work = np.array(img, dtype=bool, copy=True)
    work[np.arange(h)[:, None] > y0[None, :]] = False
    k, x_start, length = kernels.scan_valley(work, y0, params.min_white_run,
                                             params.min_black_run)
    if k < 0:
        return None, work
    xs = np.arange(x_start, x_start + length)
    ys = y0[xs] - k
    position = _mean_point(xs, ys)
    return ValleyPoint(position, translate_intercept(base, -k)), work


def split_angles(step):
    angles = []
    theta = 180.0
    while theta >= 1.0 - 1e-9:
        angles.append(theta)
        theta = 180.0 - step * len(angles)
    return angles


def find_split_line(img, valley, params=ScanParams()):
    """First line through the valley, from 180 degrees downward, clear of white."""
    lines = [line_at_angle(valley.position, t) for t in split_angles(params.angle_step)]
    a = np.array([ln.a for ln in lines])
    b = np.array([ln.b for ln in lines])
    c = np.array([ln.c for ln in lines])
    i = kernels.first_clean_line(np.ascontiguousarray(img, dtype=bool), a, b, c)
    return lines[i] if i >= 0 else None


def split_regions(img, split):
    """White pixels strictly on the positive / negative side of ``split``."""
    h, w = img.shape
    ys, xs = np.mgrid[0:h, 0:w]
    s = split.a * xs + split.b * ys + split.c
    return img & (s > 1e-9), img & (s < -1e-9)


def child_base_line(child, parent_scan_line, valley, params=ScanParams()):
    """Base line of a split-off region, anchored at the valley that produced it.

    Lifts the parent's scan line by ``lift_offset`` rows (more if needed) until
    it meets the child, takes the centroid of the child pixels there, and
    returns the line through the valley perpendicular to the join of that
    point and the child's centroid.
    """
    fallback = parent_scan_line.through(valley.position)
    cc = centroid(child)
    h, w = child.shape
    y0 = _base_rows(parent_scan_line, w)
    ys, xs = np.nonzero(child)
    offsets = y0[xs] - ys
    eligible = offsets >= params.lift_offset
    if not eligible.any():
        return fallback
    j = offsets[eligible].min()
    on = offsets == j
    cn = _mean_point(xs[on], ys[on])
    if math.hypot(cc.x - cn.x, cc.y - cn.y) < 1e-9:
        return fallback
    return perpendicular_at(line_through(cc, cn), valley.position)


def _line_count(img, line):
    h, w = img.shape
    xs, ys = locus_arrays(line, w, h)
    return int(np.count_nonzero(img[ys, xs]))


def finger_extents(img, base):
    """(W, H): white pixels on the lines along and across ``base`` through the centroid."""
    cc = centroid(img)
    along = base.through(cc)
    return _line_count(img, along), _line_count(img, perpendicular_at(along, cc))


def is_finger(img, base, params=ScanParams()):
    if np.count_nonzero(img) < params.area_threshold:
        return Verdict.REJECTED_AREA
    w_count, h_count = finger_extents(img, base)
    if w_count == 0:
        return Verdict.REJECTED_RATIO
    if h_count > params.hw_ratio * w_count:
        return Verdict.FINGER
    return Verdict.REJECTED_RATIO


# ---------------------------------------------------------------------------
# recursion


def _next_valley(img, base, params):
    """Lowest valley that admits a useful split, skipping rejected ones.

    A valley is rejected when no split line clears it, or when the split
    would cut off fewer than ``area_threshold`` pixels on either side (an
    aliasing notch on a slanted edge rather than a gap between fingers).
    """
    valley, work = find_lowest_valley(img, base, params)
    while valley is not None:
        split = find_split_line(work, valley, params)
        if split is not None:
            parts = split_regions(work, split)
            if min(np.count_nonzero(p) for p in parts) >= params.area_threshold:
                return valley, split, parts
        valley, work = find_lowest_valley(work, translate_intercept(valley.scan_line, -1),
                                          params)
    return None, None, None


def _safe_base(line, scan_line, valley):
    if line.mostly_horizontal or abs(line.b) >= abs(line.a) - 1e-12:
        return line
    return scan_line.through(valley.position)


def _build(img, base, params, depth):
    if depth > params.max_depth:
        raise SplitDidNotConverge(f"split did not converge within depth {params.max_depth}")
    node = SegmentNode(image=img, centroid=centroid(img), base_line=base, depth=depth)
    valley, split, parts = _next_valley(img, base, params)
    if valley is None:
        node.verdict = is_finger(img, base, params)
        return node
    node.valley = valley
    node.split_line = split
    for part in parts:
        child_base = _safe_base(child_base_line(part, valley.scan_line, valley, params),
                                valley.scan_line, valley)
        node.children.append(_build(part, child_base, params, depth + 1))
    return node


def count_fingers(img, params=ScanParams()):
    img = np.asarray(img, dtype=bool)
    if not img.any():
        root = SegmentNode(image=img, centroid=None, base_line=None,
                           verdict=Verdict.REJECTED_AREA)
        return DetectionResult(0, 0.0, root)
    base = initial_base_line(img)
    if abs(base.b) < abs(base.a) - 1e-12:
        # hand tilted past 45 degrees; scan along the nearest admissible direction
        base = LineG(base.a, math.copysign(abs(base.a), base.b or 1.0), 0.0).through(
            row_anchor_centroid(img))
    root = _build(img, base, params, 0)
    count = sum(1 for leaf in root.leaves() if leaf.verdict is Verdict.FINGER)
    return DetectionResult(count, orientation_of(initial_base_line(img)), root)
