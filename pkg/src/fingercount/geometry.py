"""Lines in normalized general form and their rasterization.

A line is stored as ``a*x + b*y + c = 0`` with ``a**2 + b**2 == 1`` and a
canonical sign (``a > 0``, or ``a == 0 and b > 0``), so two descriptions of
the same line compare equal.  Unlike slope-intercept form this also covers
vertical lines.  Coordinates follow the image convention: x to the right,
y downward.
"""

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .kernels import round_half_away_np

TOL = 1e-9
# Coefficients this small are snapped to zero so that e.g. sin(180 deg)
# does not leave a stray 1e-16 in a horizontal line.
_SNAP = 1e-12


class GeometryError(ValueError):
    pass


class Point(NamedTuple):
    x: float
    y: float


class Side(enum.Enum):
    SAME = "same"
    OPPOSITE = "opposite"
    ON_LINE = "on_line"


@dataclass(frozen=True)
class LineG:
    a: float
    b: float
    c: float

    def __post_init__(self):
        a, b, c = float(self.a), float(self.b), float(self.c)
        if not all(math.isfinite(v) for v in (a, b, c)):
            raise GeometryError(f"non-finite line coefficients {(a, b, c)}")
        norm = math.hypot(a, b)
        if norm == 0.0:
            raise GeometryError("a and b cannot both be zero")
        a, b, c = a / norm, b / norm, c / norm
        if abs(a) < _SNAP:
            a = 0.0
        if abs(b) < _SNAP:
            b = 0.0
        if a < 0 or (a == 0 and b < 0):
            a, b, c = -a, -b, -c
        # -0.0 would make otherwise equal lines compare unequal in repr
        object.__setattr__(self, "a", a + 0.0)
        object.__setattr__(self, "b", b + 0.0)
        object.__setattr__(self, "c", c + 0.0)

    def value(self, p):
        """Signed distance of ``p`` from the line."""
        return self.a * p[0] + self.b * p[1] + self.c

    @property
    def direction(self):
        return (-self.b, self.a)

    @property
    def mostly_horizontal(self):
        return abs(self.b) >= abs(self.a)

    def isclose(self, other, tol=1e-9):
        return (abs(self.a - other.a) <= tol and abs(self.b - other.b) <= tol
                and abs(self.c - other.c) <= tol)

    def slope_intercept(self):
        """Return ``(m, q)`` with ``y = m*x + q``; undefined for vertical lines."""
        if self.b == 0:
            raise GeometryError("vertical line has no slope-intercept form")
        return -self.a / self.b, -self.c / self.b

    @classmethod
    def from_slope_intercept(cls, m, q):
        return cls(m, -1.0, q)

    def through(self, p):
        """The parallel line passing through ``p``."""
        return LineG(self.a, self.b, -(self.a * p[0] + self.b * p[1]))


def line_through(p1, p2):
    dx, dy = p2[0] - p1[0], p2[1] - p1[1]
    if math.hypot(dx, dy) < 1e-12:
        raise GeometryError(f"coincident points {tuple(p1)} and {tuple(p2)}")
    a, b = dy, -dx
    return LineG(a, b, -(a * p1[0] + b * p1[1]))


def perpendicular_at(line, p):
    # the normal of the result is the direction of ``line``
    a, b = -line.b, line.a
    return LineG(a, b, -(a * p[0] + b * p[1]))


def same_side(line, p1, p2):
    """Compare the signs of the two signed distances.

    Uses the product rather than a quotient so a point on the line is
    reported instead of dividing by zero.
    """
    v1, v2 = line.value(p1), line.value(p2)
    if abs(v1) < TOL or abs(v2) < TOL:
        return Side.ON_LINE
    return Side.SAME if v1 * v2 > 0 else Side.OPPOSITE


def locus_arrays(line, width, height):
    """Rasterized locus as ``(xs, ys)`` int arrays; see :func:`raster_locus`."""
    if line.mostly_horizontal:
        xs = np.arange(width, dtype=np.int64)
        ys = round_half_away_np((-line.c - line.a * xs.astype(np.float64)) / line.b)
        keep = (ys >= 0) & (ys < height)
    else:
        ys = np.arange(height, dtype=np.int64)
        xs = round_half_away_np((-line.c - line.b * ys.astype(np.float64)) / line.a)
        keep = (xs >= 0) & (xs < width)
    return xs[keep], ys[keep]


def raster_locus(line, width, height):
    """Pixels on ``line`` inside a ``width`` x ``height`` grid, as an (n, 2) array of (x, y).

    One pixel per column for lines within 45 degrees of horizontal, otherwise
    one per row, ordered along the stepping axis.
    """
    xs, ys = locus_arrays(line, width, height)
    return np.stack([xs, ys], axis=1)


def translate_intercept(line, k):
    """Shift the y-intercept by ``k`` rows (negative = toward the image top)."""
    if abs(line.b) < abs(line.a) - 1e-12:
        raise GeometryError("base line steeper than 45 degrees")
    return LineG(line.a, line.b, line.c - k * line.b)


def line_at_angle(p, theta):
    """Line through ``p`` with direction (cos t, -sin t), t in degrees.

    t is measured from +x toward the image top, so 90 is vertical.
    """
    t = math.radians(theta)
    a, b = math.sin(t), math.cos(t)
    return LineG(a, b, -(a * p[0] + b * p[1]))
