"""Synthetic hand masks with known finger counts.

Hands are unions of rectangles: a palm, up to five fingers fanned about the
palm top and optionally a forearm running off the bottom edge.  Everything is
deterministic given the spec (and the seed, for noise and corpora).
"""

import csv
import math
import os
from collections import deque
from dataclasses import dataclass, replace

import numpy as np

from .geometry import Point
from .raster import write_pnm

MANIFEST_HEADER = ["path", "expected_count", "orientation_deg", "noise_density", "seed"]

# five finger slots across the palm; fewer fingers use the central slots
_SLOTS = 5


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class HandSpec:
    width: int
    height: int
    palm_center: Point
    palm_half_width: float
    palm_height: float
    finger_count: int
    finger_width: float
    finger_length: float
    spread: float = 8.0
    orientation: float = 0.0
    wrist_to_bottom: bool = True
    wrist_half_width: float = 0.0  # 0 means 0.6 * palm_half_width
    shoulder_slope: float = 55.0  # degrees; palm top falls off beside the fingers

    def validate(self):
        if not 0 <= self.finger_count <= 5:
            raise SpecError(f"finger_count must be 0..5, got {self.finger_count}")
        if self.finger_count and self.finger_length <= self.finger_width:
            raise SpecError("finger_length must exceed finger_width")
        if self.width < 1 or self.height < 1:
            raise SpecError("canvas must be at least 1x1")
        if self.palm_half_width <= 0 or self.palm_height <= 0 or self.finger_width <= 0:
            raise SpecError("palm and finger sizes must be positive")
        pitch = 2 * self.palm_half_width / _SLOTS
        if self.finger_count > 1 and self.finger_width >= pitch:
            raise SpecError("fingers wider than their slots would touch")


def _rect(u0, u1, v0, v1):
    return np.array([[u0, v0], [u1, v0], [u1, v1], [u0, v1]], dtype=np.float64)


def _rotate_local(points, angle_deg, pivot):
    """Rotate (u, v) points, v pointing up, so +v leans toward +u by the angle."""
    t = math.radians(angle_deg)
    rel = points - pivot
    u = rel[:, 0] * math.cos(t) + rel[:, 1] * math.sin(t)
    v = -rel[:, 0] * math.sin(t) + rel[:, 1] * math.cos(t)
    return np.stack([u, v], axis=1) + pivot


def _to_image(points, spec):
    t = math.radians(spec.orientation)
    u, v = points[:, 0], points[:, 1]
    x = spec.palm_center[0] + u * math.cos(t) + v * math.sin(t)
    y = spec.palm_center[1] + u * math.sin(t) - v * math.cos(t)
    return np.stack([x, y], axis=1)


def _wrist_half_width(spec):
    return spec.wrist_half_width or 0.6 * spec.palm_half_width


def _palm(spec):
    """Palm outline in hand coordinates.

    Without fingers this is a rectangle.  Otherwise the top edge only spans
    the fingers and the shoulders slope down to the palm sides.
    """
    phw, ph = spec.palm_half_width, spec.palm_height
    n = spec.finger_count
    if n == 0:
        return _rect(-phw, phw, -ph / 2, ph / 2)
    pitch = 2 * phw / _SLOTS
    top = min((n - 1) / 2 * pitch + spec.finger_width / 2 + 1.0, phw)
    drop = min((phw - top) * math.tan(math.radians(spec.shoulder_slope)), 0.7 * ph)
    return np.array([[-phw, -ph / 2], [phw, -ph / 2], [phw, ph / 2 - drop],
                     [top, ph / 2], [-top, ph / 2], [-phw, ph / 2 - drop]])


def hand_polygons(spec, forearm_length=None):
    """Image-space convex polygons as (parts, forearm); forearm is None without a wrist."""
    phw, ph = spec.palm_half_width, spec.palm_height
    parts = [_palm(spec)]
    n = spec.finger_count
    pitch = 2 * phw / _SLOTS
    embed = spec.finger_width
    for i in range(n):
        u = (i - (n - 1) / 2) * pitch
        finger = _rect(u - spec.finger_width / 2, u + spec.finger_width / 2,
                       ph / 2 - embed, ph / 2 + spec.finger_length)
        fan = (i - (n - 1) / 2) * spec.spread
        parts.append(_rotate_local(finger, fan, np.array([u, ph / 2])))
    parts = [_to_image(p, spec) for p in parts]
    forearm = None
    if spec.wrist_to_bottom:
        if forearm_length is None:
            forearm_length = 2.0 * (spec.width + spec.height)
        ww = _wrist_half_width(spec)
        forearm = _to_image(_rect(-ww, ww, -ph / 2 - forearm_length, -ph / 2 + 1), spec)
    return parts, forearm


def _fill_convex(mask, poly):
    h, w = mask.shape
    x0 = max(int(math.floor(poly[:, 0].min())), 0)
    x1 = min(int(math.ceil(poly[:, 0].max())), w - 1)
    y0 = max(int(math.floor(poly[:, 1].min())), 0)
    y1 = min(int(math.ceil(poly[:, 1].max())), h - 1)
    if x0 > x1 or y0 > y1:
        return
    ys, xs = np.mgrid[y0:y1 + 1, x0:x1 + 1]
    inside = np.ones(xs.shape, dtype=bool)
    # orientation-agnostic: all edge cross products share one sign
    signs = []
    for i in range(len(poly)):
        (ax, ay), (bx, by) = poly[i], poly[(i + 1) % len(poly)]
        signs.append((bx - ax) * (ys - ay) - (by - ay) * (xs - ax))
    pos = np.all([s >= -1e-9 for s in signs], axis=0)
    neg = np.all([s <= 1e-9 for s in signs], axis=0)
    inside &= pos | neg
    mask[y0:y1 + 1, x0:x1 + 1] |= inside


def _check_fits(spec, parts, forearm):
    lo_x, hi_x = -0.5, spec.width - 0.5
    lo_y, hi_y = -0.5, spec.height - 0.5
    for p in parts:
        if (p[:, 0].min() < lo_x or p[:, 0].max() > hi_x
                or p[:, 1].min() < lo_y or p[:, 1].max() > hi_y):
            raise SpecError("hand geometry overflows the canvas")
    if forearm is not None:
        # the two long edges must leave through the bottom edge
        for a, b in ((forearm[3], forearm[0]), (forearm[2], forearm[1])):
            if b[1] <= a[1]:
                raise SpecError("forearm does not point toward the bottom edge")
            t = (hi_y - a[1]) / (b[1] - a[1])
            x = a[0] + t * (b[0] - a[0])
            if not lo_x <= x <= hi_x:
                raise SpecError("forearm leaves the canvas through a side edge")


def gen_hand_mask(spec):
    spec.validate()
    parts, forearm = hand_polygons(spec)
    _check_fits(spec, parts, forearm)
    mask = np.zeros((spec.height, spec.width), dtype=bool)
    for p in parts:
        _fill_convex(mask, p)
    if forearm is not None:
        _fill_convex(mask, forearm)
    return mask


def gen_two_hands(spec_a, spec_b, gap):
    """Place two hand masks side by side with ``gap`` black columns between them."""
    if gap < 1:
        raise SpecError("hands would overlap or touch: gap must be >= 1")
    if spec_a.height != spec_b.height:
        raise SpecError("both hands need the same canvas height")
    a, b = gen_hand_mask(spec_a), gen_hand_mask(spec_b)
    cols_a = np.flatnonzero(a.any(axis=0))
    cols_b = np.flatnonzero(b.any(axis=0))
    if len(cols_a) == 0 or len(cols_b) == 0:
        raise SpecError("both hands must be non-empty")
    left = a[:, :cols_a[-1] + 1]
    right = b[:, cols_b[0]:]
    spacer = np.zeros((a.shape[0], gap), dtype=bool)
    return np.hstack([left, spacer, right])


def add_salt_noise(img, density, seed):
    """Flip exactly floor(density * w * h) distinct pixels chosen by ``seed``."""
    if not 0 <= density <= 0.05:
        raise ValueError(f"density must be in [0, 0.05], got {density}")
    out = img.copy()
    n = int(math.floor(density * img.size))
    if n:
        rng = np.random.default_rng(seed)
        idx = rng.choice(img.size, size=n, replace=False)
        flat = out.reshape(-1)
        flat[idx] = ~flat[idx]
    return out


def cc_count(img):
    """Number of 4-connected white components, by plain flood fill."""
    h, w = img.shape
    seen = np.zeros((h, w), dtype=bool)
    count = 0
    for y in range(h):
        for x in range(w):
            if not img[y, x] or seen[y, x]:
                continue
            count += 1
            seen[y, x] = True
            queue = deque([(y, x)])
            while queue:
                cy, cx = queue.popleft()
                for ny, nx in ((cy - 1, cx), (cy + 1, cx), (cy, cx - 1), (cy, cx + 1)):
                    if 0 <= ny < h and 0 <= nx < w and img[ny, nx] and not seen[ny, nx]:
                        seen[ny, nx] = True
                        queue.append((ny, nx))
    return count


# ---------------------------------------------------------------------------
# fitted specs and corpora


def fit_hand(finger_count, orientation=0.0, finger_width=8.0, finger_length=26.0,
             spread=6.0, palm_half_width=30.0, palm_height=66.0, margin=4,
             forearm_visible=14.0, canvas_height=None):
    """A HandSpec whose canvas is just large enough for the rotated hand.

    The forearm is shown for ``forearm_visible`` pixels below the palm's
    lowest point (or down to ``canvas_height`` when given).
    """
    probe = HandSpec(width=1, height=1, palm_center=Point(0.0, 0.0),
                     palm_half_width=palm_half_width, palm_height=palm_height,
                     finger_count=finger_count, finger_width=finger_width,
                     finger_length=finger_length, spread=spread, orientation=orientation)
    probe.validate()
    parts, _ = hand_polygons(probe)
    pts = np.vstack(parts)
    bottom = pts[:, 1].max() + forearm_visible
    top = pts[:, 1].min() - margin
    height = int(math.ceil(bottom - top)) + 1
    if canvas_height is not None:
        if canvas_height < height:
            raise SpecError("canvas_height too small for this hand")
        height = canvas_height
    # forearm crossing of the bottom edge
    cy = -top
    ww = _wrist_half_width(probe)
    t = math.radians(orientation)
    axis = np.array([math.sin(t), -math.cos(t)])
    across = np.array([math.cos(t), math.sin(t)])
    base_c = -axis * (palm_height / 2)
    xs = [pts[:, 0].min() - margin, pts[:, 0].max() + margin]
    for side in (-ww, ww):
        start = base_c + side * across
        s = (height - 0.5 - cy - start[1]) / (-axis[1])
        cross = start[0] - s * axis[0]
        xs.extend([cross - margin, cross + margin])
    left = min(xs)
    width = int(math.ceil(max(xs) - left)) + 1
    center = Point(float(-left), float(cy))
    return replace(probe, width=width, height=height, palm_center=center)


def canonical_mask(count, orientation=0.0):
    """Standard upright fixture for counts 1-10 (two hands above five)."""
    if not 0 <= count <= 10:
        raise SpecError(f"count must be 0..10, got {count}")
    if count <= 5:
        return gen_hand_mask(fit_hand(count, orientation))
    spec_a = fit_hand(5, orientation)
    spec_b = fit_hand(count - 5, orientation, canvas_height=spec_a.height)
    return gen_two_hands(spec_a, spec_b, gap=10)


def random_mask(count, rng, max_orientation=40.0):
    """Randomized hand(s) with ``count`` fingers; returns (mask, orientation)."""
    if not 1 <= count <= 10:
        raise SpecError(f"count must be 1..10, got {count}")
    orientation = round(float(rng.uniform(-max_orientation, max_orientation)), 1)

    def draw(n):
        fw = float(rng.integers(7, 10))
        phw = round(float(rng.uniform(2.6, 3.0)) * (fw + 3.0), 1)
        return dict(
            finger_count=n,
            orientation=orientation,
            finger_width=fw,
            finger_length=round(float(rng.uniform(2.8, 3.6)) * fw, 1),
            spread=round(float(rng.uniform(3.0, 9.0)), 1),
            palm_half_width=phw,
            palm_height=round(2 * phw * float(rng.uniform(1.0, 1.2)), 1),
        )

    if count <= 5:
        return gen_hand_mask(fit_hand(**draw(count))), orientation
    lo, hi = max(1, count - 5), min(5, count - 1)
    left = int(rng.integers(lo, hi + 1))
    kw_a, kw_b = draw(left), draw(count - left)
    height = max(fit_hand(**kw_a).height, fit_hand(**kw_b).height)
    spec_a = fit_hand(**kw_a, canvas_height=height)
    spec_b = fit_hand(**kw_b, canvas_height=height)
    gap = int(rng.integers(8, 14))
    return gen_two_hands(spec_a, spec_b, gap), orientation


def gen_corpus(out_dir, size, seed, counts=range(1, 11), max_orientation=40.0,
               noise_levels=(0.0,), manifest_name="manifest.csv"):
    """Write ``size`` masks per noise level plus a CSV manifest; return the rows.

    Counts are stratified: each count gets ``size // len(counts)`` masks and
    the remainder goes to the first counts in order.
    """
    counts = list(counts)
    if not counts or any(not 1 <= c <= 10 for c in counts):
        raise SpecError("counts must lie in 1..10")
    os.makedirs(out_dir, exist_ok=True)
    per, extra = divmod(size, len(counts))
    plan = []
    for j, c in enumerate(counts):
        plan.extend([c] * (per + (1 if j < extra else 0)))
    rows = []
    for i, count in enumerate(plan):
        file_seed = int(np.random.SeedSequence([seed, i]).generate_state(1)[0])
        rng = np.random.default_rng(file_seed)
        mask, orientation = random_mask(count, rng, max_orientation)
        for density in noise_levels:
            img = add_salt_noise(mask, density, file_seed) if density else mask
            tag = f"_n{density:g}" if density else ""
            name = f"mask_{i:04d}_c{count:02d}{tag}.pbm"
            write_pnm(os.path.join(out_dir, name), img)
            rows.append({"path": name, "expected_count": count,
                         "orientation_deg": orientation, "noise_density": density,
                         "seed": file_seed})
    write_manifest(os.path.join(out_dir, manifest_name), rows)
    return rows


def write_manifest(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=MANIFEST_HEADER, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def read_manifest(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != MANIFEST_HEADER:
            raise ValueError(f"unexpected manifest header {reader.fieldnames}")
        rows = []
        for row in reader:
            rows.append({
                "path": row["path"],
                "expected_count": int(row["expected_count"]),
                "orientation_deg": float(row["orientation_deg"]),
                "noise_density": float(row["noise_density"]),
                "seed": int(row["seed"]),
            })
    return rows


def synthetic_frame(count=5, width=640, height=480, factor=3, orientation=0.0, seed=0,
                    hand_level=200):
    """A (background, frame, mask) triple of gray images with a painted hand.

    The canonical mask is enlarged by ``factor`` and placed bottom-center;
    the background is a seeded texture in [40, 60].
    """
    small = canonical_mask(count, orientation)
    big = np.repeat(np.repeat(small, factor, axis=0), factor, axis=1)
    if big.shape[0] > height or big.shape[1] > width:
        raise SpecError(f"hand {big.shape[1]}x{big.shape[0]} does not fit {width}x{height}")
    mask = np.zeros((height, width), dtype=bool)
    x0 = (width - big.shape[1]) // 2
    mask[height - big.shape[0]:, x0:x0 + big.shape[1]] = big
    rng = np.random.default_rng(seed)
    background = rng.integers(40, 61, size=(height, width)).astype(np.uint8)
    frame = background.copy()
    frame[mask] = hand_level
    return background, frame, mask
