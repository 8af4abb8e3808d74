"""Frame-to-count processing and annotated rendering."""

from dataclasses import dataclass, field

import numpy as np

from . import raster
from .geometry import raster_locus
from .segmenter import DetectionResult, ScanParams, count_fingers

WHITE = (255, 255, 255)
GREEN = (0, 255, 0)
YELLOW = (255, 255, 0)
RED = (255, 0, 0)


@dataclass(frozen=True)
class PipelineConfig:
    bg_threshold: int = 30
    downsample_factor: int = 3
    blur_frame: bool = False
    scan: ScanParams = field(default_factory=ScanParams)

    def __post_init__(self):
        if self.downsample_factor < 1:
            raise ValueError("downsample_factor must be >= 1")
        if not 1 <= self.bg_threshold <= 255:
            raise ValueError("bg_threshold must be in [1, 255]")


def extract_mask(background, frame, cfg=PipelineConfig()):
    """Background difference, 7-of-9 denoise and downsampling."""
    if background.shape != frame.shape:
        raise ValueError(f"background {background.shape} and frame {frame.shape} differ in size")
    bg = raster.gaussian_blur_5x5(background)
    if cfg.blur_frame:
        frame = raster.gaussian_blur_5x5(frame)
    mask = raster.background_subtract(frame, bg, cfg.bg_threshold)
    mask = raster.denoise_7of9(mask)
    small = raster.downsample(mask, cfg.downsample_factor)
    if small.shape[0] < 3 or small.shape[1] < 3:
        raise ValueError(f"downsampled mask {small.shape[1]}x{small.shape[0]} is smaller than 3x3")
    return small


def process_frame(background, frame, cfg=PipelineConfig()):
    """Count fingers in ``frame``.  Result coordinates are in downsampled pixels."""
    mask = extract_mask(background, frame, cfg)
    result = count_fingers(mask, cfg.scan)
    result.scale = cfg.downsample_factor
    return result


def _draw_line(canvas, line, color):
    h, w = canvas.shape[:2]
    pts = raster_locus(line, w, h)
    canvas[pts[:, 1], pts[:, 0]] = color


def _draw_dot(canvas, p, color):
    h, w = canvas.shape[:2]
    cx, cy = int(np.floor(p[0] + 0.5)), int(np.floor(p[1] + 0.5))
    canvas[max(cy - 1, 0):min(cy + 2, h), max(cx - 1, 0):min(cx + 2, w)] = color


def annotate(result, base):
    """Render the hand with base lines, split lines, valleys and centroids.

    Colors: first base line white, later base lines green, split lines and
    valley dots yellow, centroids of split-off regions red.  Dots are drawn
    last so no line covers them.
    """
    canvas = np.zeros(base.shape + (3,), dtype=np.uint8)
    canvas[base] = WHITE
    root = result.root
    if root.base_line is None:
        return canvas
    nodes = list(root.walk())
    _draw_line(canvas, root.base_line, WHITE)
    for node in nodes[1:]:
        _draw_line(canvas, node.base_line, GREEN)
    for node in nodes:
        if node.split_line is not None:
            _draw_line(canvas, node.split_line, YELLOW)
    for node in nodes[1:]:
        _draw_dot(canvas, node.centroid, RED)
    for node in nodes:
        if node.valley is not None:
            _draw_dot(canvas, node.valley.position, YELLOW)
    return canvas


def paint_mask(mask, low=0, high=255):
    """Gray frame with ``high`` where the mask is white, ``low`` elsewhere."""
    return np.where(mask, np.uint8(high), np.uint8(low)).astype(np.uint8)


def upscale(mask, factor):
    return np.repeat(np.repeat(mask, factor, axis=0), factor, axis=1)
