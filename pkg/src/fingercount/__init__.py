"""Finger counting by recursive valley splitting of binary hand masks."""

from .geometry import LineG, Point, Side
from .pipeline import PipelineConfig, annotate, process_frame
from .segmenter import DetectionResult, ScanParams, SegmentNode, Verdict, count_fingers

__all__ = [
    "DetectionResult",
    "LineG",
    "PipelineConfig",
    "Point",
    "ScanParams",
    "SegmentNode",
    "Side",
    "Verdict",
    "annotate",
    "count_fingers",
    "process_frame",
]

__version__ = "0.1.0"
