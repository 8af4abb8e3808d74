"""Corpus accuracy reports, split-tree checks and stage timings."""

import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import raster
from .segmenter import ScanParams, SplitDidNotConverge, count_fingers


class MissingFile(FileNotFoundError):
    pass


@dataclass
class EvalReport:
    per_count: dict = field(default_factory=dict)  # count -> [correct, total]
    failures: list = field(default_factory=list)  # (path, expected, got)
    tree_violations: list = field(default_factory=list)
    depth_errors: list = field(default_factory=list)
    internal_nodes: int = 0

    def accuracy(self, count):
        correct, total = self.per_count[count]
        return 100.0 * correct / total

    @property
    def total(self):
        return sum(t for _, t in self.per_count.values())

    @property
    def correct(self):
        return sum(c for c, _ in self.per_count.values())

    @property
    def overall(self):
        return 100.0 * self.correct / self.total if self.total else 0.0

    def rows(self):
        return [(c, self.per_count[c][1], self.per_count[c][0], self.accuracy(c))
                for c in sorted(self.per_count)]


def check_tree(root):
    """Violations of the split invariants, as human-readable strings."""
    problems = []
    for node in root.walk():
        if not node.children:
            continue
        if len(node.children) != 2:
            problems.append(f"depth {node.depth}: {len(node.children)} children")
            continue
        a, b = (c.image for c in node.children)
        parent = node.image
        if (a & b).any():
            problems.append(f"depth {node.depth}: children overlap")
        if ((a | b) & ~parent).any():
            problems.append(f"depth {node.depth}: children leave the parent")
        area = np.count_nonzero(parent)
        for child in (a, b):
            if np.count_nonzero(child) >= area:
                problems.append(f"depth {node.depth}: child not smaller than parent")
    return problems


def load_mask(path, invert_pbm=False):
    img = raster.read_pnm(path, invert_pbm=invert_pbm)
    if raster.is_binary(img):
        return img
    if raster.is_color(img):
        img = raster.to_grayscale(img)
    return img > 127


def run_eval(rows, root_dir=".", params=ScanParams(), denoise=False, invert_pbm=False):
    """Count fingers on every manifest row and tally exact-count accuracy."""
    paths = [os.path.join(root_dir, r["path"]) for r in rows]
    missing = [p for p in paths if not os.path.isfile(p)]
    if missing:
        raise MissingFile(", ".join(missing))
    report = EvalReport()
    order = sorted(zip(rows, paths), key=lambda rp: (rp[0]["expected_count"], rp[0]["path"]))
    for row, path in order:
        mask = load_mask(path, invert_pbm)
        if denoise:
            mask = raster.denoise_7of9(mask)
        expected = row["expected_count"]
        tally = report.per_count.setdefault(expected, [0, 0])
        tally[1] += 1
        try:
            result = count_fingers(mask, params)
        except SplitDidNotConverge as exc:
            report.depth_errors.append((row["path"], str(exc)))
            report.failures.append((row["path"], expected, None))
            continue
        report.internal_nodes += sum(1 for n in result.root.walk() if n.children)
        report.tree_violations.extend(f"{row['path']}: {p}" for p in check_tree(result.root))
        if result.finger_count == expected:
            tally[0] += 1
        else:
            report.failures.append((row["path"], expected, result.finger_count))
    return report


def format_report(report):
    lines = [f"{'count':>5}  {'files':>5}  {'correct':>7}  {'accuracy':>8}"]
    for count, total, correct, acc in report.rows():
        lines.append(f"{count:>5}  {total:>5}  {correct:>7}  {acc:>8.2f}")
    lines.append(f"{'all':>5}  {report.total:>5}  {report.correct:>7}  {report.overall:>8.2f}")
    if report.failures:
        lines.append("failures:")
        for path, expected, got in report.failures:
            lines.append(f"  {path} expected={expected} got={got if got is not None else 'error'}")
    return "\n".join(lines)


def format_csv(report):
    lines = ["count,files,correct,accuracy"]
    for count, total, correct, acc in report.rows():
        lines.append(f"{count},{total},{correct},{acc:.2f}")
    lines.append(f"all,{report.total},{report.correct},{report.overall:.2f}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# benchmark

STAGES = ("blur", "subtract", "denoise", "downsample", "segment")


def time_stages(background, frame, cfg, iters):
    """Wall time in seconds of each pipeline stage over ``iters`` runs."""
    times = {s: [] for s in STAGES}
    clock = time.perf_counter
    for _ in range(iters):
        t0 = clock()
        bg = raster.gaussian_blur_5x5(background)
        fr = raster.gaussian_blur_5x5(frame) if cfg.blur_frame else frame
        t1 = clock()
        mask = raster.background_subtract(fr, bg, cfg.bg_threshold)
        t2 = clock()
        mask = raster.denoise_7of9(mask)
        t3 = clock()
        small = raster.downsample(mask, cfg.downsample_factor)
        t4 = clock()
        count_fingers(small, cfg.scan)
        t5 = clock()
        for name, dt in zip(STAGES, (t1 - t0, t2 - t1, t3 - t2, t4 - t3, t5 - t4)):
            times[name].append(dt)
    return times


def format_timings(times):
    lines = [f"{'stage':<10}  {'median_ms':>9}  {'p95_ms':>9}"]
    for name in STAGES:
        arr = np.array(times[name]) * 1000.0
        lines.append(f"{name:<10}  {np.median(arr):>9.3f}  {np.percentile(arr, 95):>9.3f}")
    return "\n".join(lines)
