"""Command line interface.

Exit codes: 0 success, 1 processing error, 2 usage or I/O error.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import raster, synth
from .evaluation import (
    MissingFile,
    format_csv,
    format_report,
    format_timings,
    load_mask,
    run_eval,
    time_stages,
)
from .pipeline import PipelineConfig, annotate, extract_mask
from .segmenter import ScanParams, SplitDidNotConverge, count_fingers


class UsageError(Exception):
    pass


def _add_scan_args(p):
    g = p.add_argument_group("segmentation")
    g.add_argument("--min-white-run", type=int, default=4)
    g.add_argument("--min-black-run", type=int, default=2)
    g.add_argument("--hw-ratio", type=float, default=1.3)
    g.add_argument("--angle-step", type=float, default=1.0)
    g.add_argument("--lift-offset", type=int, default=2)
    g.add_argument("--max-depth", type=int, default=32)


def _add_frame_args(p, required_out=False):
    p.add_argument("--bg", help="background frame (PNM)")
    p.add_argument("--frame", help="frame to analyse (PNM)")
    p.add_argument("--mask", help="pre-binarized mask (PBM) fed straight to the segmenter")
    p.add_argument("--threshold", type=int, default=30, help="background difference threshold")
    p.add_argument("--downsample", type=int, default=3)
    p.add_argument("--blur-frame", action="store_true", help="blur the frame as well as the background")
    p.add_argument("--invert-pbm", action="store_true", help="treat PBM 1 bits as white")
    _add_scan_args(p)


def _scan_params(args):
    try:
        return ScanParams(min_white_run=args.min_white_run, min_black_run=args.min_black_run,
                          hw_ratio=args.hw_ratio, angle_step=args.angle_step,
                          lift_offset=args.lift_offset, max_depth=args.max_depth)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _config(args):
    try:
        return PipelineConfig(bg_threshold=args.threshold, downsample_factor=args.downsample,
                              blur_frame=args.blur_frame, scan=_scan_params(args))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _read(path, invert_pbm):
    try:
        return raster.read_pnm(path, invert_pbm=invert_pbm)
    except (OSError, raster.ParseError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc


def _as_gray(img):
    if raster.is_color(img):
        return raster.to_grayscale(img)
    if raster.is_binary(img):
        return np.where(img, 255, 0).astype(np.uint8)
    return img


def _binary_input(args):
    """The binary image the segmenter sees, plus the config."""
    cfg = _config(args)
    if args.mask:
        if args.bg or args.frame:
            raise UsageError("--mask cannot be combined with --bg/--frame")
        try:
            return load_mask(args.mask, args.invert_pbm), cfg
        except (OSError, raster.ParseError) as exc:
            raise UsageError(f"cannot read {args.mask}: {exc}") from exc
    if not (args.bg and args.frame):
        raise UsageError("need --bg and --frame, or --mask")
    bg = _as_gray(_read(args.bg, args.invert_pbm))
    frame = _as_gray(_read(args.frame, args.invert_pbm))
    return extract_mask(bg, frame, cfg), cfg


def _format_angle(deg):
    text = f"{deg:.1f}"
    return "0.0" if text == "-0.0" else text


def cmd_count(args):
    mask, cfg = _binary_input(args)
    result = count_fingers(mask, cfg.scan)
    if args.json:
        leaves = [{"verdict": leaf.verdict.value, "area": leaf.area}
                  for leaf in result.root.leaves()]
        print(json.dumps({"count": result.finger_count,
                          "orientation_deg": round(result.orientation_deg, 1),
                          "leaves": leaves}))
    else:
        print(f"count={result.finger_count} orientation_deg={_format_angle(result.orientation_deg)}")
    return 0


def cmd_annotate(args):
    mask, cfg = _binary_input(args)
    result = count_fingers(mask, cfg.scan)
    image = annotate(result, mask)
    try:
        raster.write_pnm(args.out, image)
    except OSError as exc:
        raise UsageError(f"cannot write {args.out}: {exc}") from exc
    print(f"count={result.finger_count} orientation_deg={_format_angle(result.orientation_deg)}")
    return 0


def cmd_synth(args):
    if not 0 <= args.count <= 10:
        raise UsageError("--count must be in 0..10")
    try:
        if args.random:
            if args.count == 0:
                raise UsageError("--random needs --count >= 1")
            mask, _ = synth.random_mask(args.count, np.random.default_rng(args.seed),
                                        max_orientation=abs(args.orientation) or 40.0)
        else:
            mask = synth.canonical_mask(args.count, args.orientation)
        if args.noise:
            mask = synth.add_salt_noise(mask, args.noise, args.seed)
    except (synth.SpecError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    try:
        raster.write_pnm(args.out, mask)
    except OSError as exc:
        raise UsageError(f"cannot write {args.out}: {exc}") from exc
    return 0


def _parse_counts(text):
    try:
        if "-" in text:
            lo, hi = text.split("-", 1)
            counts = list(range(int(lo), int(hi) + 1))
        else:
            counts = [int(t) for t in text.split(",") if t]
    except ValueError as exc:
        raise UsageError(f"bad --counts {text!r}") from exc
    if not counts or any(not 1 <= c <= 10 for c in counts):
        raise UsageError("--counts must lie in 1..10")
    return counts


def cmd_corpus(args):
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    noise = [0.0] if not args.noise else args.noise
    try:
        rows = synth.gen_corpus(args.out, args.n, args.seed, counts=_parse_counts(args.counts),
                                max_orientation=args.max_orientation, noise_levels=noise,
                                manifest_name=args.manifest)
    except (synth.SpecError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    except OSError as exc:
        raise UsageError(f"cannot write corpus: {exc}") from exc
    print(f"wrote {len(rows)} masks to {args.out}")
    return 0


def cmd_eval(args):
    params = _scan_params(args)
    try:
        rows = synth.read_manifest(args.manifest)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: cannot read manifest {args.manifest}: {exc}", file=sys.stderr)
        return 1
    root = os.path.dirname(os.path.abspath(args.manifest))
    try:
        report = run_eval(rows, root, params, denoise=args.denoise, invert_pbm=args.invert_pbm)
    except MissingFile as exc:
        print(f"error: missing file(s): {exc}", file=sys.stderr)
        return 1
    print(format_csv(report) if args.csv else format_report(report))
    return 0


def cmd_bench(args):
    if args.iters < 1:
        raise UsageError("--iters must be >= 1")
    cfg = _config(args)
    if args.synthetic or not (args.bg and args.frame):
        if not args.synthetic:
            raise UsageError("need --bg and --frame, or --synthetic")
        try:
            bg, frame, _ = synth.synthetic_frame(args.count)
        except synth.SpecError as exc:
            raise UsageError(str(exc)) from exc
    else:
        bg = _as_gray(_read(args.bg, args.invert_pbm))
        frame = _as_gray(_read(args.frame, args.invert_pbm))
    times = time_stages(bg, frame, cfg, args.iters)
    print(format_timings(times))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="fingercount",
                                     description="Count raised fingers by recursive valley splitting.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count", help="count fingers in one frame or mask")
    _add_frame_args(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("annotate", help="write an annotated PPM of the split tree")
    _add_frame_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("synth", help="write one synthetic hand mask (PBM)")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--orientation", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--random", action="store_true", help="randomize geometry from --seed")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("corpus", help="write a seeded corpus of masks with a manifest")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--manifest", default="manifest.csv", help="manifest file name inside --out")
    p.add_argument("--counts", default="1-10")
    p.add_argument("--max-orientation", type=float, default=40.0)
    p.add_argument("--noise", type=float, action="append",
                   help="noise density; repeat for several levels (default clean only)")
    p.set_defaults(func=cmd_corpus)

    p = sub.add_parser("eval", help="accuracy table over a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--csv", action="store_true")
    p.add_argument("--denoise", action="store_true", help="apply the 7-of-9 filter to each mask first")
    p.add_argument("--invert-pbm", action="store_true")
    _add_scan_args(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="per-stage timing")
    _add_frame_args(p)
    p.add_argument("--synthetic", action="store_true", help="use a generated 640x480 frame")
    p.add_argument("--count", type=int, default=5, help="fingers in the synthetic frame")
    p.add_argument("--iters", type=int, default=20)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, SplitDidNotConverge) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
