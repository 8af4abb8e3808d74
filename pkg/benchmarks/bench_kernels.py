"""Compare the numba kernels with their numpy fallbacks.

Times each kernel on realistic inputs (a 640x480 frame and a downsampled
hand mask) and then a full ``process_frame`` with either backend swapped in.

    python benchmarks/bench_kernels.py --repeat 20
"""

import argparse
import timeit

import numpy as np

from fingercount import kernels, synth
from fingercount._accel import HAVE_NUMBA
from fingercount.geometry import line_at_angle
from fingercount.pipeline import PipelineConfig, extract_mask, process_frame
from fingercount.segmenter import _base_rows, find_lowest_valley, initial_base_line, split_angles

KERNELS = ("blur5", "window_count3", "scan_valley", "first_clean_line")


def kernel_inputs(count):
    bg, frame, _ = synth.synthetic_frame(count, seed=1)
    mask = frame != bg
    small = extract_mask(bg, frame)
    base = initial_base_line(small)
    y0 = np.clip(_base_rows(base, small.shape[1]), -1, None)
    valley, scanned = find_lowest_valley(small, base)
    lines = [line_at_angle(valley.position, t) for t in split_angles(1.0)]
    abc = [np.array([getattr(ln, k) for ln in lines]) for k in "abc"]
    return {
        "blur5": lambda fn: fn(bg),
        "window_count3": lambda fn: fn(mask),
        "scan_valley": lambda fn: fn(small.copy(), y0, 4, 2),
        "first_clean_line": lambda fn: fn(scanned, *abc),
    }


def best_ms(call, repeat):
    call()  # compile / warm caches
    return 1000.0 * min(timeit.repeat(call, number=1, repeat=repeat))


def use_backend(suffix):
    for name in KERNELS:
        setattr(kernels, name, getattr(kernels, f"{name}_{suffix}"))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=10)
    ap.add_argument("--count", type=int, default=5, help="fingers in the synthetic frame")
    args = ap.parse_args(argv)
    if not HAVE_NUMBA:
        print("numba is not installed; the *_nb kernels run as plain Python")

    inputs = kernel_inputs(args.count)
    print(f"{'kernel':<18}{'numba_ms':>10}{'numpy_ms':>10}{'speedup':>9}")
    for name in KERNELS:
        run = inputs[name]
        nb = best_ms(lambda: run(getattr(kernels, f"{name}_nb")), args.repeat)
        npy = best_ms(lambda: run(getattr(kernels, f"{name}_np")), args.repeat)
        print(f"{name:<18}{nb:>10.3f}{npy:>10.3f}{npy / nb:>9.1f}")

    bg, frame, _ = synth.synthetic_frame(args.count, seed=1)
    original = {name: getattr(kernels, name) for name in KERNELS}
    try:
        for factor in (3, 1):
            cfg = PipelineConfig(downsample_factor=factor)
            row = []
            for suffix in ("nb", "np"):
                use_backend(suffix)
                row.append(best_ms(lambda: process_frame(bg, frame, cfg), args.repeat))
            label = f"process_frame/{factor}"
            print(f"{label:<18}{row[0]:>10.3f}{row[1]:>10.3f}{row[1] / row[0]:>9.1f}")
    finally:
        for name, fn in original.items():
            setattr(kernels, name, fn)


if __name__ == "__main__":
    main()
