"""Time the compiled selection kernel against the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N] [--warmup STEPS]

Each workload is a configuration taken from a real run; both kernels pick a
maximal selection for it with the same seeds, and the picks are checked to
agree before the timings are printed.
"""
import argparse
import random
import sys
import time
from pathlib import Path

import numpy as np

from spatialp.bone import BoneParams
from spatialp.engine import EngineParams, compiled_kernel, is_quiescent, python_kernel, run
from spatialp.engine.step import _select
from spatialp.multiscale import ConstantField, MacroCellState, f_down, macro_initial, place_stimuli
from spatialp.rng import SplitRng

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))
from support import random_system  # noqa: E402


def workloads(warmup: int):
    params = BoneParams()
    micro = f_down(MacroCellState(50, True), params, SplitRng(1))
    busy = run(micro, EngineParams(max_steps=warmup), SplitRng(2), record=False).final
    yield f"BMU after {warmup} steps", busy
    # signal counts outgrow int64 after about 60 steps
    late = run(busy, EngineParams(max_steps=100), SplitRng(2), record=False).final
    yield f"BMU at step {late.step} (bigint)", late
    density = np.full((params.macro_h, params.macro_w), 6)
    macro = place_stimuli(macro_initial(density, params), ConstantField(0.3), 0.3, SplitRng(3))
    yield "tissue grid, 625 cells", macro
    rnd = random.Random(4)
    small = random_system(rnd)
    while is_quiescent(small):
        small = random_system(rnd)
    yield "random 3x3 system", small


def time_kernel(kernel, config, repeat: int) -> float:
    start = time.perf_counter()
    for seed in range(repeat):
        _select(config, seed, kernel, True)
    return (time.perf_counter() - start) / repeat


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--warmup", type=int, default=30, help="BMU steps before timing")
    args = ap.parse_args(argv)
    if compiled_kernel is None:
        print("compiled kernel is not built; run `pip install -e .` first", file=sys.stderr)
        return 1
    print(f"{'workload':28} {'enabled':>8} {'python ms':>10} {'compiled ms':>12} {'speedup':>8}")
    for name, config in workloads(args.warmup):
        enabled, mult_py, _ = _select(config, 0, python_kernel, True)
        _, mult_cy, _ = _select(config, 0, compiled_kernel, True)
        if [int(v) for v in mult_py] != [int(v) for v in mult_cy]:
            print(f"{name}: kernels disagree", file=sys.stderr)
            return 1
        t_py = time_kernel(python_kernel, config, args.repeat)
        t_cy = time_kernel(compiled_kernel, config, args.repeat)
        print(f"{name:28} {len(enabled):>8} {t_py * 1e3:>10.2f} {t_cy * 1e3:>12.2f} {t_py / t_cy:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
