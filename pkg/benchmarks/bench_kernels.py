"""Time the compiled block-matching/aggregation kernels against the NumPy fallback.

Usage::

    python benchmarks/bench_kernels.py [--size 128] [--repeat 5]

Both backends are checked to produce identical groups before timing.
"""

import argparse
import time

import numpy as np

from lrr import _fallback, groups as grp

try:
    from lrr import _kernels
except ImportError:
    _kernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=128)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    image = np.ascontiguousarray(rng.integers(0, 256, (args.size, args.size)).astype(float))
    cfg = grp.GroupingConfig()
    gr = grp.exemplar_grid(args.size, cfg.patch_side, cfg.exemplar_stride)
    ex_r, ex_c = (np.ascontiguousarray(a.ravel()) for a in np.meshgrid(gr, gr, indexing="ij"))
    match_args = (image, ex_r, ex_c, cfg.patch_side, cfg.window_side, cfg.group_size)

    backends = {"python": _fallback}
    if _kernels is not None:
        backends["compiled"] = _kernels
    else:
        print("compiled kernels not built; timing the fallback only")

    rows, cols = _fallback.block_match(*match_args)
    stack = rng.standard_normal((rows.shape[0], cfg.patch_size, cfg.group_size))
    print(f"image {args.size}x{args.size}, {rows.shape[0]} groups of {cfg.patch_size}x{cfg.group_size}")
    results = {}
    for name, mod in backends.items():
        r, c = mod.block_match(*match_args)
        if not (np.array_equal(r, rows) and np.array_equal(c, cols)):
            raise SystemExit(f"{name} block matching disagrees with the fallback")
        t_match = best_of(lambda: mod.block_match(*match_args), args.repeat)
        t_agg = best_of(lambda: mod.aggregate(stack, rows, cols, image.shape, cfg.patch_side), args.repeat)
        results[name] = (t_match, t_agg)
        print(f"{name:>9}: block_match {t_match * 1e3:8.1f} ms   aggregate {t_agg * 1e3:8.1f} ms")
    if len(results) == 2:
        (pm, pa), (cm, ca) = results["python"], results["compiled"]
        print(f"  speedup: block_match x{pm / cm:.1f}   aggregate x{pa / ca:.1f}")


if __name__ == "__main__":
    main()
