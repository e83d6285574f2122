"""Time the numba kernels against their numpy fallbacks on identical inputs.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import time

import numpy as np

from vdfcommittee import kernels


def _best(fn, repeat):
    fn()  # warm-up, absorbs jit compilation
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    rng = np.random.default_rng(0)
    sks = rng.integers(0, 2 ** 63, 4096, dtype=np.uint64)
    words = rng.integers(0, 2 ** 63, 2000, dtype=np.uint64)
    mask = np.ones(sks.size, dtype=bool)
    top = kernels.unit_threshold(0.01)
    uniforms = rng.random((200, 10_000))
    return {
        "mix_batch (4096 keys)": lambda k: k.mix_batch(sks, int(words[0])),
        "count_below (4096 keys x 2000 ctx)": lambda k: k.count_below(sks, words, top, mask),
        "bernoulli_sums (200 x 10^4)": lambda k: k.bernoulli_sums(uniforms, 0.01),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if kernels.numba_kernels is None:
        print("numba unavailable or disabled; only the numpy backend can be timed")
    print(f"{'kernel':40s} {'numpy s':>10s} {'numba s':>10s} {'speedup':>8s}")
    for name, call in cases().items():
        t_np = _best(lambda: call(kernels.numpy_kernels), args.repeat)
        if kernels.numba_kernels is None:
            print(f"{name:40s} {t_np:10.4f} {'-':>10s} {'-':>8s}")
            continue
        a, b = call(kernels.numpy_kernels), call(kernels.numba_kernels)
        assert np.array_equal(a, b), name
        t_nb = _best(lambda: call(kernels.numba_kernels), args.repeat)
        print(f"{name:40s} {t_np:10.4f} {t_nb:10.4f} {t_np / t_nb:7.1f}x")


if __name__ == "__main__":
    main()
