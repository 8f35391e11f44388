#!/usr/bin/env python3
"""Benchmark the compiled propagation kernels against the NumPy fallback.

Times the three hot paths of a certificate sweep (batched solution rows,
block-window transforms, truncated-sum phase application) plus a full
end-to-end certificate, for each available backend.

Run from the repository root:  python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from toruslab._kernels import _numpy as np_backend

try:
    from toruslab._kernels import _core as c_backend
except ImportError:
    c_backend = None


def _workload(n_modes=17, n_pieces=64, n_times=2048, seed=0):
    rng = np.random.default_rng(seed)
    bp = np.concatenate([[0.0], np.sort(rng.uniform(0, 1, n_pieces - 1)), [1.0]])
    pieces = np.ascontiguousarray(
        rng.standard_normal((n_pieces, n_modes)) + 1j * rng.standard_normal((n_pieces, n_modes)))
    half = n_modes // 2
    ksq = np.arange(-half, n_modes - half, dtype=float) ** 2
    ts = np.sort(rng.uniform(0.0, 1.0, n_times))
    bounds = np.ascontiguousarray(np.sort(rng.uniform(0, 1, (511, 2)), axis=1))
    return bp, pieces, np.ascontiguousarray(ksq), ts, bounds


def _time(fn, repeats=20):
    fn()  # warm up
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - t0) / repeats


def bench_backend(backend, bp, pieces, ksq, ts, bounds):
    return {
        "prefix_transform_eval": _time(lambda: backend.prefix_transform_eval(bp, pieces, ksq, ts)),
        "segment_transform_batch": _time(lambda: backend.segment_transform_batch(bp, pieces, ksq, bounds)),
        "free_phase_many": _time(lambda: backend.free_phase_many(ksq, ts)),
    }


def bench_certify(repeats=3):
    """Full certificate sweep (k = 0..8 on one 64-piece source) per backend."""
    from toruslab import _kernels
    from toruslab.ck_decomposition import certify
    from toruslab.sampling import random_step_source, seeded_rng

    src = random_step_source(1, 8, 64, 1.0, seeded_rng(0, 1000))
    results = {}
    available = {"numpy": np_backend}
    if c_backend is not None:
        available["compiled"] = c_backend
    saved = {name: getattr(_kernels, name) for name in _kernels.__all__ if name != "BACKEND"}
    for label, backend in available.items():
        for name in saved:
            setattr(_kernels, name, getattr(backend, name))
        t0 = time.perf_counter()
        for _ in range(repeats):
            for k in range(9):
                certify(src, k, 2 ** (k + 3))
        results[label] = (time.perf_counter() - t0) / repeats
    for name, fn in saved.items():
        setattr(_kernels, name, fn)
    return results


def main():
    args = _workload()
    rows = {"numpy": bench_backend(np_backend, *args)}
    if c_backend is not None:
        rows["compiled"] = bench_backend(c_backend, *args)
    else:
        print("compiled backend not built; showing NumPy only\n")
    names = sorted(next(iter(rows.values())))
    width = max(len(n) for n in names) + 2
    header = f"{'kernel':<{width}}" + "".join(f"{label:>14}" for label in rows)
    if len(rows) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for name in names:
        line = f"{name:<{width}}"
        for label in rows:
            line += f"{rows[label][name] * 1e6:>12.1f}us"
        if len(rows) == 2:
            line += f"{rows['numpy'][name] / rows['compiled'][name]:>9.2f}x"
        print(line)
    sweep = bench_certify()
    print(f"\n{'certify sweep k=0..8':<{width}}"
          + "".join(f"{sweep[label] * 1e3:>12.1f}ms" for label in rows)
          + (f"{sweep['numpy'] / sweep['compiled']:>9.2f}x" if len(sweep) == 2 else ""))


if __name__ == "__main__":
    main()
