#!/usr/bin/env python3
"""Benchmark the greedy hitting-set kernel: numba vs numpy.

Run with ``python3 benchmarks/bench_greedy_cover.py``. Setting
CHECKGEN_DISABLE_NUMBA=1 skips the numba column.
"""

import argparse
import time

import numpy as np

from checkgen import _kernels


def random_instance(rng, n_sets, n_templates, per_set):
    """CSR incidence with a few popular templates, like real candidate sets."""
    weights = 1.0 / np.arange(1, n_templates + 1)
    weights /= weights.sum()
    members = [np.unique(rng.choice(n_templates, size=per_set, p=weights)) for _ in range(n_sets)]
    s_ptr = np.zeros(n_sets + 1, dtype=np.int64)
    s_ptr[1:] = np.cumsum([len(m) for m in members])
    s_idx = np.concatenate(members).astype(np.int64)
    set_of = np.repeat(np.arange(n_sets, dtype=np.int64), np.diff(s_ptr))
    order = np.argsort(s_idx, kind="stable")
    t_idx = set_of[order]
    t_ptr = np.zeros(n_templates + 1, dtype=np.int64)
    t_ptr[1:] = np.cumsum(np.bincount(s_idx, minlength=n_templates))
    rank = rng.permutation(n_templates).astype(np.int64)
    return t_ptr, t_idx, s_ptr, s_idx, rank, n_sets


def best_of(fn, repeats):
    times = []
    out = None
    for _ in range(repeats):
        start = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - start)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    sizes = [(500, 2000, 20), (2000, 10000, 40), (5000, 50000, 60)]
    backends = ["numpy"] + (["numba"] if _kernels.HAVE_NUMBA else [])
    if _kernels.HAVE_NUMBA:
        # compile outside the timed region
        _kernels.greedy_cover(*random_instance(rng, 10, 10, 3), backend="numba")

    print(f"{'sets':>6} {'templates':>10} {'per set':>8} " + " ".join(f"{b + ' ms':>10}" for b in backends) + "  speedup")
    for n_sets, n_templates, per_set in sizes:
        inst = random_instance(rng, n_sets, n_templates, per_set)
        row, picks = [], []
        for b in backends:
            t, out = best_of(lambda: _kernels.greedy_cover(*inst, backend=b), args.repeats)
            row.append(t)
            picks.append(out.tolist())
        assert all(p == picks[0] for p in picks), "backends disagree"
        speed = f"{row[0] / row[1]:.1f}x" if len(row) > 1 else "n/a"
        cells = " ".join(f"{t * 1000:>10.2f}" for t in row)
        print(f"{n_sets:>6} {n_templates:>10} {per_set:>8} {cells}  {speed}")


if __name__ == "__main__":
    main()
