"""Hot loops for greedy hitting set, compiled with numba when available.

Set ``CHECKGEN_DISABLE_NUMBA=1`` to force the pure-numpy path. Both paths
return identical selections; the test suite checks that.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("CHECKGEN_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError("disabled by CHECKGEN_DISABLE_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False


def _greedy_cover_numpy(t_ptr, t_idx, s_ptr, s_idx, rank, n_sets):
    n_t = t_ptr.shape[0] - 1
    gains = np.diff(t_ptr).astype(np.int64)
    covered = np.zeros(n_sets, dtype=np.bool_)
    remaining = n_sets
    picks = []
    while remaining > 0:
        best_gain = gains.max() if n_t else 0
        if best_gain <= 0:
            break
        tied = np.flatnonzero(gains == best_gain)
        best = int(tied[np.argmin(rank[tied])])
        sets = t_idx[t_ptr[best] : t_ptr[best + 1]]
        fresh = sets[~covered[sets]]
        covered[fresh] = True
        remaining -= fresh.size
        if fresh.size:
            starts, stops = s_ptr[fresh], s_ptr[fresh + 1]
            touched = np.concatenate([s_idx[a:b] for a, b in zip(starts, stops)])
            gains -= np.bincount(touched, minlength=n_t)
        picks.append(best)
    return np.asarray(picks, dtype=np.int64)


if HAVE_NUMBA:

    @njit(cache=True)
    def _greedy_cover_numba(t_ptr, t_idx, s_ptr, s_idx, rank, n_sets):
        n_t = t_ptr.shape[0] - 1
        gains = np.empty(n_t, dtype=np.int64)
        for t in range(n_t):
            gains[t] = t_ptr[t + 1] - t_ptr[t]
        covered = np.zeros(n_sets, dtype=np.bool_)
        picks = np.empty(n_sets, dtype=np.int64)
        n_picks = 0
        remaining = n_sets
        while remaining > 0:
            best = -1
            for t in range(n_t):
                g = gains[t]
                if g <= 0:
                    continue
                if best < 0 or g > gains[best] or (g == gains[best] and rank[t] < rank[best]):
                    best = t
            if best < 0:
                break
            for p in range(t_ptr[best], t_ptr[best + 1]):
                s = t_idx[p]
                if covered[s]:
                    continue
                covered[s] = True
                remaining -= 1
                for q in range(s_ptr[s], s_ptr[s + 1]):
                    gains[s_idx[q]] -= 1
            picks[n_picks] = best
            n_picks += 1
        return picks[:n_picks]


def greedy_cover(t_ptr, t_idx, s_ptr, s_idx, rank, n_sets, backend=None):
    """Greedy hitting set on CSR incidence.

    ``t_ptr/t_idx`` list, per template, the sets it hits; ``s_ptr/s_idx``
    list, per set, the templates inside it. Among templates with the same
    number of uncovered hits the lowest ``rank`` wins. Returns template
    indices in pick order.
    """
    backend = backend or ("numba" if HAVE_NUMBA else "numpy")
    args = (
        np.ascontiguousarray(t_ptr, dtype=np.int64),
        np.ascontiguousarray(t_idx, dtype=np.int64),
        np.ascontiguousarray(s_ptr, dtype=np.int64),
        np.ascontiguousarray(s_idx, dtype=np.int64),
        np.ascontiguousarray(rank, dtype=np.int64),
        int(n_sets),
    )
    if backend == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba backend requested but numba is unavailable or disabled")
        return _greedy_cover_numba(*args)
    if backend == "numpy":
        return _greedy_cover_numpy(*args)
    raise ValueError(f"unknown backend {backend!r}")


def default_backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"
