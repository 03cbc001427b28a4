"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

The active backend is chosen once at import from the ``MDLAB_BACKEND``
environment variable (``numba`` or ``numpy``); when unset, numba is used
if importable. Both paths consume identical RNG streams and produce
bit-identical integer outputs; the sequence-TV reduction may differ in the
last float bits because of summation order (see ``benchmarks/``).
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False


VALID_BACKENDS = ("numba", "numpy")

_active = os.environ.get("MDLAB_BACKEND", "").strip().lower()
if _active and _active not in VALID_BACKENDS:
    raise ValueError(
        f"MDLAB_BACKEND={_active!r}: expected one of {VALID_BACKENDS}"
    )
if _active == "numba" and not HAVE_NUMBA:
    raise ImportError("MDLAB_BACKEND=numba but numba is not importable")
if not _active:
    _active = "numba" if HAVE_NUMBA else "numpy"


def active_backend() -> str:
    return _active


def set_backend(name: str) -> None:
    """Switch kernel backend at runtime (used by tests and benchmarks)."""
    global _active
    if name not in VALID_BACKENDS:
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise ImportError("numba backend requested but numba is not importable")
    _active = name


# ---------------------------------------------------------------------------
# numpy implementations

def _np_draw_pairs(cum, q, u, v):
    xs = np.searchsorted(cum, u, side="right").astype(np.int64)
    np.clip(xs, 0, len(cum) - 1, out=xs)
    ys = (v < q[xs]).astype(np.int8)
    return xs, ys


def _np_mismatch_count(bits, xs, ys):
    return int(np.count_nonzero(bits[xs] != ys))


def _np_label_gains(n, xs, ys):
    ones = np.bincount(xs[ys == 1], minlength=n).astype(np.int64)
    zeros = np.bincount(xs[ys == 0], minlength=n).astype(np.int64)
    return ones - zeros, int(ones.sum())


def _np_tv_sequence_sum(p0, pr, T):
    A = p0.shape[0]
    R = pr.shape[0]
    nseq = A**T
    acc = 0.0
    chunk = 1 << 16
    powers = A ** np.arange(T, dtype=np.int64)
    for start in range(0, nseq, chunk):
        idx = np.arange(start, min(start + chunk, nseq), dtype=np.int64)
        digits = (idx[:, None] // powers[None, :]) % A
        prod0 = p0[digits].prod(axis=1)
        prodr = pr[:, digits].prod(axis=2)
        acc += float(np.abs(prod0 - prodr.mean(axis=0)).sum())
    return 0.5 * acc


# ---------------------------------------------------------------------------
# numba implementations (same contracts, loop style)

if HAVE_NUMBA:

    @njit(cache=True)
    def _nb_draw_pairs(cum, q, u, v):
        n = cum.shape[0]
        count = u.shape[0]
        xs = np.empty(count, dtype=np.int64)
        ys = np.empty(count, dtype=np.int8)
        for i in range(count):
            x = np.searchsorted(cum, u[i], side="right")
            if x >= n:
                x = n - 1
            xs[i] = x
            ys[i] = 1 if v[i] < q[x] else 0
        return xs, ys

    @njit(cache=True)
    def _nb_mismatch_count(bits, xs, ys):
        miss = 0
        for i in range(xs.shape[0]):
            if bits[xs[i]] != ys[i]:
                miss += 1
        return miss

    @njit(cache=True)
    def _nb_label_gains(n, xs, ys):
        gains = np.zeros(n, dtype=np.int64)
        total_ones = 0
        for i in range(xs.shape[0]):
            if ys[i] == 1:
                gains[xs[i]] += 1
                total_ones += 1
            else:
                gains[xs[i]] -= 1
        return gains, total_ones

    @njit(cache=True)
    def _nb_tv_sequence_sum(p0, pr, T):
        A = p0.shape[0]
        R = pr.shape[0]
        nseq = 1
        for _ in range(T):
            nseq *= A
        prods = np.empty(R, dtype=np.float64)
        acc = 0.0
        for s in range(nseq):
            rem = s
            prod0 = 1.0
            for r in range(R):
                prods[r] = 1.0
            for _ in range(T):
                a = rem % A
                rem //= A
                prod0 *= p0[a]
                for r in range(R):
                    prods[r] *= pr[r, a]
            mean1 = 0.0
            for r in range(R):
                mean1 += prods[r]
            mean1 /= R
            acc += abs(prod0 - mean1)
        return 0.5 * acc


# ---------------------------------------------------------------------------
# dispatchers

def draw_pairs(cum: np.ndarray, q: np.ndarray, u: np.ndarray, v: np.ndarray):
    """Map uniforms to labeled draws: inverse-CDF on ``cum``, then y = v < q[x]."""
    if _active == "numba":
        return _nb_draw_pairs(cum, q, u, v)
    return _np_draw_pairs(cum, q, u, v)


def mismatch_count(bits: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> int:
    """Number of indices where ``bits[xs] != ys``."""
    if _active == "numba":
        return int(_nb_mismatch_count(bits, xs, ys))
    return _np_mismatch_count(bits, xs, ys)


def label_gains(n: int, xs: np.ndarray, ys: np.ndarray):
    """Per-point label gain ``#(y=1) - #(y=0)`` and the total count of 1-labels."""
    if _active == "numba":
        gains, total = _nb_label_gains(n, xs, ys)
        return gains, int(total)
    return _np_label_gains(n, xs, ys)


def tv_sequence_sum(p0: np.ndarray, pr: np.ndarray, T: int) -> float:
    """0.5 * sum over all length-T symbol sequences of |prod p0 - mean_r prod pr|."""
    if _active == "numba":
        return float(_nb_tv_sequence_sum(p0, pr, T))
    return _np_tv_sequence_sum(p0, pr, T)
