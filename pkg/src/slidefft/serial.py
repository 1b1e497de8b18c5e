"""Serial radix-2 FFT built from explicit index permutations and segment crossings.

The transform is organized the way the distributed engine in :mod:`slidefft.wave`
expects it: the input is first reordered by a permutation built from repeated
even/odd partitioning (equivalently, bit reversal), then ``log2(n)`` levels of
crossings merge adjacent segment pairs of doubling size.  A brute-force
O(n^2) DFT is provided as the verification oracle.

All transforms operate on the last axis, so a batch of inputs can be shaped
``(batch, n)`` and processed in one call.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

# Cost convention for one crossing pair: a complex multiply is 6 real FLOPs,
# each complex add/subtract is 2, so L = E + U*O and R = E - U*O cost 10.
FLOPS_PER_PAIR = 10


class FlopCounter:
    """Accumulates floating-point operation counts booked by crossings."""

    __slots__ = ("flops",)

    def __init__(self) -> None:
        self.flops = 0

    def add(self, count: int) -> None:
        self.flops += int(count)


def log2_exact(n: int) -> int:
    """Return m with n == 2**m, rejecting anything that is not a power of two."""
    if n < 1 or (n & (n - 1)) != 0:
        raise ValueError(f"length must be a power of two, got {n}")
    return n.bit_length() - 1


def _as_samples(x, dtype=np.complex128) -> np.ndarray:
    y = np.asarray(x, dtype=dtype)
    if y.ndim < 1 or y.shape[-1] < 1:
        raise ValueError("sample vector must have at least one element")
    if not np.all(np.isfinite(y.view(np.float64 if dtype == np.complex128 else np.float32))):
        raise ValueError("sample vector contains non-finite values")
    return y


def bit_reverse_index(i: int, m: int) -> int:
    """Reverse the m-bit binary representation of i.

    Written as a direct bit loop so it stays independent of the
    partition-based table construction it is used to verify.
    """
    if m < 0:
        raise ValueError("bit width must be non-negative")
    if not 0 <= i < (1 << m):
        raise ValueError(f"index {i} out of range for {m} bits")
    r = 0
    for _ in range(m):
        r = (r << 1) | (i & 1)
        i >>= 1
    return r


@dataclass(frozen=True)
class PermutationTable:
    """Index layouts for each level of the transform.

    ``rows[p-1]`` is the index sequence at level p; row 1 is the identity and
    the final row is the bit-reversal permutation.  ``lookup`` holds the
    inverse of each row: ``lookup[p-1][rows[p-1][i]] == i``.
    """

    m: int
    n: int
    rows: np.ndarray
    lookup: np.ndarray

    @property
    def final_row(self) -> np.ndarray:
        return self.rows[-1]


@lru_cache(maxsize=None)
def build_permutation(m: int) -> PermutationTable:
    """Build the level-by-level input permutation for a 2**m-point transform.

    Each row is produced from the previous one by splitting segments of size
    n / 2**(p-1) into their even-indexed entries followed by their
    odd-indexed entries.
    """
    if m < 1:
        raise ValueError("need at least one level (m >= 1)")
    n = 1 << m
    rows = np.empty((m, n), dtype=np.int64)
    rows[0] = np.arange(n)
    for p in range(1, m):
        seg = n >> (p - 1)
        prev = rows[p - 1].reshape(n // seg, seg)
        rows[p] = np.concatenate([prev[:, 0::2], prev[:, 1::2]], axis=1).reshape(n)
    lookup = np.empty_like(rows)
    for p in range(m):
        lookup[p] = np.argsort(rows[p])
    rows.setflags(write=False)
    lookup.setflags(write=False)
    return PermutationTable(m=m, n=n, rows=rows, lookup=lookup)


@dataclass(frozen=True)
class TwiddleTable:
    """Unit-circle factors exp(-2*pi*i*k/N) for k = 0 .. N/2 - 1."""

    N: int
    factors: np.ndarray


@lru_cache(maxsize=None)
def twiddle_table(N: int) -> TwiddleTable:
    if N < 2 or (N & (N - 1)) != 0:
        raise ValueError(f"segment pair size must be a power of two >= 2, got {N}")
    k = np.arange(N // 2)
    factors = np.exp(-2j * np.pi * k / N)
    factors.setflags(write=False)
    return TwiddleTable(N=N, factors=factors)


def _butterfly(e: np.ndarray, o: np.ndarray, u: np.ndarray):
    op = u * o
    return e + op, e - op


def crossing(e, o, twiddles, counter: FlopCounter | None = None):
    """Merge segments E and O of one crossing: L = E + U*O, R = E - U*O.

    ``twiddles`` is a :class:`TwiddleTable` or a plain array of its N/2
    factors.  Books 10 * (N/2) FLOPs into ``counter`` when one is attached.
    """
    e = np.asarray(e, dtype=np.complex128)
    o = np.asarray(o, dtype=np.complex128)
    factors = twiddles.factors if isinstance(twiddles, TwiddleTable) else np.asarray(twiddles)
    half = factors.shape[-1]
    if e.shape[-1] != half or o.shape[-1] != half:
        raise ValueError(
            f"segment length mismatch: E has {e.shape[-1]}, O has {o.shape[-1]}, "
            f"twiddles expect {half}"
        )
    l, r = _butterfly(e, o, factors)
    if counter is not None:
        counter.add(FLOPS_PER_PAIR * half)
    return l, r


def fft_serial(x, counter: FlopCounter | None = None, dtype=np.complex128) -> np.ndarray:
    """Radix-2 decimation-in-time FFT over the last axis.

    The input is permuted by the final row of :func:`build_permutation`, then
    levels p = m .. 1 merge segment pairs of size N = 2, 4, ..., n.  Total
    booked FLOPs come to exactly 5 * n * log2(n).  ``dtype`` may be set to
    ``numpy.complex64`` for single-precision arithmetic; cost accounting is
    unaffected by the choice.
    """
    y = _as_samples(x, dtype=dtype)
    n = y.shape[-1]
    m = log2_exact(n)
    if m == 0:
        return y.copy()
    perm = build_permutation(m).final_row
    y = y[..., perm]
    N = 2
    for _ in range(m):
        u = twiddle_table(N).factors
        if dtype != np.complex128:
            u = u.astype(dtype)
        v = y.reshape(y.shape[:-1] + (n // N, N))
        l, r = _butterfly(v[..., : N // 2], v[..., N // 2 :], u)
        y = np.concatenate([l, r], axis=-1).reshape(y.shape)
        if counter is not None:
            counter.add(FLOPS_PER_PAIR * (n // 2))
        N *= 2
    return y


def ifft_serial(X, counter: FlopCounter | None = None) -> np.ndarray:
    """Inverse transform via conjugation: ifft(X) = conj(fft(conj(X))) / n."""
    X = _as_samples(X)
    n = X.shape[-1]
    return np.conj(fft_serial(np.conj(X), counter=counter)) / n


def dft_oracle(x) -> np.ndarray:
    """Brute-force O(n^2) DFT over the last axis, X[j] = sum_k x[k] e^{-2pi i jk/n}.

    Independent of the radix-2 machinery above; evaluated row-block by
    row-block to bound the size of the phase matrix held in memory.
    """
    x = _as_samples(x)
    n = x.shape[-1]
    X = np.empty_like(x)
    k = np.arange(n)
    block = 1024
    for j0 in range(0, n, block):
        j = np.arange(j0, min(j0 + block, n))
        w = np.exp(-2j * np.pi * np.outer(j, k) / n)
        X[..., j0 : j0 + len(j)] = x @ w.T
    return X
