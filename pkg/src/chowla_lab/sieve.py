"""Segmented factor sieve: Omega, Liouville, Moebius data and largest prime factors.

Each block covers a half-open range ``[lo, hi)``.  Base primes up to
``isqrt(hi - 1)`` mark their multiples and prime-power multiples; whatever
cofactor is left after that is a single prime larger than every base prime,
so it adds one to Omega and is the largest prime factor.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from math import isqrt
from pathlib import Path
from typing import Iterator

import numpy as np
from numba import njit

from .errors import RangeError

DEFAULT_SEGMENT = 1 << 22
MAX_HI = 1 << 63

CACHE_MAGIC = b"CHLB"
CACHE_VERSION = 1
_HEADER = struct.Struct("<4sIQQ")


@dataclass(frozen=True)
class PrimeTable:
    bound: int
    primes: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.primes)


def simple_primes(bound: int) -> np.ndarray:
    """All primes <= bound by a plain sieve of Eratosthenes."""
    if bound < 2:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(bound + 1, dtype=bool)
    flags[:2] = False
    flags[4::2] = False
    for p in range(3, isqrt(bound) + 1, 2):
        if flags[p]:
            flags[p * p :: 2 * p] = False
    return np.flatnonzero(flags).astype(np.int64)


def prime_table(bound: int) -> PrimeTable:
    return PrimeTable(int(bound), simple_primes(int(bound)))


def base_for(hi: int) -> PrimeTable:
    """The smallest prime table able to sieve blocks ending below ``hi``."""
    return prime_table(max(2, isqrt(max(hi - 1, 1))))


@dataclass(frozen=True, eq=False)
class FactorBlock:
    """Per-integer arithmetic data for ``n`` in ``[lo, hi)``.

    ``liouville`` holds lambda(n) as int8 +1/-1.  ``squarefree`` is a bool
    array.  Both are bit-packed only in the on-disk cache format.
    """

    lo: int
    hi: int
    omega: np.ndarray = field(repr=False)
    lpf_largest: np.ndarray = field(repr=False)
    squarefree: np.ndarray = field(repr=False)
    liouville: np.ndarray = field(repr=False)
    base: PrimeTable | None = field(default=None, repr=False, compare=False)

    def __len__(self):
        return self.hi - self.lo

    def index(self, n: int) -> int:
        if not self.lo <= n < self.hi:
            raise RangeError(f"n={n} outside block [{self.lo}, {self.hi})")
        return n - self.lo

    def integers(self) -> np.ndarray:
        return np.arange(self.lo, self.hi, dtype=np.int64)

    def mobius_array(self) -> np.ndarray:
        return np.where(self.squarefree, self.liouville, 0).astype(np.int8)

    def slice(self, lo: int, hi: int) -> "FactorBlock":
        i, j = lo - self.lo, hi - self.lo
        if not (0 <= i < j <= len(self)):
            raise RangeError(f"[{lo}, {hi}) not inside [{self.lo}, {self.hi})")
        return FactorBlock(
            lo, hi, self.omega[i:j], self.lpf_largest[i:j],
            self.squarefree[i:j], self.liouville[i:j], self.base,
        )

    def same_data(self, other: "FactorBlock") -> bool:
        return (
            self.lo == other.lo
            and self.hi == other.hi
            and np.array_equal(self.omega, other.omega)
            and np.array_equal(self.lpf_largest, other.lpf_largest)
            and np.array_equal(self.squarefree, other.squarefree)
            and np.array_equal(self.liouville, other.liouville)
        )


@njit(nogil=True, cache=True)
def _factor_kernel(lo, hi, primes, omega, lpf, sqfree, prod):
    n = hi - lo
    top = hi - 1
    for i in range(n):
        omega[i] = 0
        lpf[i] = 1
        sqfree[i] = True
        prod[i] = 1
    for k in range(primes.shape[0]):
        p = primes[k]
        if p * p > top:
            break
        start = ((lo + p - 1) // p) * p - lo
        for m in range(start, n, p):
            omega[m] += 1
            lpf[m] = p
            prod[m] *= p
        pk = p * p
        while pk <= top:
            start = ((lo + pk - 1) // pk) * pk - lo
            for m in range(start, n, pk):
                omega[m] += 1
                prod[m] *= p
                sqfree[m] = False
            if pk > top // p:
                break
            pk *= p
    for i in range(n):
        v = lo + i
        if prod[i] != v:
            omega[i] += 1
            lpf[i] = v // prod[i]


def sieve_block(lo: int, hi: int, base: PrimeTable | None = None,
                segment_size: int = DEFAULT_SEGMENT) -> FactorBlock:
    lo, hi = int(lo), int(hi)
    if not 1 <= lo < hi:
        raise RangeError(f"need 1 <= lo < hi, got [{lo}, {hi})")
    if hi > MAX_HI:
        raise RangeError("ranges beyond 2**63 are not supported")
    if hi - lo > segment_size:
        raise RangeError(
            f"range-too-large: {hi - lo} integers exceeds segment cap {segment_size}")
    if base is None:
        base = base_for(hi)
    elif base.bound < isqrt(hi - 1):
        raise RangeError(
            f"insufficient base primes: bound {base.bound} squared is below {hi}")
    size = hi - lo
    omega = np.empty(size, dtype=np.uint8)
    lpf = np.empty(size, dtype=np.uint64)
    sqfree = np.empty(size, dtype=np.bool_)
    prod = np.empty(size, dtype=np.int64)
    _factor_kernel(lo, hi, base.primes, omega, lpf.view(np.int64), sqfree, prod)
    liouville = (1 - 2 * (omega & 1).astype(np.int8)).astype(np.int8)
    return FactorBlock(lo, hi, omega, lpf, sqfree, liouville, base)


def mobius(block: FactorBlock, n: int) -> int:
    i = block.index(n)
    return int(block.liouville[i]) if block.squarefree[i] else 0


def iter_blocks(lo: int, hi: int, segment_size: int = DEFAULT_SEGMENT,
                base: PrimeTable | None = None) -> Iterator[FactorBlock]:
    """Sieve ``[lo, hi)`` as consecutive blocks of at most ``segment_size``."""
    if base is None:
        base = base_for(hi)
    for a in range(lo, hi, segment_size):
        yield sieve_block(a, min(a + segment_size, hi), base, segment_size)


# --- primes -----------------------------------------------------------------

@njit(nogil=True, cache=True)
def _prime_flags(lo, hi, primes, flags):
    n = hi - lo
    for i in range(n):
        flags[i] = True
    for i in range(n):
        if lo + i < 2:
            flags[i] = False
        else:
            break
    for k in range(primes.shape[0]):
        p = primes[k]
        if p * p >= hi:
            break
        start = ((lo + p - 1) // p) * p
        if start < p * p:
            start = p * p
        for m in range(start - lo, n, p):
            flags[m] = False


def prime_chunks(lo: int, hi: int, segment_size: int = DEFAULT_SEGMENT) -> Iterator[np.ndarray]:
    """Ascending arrays of the primes in ``[lo, hi)``, one per segment."""
    lo, hi = int(lo), int(hi)
    if not 1 <= lo < hi:
        raise RangeError(f"need 1 <= lo < hi, got [{lo}, {hi})")
    base = base_for(hi)
    flags = np.empty(min(segment_size, hi - lo), dtype=np.bool_)
    for a in range(lo, hi, segment_size):
        b = min(a + segment_size, hi)
        f = flags[: b - a]
        _prime_flags(a, b, base.primes, f)
        yield np.flatnonzero(f).astype(np.int64) + a


def prime_iter(lo: int, hi: int) -> Iterator[int]:
    for chunk in prime_chunks(lo, hi):
        yield from (int(p) for p in chunk)


def primes_upto(x: float) -> np.ndarray:
    """All primes p <= x."""
    top = int(np.floor(x)) + 1
    if top <= 2:
        return np.zeros(0, dtype=np.int64)
    return np.concatenate(list(prime_chunks(1, top)))


# --- on-disk cache --------------------------------------------------------

def write_block(path: str | Path, block: FactorBlock) -> None:
    n = len(block)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(CACHE_MAGIC, CACHE_VERSION, block.lo, block.hi))
        fh.write(block.omega.astype("<u1").tobytes())
        fh.write(block.lpf_largest.astype("<u8").tobytes())
        fh.write(np.packbits(block.squarefree, bitorder="little").tobytes())
        fh.write(np.packbits(block.liouville < 0, bitorder="little").tobytes())
    assert n == block.hi - block.lo


def read_block(path: str | Path) -> FactorBlock:
    raw = Path(path).read_bytes()
    magic, version, lo, hi = _HEADER.unpack_from(raw, 0)
    if magic != CACHE_MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != CACHE_VERSION:
        raise ValueError(f"{path}: unsupported cache version {version}")
    n = hi - lo
    nbits = (n + 7) // 8
    off = _HEADER.size
    omega = np.frombuffer(raw, dtype="<u1", count=n, offset=off).astype(np.uint8)
    off += n
    lpf = np.frombuffer(raw, dtype="<u8", count=n, offset=off).astype(np.uint64)
    off += 8 * n
    sq = np.unpackbits(np.frombuffer(raw, np.uint8, nbits, off), count=n,
                       bitorder="little").astype(bool)
    off += nbits
    neg = np.unpackbits(np.frombuffer(raw, np.uint8, nbits, off), count=n,
                        bitorder="little").astype(bool)
    liouville = np.where(neg, -1, 1).astype(np.int8)
    return FactorBlock(lo, hi, omega, lpf, sq, liouville)


class BlockCache:
    """Directory of cached blocks, one file per ``[lo, hi)``."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def path(self, lo: int, hi: int) -> Path:
        return self.root / f"block_{lo:020d}_{hi:020d}.chlb"

    def get(self, lo: int, hi: int, base: PrimeTable | None = None,
            segment_size: int = DEFAULT_SEGMENT) -> FactorBlock:
        p = self.path(lo, hi)
        if p.exists():
            return read_block(p)
        block = sieve_block(lo, hi, base, segment_size)
        write_block(p, block)
        return block
