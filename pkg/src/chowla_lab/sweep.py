"""One sieve sweep over [1, N] feeding any number of registered consumers.

A consumer declares how far it reaches (``limit``) and how much sieve data
it needs around each n (``pad_lo <= 0 <= pad_hi``).  Its ``process`` method
is pure per chunk and may run on worker threads; ``absorb`` receives the
partial results strictly in range order, which keeps every snapshot and
merge independent of the thread count.
"""

from __future__ import annotations

import os
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import CapabilityError
from .sieve import DEFAULT_SEGMENT, FactorBlock, base_for, sieve_block

THREADS_ENV = "CHOWLA_LAB_THREADS"


def default_threads() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return 1


@dataclass
class SweepStats:
    sweeps: int = 0
    integers: int = 0
    blocks: int = 0
    seconds: float = 0.0
    threads: int = 1

    @property
    def throughput(self) -> float:
        return self.integers / self.seconds if self.seconds > 0 else 0.0

    def as_dict(self) -> dict:
        return {"sweeps": self.sweeps, "integers_sieved": self.integers, "blocks": self.blocks,
                "seconds": round(self.seconds, 3), "throughput_per_s": round(self.throughput, 1),
                "threads": self.threads}


class Chunk:
    """n in [lo, hi) together with a block covering the consumers' padding."""

    def __init__(self, lo: int, hi: int, block: FactorBlock):
        self.lo, self.hi = lo, hi
        self.block = block
        self._cache: dict = {}

    @property
    def n(self) -> np.ndarray:
        key = ("n", self.lo, self.hi)
        if key not in self._cache:
            self._cache[key] = np.arange(self.lo, self.hi, dtype=np.int64)
        return self._cache[key]

    def restrict(self, limit: int) -> "Chunk | None":
        if limit < self.lo:
            return None
        if limit + 1 >= self.hi:
            return self
        view = Chunk(self.lo, limit + 1, self.block)
        view._cache = self._cache
        return view

    def block_values(self, spec) -> np.ndarray:
        key = ("spec", spec)
        if key not in self._cache:
            self._cache[key] = spec.evaluate(self.block)
        return self._cache[key]

    def values(self, spec, offset: int = 0) -> np.ndarray:
        """g(n + offset) for n in this chunk; zero where n + offset <= 0."""
        full = self.block_values(spec)
        a, b = self.lo + offset, self.hi + offset
        out_dtype = full.dtype
        if a >= self.block.lo:
            return full[a - self.block.lo : b - self.block.lo]
        out = np.zeros(self.hi - self.lo, dtype=out_dtype)
        first = max(a, 1)
        if first < b:
            out[first - a :] = full[first - self.block.lo : b - self.block.lo]
        return out

    def field(self, name: str, offset: int = 0) -> np.ndarray:
        """Raw block array (omega, lpf_largest, ...) at n + offset; n + offset >= 1 required."""
        arr = getattr(self.block, name)
        a = self.lo + offset - self.block.lo
        if a < 0:
            raise CapabilityError("block padding does not reach below the chunk")
        return arr[a : a + (self.hi - self.lo)]


class Consumer:
    limit: int = 0
    pad_lo: int = 0
    pad_hi: int = 0

    def process(self, chunk: Chunk):
        raise NotImplementedError

    def absorb(self, partial) -> None:
        raise NotImplementedError

    def finish(self) -> None:
        pass


def run_sweep(consumers, segment_size: int = DEFAULT_SEGMENT, threads: int | None = None,
              stats: SweepStats | None = None) -> SweepStats:
    """Sieve once over [1, max limit] and drive every consumer."""
    consumers = [c for c in consumers if c is not None]
    stats = stats if stats is not None else SweepStats()
    threads = threads or default_threads()
    stats.threads = threads
    if not consumers:
        return stats
    top = max(c.limit for c in consumers)
    pad_lo = min(min(c.pad_lo for c in consumers), 0)
    pad_hi = max(max(c.pad_hi for c in consumers), 0)
    span = segment_size - (pad_hi - pad_lo)
    if span < 1:
        raise CapabilityError(f"shifts span {pad_hi - pad_lo} exceeds the segment size")
    if top < 1:
        for c in consumers:
            c.finish()
        return stats
    base = base_for(top + pad_hi + 1)
    bounds = [(lo, min(lo + span, top + 1)) for lo in range(1, top + 1, span)]

    def work(lohi):
        lo, hi = lohi
        blo = max(1, lo + pad_lo)
        bhi = hi + pad_hi
        block = sieve_block(blo, bhi, base, segment_size)
        chunk = Chunk(lo, hi, block)
        parts = []
        for c in consumers:
            view = chunk.restrict(c.limit)
            parts.append(None if view is None else c.process(view))
        return parts, bhi - blo

    t0 = time.perf_counter()
    if threads <= 1:
        results = map(work, bounds)
        for parts, size in results:
            _absorb(consumers, parts)
            stats.integers += size
            stats.blocks += 1
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            pending: deque = deque()
            it = iter(bounds)
            for b in it:
                pending.append(pool.submit(work, b))
                if len(pending) >= 2 * threads:
                    break
            while pending:
                parts, size = pending.popleft().result()
                _absorb(consumers, parts)
                stats.integers += size
                stats.blocks += 1
                nxt = next(it, None)
                if nxt is not None:
                    pending.append(pool.submit(work, nxt))
    for c in consumers:
        c.finish()
    stats.seconds += time.perf_counter() - t0
    stats.sweeps += 1
    return stats


def _absorb(consumers, parts):
    for c, p in zip(consumers, parts):
        if p is not None:
            c.absorb(p)


class FunctionSum(Consumer):
    """Block-wise accumulators of g(n) for n <= limit, kept per block.

    Used for sweep benchmarks and merge-law checks on large sums.
    """

    def __init__(self, spec, limit: int, scheme="unweighted"):
        from .averaging import WeightScheme

        self.spec = spec
        self.limit = int(limit)
        self.scheme = WeightScheme.parse(scheme)
        self.blocks: list = []

    def process(self, chunk):
        from .averaging import WeightedAccumulator

        acc = WeightedAccumulator(self.scheme)
        acc.add_chunk(chunk.n, chunk.values(self.spec))
        return acc

    def absorb(self, partial):
        self.blocks.append(partial)


@dataclass
class Plan:
    """Consumers to register on a sweep plus a function that assembles the result."""

    consumers: list
    finish: object

    def result(self):
        return self.finish()


def run_plan(plan: Plan, segment_size: int = DEFAULT_SEGMENT, threads: int | None = None,
             stats: SweepStats | None = None):
    run_sweep(plan.consumers, segment_size, threads, stats)
    return plan.result()
