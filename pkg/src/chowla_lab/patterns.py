"""Census of value patterns (g(n), ..., g(n+K-1)) for finite-alphabet g.

Windows start at n = 1, ..., N-K+1.  A window is packed into one integer,
first symbol most significant.  Logarithmic densities weight a window by 1/n
at its left end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import RangeError, UnsupportedFunction
from .functions import Character, FunctionSpec, LambdaQ, Liouville, Moebius
from .sieve import DEFAULT_SEGMENT, FactorBlock
from .sweep import Consumer, SweepStats, run_sweep

BITMAP_LIMIT = 1 << 26


class Alphabet:
    """Maps a function's values on a block to symbols 0..size-1."""

    def __init__(self, spec: FunctionSpec):
        self.spec = spec
        if isinstance(spec, Liouville):
            self.size = 2
        elif isinstance(spec, Moebius):
            self.size = 3
        elif isinstance(spec, LambdaQ):
            self.size = spec.q
        elif isinstance(spec, Character):
            self.size = spec.chi.denominator + 1
        else:
            raise UnsupportedFunction(f"{spec.to_string()} has no finite alphabet")

    def symbols(self, block: FactorBlock) -> np.ndarray:
        s = self.spec
        if isinstance(s, Liouville):
            return (block.liouville < 0).astype(np.uint64)
        if isinstance(s, Moebius):
            return (1 - block.mobius_array()).astype(np.uint64)
        if isinstance(s, LambdaQ):
            return (block.omega % s.q).astype(np.uint64)
        chi = s.chi
        e = np.asarray(chi.exponents, dtype=np.int64)
        e = np.where(e < 0, chi.denominator, e)
        return e[block.integers() % chi.modulus].astype(np.uint64)

    def render(self, code: int, K: int) -> str:
        digits = decode(code, K, self.size)
        if isinstance(self.spec, Liouville):
            return "".join("+-"[d] for d in digits)
        if isinstance(self.spec, Moebius):
            return "".join("+0-"[d] for d in digits)
        return "|".join(str(d) for d in digits)


def window_codes(symbols: np.ndarray, K: int, size: int) -> np.ndarray:
    """code[i] packs symbols[i : i+K]."""
    L = len(symbols) - K + 1
    if L <= 0:
        return np.zeros(0, dtype=np.uint64)
    A = np.uint64(size)
    code = np.zeros(L, dtype=np.uint64)
    for i in range(K):
        code = code * A + symbols[i : i + L]
    return code


def decode(code: int, K: int, size: int) -> tuple[int, ...]:
    out = []
    for _ in range(K):
        code, r = divmod(int(code), size)
        out.append(r)
    return tuple(reversed(out))


@dataclass
class PatternCensus:
    K: int
    N: int
    alphabet: int
    codes: np.ndarray
    counts: np.ndarray
    log_weights: np.ndarray
    spec: FunctionSpec | None = None
    meta: dict = field(default_factory=dict)

    @property
    def distinct_count(self) -> int:
        return int(len(self.codes))

    @property
    def windows(self) -> int:
        return self.N - self.K + 1

    @property
    def density_unweighted(self) -> np.ndarray:
        return self.counts / self.windows

    @property
    def density_log(self) -> np.ndarray:
        return self.log_weights / self.log_weights.sum()

    @property
    def frequencies(self) -> dict:
        A = Alphabet(self.spec) if self.spec is not None else None
        out = {}
        for c, n, du, dl in zip(self.codes, self.counts, self.density_unweighted, self.density_log):
            key = A.render(int(c), self.K) if A else decode(int(c), self.K, self.alphabet)
            out[key] = (int(n), float(du), float(dl))
        return out

    def rows(self):
        for k, (n, du, dl) in self.frequencies.items():
            yield k, n, du, dl


class CensusConsumer(Consumer):
    def __init__(self, spec: FunctionSpec, K: int, N: int):
        self.alpha = Alphabet(spec)
        self.spec, self.K, self.N = spec, int(K), int(N)
        if self.K < 1 or self.N < self.K:
            raise RangeError(f"need 1 <= K <= N, got K={K}, N={N}")
        if self.K * math.log2(self.alpha.size) > 64 - 1e-9 and not (self.alpha.size == 2 and self.K == 64):
            raise RangeError(f"K={K} windows over {self.alpha.size} symbols do not fit in 64 bits")
        self.limit = self.N - self.K + 1
        self.pad_hi = self.K - 1
        self.space = self.alpha.size**self.K
        self.dense = self.space <= BITMAP_LIMIT
        if self.dense:
            self.counts = np.zeros(self.space, dtype=np.int64)
            self.logw = np.zeros(self.space)
        else:
            self.counts, self.logw = {}, {}

    def process(self, chunk):
        b = chunk.block
        a = chunk.lo - b.lo
        L = chunk.hi - chunk.lo
        sym = self.alpha.symbols(b)[a : a + L + self.K - 1]
        codes = window_codes(sym, self.K, self.alpha.size)
        w = 1.0 / chunk.n.astype(np.float64)
        if self.dense:
            c = codes.astype(np.int64)
            return (np.bincount(c, minlength=self.space),
                    np.bincount(c, weights=w, minlength=self.space))
        u, inv = np.unique(codes, return_inverse=True)
        return u, np.bincount(inv), np.bincount(inv, weights=w)

    def absorb(self, partial):
        if self.dense:
            self.counts += partial[0]
            self.logw += partial[1]
            return
        for c, n, lw in zip(*partial):
            c = int(c)
            self.counts[c] = self.counts.get(c, 0) + int(n)
            self.logw[c] = self.logw.get(c, 0.0) + float(lw)

    def result(self) -> PatternCensus:
        if self.dense:
            codes = np.flatnonzero(self.counts).astype(np.uint64)
            counts, logw = self.counts[codes.astype(np.int64)], self.logw[codes.astype(np.int64)]
        else:
            keys = sorted(self.counts)
            codes = np.array(keys, dtype=np.uint64)
            counts = np.array([self.counts[k] for k in keys], dtype=np.int64)
            logw = np.array([self.logw[k] for k in keys])
        return PatternCensus(self.K, self.N, self.alpha.size, codes, counts, logw, self.spec)


def census(K: int, N: int, function: FunctionSpec | None = None, segment_size: int = DEFAULT_SEGMENT,
           threads: int | None = None, stats: SweepStats | None = None) -> PatternCensus:
    c = CensusConsumer(function if function is not None else Liouville(), K, N)
    run_sweep([c], segment_size, threads, stats)
    return c.result()


@dataclass
class GrowthRow:
    K: int
    s: int
    k_plus_5: int
    k_squared: int
    threshold_half: float
    threshold_one: float
    below_cited_bound: bool

    def as_dict(self) -> dict:
        return {"K": self.K, "s": self.s, "K+5": self.k_plus_5, "K^2": self.k_squared,
                "exp(0.5K/lnK)": self.threshold_half, "exp(K/lnK)": self.threshold_one,
                "below_K+5": self.below_cited_bound}


def _threshold(eps: float, K: int) -> float:
    return math.inf if K == 1 else math.exp(eps * K / math.log(K))


def growth_report(K_list, N: int, function: FunctionSpec | None = None, **kw) -> list[GrowthRow]:
    """Observed s(K) (a lower bound for the count over all n) next to K+5, K^2 and exp(eps K/ln K).

    ``below_cited_bound`` flags s(K) < K+5 wherever K+5 <= 2^K, which a
    correct census should never show.
    """
    g = function if function is not None else Liouville()
    cons = [CensusConsumer(g, K, N) for K in K_list]
    run_sweep(cons, **kw)
    rows = []
    for c in cons:
        K = c.K
        s = c.result().distinct_count
        rows.append(GrowthRow(K, s, K + 5, K * K, _threshold(0.5, K), _threshold(1.0, K),
                              s < K + 5 and K + 5 <= 2**K))
    return rows
