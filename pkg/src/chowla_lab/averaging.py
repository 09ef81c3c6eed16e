"""Weighted averages as streaming, mergeable accumulators.

Weights: 1 (unweighted), 1/n (log), 1/(n log(1+n)) (doubly logarithmic); the
prime schemes use the same weights restricted to primes.  Sums are carried
with Neumaier compensation so that block-wise partial sums merge
reproducibly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .errors import RangeError


class WeightScheme(enum.Enum):
    UNWEIGHTED = "unweighted"
    LOG = "log"
    LOGLOG = "loglog"
    PRIME_UNWEIGHTED = "prime_unweighted"
    PRIME_LOG = "prime_log"

    @property
    def primes_only(self) -> bool:
        return self in (WeightScheme.PRIME_UNWEIGHTED, WeightScheme.PRIME_LOG)

    def weights(self, n: np.ndarray) -> np.ndarray:
        n = np.asarray(n, dtype=np.float64)
        if self in (WeightScheme.UNWEIGHTED, WeightScheme.PRIME_UNWEIGHTED):
            return np.ones_like(n)
        if self in (WeightScheme.LOG, WeightScheme.PRIME_LOG):
            return 1.0 / n
        return 1.0 / (n * np.log1p(n))

    @classmethod
    def parse(cls, s: "str | WeightScheme") -> "WeightScheme":
        if isinstance(s, cls):
            return s
        return cls(str(s).lower().replace("-", "_"))


def _two_sum(a: float, b: float) -> tuple[float, float]:
    s = a + b
    if abs(a) >= abs(b):
        return s, (a - s) + b
    return s, (b - s) + a


class KahanSum:
    """Neumaier-compensated running sum of floats."""

    __slots__ = ("s", "c")

    def __init__(self, s: float = 0.0, c: float = 0.0):
        self.s, self.c = s, c

    def add(self, x: float) -> None:
        self.s, err = _two_sum(self.s, float(x))
        self.c += err

    def merge(self, other: "KahanSum") -> None:
        self.add(other.s)
        self.c += other.c

    @property
    def value(self) -> float:
        return self.s + self.c

    def copy(self) -> "KahanSum":
        return KahanSum(self.s, self.c)


class WeightedAccumulator:
    """Running sum(w f), sum(w) and count for one weight scheme.

    Accumulators over disjoint ranges merge (commutatively, associatively up
    to rounding) into the accumulator of the union, and can be subtracted to
    get window averages.
    """

    def __init__(self, scheme: WeightScheme | str = WeightScheme.UNWEIGHTED):
        self.scheme = WeightScheme.parse(scheme)
        self.re = KahanSum()
        self.im = KahanSum()
        self.den = KahanSum()
        self.count = 0

    def add_chunk(self, n: np.ndarray, f: np.ndarray, w: np.ndarray | None = None) -> None:
        n = np.asarray(n)
        if n.size == 0:
            return
        if w is None:
            w = self.scheme.weights(n)
        f = np.asarray(f)
        wf = w * f
        if np.iscomplexobj(wf):
            self.re.add(np.sum(wf.real))
            self.im.add(np.sum(wf.imag))
        else:
            self.re.add(np.sum(wf))
        self.den.add(np.sum(w))
        self.count += int(n.size)

    def add(self, n: int, f: complex) -> None:
        w = float(self.scheme.weights(np.array([n]))[0])
        f = complex(f)
        self.re.add(w * f.real)
        self.im.add(w * f.imag)
        self.den.add(w)
        self.count += 1

    def merge(self, other: "WeightedAccumulator") -> "WeightedAccumulator":
        if other.scheme is not self.scheme:
            raise ValueError("cannot merge accumulators of different schemes")
        self.re.merge(other.re)
        self.im.merge(other.im)
        self.den.merge(other.den)
        self.count += other.count
        return self

    def copy(self) -> "WeightedAccumulator":
        a = WeightedAccumulator(self.scheme)
        a.re, a.im, a.den = self.re.copy(), self.im.copy(), self.den.copy()
        a.count = self.count
        return a

    def __sub__(self, other: "WeightedAccumulator") -> "WeightedAccumulator":
        """Accumulator of the range covered by ``self`` but not ``other`` (a prefix of it)."""
        a = self.copy()
        a.re.add(-other.re.s)
        a.re.c -= other.re.c
        a.im.add(-other.im.s)
        a.im.c -= other.im.c
        a.den.add(-other.den.s)
        a.den.c -= other.den.c
        a.count -= other.count
        return a

    @property
    def num(self) -> complex:
        return complex(self.re.value, self.im.value)

    @property
    def weight(self) -> float:
        return self.den.value

    def mean(self) -> complex:
        if self.count == 0 or self.den.value <= 0:
            raise RangeError("average over an empty index set")
        return self.num / self.den.value


@dataclass(frozen=True)
class ScaleGrid:
    """Scales x0 * ratio**j, j = 0..count-1, or an explicit increasing list."""

    x0: float = 10.0
    ratio: float = 2.0**0.25
    count: int = 1
    points: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.points is None:
            if not (self.x0 >= 1 and self.ratio > 1 and self.count >= 1):
                raise RangeError(f"invalid grid x0={self.x0} ratio={self.ratio} count={self.count}")
        else:
            p = self.points
            if not p or any(b <= a for a, b in zip(p, p[1:])) or p[0] < 1:
                raise RangeError("explicit grid must be non-empty, >= 1 and strictly increasing")

    @classmethod
    def explicit(cls, points: Iterable[float]) -> "ScaleGrid":
        pts = tuple(float(x) for x in points)
        return cls(pts[0], 2.0, len(pts), pts)

    @classmethod
    def spanning(cls, lo: float, hi: float, ratio: float = 2.0**0.25) -> "ScaleGrid":
        """Geometric grid from ``lo`` up to (and including) ``hi``."""
        count = int(math.floor(math.log(hi / lo) / math.log(ratio) + 1e-9)) + 1
        pts = [lo * ratio**j for j in range(count)]
        if pts[-1] < hi * (1 - 1e-12):
            pts.append(hi)
        else:
            pts[-1] = hi
        return cls.explicit(pts)

    @property
    def scales(self) -> np.ndarray:
        if self.points is not None:
            return np.array(self.points, dtype=np.float64)
        return self.x0 * self.ratio ** np.arange(self.count, dtype=np.float64)

    def __len__(self):
        return self.count if self.points is None else len(self.points)

    @property
    def max(self) -> float:
        return float(self.scales[-1])


@dataclass
class CorrelationSeries:
    """Averaged values on a grid of scales, with per-scale count and weight."""

    scales: np.ndarray
    values: np.ndarray
    counts: np.ndarray
    dens: np.ndarray
    scheme: WeightScheme = WeightScheme.UNWEIGHTED
    query: object = None
    meta: dict = field(default_factory=dict)

    @property
    def abs(self) -> np.ndarray:
        return np.abs(self.values)

    def rows(self):
        for x, v, c, d in zip(self.scales, self.values, self.counts, self.dens):
            yield float(x), complex(v), int(c), float(d)


def cutpoints(grid: ScaleGrid, d: float = 1.0) -> np.ndarray:
    """Integer upper limits floor(X/d) for each grid scale X."""
    return np.floor(grid.scales / d + 1e-9).astype(np.int64)


def split_at_cuts(acc_factory: Callable[[], WeightedAccumulator], n: np.ndarray,
                  f: np.ndarray, w: np.ndarray, cuts: np.ndarray):
    """Partial accumulators of a sorted chunk, split after each cut value.

    Returns a list of ``(cut_indices, accumulator)``: every accumulator covers
    a segment of the chunk, ``cut_indices`` lists the cuts reached exactly at
    its end.
    """
    out = []
    if n.size == 0:
        return out
    lo, hi = int(n[0]), int(n[-1])
    inside = np.flatnonzero((cuts >= lo) & (cuts <= hi))
    inside = inside[np.argsort(cuts[inside], kind="stable")]
    start = 0
    k = 0
    while k < len(inside):
        c = int(cuts[inside[k]])
        same = [int(inside[k])]
        while k + 1 < len(inside) and cuts[inside[k + 1]] == c:
            k += 1
            same.append(int(inside[k]))
        stop = int(np.searchsorted(n, c, side="right"))
        acc = acc_factory()
        acc.add_chunk(n[start:stop], f[start:stop], w[start:stop])
        out.append((same, acc))
        start = stop
        k += 1
    if start < n.size:
        acc = acc_factory()
        acc.add_chunk(n[start:], f[start:], w[start:])
        out.append(([], acc))
    return out


class SnapshotCollector:
    """Absorbs split partials in range order and records prefix snapshots."""

    def __init__(self, scheme: WeightScheme, cuts: np.ndarray):
        self.scheme = scheme
        self.acc = WeightedAccumulator(scheme)
        self.snaps: list[WeightedAccumulator | None] = [
            WeightedAccumulator(scheme) if c < 1 else None for c in cuts]

    def absorb(self, parts) -> None:
        for idxs, acc in parts:
            self.acc.merge(acc)
            for i in idxs:
                self.snaps[i] = self.acc.copy()

    def finish(self) -> None:
        for i, s in enumerate(self.snaps):
            if s is None:
                self.snaps[i] = self.acc.copy()


def _is_prime_mask(n: np.ndarray) -> np.ndarray:
    from .sieve import _prime_flags, base_for

    if n.size == 0:
        return np.zeros(0, bool)
    lo, hi = int(n.min()), int(n.max()) + 1
    lo = max(lo, 1)
    flags = np.empty(hi - lo, dtype=np.bool_)
    _prime_flags(lo, hi, base_for(hi).primes, flags)
    return flags[n - lo]


def _chunks(values) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Normalise a stream of (n, f(n)) pairs or array chunks."""
    buf_n: list = []
    buf_f: list = []
    for item in values:
        n, f = item
        if np.ndim(n) == 0:
            buf_n.append(n)
            buf_f.append(f)
            if len(buf_n) >= 65536:
                yield np.array(buf_n, np.int64), np.array(buf_f)
                buf_n, buf_f = [], []
        else:
            if buf_n:
                yield np.array(buf_n, np.int64), np.array(buf_f)
                buf_n, buf_f = [], []
            yield np.asarray(n, np.int64), np.asarray(f)
    if buf_n:
        yield np.array(buf_n, np.int64), np.array(buf_f)


def average(values, scheme: WeightScheme | str, upto: float) -> complex:
    """sum_{n <= X} w(n) f(n) / sum_{n <= X} w(n) over a stream of (n, f(n))."""
    scheme = WeightScheme.parse(scheme)
    if upto < 1:
        raise RangeError("X must be >= 1")
    acc = WeightedAccumulator(scheme)
    top = math.floor(upto + 1e-9)
    real = True
    for n, f in _chunks(values):
        real = real and not np.iscomplexobj(f)
        keep = (n >= 1) & (n <= top)
        if scheme.primes_only:
            keep &= _is_prime_mask(np.where(keep, n, 1))
        acc.add_chunk(n[keep], f[keep])
    val = acc.mean()
    return val.real if real else val


def snapshot_series(values, scheme: WeightScheme | str, grid: ScaleGrid) -> CorrelationSeries:
    """One averaged value per grid scale from a single ordered pass."""
    scheme = WeightScheme.parse(scheme)
    cuts = cutpoints(grid)
    col = SnapshotCollector(scheme, cuts)
    last = 0
    for n, f in _chunks(values):
        if n.size and (n[0] <= last or np.any(np.diff(n) <= 0)):
            raise RangeError("stream must be strictly increasing in n")
        if n.size:
            last = int(n[-1])
        keep = (n >= 1) & (n <= cuts[-1])
        if scheme.primes_only:
            keep &= _is_prime_mask(np.where(keep, n, 1))
        n, f = n[keep], f[keep]
        col.absorb(split_at_cuts(lambda: WeightedAccumulator(scheme), n, f, scheme.weights(n), cuts))
    col.finish()
    vals = np.array([s.mean() if s.count else np.nan for s in col.snaps], dtype=np.complex128)
    return CorrelationSeries(grid.scales, vals, np.array([s.count for s in col.snaps]),
                             np.array([s.weight for s in col.snaps]), scheme)


def merge_all(accs: Sequence[WeightedAccumulator]) -> WeightedAccumulator:
    if not accs:
        raise ValueError("nothing to merge")
    out = accs[0].copy()
    for a in accs[1:]:
        out.merge(a)
    return out


def compare_integer_prime_averages(f: Callable[[np.ndarray], np.ndarray], a: int, X: float,
                                   chunk: int = 1 << 20) -> tuple[complex, complex, float]:
    """(E^loglog_{d<=X} f(d), E^log_{p<=X} f(a p), |difference|).

    ``f`` is vectorised over int64 arrays.  The two averages agree in the
    limit for bounded log-Lipschitz f; at finite X the gap is only reported.
    """
    from .sieve import prime_chunks

    if a < 1:
        raise RangeError("a must be a natural number")
    top = int(math.floor(X + 1e-9))
    ints = WeightedAccumulator(WeightScheme.LOGLOG)
    for lo in range(1, top + 1, chunk):
        d = np.arange(lo, min(lo + chunk, top + 1), dtype=np.int64)
        v = np.asarray(f(d))
        if not np.all(np.isfinite(v)):
            raise ValueError("f returned non-finite values")
        ints.add_chunk(d, v)
    prim = WeightedAccumulator(WeightScheme.PRIME_LOG)
    for p in prime_chunks(1, top + 1):
        v = np.asarray(f(a * p))
        if not np.all(np.isfinite(v)):
            raise ValueError("f returned non-finite values")
        prim.add_chunk(p, v)
    x, y = ints.mean(), prim.mean()
    return x, y, abs(x - y)


def harmonic(n: int) -> float:
    """H(n) = sum_{k<=n} 1/k."""
    if n <= 0:
        return 0.0
    if n < 10_000:
        return math.fsum(1.0 / k for k in range(1, n + 1))
    x = float(n)
    return (math.log(x) + 0.57721566490153286061 + 1 / (2 * x) - 1 / (12 * x * x)
            + 1 / (120 * x**4))


def logarithmic_density(members, grid: ScaleGrid) -> np.ndarray:
    """E^log_{n<=X} 1_A(n) per grid scale, for A given as sorted integer chunks."""
    cuts = cutpoints(grid)
    sums = [KahanSum() for _ in cuts]
    run = KahanSum()
    done = 0
    last = 0
    for chunk in members:
        m = np.atleast_1d(np.asarray(chunk, dtype=np.int64))
        if m.size and (m[0] <= last or np.any(np.diff(m) <= 0)):
            raise RangeError("members must be strictly increasing")
        if m.size:
            last = int(m[-1])
        m = m[(m >= 1) & (m <= cuts[-1])]
        w = 1.0 / m.astype(np.float64)
        start = 0
        while done < len(cuts) and m.size and cuts[done] < (m[-1] if m.size else 0):
            stop = int(np.searchsorted(m, cuts[done], side="right"))
            run.add(np.sum(w[start:stop]))
            start = stop
            sums[done] = run.copy()
            done += 1
        run.add(np.sum(w[start:]))
    for i in range(done, len(cuts)):
        sums[i] = run.copy()
    return np.array([s.value / harmonic(int(c)) for s, c in zip(sums, cuts)])


def leading_digit_members(digit: int, upto: int, base: int = 10, chunk: int = 1 << 22):
    """Sorted chunks of the integers in [1, upto] with the given leading digit."""
    k = 0
    while base**k <= upto:
        lo = digit * base**k
        hi = min((digit + 1) * base**k - 1, upto)
        for a in range(lo, hi + 1, chunk):
            yield np.arange(a, min(a + chunk, hi + 1), dtype=np.int64)
        k += 1


def exceedance_fraction(values: np.ndarray, eps: float) -> float:
    """Fraction of grid scales where |value| exceeds eps."""
    v = np.abs(np.asarray(values))
    return float(np.mean(v > eps)) if v.size else 0.0
