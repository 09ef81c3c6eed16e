"""Finite-scale correlation averages of shifted multiplicative functions.

The basic object is S(X) = E_{n <= X/d} prod_i g_i(n + a h_i), with the
convention g(m) = 0 for m <= 0.  Everything here (f_d(a) tables, isotopy
residuals, equidistribution statistics, windowed three-point correlations)
is a single ordered sweep with prefix snapshots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .averaging import (CorrelationSeries, ScaleGrid, SnapshotCollector, WeightedAccumulator,
                        WeightScheme, split_at_cuts)
from .characters import DirichletCharacter
from .errors import RangeError
from .functions import FunctionSpec
from .sweep import Consumer, Plan, run_plan


@dataclass(frozen=True)
class CorrelationQuery:
    functions: tuple[FunctionSpec, ...]
    shifts: tuple[int, ...]
    a: int = 1
    d: float = 1.0
    scheme: WeightScheme = WeightScheme.UNWEIGHTED
    grid: ScaleGrid = field(default_factory=lambda: ScaleGrid(10.0, 2.0**0.25, 1))

    def __post_init__(self):
        object.__setattr__(self, "functions", tuple(self.functions))
        object.__setattr__(self, "shifts", tuple(int(h) for h in self.shifts))
        object.__setattr__(self, "scheme", WeightScheme.parse(self.scheme))
        if not self.functions:
            raise RangeError("a correlation needs at least one function")
        if len(self.functions) != len(self.shifts):
            raise RangeError("functions and shifts must have the same length")
        if self.d <= 0:
            raise RangeError("d must be positive")
        if self.scheme.primes_only:
            raise RangeError("correlations run over all integers; prime schemes are not allowed")

    @property
    def offsets(self) -> tuple[int, ...]:
        return tuple(self.a * h for h in self.shifts)

    def describe(self) -> dict:
        return {
            "functions": [f.to_string() for f in self.functions],
            "shifts": list(self.shifts), "a": self.a, "d": self.d,
            "scheme": self.scheme.value,
            "grid": [float(x) for x in self.grid.scales],
        }


def product_values(chunk, functions, offsets) -> np.ndarray:
    out = None
    for g, off in zip(functions, offsets):
        v = chunk.values(g, off)
        out = v.copy() if out is None else out * v
    return out


class CorrelationConsumer(Consumer):
    """Prefix snapshots of E_{n <= N} prod g_i(n + off_i) at integer cuts N."""

    def __init__(self, functions, offsets, cuts, scheme=WeightScheme.UNWEIGHTED):
        self.functions = tuple(functions)
        self.offsets = tuple(int(o) for o in offsets)
        self.cuts = np.asarray(cuts, dtype=np.int64)
        self.scheme = WeightScheme.parse(scheme)
        self.limit = int(self.cuts.max()) if self.cuts.size else 0
        self.pad_lo = min(0, *self.offsets)
        self.pad_hi = max(0, *self.offsets)
        self.collector = SnapshotCollector(self.scheme, self.cuts)

    def process(self, chunk):
        n = chunk.n
        f = product_values(chunk, self.functions, self.offsets)
        w = self.scheme.weights(n)
        return split_at_cuts(lambda: WeightedAccumulator(self.scheme), n, f, w, self.cuts)

    def absorb(self, partial):
        self.collector.absorb(partial)

    def finish(self):
        self.collector.finish()

    def snapshot(self, i: int) -> WeightedAccumulator:
        return self.collector.snaps[i]

    def means(self) -> np.ndarray:
        return np.array([s.mean() if s.count else 0.0 for s in self.collector.snaps],
                        dtype=np.complex128)


def _series(query, consumer, scales, values=None) -> CorrelationSeries:
    snaps = consumer.collector.snaps
    vals = consumer.means() if values is None else values
    return CorrelationSeries(np.asarray(scales, dtype=np.float64), vals,
                             np.array([s.count for s in snaps]),
                             np.array([s.weight for s in snaps]), query.scheme, query)


def _cuts(scales, d: float) -> np.ndarray:
    return np.floor(np.asarray(scales, dtype=np.float64) / d + 1e-9).astype(np.int64)


def correlate_plan(query: CorrelationQuery) -> Plan:
    c = CorrelationConsumer(query.functions, query.offsets, _cuts(query.grid.scales, query.d),
                            query.scheme)
    return Plan([c], lambda: _series(query, c, query.grid.scales))


def correlate(query: CorrelationQuery, **kw) -> CorrelationSeries:
    """S(X) = E_{n <= X/d} prod g_i(n + a h_i) at every scale of the query grid."""
    return run_plan(correlate_plan(query), **kw)


def brute_force_correlation(query: CorrelationQuery, X: float) -> complex:
    """Naive double loop over n and i, with trial-division factorisations."""
    from .functions import evaluate_at

    N = math.floor(X / query.d + 1e-9)
    num = 0j
    den = 0.0
    for n in range(1, N + 1):
        w = float(query.scheme.weights(np.array([n]))[0])
        p = 1 + 0j
        for g, off in zip(query.functions, query.offsets):
            m = n + off
            p *= 0 if m <= 0 else complex(evaluate_at(g, m))
        num += w * p
        den += w
    return num / den


# --- f_d(a) tables ----------------------------------------------------------

@dataclass
class FdTable:
    divisors: np.ndarray
    a_values: tuple[int, ...]
    X: float
    values: np.ndarray  # shape (len(divisors), len(a_values))

    def loglog_weights(self) -> np.ndarray:
        d = self.divisors
        return 1.0 / (d * np.log1p(d))

    def fit(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        """Per a: weighted least-squares c(a) for f_d(a) ~ c d^{-it}, and the
        loglog average of |f_d(a) - c(a) d^{-it}| over d."""
        w = self.loglog_weights()
        rot = np.exp(-1j * t * np.log(self.divisors))
        c = (w[:, None] * self.values * np.conj(rot)[:, None]).sum(0) / w.sum()
        resid = (w[:, None] * np.abs(self.values - c[None, :] * rot[:, None])).sum(0) / w.sum()
        return c, resid

    def best_t(self, t_max: float = 10.0, step: float | None = None) -> tuple[float, np.ndarray, np.ndarray]:
        """Scan t in [-t_max, t_max] for the smallest total residual, then refine."""
        if step is None:
            step = 1.0 / math.log(max(self.X, 3.0))
        ts = np.arange(-t_max, t_max + step / 2, step)
        ts = np.union1d(ts, [0.0])
        scores = [self.fit(t)[1].sum() for t in ts]
        t = float(ts[int(np.argmin(scores))])
        fine = np.linspace(t - step, t + step, 41)
        scores = [self.fit(s)[1].sum() for s in fine]
        t = float(fine[int(np.argmin(scores))])
        if abs(t) < step / 40:
            t = 0.0 if self.fit(0.0)[1].sum() <= self.fit(t)[1].sum() else t
        c, r = self.fit(t)
        return t, c, r


def fd_table_plan(functions: Sequence[FunctionSpec], shifts: Sequence[int], divisors: Sequence[float],
                  a_values: Sequence[int], X: float) -> Plan:
    D = np.asarray(list(divisors), dtype=np.float64)
    A = tuple(int(a) for a in a_values)
    if D.size == 0 or not A:
        raise RangeError("need at least one divisor and one a value")
    if np.any(D <= 0):
        raise RangeError("divisors must be positive")
    if np.any(X / D < 1):
        raise RangeError("every X/d must be at least 1")
    cuts = _cuts(np.full(D.size, float(X)) / D, 1.0)
    consumers = [CorrelationConsumer(functions, [a * h for h in shifts], cuts) for a in A]
    return Plan(consumers, lambda: FdTable(D, A, float(X),
                                           np.stack([c.means() for c in consumers], axis=1)))


def fd_table(functions, shifts, divisors, a_values, X: float, **kw) -> FdTable:
    """Matrix of f_d(a) = E_{n <= X/d} prod g_i(n + a h_i) for d in D, a in A."""
    return run_plan(fd_table_plan(functions, shifts, divisors, a_values, X), **kw)


# --- isotopy residuals --------------------------------------------------------

@dataclass
class IsotopySeries:
    scales: np.ndarray
    residual: np.ndarray
    left: np.ndarray
    right: np.ndarray
    meta: dict = field(default_factory=dict)

    def exceedance(self, eps: float) -> float:
        return float(np.mean(self.residual > eps)) if self.residual.size else 0.0


def archimedean_isotopy_plan(query: CorrelationQuery, q: float | Fraction, t: float,
                             grid: ScaleGrid | None = None) -> Plan:
    q = float(q)
    if q <= 0:
        raise RangeError("q must be positive")
    grid = grid or query.grid
    X = grid.scales
    if np.any(X / q < 1):
        raise RangeError("X/q must be at least 1 on the grid")
    cuts = np.concatenate([_cuts(X, query.d), _cuts(X / q, query.d)])
    c = CorrelationConsumer(query.functions, query.offsets, cuts, query.scheme)

    def finish():
        m = c.means()
        s_x, s_xq = m[: X.size], m[X.size :]
        res = np.abs(s_x - np.exp(1j * t * math.log(q)) * s_xq)
        return IsotopySeries(X, res, s_x, s_xq, {"q": q, "t": t})

    return Plan([c], finish)


def archimedean_isotopy_residual(query: CorrelationQuery, q: float | Fraction, t: float,
                                 grid: ScaleGrid | None = None, **kw) -> IsotopySeries:
    """|S(X) - q^{it} S(X/q)| per scale."""
    return run_plan(archimedean_isotopy_plan(query, q, t, grid), **kw)


def nonarch_isotopy_plan(query: CorrelationQuery, chi: DirichletCharacter,
                         grid: ScaleGrid | None = None) -> Plan:
    grid = grid or query.grid
    X = grid.scales
    cuts = _cuts(X, query.d)
    plus = CorrelationConsumer(query.functions, query.offsets, cuts, query.scheme)
    minus = CorrelationConsumer(query.functions, [-o for o in query.offsets], cuts, query.scheme)

    def finish():
        sm, sp = minus.means(), plus.means()
        res = np.abs(sm - chi.parity * sp)
        return IsotopySeries(X, res, sm, sp, {"parity": chi.parity, "character": chi.spec_string()})

    return Plan([minus, plus], finish)


def nonarch_isotopy_residual(query: CorrelationQuery, chi: DirichletCharacter,
                             grid: ScaleGrid | None = None, **kw) -> IsotopySeries:
    """|S_-(X) - chi(-1) S_+(X)| where S_+- use shifts +-a h_i."""
    return run_plan(nonarch_isotopy_plan(query, chi, grid), **kw)


# --- equidistribution of the argument ---------------------------------------

@dataclass(frozen=True)
class Mollifier:
    """psi(z) = profile(|z|) (z/|z|)^harmonic, or an arbitrary ``func``.

    ``r0`` declares the radius below which psi vanishes.
    """

    r0: float
    profile: Callable[[np.ndarray], np.ndarray] | None = None
    harmonic: int = 0
    func: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.r0 <= 0:
            raise RangeError("mollifier must vanish on a neighbourhood of 0 (r0 > 0)")
        if (self.profile is None) == (self.func is None):
            raise ValueError("give exactly one of profile or func")
        probe = self.r0 * 0.999 * np.exp(2j * np.pi * np.arange(16) / 16)
        probe = np.concatenate([probe, probe / 2, [0j]])
        if np.any(np.abs(self(probe)) > 0):
            raise RangeError("mollifier does not vanish for |z| < r0")

    def __call__(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=np.complex128)
        if self.func is not None:
            return np.asarray(self.func(z), dtype=np.complex128)
        r = np.abs(z)
        out = np.asarray(self.profile(r), dtype=np.complex128)
        if self.harmonic:
            phase = np.where(r > 0, z / np.where(r > 0, r, 1), 0)
            out = out * phase**self.harmonic
        return np.where(r > 0, out, 0)

    def rotational_average(self, z: np.ndarray, order: int = 256) -> np.ndarray:
        z = np.asarray(z, dtype=np.complex128)
        out = np.zeros(z.shape, dtype=np.complex128)
        for j in range(order):
            out += self(z * np.exp(2j * np.pi * j / order))
        return out / order


def smooth_bump(a: float, b: float) -> Callable[[np.ndarray], np.ndarray]:
    """C-infinity radial profile, positive exactly on (a, b)."""

    def prof(r):
        r = np.asarray(r, dtype=np.float64)
        u = (r - a) / (b - a)
        inside = (u > 0) & (u < 1)
        safe = np.where(inside, u, 0.5)
        val = np.exp(-1.0 / (safe * (1 - safe))) / math.exp(-4.0)
        return np.where(inside, val, 0.0)

    return prof


def smooth_step(a: float, b: float) -> Callable[[np.ndarray], np.ndarray]:
    """C-infinity profile, 0 on [0, a] and 1 on [b, inf)."""

    def g(x):
        return np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1)), 0.0)

    def prof(r):
        u = (np.asarray(r, dtype=np.float64) - a) / (b - a)
        return g(u) / (g(u) + g(1 - u))

    return prof


class _AllScalesConsumer(Consumer):
    """Log-weighted average over every integer X of psi(S(X)) - psibar(S(X))."""

    def __init__(self, query, mollifier, cutoffs, order):
        self.query = query
        self.functions = query.functions
        self.offsets = query.offsets
        self.moll = mollifier
        self.order = order
        self.cutoffs = np.asarray(cutoffs, dtype=np.int64)
        self.limit = int(math.floor(self.cutoffs.max() / query.d + 1e-9))
        self.pad_lo = min(0, *self.offsets)
        self.pad_hi = max(0, *self.offsets)
        self.run_num = WeightedAccumulator(WeightScheme.UNWEIGHTED)
        self.stat = WeightedAccumulator(WeightScheme.LOG)
        self.snaps = [None] * len(self.cutoffs)
        self.next_scale = 1

    def process(self, chunk):
        f = product_values(chunk, self.functions, self.offsets)
        w = self.query.scheme.weights(chunk.n)
        return chunk.n, np.cumsum(w * f), np.cumsum(w), float(np.sum(w * f).real), float(np.sum(w * f).imag), float(np.sum(w))

    def absorb(self, partial):
        n, cnum, cden, sre, sim, sden = partial
        base_num = self.run_num.num
        base_den = self.run_num.weight
        s = (base_num + cnum) / (base_den + cden)
        self.run_num.re.add(sre)
        self.run_num.im.add(sim)
        self.run_num.den.add(sden)
        self.run_num.count += n.size
        # scale X corresponds to n = floor(X/d); with d = 1 each n is one scale
        X = n.astype(np.float64) * self.query.d
        for lo in range(0, n.size, 1 << 16):
            sl = slice(lo, lo + (1 << 16))
            val = self.moll(s[sl]) - self.moll.rotational_average(s[sl], self.order)
            xs = X[sl]
            cut_here = [i for i, c in enumerate(self.cutoffs) if xs[0] <= c <= xs[-1]]
            start = 0
            for i in cut_here:
                stop = int(np.searchsorted(xs, self.cutoffs[i], side="right"))
                self.stat.add_chunk(xs[start:stop], val[start:stop])
                start = stop
                self.snaps[i] = self.stat.copy()
            self.stat.add_chunk(xs[start:], val[start:])

    def finish(self):
        for i, s in enumerate(self.snaps):
            if s is None:
                self.snaps[i] = self.stat.copy()


@dataclass
class EquidistributionResult:
    cutoffs: np.ndarray
    statistic: np.ndarray
    mode: str
    scales_used: np.ndarray | None = None
    s_values: np.ndarray | None = None


def argument_equidistribution(query: CorrelationQuery, mollifier: Mollifier,
                              cutoffs: Sequence[float], mode: str = "all", order: int = 256,
                              grid: ScaleGrid | None = None, **kw) -> EquidistributionResult:
    """E^log_{X <= X0} [psi(S(X)) - psibar(S(X))] for each cutoff X0.

    ``mode="all"`` uses every integer scale X (query.d must be 1);
    ``mode="grid"`` subsamples scales on a geometric grid, each grid point
    standing for an equal share of log-measure.
    """
    plan = equidistribution_plan(query, mollifier, cutoffs, mode, order, grid)
    return run_plan(plan, **kw)


def equidistribution_plan(query: CorrelationQuery, mollifier: Mollifier, cutoffs: Sequence[float],
                          mode: str = "all", order: int = 256, grid: ScaleGrid | None = None) -> Plan:
    cutoffs = np.asarray(sorted(cutoffs), dtype=np.float64)
    if mode == "all":
        if query.d != 1:
            raise RangeError("all-scales mode needs d = 1")
        c = _AllScalesConsumer(query, mollifier, np.floor(cutoffs).astype(np.int64), order)
        return Plan([c], lambda: EquidistributionResult(
            cutoffs, np.array([s.mean() for s in c.snaps]), "all-scales"))
    if mode != "grid":
        raise ValueError("mode must be 'all' or 'grid'")
    grid = grid or ScaleGrid.spanning(1.0, float(cutoffs[-1]))
    inner = correlate_plan(replace(query, grid=grid))

    def finish():
        series = inner.result()
        v = mollifier(series.values) - mollifier.rotational_average(series.values, order)
        stat = np.array([np.mean(v[series.scales <= x0 * (1 + 1e-12)]) for x0 in cutoffs])
        return EquidistributionResult(cutoffs, stat, "subsampled", series.scales, series.values)

    return Plan(inner.consumers, finish)


# --- windowed log correlations ----------------------------------------------

@dataclass
class WindowResult:
    windows: list[tuple[float, float]]
    values: np.ndarray
    bound: float = 1 / math.sqrt(2)

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(self.values)


def window_plan(functions, offsets, windows, scheme=WeightScheme.LOG) -> Plan:
    lows = [math.ceil(x / w - 1e-9) - 1 for x, w in windows]
    highs = [math.floor(x + 1e-9) for x, _ in windows]
    c = CorrelationConsumer(functions, offsets, np.array(lows + highs, dtype=np.int64), scheme)
    k = len(windows)

    def finish():
        return np.array([(c.snapshot(k + i) - c.snapshot(i)).mean() for i in range(k)],
                        dtype=np.complex128)

    return Plan([c], finish)


def window_correlation(functions, offsets, windows, scheme=WeightScheme.LOG, **kw) -> np.ndarray:
    """E_{x/w <= n <= x} prod g_i(n + off_i) for each (x, w), via prefix differences."""
    return run_plan(window_plan(functions, offsets, list(windows), scheme), **kw)


def three_point_plan(g: FunctionSpec, shifts: Sequence[int],
                     windows: Sequence[tuple[float, float]]) -> Plan:
    shifts = tuple(int(h) for h in shifts)
    if len(shifts) != 3 or len(set(shifts)) != 3:
        raise RangeError("three distinct shifts are required")
    windows = [(float(x), float(w)) for x, w in windows]
    inner = window_plan((g, g, g), shifts, windows)
    return Plan(inner.consumers, lambda: WindowResult(windows, inner.result()))


def three_point_bound_check(g: FunctionSpec, shifts: Sequence[int],
                            windows: Sequence[tuple[float, float]], **kw) -> WindowResult:
    """|E^log_{x/w <= n <= x} g(n+h1) g(n+h2) g(n+h3)| per window."""
    return run_plan(three_point_plan(g, shifts, windows), **kw)


def is_progression(shifts: Sequence[int]) -> bool:
    h = sorted(shifts)
    return len(h) < 3 or all(h[i + 1] - h[i] == h[1] - h[0] for i in range(len(h) - 1))
