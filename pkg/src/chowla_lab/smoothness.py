"""Largest-prime-factor races, joint smoothness densities and the Dickman function."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .averaging import ScaleGrid, WeightScheme
from .correlation import CorrelationConsumer, _cuts
from .errors import RangeError
from .sieve import DEFAULT_SEGMENT
from .sweep import SweepStats, run_sweep

U_MAX = 20.0
STEPS_PER_UNIT = 1000


# --- Dickman rho -------------------------------------------------------------


class DickmanSolver:
    """rho on a uniform grid of step 1/steps_per_unit over [0, u_max].

    On each [m, m+1] the integral form rho(u) = rho(m) - int_m^u rho(s-1)/s ds
    is marched with a four-point (cubic) rule whose stencil never crosses an
    integer, where rho(s-1) loses smoothness.
    """

    def __init__(self, u_max: float = U_MAX, steps_per_unit: int = STEPS_PER_UNIT):
        if steps_per_unit < 4:
            raise RangeError("need at least 4 steps per unit")
        self.u_max = float(u_max)
        self.N = int(steps_per_unit)
        self.step = 1.0 / self.N
        units = int(math.ceil(self.u_max))
        N = self.N
        rho = np.ones(units * N + 1)
        h = self.step
        for m in range(1, units):
            s = m + np.arange(N + 1) * h
            f = rho[(m - 1) * N : m * N + 1] / s
            inc = np.empty(N)
            inc[1 : N - 1] = -f[0 : N - 2] + 13 * f[1 : N - 1] + 13 * f[2:N] - f[3 : N + 1]
            inc[0] = 9 * f[0] + 19 * f[1] - 5 * f[2] + f[3]
            inc[N - 1] = f[N - 3] - 5 * f[N - 2] + 19 * f[N - 1] + 9 * f[N]
            inc *= h / 24
            rho[m * N + 1 : (m + 1) * N + 1] = rho[m * N] - np.cumsum(inc)
        self.u = np.arange(units * N + 1) * h
        self.table = rho

    def __call__(self, u):
        u = np.asarray(u, dtype=np.float64)
        if np.any(u < 0):
            raise RangeError("Dickman rho is defined here for u >= 0")
        if np.any(u > self.u_max):
            raise RangeError(f"u exceeds u_max = {self.u_max}")
        out = np.where(u <= 1, 1.0, 0.0)
        big = u > 1
        if np.any(big):
            out[big] = self._interp(u[big])
        return out if out.ndim else float(out)

    def _interp(self, u: np.ndarray) -> np.ndarray:
        N = self.N
        m = np.minimum(np.floor(u).astype(np.int64), int(math.ceil(self.u_max)) - 1)
        # four nodes inside [m, m+1] around u
        k = np.clip(np.floor((u - m) * N).astype(np.int64) - 1, 0, N - 3)
        base = m * N + k
        x = (u - (m + k * self.step)) * N  # in node units, relative to base
        y0, y1, y2, y3 = (self.table[base + i] for i in range(4))
        return (y0 * (x - 1) * (x - 2) * (x - 3) / -6 + y1 * x * (x - 2) * (x - 3) / 2
                + y2 * x * (x - 1) * (x - 3) / -2 + y3 * x * (x - 1) * (x - 2) / 6)

    def residual(self, lo: float = 1.0, hi: float = 10.0) -> np.ndarray:
        """|u rho'(u) + rho(u-1)| by central differences at non-integer interior nodes."""
        N = self.N
        i = np.arange(int(round(lo * N)) + 1, int(round(hi * N)))
        i = i[i % N != 0]
        u = self.u[i]
        d = (self.table[i + 1] - self.table[i - 1]) / (2 * self.step)
        return np.abs(u * d + self.table[i - N])


@lru_cache(maxsize=4)
def dickman_solver(u_max: float = U_MAX, steps_per_unit: int = STEPS_PER_UNIT) -> DickmanSolver:
    return DickmanSolver(u_max, steps_per_unit)


def dickman_rho(u: float) -> float:
    return dickman_solver()(u)


def convergence_study(u: float = 3.0, exact: float | None = None, steps=(50, 100, 200)) -> list[tuple[int, float]]:
    """Error of rho(u) against ``exact`` (or the finest run) for each step count."""
    vals = [(n, float(DickmanSolver(math.ceil(u), n)(u))) for n in steps]
    ref = vals[-1][1] if exact is None else exact
    return [(n, abs(v - ref)) for n, v in (vals if exact is not None else vals[:-1])]


# --- sieve-side statistics ---------------------------------------------------


class _IndicatorConsumer(CorrelationConsumer):
    def __init__(self, fn, cuts, pad_hi=1, scheme=WeightScheme.UNWEIGHTED):
        super().__init__((), (0,), cuts, scheme)
        self.fn = fn
        self.pad_hi = pad_hi

    def process(self, chunk):
        from .averaging import WeightedAccumulator, split_at_cuts

        n = chunk.n
        f = self.fn(chunk).astype(np.float64)
        w = self.scheme.weights(n)
        return split_at_cuts(lambda: WeightedAccumulator(self.scheme), n, f, w, self.cuts)


@dataclass
class RaceSeries:
    grid: ScaleGrid
    freq: np.ndarray
    counts: np.ndarray
    scheme: WeightScheme = WeightScheme.UNWEIGHTED

    def rows(self):
        for x, v in zip(self.grid.scales, self.freq):
            yield float(x), float(v), 0.5, float(v - 0.5)


def _race(chunk) -> np.ndarray:
    return chunk.field("lpf_largest", 0) < chunk.field("lpf_largest", 1)


def lpf_race(grid: ScaleGrid, scheme="unweighted", segment_size: int = DEFAULT_SEGMENT,
             threads: int | None = None, stats: SweepStats | None = None) -> RaceSeries:
    """E_{n <= X} 1_{P+(n) < P+(n+1)} at each scale of the grid."""
    c = race_consumer(grid, scheme)
    run_sweep([c], segment_size, threads, stats)
    return race_result(grid, c)


def race_consumer(grid: ScaleGrid, scheme="unweighted") -> _IndicatorConsumer:
    return _IndicatorConsumer(_race, _cuts(grid.scales, 1.0), 1, WeightScheme.parse(scheme))


def race_result(grid, c) -> RaceSeries:
    return RaceSeries(grid, c.means().real, np.array([s.count for s in c.collector.snaps]), c.scheme)


def race_trend(series: RaceSeries, last: int = 5) -> float:
    """Least-squares slope of |freq - 1/2| against log X over the last few scales."""
    x = np.log(series.grid.scales[-last:])
    y = np.abs(series.freq[-last:] - 0.5)
    if len(x) < 2:
        return 0.0
    return float(np.polyfit(x, y, 1)[0])


def _rational(a) -> Fraction:
    r = Fraction(a).limit_denominator(10**6) if not isinstance(a, Fraction) else a
    if not 0 < r < 1:
        raise RangeError(f"exponent must lie strictly between 0 and 1, got {a}")
    return r


def smooth_below(P: np.ndarray, n: np.ndarray, alpha: Fraction) -> np.ndarray:
    """1_{P < n^alpha}, decided exactly as P^q < n^p for alpha = p/q."""
    p, q = alpha.numerator, alpha.denominator
    P64 = P.astype(np.float64)
    n64 = n.astype(np.float64)
    with np.errstate(divide="ignore"):
        diff = q * np.log(P64) - p * np.log(n64)
    out = diff < 0
    close = np.flatnonzero(np.abs(diff) <= 1e-9 * np.maximum(1.0, p * np.log(np.maximum(n64, 2.0))))
    for i in close:
        out[i] = int(P[i]) ** q < int(n[i]) ** p
    return out


def _joint(alpha: Fraction, beta: Fraction, X: float | None = None):
    def fn(chunk):
        n = chunk.n
        P0 = chunk.field("lpf_largest", 0)
        P1 = chunk.field("lpf_largest", 1)
        if X is None:
            return smooth_below(P0, n, alpha) & smooth_below(P1, n, beta)
        top = np.full_like(n, int(math.floor(X)))
        return smooth_below(P0, top, alpha) & smooth_below(P1, top, beta)
    return fn


@dataclass
class SmoothSeries:
    alpha: Fraction
    beta: Fraction
    scales: np.ndarray
    empirical: np.ndarray
    target: float
    fixed_scale: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def gap(self) -> np.ndarray:
        return self.empirical - self.target

    def rows(self):
        for x, e in zip(self.scales, self.empirical):
            yield float(x), float(e), self.target, float(e - self.target)


class JointSmoothRun:
    """Consumers for one (alpha, beta) pair: the n^alpha version plus optional X^alpha versions."""

    def __init__(self, alpha, beta, grid: ScaleGrid, fixed_scale: bool = False):
        self.alpha, self.beta = _rational(alpha), _rational(beta)
        solver = dickman_solver()
        if 1 / self.alpha > solver.u_max or 1 / self.beta > solver.u_max:
            raise RangeError("1/alpha and 1/beta must not exceed u_max")
        self.grid = grid
        self.target = float(solver(float(1 / self.alpha)) * solver(float(1 / self.beta)))
        self.main = _IndicatorConsumer(_joint(self.alpha, self.beta), _cuts(grid.scales, 1.0))
        self.fixed = [_IndicatorConsumer(_joint(self.alpha, self.beta, X), _cuts([X], 1.0))
                      for X in grid.scales] if fixed_scale else []

    @property
    def consumers(self):
        return [self.main, *self.fixed]

    def result(self) -> SmoothSeries:
        fixed = np.array([c.means().real[0] for c in self.fixed]) if self.fixed else None
        return SmoothSeries(self.alpha, self.beta, self.grid.scales, self.main.means().real,
                            self.target, fixed)


def joint_smooth_density(alpha, beta, grid: ScaleGrid, fixed_scale: bool = False,
                         segment_size: int = DEFAULT_SEGMENT, threads: int | None = None,
                         stats: SweepStats | None = None) -> SmoothSeries:
    """E_{n <= X} 1_{P+(n) < n^alpha} 1_{P+(n+1) < n^beta} and the target rho(1/alpha) rho(1/beta)."""
    run = JointSmoothRun(alpha, beta, grid, fixed_scale)
    run_sweep(run.consumers, segment_size, threads, stats)
    return run.result()
