"""One builder per experiment kind.

A builder reads the experiment table, records parameter problems as
``(field, message)`` pairs, and returns a :class:`Job`: the sieve consumers
it wants registered on the shared sweep (possibly none) and a ``finish``
callable producing the output artifacts once the sweep is done.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .averaging import ScaleGrid, WeightScheme, compare_integer_prime_averages
from .characters import character, enumerate_characters
from .correlation import (CorrelationQuery, Mollifier, archimedean_isotopy_plan, correlate_plan,
                          equidistribution_plan, fd_table_plan, is_progression, nonarch_isotopy_plan,
                          smooth_bump, three_point_plan)
from .errors import ChowlaLabError
from .functions import Character, FunctionSpec, Liouville, parse_spec
from .io import Document, Table, averaging_table, complex_rows
from .patterns import CensusConsumer
from .pretense import fit_twisted_character, weak_pretension_profile
from .sieve import sieve_block
from .smoothness import JointSmoothRun, race_consumer, race_result
from .straightening import (PositiveRealQuasimorphism, noisy_archimedean, perturbed_character,
                            snap_to_archimedean, snap_to_dirichlet)
from .sweep import Plan


@dataclass
class Job:
    name: str
    kind: str
    consumers: list = field(default_factory=list)
    finish: Callable[[], list] = lambda: []


class _Params:
    """Typed access to an experiment table; problems are collected, not raised."""

    def __init__(self, e: dict, probs: list, max_n: int):
        self.e, self.probs, self.max_n = e, probs, max_n
        self.used = {"name", "kind"}

    def bad(self, key, msg):
        self.probs.append((key, msg))

    def get(self, key, default=None, required=False):
        self.used.add(key)
        if key not in self.e:
            if required:
                self.bad(key, "required parameter missing")
            return default
        return self.e[key]

    def num(self, key, default=None, required=False, integer=False, positive=False):
        v = self.get(key, default, required)
        if v is None:
            return None
        try:
            x = float(v)
        except (TypeError, ValueError):
            self.bad(key, f"not a number: {v!r}")
            return None
        if integer:
            if x != math.floor(x):
                self.bad(key, f"not an integer: {v!r}")
                return None
            x = int(x)
        if positive and x <= 0:
            self.bad(key, "must be positive")
            return None
        return x

    def ints(self, key, default=None, required=False):
        v = self.get(key, default, required)
        if v is None:
            return None
        if not isinstance(v, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in v):
            self.bad(key, "expected a list of integers")
            return None
        return [int(x) for x in v]

    def floats(self, key, default=None, required=False):
        v = self.get(key, default, required)
        if v is None:
            return None
        try:
            return [float(x) for x in v]
        except (TypeError, ValueError):
            self.bad(key, "expected a list of numbers")
            return None

    def spec(self, key, default=None, required=True) -> FunctionSpec | None:
        v = self.get(key, default, required and default is None)
        if v is None:
            return None
        try:
            return parse_spec(str(v))
        except ChowlaLabError as exc:
            self.bad(key, str(exc))
            return None

    def specs(self, key) -> list[FunctionSpec] | None:
        v = self.get(key, required=True)
        if v is None:
            return None
        if isinstance(v, str) or not isinstance(v, list) or not v:
            self.bad(key, "expected a non-empty list of function specs")
            return None
        out = []
        for i, s in enumerate(v):
            try:
                out.append(parse_spec(str(s)))
            except ChowlaLabError as exc:
                self.bad(f"{key}[{i}]", str(exc))
                return None
        return out

    def scheme(self, key="scheme", default="unweighted"):
        v = self.get(key, default)
        try:
            return WeightScheme.parse(v)
        except ValueError:
            self.bad(key, f"unknown weighting scheme {v!r}")
            return None

    def grid(self) -> ScaleGrid | None:
        try:
            if "scales" in self.e:
                self.used.add("scales")
                return ScaleGrid.explicit(float(x) for x in self.e["scales"])
            if "grid" in self.e:
                self.used.add("grid")
                g = self.e["grid"]
                if "hi" in g:
                    return ScaleGrid.spanning(float(g["lo"]), float(g["hi"]), float(g.get("ratio", 2**0.25)))
                return ScaleGrid(float(g.get("x0", 10)), float(g.get("ratio", 2**0.25)), int(g.get("count", 1)))
        except (ChowlaLabError, KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            self.bad("grid", f"invalid scale grid: {exc}")
            return None
        return ScaleGrid.explicit([self.max_n])

    def shifts(self, key="shifts", a=1):
        h = self.ints(key, required=True)
        if h is not None and h and max(abs(a * x) for x in h) > self.max_n / 2:
            self.bad(key, f"shifts exceed max_n/2 = {self.max_n / 2:g}")
        return h

    def finish(self):
        extra = sorted(set(self.e) - self.used)
        if extra:
            self.bad(None, f"unknown parameters {extra}")


def _query(P: _Params):
    fs = P.specs("functions")
    a = P.num("a", 1, integer=True, positive=True)
    h = P.shifts(a=a or 1)
    d = P.num("d", 1.0, positive=True)
    scheme = P.scheme()
    grid = P.grid()
    if None in (fs, h, a, d, scheme, grid):
        return None
    if len(fs) != len(h):
        P.bad("shifts", "must have as many entries as functions")
        return None
    try:
        return CorrelationQuery(tuple(fs), tuple(h), a, d, scheme, grid)
    except ChowlaLabError as exc:
        P.bad(None, str(exc))
        return None


def _plan_job(name, kind, plan: Plan, render) -> Job:
    return Job(name, kind, plan.consumers, lambda: render(plan.result()))


def _correlate(name, P, ctx):
    q = _query(P)
    if q is None:
        return None
    return _plan_job(name, "correlate", correlate_plan(q), lambda s: [
        Table(name, ["scale", "re", "im", "abs"], list(complex_rows(s.scales, s.values))),
        averaging_table(f"{name}-averages", s)])


def _fd_table(name, P, ctx):
    fs = P.specs("functions")
    h = P.shifts()
    divisors = P.floats("divisors", required=True)
    a_values = P.ints("a_values", [1])
    X = P.num("X", ctx.max_n, positive=True)
    t_max = P.num("t_max", 10.0, positive=True)
    if None in (fs, h, divisors, a_values, X, t_max):
        return None
    if a_values and max(abs(a) for a in a_values) * max(map(abs, h), default=0) > ctx.max_n / 2:
        P.bad("a_values", f"shifts a*h exceed max_n/2 = {ctx.max_n / 2:g}")
        return None
    plan = fd_table_plan(fs, h, divisors, a_values, X)

    def render(tab):
        rows = [(float(d), a, complex(v).real, complex(v).imag, abs(v))
                for i, d in enumerate(tab.divisors) for j, a in enumerate(tab.a_values)
                for v in [tab.values[i, j]]]
        t, c, r = tab.best_t(t_max)
        return [Table(name, ["d", "a", "re", "im", "abs"], rows),
                Document(name, {"X": X, "best_t": t, "c": list(c), "residual": list(r),
                                "a_values": list(tab.a_values)})]

    return _plan_job(name, "fd_table", plan, render)


def _iso_rows(s):
    for x, r, l, rr in zip(s.scales, s.residual, s.left, s.right):
        yield float(x), float(r), complex(l).real, complex(l).imag, complex(rr).real, complex(rr).imag


def _isotopy_arch(name, P, ctx):
    q = _query(P)
    qq = P.num("q", required=True, positive=True)
    t = P.num("t", required=True)
    if None in (q, qq, t):
        return None
    if q.grid.scales[0] / qq < 1:
        P.bad("q", "X/q must be at least 1 on the grid")
        return None
    return _plan_job(name, "isotopy_arch", archimedean_isotopy_plan(q, qq, t), lambda s: [
        Table(name, ["scale", "residual", "re_x", "im_x", "re_xq", "im_xq"], list(_iso_rows(s))),
        Document(name, {"q": qq, "t": t, "max_residual_times_scale": float(np.max(s.residual * s.scales))})])


def _isotopy_nonarch(name, P, ctx):
    q = _query(P)
    chi = P.spec("character")
    if q is None or chi is None:
        return None
    if not isinstance(chi, Character):
        P.bad("character", "expected char(q=..., index=...)")
        return None
    return _plan_job(name, "isotopy_nonarch", nonarch_isotopy_plan(q, chi.chi), lambda s: [
        Table(name, ["scale", "residual", "re_minus", "im_minus", "re_plus", "im_plus"], list(_iso_rows(s))),
        Document(name, {"character": chi.to_string(), "parity": chi.chi.parity})])


def _equidist(name, P, ctx):
    q = _query(P)
    cutoffs = P.floats("cutoffs", required=True)
    mode = P.get("mode", "all")
    r0 = P.num("r0", 0.05, positive=True)
    r1 = P.num("r1", 1.0, positive=True)
    harmonic = P.num("harmonic", 1, integer=True)
    order = P.num("order", 256, integer=True, positive=True)
    if None in (q, cutoffs, r0, r1, harmonic, order):
        return None
    if mode not in ("all", "grid"):
        P.bad("mode", "must be 'all' or 'grid'")
        return None
    if r1 <= r0:
        P.bad("r1", "must exceed r0")
        return None
    if max(cutoffs) > ctx.max_n:
        P.bad("cutoffs", f"exceed max_n = {ctx.max_n}")
        return None
    moll = Mollifier(r0, smooth_bump(r0, r1), harmonic)
    grid = q.grid if "scales" in P.e or "grid" in P.e else None
    plan = equidistribution_plan(q, moll, cutoffs, mode, order, grid)
    return _plan_job(name, "equidist", plan, lambda r: [
        Table(name, ["cutoff", "re", "im", "abs"], list(complex_rows(r.cutoffs, r.statistic)))])


def _pretense(name, P, ctx):
    f = P.spec("f")
    g = P.spec("g")
    grid = P.grid()
    if None in (f, g, grid):
        return None

    def finish():
        pr = weak_pretension_profile(f, g, grid)
        return [Table(name, ["scale", "dist_sq", "normalized"], list(pr.rows())),
                Document(name, {"f": f.to_string(), "g": g.to_string(), "verdict": pr.verdict,
                                "verdict_is_heuristic": True})]

    return Job(name, "pretense", [], finish)


def _fit(name, P, ctx):
    g = P.spec("g")
    q_max = P.num("q_max", 8, integer=True, positive=True)
    t_max = P.num("t_max", 10.0, positive=True)
    X = P.num("X", min(ctx.max_n, 10**6), positive=True)
    if None in (g, q_max, t_max, X):
        return None
    if X > ctx.max_n:
        P.bad("X", f"exceeds max_n = {ctx.max_n}")
        return None
    return Job(name, "fit", [], lambda: [Document(name, fit_twisted_character(g, q_max, t_max, X).as_dict())])


def _race(name, P, ctx):
    grid = P.grid()
    scheme = P.scheme()
    if None in (grid, scheme):
        return None
    c = race_consumer(grid, scheme)
    return Job(name, "race", [c], lambda: [
        Table(name, ["scale", "empirical", "target", "gap"], list(race_result(grid, c).rows()))])


def _fraction(P, key):
    v = P.get(key, required=True)
    if v is None:
        return None
    try:
        r = Fraction(str(v)).limit_denominator(10**6)
    except (ValueError, ZeroDivisionError):
        P.bad(key, f"not a rational number: {v!r}")
        return None
    if not 0 < r < 1:
        P.bad(key, "must lie strictly between 0 and 1")
        return None
    return r


def _smooth(name, P, ctx):
    al, be = _fraction(P, "alpha"), _fraction(P, "beta")
    grid = P.grid()
    fixed = bool(P.get("fixed_scale", False))
    if None in (al, be, grid):
        return None
    try:
        run = JointSmoothRun(al, be, grid, fixed)
    except ChowlaLabError as exc:
        P.bad(None, str(exc))
        return None

    def finish():
        s = run.result()
        out = [Table(name, ["scale", "empirical", "target", "gap"], list(s.rows()))]
        if s.fixed_scale is not None:
            out.append(Table(f"{name}-fixed-scale", ["scale", "empirical", "target", "gap"],
                             [(float(x), float(v), s.target, float(v - s.target))
                              for x, v in zip(s.scales, s.fixed_scale)]))
        return out

    return Job(name, "smooth", run.consumers, finish)


def _patterns(name, P, ctx):
    K = P.num("K", required=True, integer=True, positive=True)
    N = P.num("N", ctx.max_n, integer=True, positive=True)
    g = P.spec("function", "liouville")
    growth = P.ints("growth", [])
    if None in (K, N, g, growth):
        return None
    try:
        main = CensusConsumer(g, K, N)
        extra = [CensusConsumer(g, k, N) for k in growth]
    except ChowlaLabError as exc:
        P.bad(None, str(exc))
        return None

    def finish():
        cen = main.result()
        out = [Table(name, ["pattern", "count", "density_unweighted", "density_log"], list(cen.rows()))]
        if extra:
            from .patterns import GrowthRow, _threshold

            rows = []
            for c in extra:
                s = c.result().distinct_count
                rows.append(GrowthRow(c.K, s, c.K + 5, c.K**2, _threshold(0.5, c.K), _threshold(1.0, c.K),
                                      s < c.K + 5 and c.K + 5 <= 2**c.K).as_dict())
            out.append(Document(name, {"N": N, "function": g.to_string(), "growth": rows,
                                       "note": "s(K) over a finite range is a lower bound"}))
        return out

    return Job(name, "patterns", [main, *extra], finish)


def _straighten(name, P, ctx):
    mode = P.get("mode", "dirichlet")
    trials = P.num("trials", 1, integer=True, positive=True)
    eps = P.num("noise", 0.05, positive=True)
    if None in (trials, eps):
        return None
    rng = np.random.default_rng(np.random.SeedSequence([ctx.seed, ctx.index]))
    if mode == "dirichlet":
        q = P.num("q", None, integer=True, positive=True)
        q_max = P.num("q_max", 50, integer=True, positive=True)
        idx = P.num("index", None, integer=True)

        def finish():
            rows, worst = [], 0.0
            ok_all = True
            for i in range(trials):
                qq = q if q is not None else int(rng.integers(1, q_max + 1))
                chars = enumerate_characters(qq)
                chi = chars[idx % len(chars)] if idx is not None else chars[int(rng.integers(len(chars)))]
                got, err = snap_to_dirichlet(perturbed_character(chi, eps, rng), eps)
                ok = got == chi
                ok_all &= ok
                worst = max(worst, err)
                rows.append((i, qq, chi.index, got.index, err, ok))
            return [Table(name, ["trial", "q", "planted_index", "recovered_index", "sup_error", "recovered"], rows),
                    Document(name, {"mode": mode, "trials": trials, "noise": eps, "all_recovered": ok_all,
                                    "max_sup_error": worst, "max_error_over_eps": worst / eps,
                                    "recovered": character(rows[-1][1], rows[-1][3]).spec_string()})]

        return Job(name, "straighten", [], finish)
    if mode == "archimedean":
        t0 = P.num("t0", None)
        x_max = P.num("x_max", 1e4, positive=True)
        M = P.num("M", 100.0, positive=True)
        if None in (x_max, M):
            return None

        def finish():
            rows = []
            for i in range(trials):
                tt = t0 if t0 is not None else float(rng.uniform(-5, 5))
                r = snap_to_archimedean(noisy_archimedean(tt, eps, int(rng.integers(2**62))), x_max, M)
                rows.append((i, tt, r.t, abs(r.t - tt), r.sup_error))
            return [Table(name, ["trial", "t0", "t", "abs_error", "sup_error"], rows),
                    Document(name, {"mode": mode, "trials": trials, "noise": eps, "x_max": x_max, "M": M,
                                    "t": rows[-1][2], "max_abs_error": max(r[3] for r in rows),
                                    "max_sup_error": max(r[4] for r in rows)})]

        return Job(name, "straighten", [], finish)
    P.bad("mode", "must be 'dirichlet' or 'archimedean'")
    return None


def evaluate_points(g: FunctionSpec, n: np.ndarray) -> np.ndarray:
    """g at arbitrary positive integers, sieving the covering range."""
    n = np.asarray(n, dtype=np.int64)
    if n.size == 0:
        return np.zeros(0)
    lo, hi = int(n.min()), int(n.max()) + 1
    block = sieve_block(lo, hi)
    return np.asarray(g.evaluate(block))[n - lo]


def _compare(name, P, ctx):
    g = P.spec("function")
    a = P.num("a", 1, integer=True, positive=True)
    X = P.num("X", min(ctx.max_n, 10**6), positive=True)
    if None in (g, a, X):
        return None
    if a * X > ctx.max_n:
        P.bad("X", f"a*X exceeds max_n = {ctx.max_n}")
        return None

    def finish():
        x, y, gap = compare_integer_prime_averages(lambda n: evaluate_points(g, n), a, X)
        return [Document(name, {"function": g.to_string(), "a": a, "X": X, "integer_loglog": x,
                                "prime_log": y, "gap": gap})]

    return Job(name, "compare_avgs", [], finish)


def _three_point(name, P, ctx):
    g = P.spec("function", "lambda_q(3)")
    h = P.shifts()
    windows = P.get("windows", required=True)
    if None in (g, h, windows):
        return None
    try:
        win = [(float(x), float(w)) for x, w in windows]
    except (TypeError, ValueError):
        P.bad("windows", "expected a list of [x, omega] pairs")
        return None
    if any(x > ctx.max_n for x, _ in win):
        P.bad("windows", f"x exceeds max_n = {ctx.max_n}")
        return None
    try:
        plan = three_point_plan(g, h, win)
    except ChowlaLabError as exc:
        P.bad("shifts", str(exc))
        return None
    bound = 2 / 3 if is_progression(h) else 1 / math.sqrt(2)
    return _plan_job(name, "three_point", plan, lambda r: [
        Table(name, ["x", "omega", "re", "im", "abs", "bound"],
              [(x, w, complex(v).real, complex(v).imag, abs(v), bound) for (x, w), v in zip(r.windows, r.values)])])


BUILDERS = {"correlate": _correlate, "fd_table": _fd_table, "isotopy_arch": _isotopy_arch,
            "isotopy_nonarch": _isotopy_nonarch, "equidist": _equidist, "pretense": _pretense, "fit": _fit,
            "race": _race, "smooth": _smooth, "patterns": _patterns, "straighten": _straighten,
            "compare_avgs": _compare, "three_point": _three_point}


@dataclass
class _Ctx:
    max_n: int
    seed: int
    index: int


def build_job(e: dict, config, probs: list, index: int = 0) -> Job | None:
    kind = e.get("kind")
    name = str(e.get("name", f"experiment-{index + 1}"))
    P = _Params(e, probs, config.max_n)
    try:
        job = BUILDERS[kind](name, P, _Ctx(config.max_n, config.seed, index))
    except ChowlaLabError as exc:
        P.bad(None, str(exc))
        job = None
    P.finish()
    return None if probs else job
