"""Pretentious distance, weak-pretension profiles and twisted-character fits.

Only values at primes enter: D(f, g; X)^2 = sum_{p <= X} (1 - Re f(p) conj g(p)) / p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .averaging import ScaleGrid
from .characters import DirichletCharacter, enumerate_characters
from .errors import CapabilityError, RangeError
from .functions import FunctionSpec, Product, Twisted
from .sieve import primes_upto

DEFAULT_BUDGET = 5e9
TIE = 1e-9
VERDICTS = ("trending-0", "trending-inf", "inconclusive")


def _prime_terms(f: FunctionSpec, g: FunctionSpec, p: np.ndarray) -> np.ndarray:
    prod = np.asarray(f.at_primes(p)) * np.conj(np.asarray(g.at_primes(p)))
    gap = 1.0 - np.real(prod)
    gap[np.abs(gap) < 1e-14] = 0.0  # |z|^2 = 1 up to rounding
    return gap / p.astype(np.float64)


def pretentious_distance_sq(f: FunctionSpec, g: FunctionSpec, X: float) -> float:
    """Exact prime sum D(f, g; X)^2."""
    if X < 2:
        raise RangeError(f"need X >= 2, got {X}")
    p = primes_upto(X)
    return max(0.0, math.fsum(_prime_terms(f, g, p)))


@dataclass
class PretenseProfile:
    f: FunctionSpec
    g: FunctionSpec
    scales: np.ndarray
    dist_sq: np.ndarray
    normalized: np.ndarray
    verdict: str

    def rows(self):
        for x, d, r in zip(self.scales, self.dist_sq, self.normalized):
            yield float(x), float(d), float(r)


def _verdict(dist_sq: np.ndarray, normalized: np.ndarray, tol: float = 0.05) -> str:
    """Heuristic label from the last three grid points; never a proof of anything."""
    d, v = dist_sq[-3:], normalized[-3:]
    if len(v) < 3:
        return "inconclusive"
    if v[-1] <= tol and np.all(np.diff(v) <= 1e-15):
        return "trending-0"
    if v[-1] >= 10 * tol and np.all(np.diff(d) > 0) and v[-1] >= 0.9 * v[0]:
        return "trending-inf"
    return "inconclusive"


def weak_pretension_profile(f: FunctionSpec, g: FunctionSpec, grid: ScaleGrid) -> PretenseProfile:
    scales = grid.scales
    if scales[0] < 3:
        raise RangeError("pretension profile needs scales >= 3")
    p = primes_upto(scales[-1])
    terms = _prime_terms(f, g, p)
    cum = np.cumsum(terms)
    idx = np.searchsorted(p, np.floor(scales + 1e-9), side="right")
    dist = np.maximum(np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0), 0.0)
    # cumsum is monotone only up to rounding; terms are >= 0 so enforce it
    dist = np.maximum.accumulate(dist)
    norm = dist / np.log(np.log(scales))
    return PretenseProfile(f, g, scales, dist, norm, _verdict(dist, norm))


@dataclass
class TwistFit:
    g: FunctionSpec
    q_max: int
    t_range: tuple[float, float]
    chi: DirichletCharacter
    t: float
    dist_sq: float
    X: float
    grid_resolution: float
    evaluations: int = 0
    runner_up: list = field(default_factory=list)

    @property
    def best(self):
        return self.chi, self.t, self.dist_sq

    def as_dict(self) -> dict:
        return {"g": self.g.to_string(), "q_max": self.q_max, "t_range": list(self.t_range),
                "chi": self.chi.spec_string(), "chi_parity": self.chi.parity, "t": self.t,
                "dist_sq": self.dist_sq, "X": self.X, "grid_resolution": self.grid_resolution}


class _ResidueSums:
    """sum_{p = b mod q} g(p) p^{-it} / p for every modulus q <= q_max at a given t."""

    def __init__(self, g: FunctionSpec, X: float, q_max: int):
        self.p = primes_upto(X)
        self.a = np.asarray(g.at_primes(self.p), dtype=np.complex128) / self.p
        self.logp = np.log(self.p.astype(np.float64))
        self.inv_sum = math.fsum(1.0 / self.p)
        self.q_max = q_max
        self.res = [self.p % q for q in range(1, q_max + 1)]

    def at(self, t: float) -> list[np.ndarray]:
        w = self.a * np.exp(-1j * t * self.logp) if t != 0 else self.a
        out = []
        for q, r in zip(range(1, self.q_max + 1), self.res):
            out.append(np.bincount(r, weights=w.real, minlength=q)
                       + 1j * np.bincount(r, weights=w.imag, minlength=q))
        return out


def _char_dist(sums: _ResidueSums, S: list[np.ndarray], chi: DirichletCharacter) -> float:
    # D^2 = sum 1/p - Re sum g(p) conj(chi(p)) p^{-it} / p ; chi vanishes on p | q
    s = S[chi.modulus - 1]
    return sums.inv_sum - float(np.real(np.dot(np.conj(chi.values), s)))


def fit_twisted_character(g: FunctionSpec, q_max: int, t_max: float = 10.0, X: float = 1e6,
                          budget: float = DEFAULT_BUDGET, refine: int = 20) -> TwistFit:
    """Exhaustive search of D(g, chi(n) n^{it}; X)^2 over chi mod q <= q_max, |t| <= t_max.

    The t grid has spacing 1/ln X; one refinement pass around the best cell
    uses ``refine`` sub-steps per cell.
    """
    if q_max < 1 or t_max <= 0 or X < 100:
        raise RangeError("need q_max >= 1, t_max > 0 and X >= 100")
    delta = 1.0 / math.log(X)
    k = int(math.floor(t_max / delta + 1e-12))
    ts = delta * np.arange(-k, k + 1)
    nprimes = X / math.log(X) * 1.3
    cost = len(ts) * nprimes * q_max
    if cost > budget:
        raise CapabilityError(f"search budget exceeded: ~{cost:.3g} prime-term evaluations > {budget:.3g}")
    chars = [c for q in range(1, q_max + 1) for c in enumerate_characters(q)]
    sums = _ResidueSums(g, X, q_max)
    evals = 0
    best = (math.inf, None, 0.0)
    scores = []
    for t in ts:
        S = sums.at(float(t))
        evals += len(sums.p)
        for c in chars:
            d = _char_dist(sums, S, c)
            scores.append((d, c.modulus, c.index, float(t)))
            # induced characters tie with their source; keep the smallest modulus
            if d < best[0] - TIE:
                best = (d, c, float(t))
    _, chi, t0 = best
    for t in t0 + delta * np.linspace(-1, 1, 2 * refine + 1):
        S = sums.at(float(t))
        evals += len(sums.p)
        d = _char_dist(sums, S, chi)
        if d < best[0]:
            best = (d, chi, float(t))
    d, chi, t = best
    scores.sort()
    return TwistFit(g, q_max, (-t_max, t_max), chi, t, max(d, 0.0), X, delta, evals, scores[:5])


def classify_product(functions, q_max: int = 8, t_max: float = 10.0, X: float = 1e6,
                     threshold: float = 0.5) -> tuple[str, TwistFit]:
    """Label g1...gk as 'pretentious' when some twist keeps D^2 / lnln X below ``threshold``.

    A finite-scale heuristic for the dichotomy between products that pretend
    to be a twisted character and products that do not.
    """
    g = functions[0] if len(functions) == 1 else Product(tuple(functions))
    fit = fit_twisted_character(g, q_max, t_max, X)
    ratio = fit.dist_sq / math.log(math.log(X))
    return ("pretentious" if ratio < threshold else "non-pretentious"), fit


def twist_of(fit: TwistFit) -> FunctionSpec:
    return Twisted(fit.chi, fit.t)
