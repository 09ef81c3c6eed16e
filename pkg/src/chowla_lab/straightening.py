"""Snap approximate characters to exact ones.

Two constructions, both by the coboundary trick: take the cocycle
rho(x, y) = log(psi(xy) / (psi(x) psi(y))), average it in the second
variable to get phi, and multiply psi by exp(phi).

* Dirichlet: psi on (Z/qZ)^x; the average is exact over the finite group and
  the result is rounded onto phi(q)-th roots of unity and checked for exact
  multiplicativity.
* Archimedean: alpha on (0, inf); the average is a finite logarithmic average
  over [1, M] of a version of alpha that is discretised on cells of width
  eps^2, and t is read off on a ladder x0^(2^k), x0 = 1 + eps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .characters import DirichletCharacter, character_from_exponents, enumerate_characters, euler_phi, unit_group
from .errors import EpsilonTooLarge, RangeError, StraighteningFailed

EPS_CAP = 0.1
LOG_CAP = 0.5


@dataclass
class UnitGroupQuasimorphism:
    modulus: int
    values: dict[int, complex]
    bound: float = 1.0

    def __post_init__(self):
        units = unit_group(self.modulus).units
        missing = [b for b in units if b not in self.values]
        if missing:
            raise RangeError(f"no value given for units {missing[:5]} mod {self.modulus}")
        one = 1 % self.modulus
        if abs(self.values[one] - 1) > 1e-12:
            raise RangeError("quasimorphism must satisfy psi(1) = 1")
        if max(abs(v) for v in self.values.values()) > self.bound * (1 + 1e-12):
            raise RangeError(f"values exceed the bound C = {self.bound}")


def _roots_exponents(z: np.ndarray, order: int) -> np.ndarray:
    return np.mod(np.rint(np.angle(z) * order / (2 * np.pi)).astype(np.int64), order)


def snap_to_dirichlet(psi: UnitGroupQuasimorphism, eps: float) -> tuple[DirichletCharacter, float]:
    """Return the Dirichlet character psi is close to and sup_b |psi(b) - chi(b)|."""
    if eps > EPS_CAP:
        raise EpsilonTooLarge(f"eps = {eps} exceeds the cap {EPS_CAP}")
    q = psi.modulus
    units = np.array(unit_group(q).units, dtype=np.int64)
    v = np.array([psi.values[int(b)] for b in units], dtype=np.complex128)
    if len(units) == 1:
        chi = enumerate_characters(q)[0]
        return chi, float(abs(v[0] - 1))
    pos = np.full(q, -1, dtype=np.int64)
    pos[units] = np.arange(len(units))
    mul = pos[np.outer(units, units) % q]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = v[mul] / np.outer(v, v)
    if not np.all(np.isfinite(ratio)):
        raise EpsilonTooLarge("psi vanishes on a unit; cocycle undefined")
    rho = np.log(ratio)
    worst = float(np.max(np.abs(rho)))
    if worst > LOG_CAP:
        i, j = np.unravel_index(np.argmax(np.abs(rho)), rho.shape)
        raise EpsilonTooLarge(f"|log cocycle| = {worst:.3g} > {LOG_CAP} at ({units[i]}, {units[j]})")
    phi = rho.mean(axis=1)
    approx = v * np.exp(phi)
    order = euler_phi(q)
    k = _roots_exponents(approx, order)
    bad = (k[mul] - k[:, None] - k[None, :]) % order != 0
    if bad.any():
        defect = np.abs(approx[mul] - approx[:, None] * approx[None, :])
        i, j = np.unravel_index(np.argmax(np.where(bad, defect, -1)), bad.shape)
        raise StraighteningFailed(
            f"rounded table is not multiplicative: chi({units[i]}*{units[j]}) != chi({units[i]})chi({units[j]}), "
            f"defect {defect[i, j]:.3g}")
    chi = character_from_exponents(q, {int(b): int(e) for b, e in zip(units, k)}, order)
    err = float(np.max(np.abs(v - chi.values[units])))
    return chi, err


def perturbed_character(chi: DirichletCharacter, eps: float, rng: np.random.Generator) -> UnitGroupQuasimorphism:
    """chi(b) exp(i delta_b) with delta_b uniform in [-eps/2, eps/2] and delta_1 = 0."""
    q = chi.modulus
    units = unit_group(q).units
    delta = rng.uniform(-eps / 2, eps / 2, size=len(units))
    vals = {}
    for b, d in zip(units, delta):
        vals[b] = complex(chi.values[b]) * (1.0 if b == 1 % q else complex(np.exp(1j * d)))
    return UnitGroupQuasimorphism(q, vals)


def character_separation(q: int) -> float:
    """min over distinct chi, chi' mod q of sup_b |chi(b) - chi'(b)|."""
    chars = enumerate_characters(q)
    if len(chars) < 2:
        return math.inf
    units = unit_group(q).units
    tab = np.array([c.values[units] for c in chars])
    best = math.inf
    for i in range(len(chars)):
        d = np.max(np.abs(tab[i + 1 :] - tab[i]), axis=1)
        if len(d):
            best = min(best, float(d.min()))
    return best


# --- Archimedean -----------------------------------------------------------


@dataclass
class PositiveRealQuasimorphism:
    sampler: Callable[[np.ndarray], np.ndarray]
    epsilon: float
    bound: float = 1.0

    @property
    def granule(self) -> float:
        return self.epsilon**2

    def discretised(self, x: np.ndarray) -> np.ndarray:
        """alpha at the midpoint of the eps^2-cell holding x for x >= eps, alpha(1/n) on (1/(n+1), 1/n] below."""
        x = np.asarray(x, dtype=np.float64)
        g = self.granule
        big = x >= self.epsilon
        arg = np.empty_like(x)
        arg[big] = g * (np.floor(x[big] / g) + 0.5)
        arg[~big] = 1.0 / np.floor(1.0 / x[~big])
        return np.asarray(self.sampler(arg), dtype=np.complex128)


@dataclass
class ArchimedeanSnap:
    t: float
    sup_error: float
    ladder: np.ndarray
    residuals: np.ndarray


def _log_nodes(M: float, nodes: int) -> np.ndarray:
    u = (np.arange(nodes) + 0.5) * (math.log(M) / nodes)
    return np.exp(u)


def _corrected(alpha: PositiveRealQuasimorphism, x: float, x3: np.ndarray, a3: np.ndarray) -> complex:
    ax = alpha.discretised(np.array([x]))[0]
    axy = alpha.discretised(x * x3)
    rho = np.log(axy / (ax * a3))
    return ax * np.exp(rho.mean())


def snap_to_archimedean(alpha: PositiveRealQuasimorphism, x_max: float = 1e4, M: float = 100.0,
                        nodes: int = 4096, grid_points: int = 2001, tol: float = 10.0) -> ArchimedeanSnap:
    """Recover t with alpha(x) ~ x^{-it}; sup error is measured on a log grid over [1/x_max, x_max]."""
    eps = alpha.epsilon
    if not 0 < eps <= EPS_CAP:
        raise EpsilonTooLarge(f"eps = {eps} outside (0, {EPS_CAP}]")
    if M < 100:
        raise RangeError("averaging range M must be >= 100")
    x0 = 1.0 + eps
    if x_max <= x0:
        raise RangeError("x_max must exceed 1 + eps")
    x3 = _log_nodes(M, nodes)
    a3 = alpha.discretised(x3)
    K = int(math.floor(math.log2(math.log(x_max) / math.log(x0))))
    ladder = x0 ** (2.0 ** np.arange(K + 1))
    phases = np.array([np.angle(_corrected(alpha, float(x), x3, a3)) for x in ladder])
    logs = np.log(ladder)
    t = -phases[0] / logs[0]
    for th, lx in zip(phases[1:], logs[1:]):
        pred = -t * lx
        unwrapped = th + 2 * np.pi * np.rint((pred - th) / (2 * np.pi))
        t = -unwrapped / lx
    resid = np.abs(np.angle(np.exp(1j * (phases + t * logs))))
    if resid.max() > tol * eps:
        k = int(np.argmax(resid))
        raise StraighteningFailed(f"no single t fits the ladder: residual {resid[k]:.3g} at x = {ladder[k]:.6g}")
    grid = np.exp(np.linspace(-math.log(x_max), math.log(x_max), grid_points))
    err = float(np.max(np.abs(np.asarray(alpha.sampler(grid)) - np.exp(-1j * t * np.log(grid)))))
    return ArchimedeanSnap(float(t), err, ladder, resid)


def _splitmix64(z: np.ndarray) -> np.ndarray:
    z = z + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def noisy_archimedean(t0: float, eps: float, seed: int) -> PositiveRealQuasimorphism:
    """x^{-i t0} exp(i delta(x)), delta in [-eps, eps] constant on cells of width eps^2, delta = 0 at 1."""
    g = eps * eps
    key = np.uint64(_splitmix64(np.array([seed], dtype=np.uint64))[0])

    def sampler(x):
        x = np.asarray(x, dtype=np.float64)
        cell = np.floor(x / g).astype(np.int64).astype(np.uint64)
        with np.errstate(over="ignore"):
            h = _splitmix64(cell ^ key)
        u = (h >> np.uint64(11)).astype(np.float64) * 2.0**-53
        delta = eps * (2 * u - 1)
        delta = np.where(np.abs(x - 1.0) <= 0.0, 0.0, delta)
        return np.exp(1j * (delta - t0 * np.log(x)))

    return PositiveRealQuasimorphism(sampler, eps)
