"""Exact Dirichlet character tables built from the structure of (Z/qZ)^x.

Character values are kept as integer exponents over a common denominator
(the exponent of the unit group), so parity and multiplicativity checks are
exact; complex values are rendered on demand.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from math import gcd, lcm

import numpy as np

from .errors import RangeError


def factorize(n: int) -> list[tuple[int, int]]:
    out = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
        p += 1 if p == 2 else 2
    if n > 1:
        out.append((n, 1))
    return out


def euler_phi(n: int) -> int:
    r = n
    for p, _ in factorize(n):
        r = r // p * (p - 1)
    return r


def multiplicative_order(g: int, m: int) -> int:
    k, x = 1, g % m
    while x != 1 % m:
        x = x * g % m
        k += 1
    return k


def primitive_root(m: int) -> int:
    """Smallest generator of the cyclic group (Z/mZ)^x, by exhaustive search."""
    phi = euler_phi(m)
    ps = [p for p, _ in factorize(phi)]
    for g in range(1, m + 1):
        if gcd(g, m) != 1:
            continue
        if all(pow(g, phi // p, m) != 1 for p in ps):
            return g % m
    raise ValueError(f"(Z/{m}Z)^x is not cyclic")


def _crt_lift(residue: int, modulus: int, q: int) -> int:
    """x = residue mod ``modulus`` and x = 1 mod ``q // modulus``."""
    other = q // modulus
    if other == 1:
        return residue % q
    for x in range(residue % modulus, q, modulus):
        if x % other == 1 % other:
            return x
    raise AssertionError("CRT lift failed")


@dataclass(frozen=True)
class UnitGroup:
    """Decomposition of (Z/qZ)^x into cyclic factors with explicit generators."""

    q: int
    generators: tuple[int, ...]
    orders: tuple[int, ...]
    exponent: int
    # dlog[b] = exponent vector of b, or None for non-units
    dlog: tuple = field(repr=False)

    @property
    def units(self) -> list[int]:
        return [b for b in range(self.q) if self.dlog[b] is not None]


@lru_cache(maxsize=None)
def unit_group(q: int) -> UnitGroup:
    if q < 1:
        raise RangeError(f"modulus must be >= 1, got {q}")
    gens, orders = [], []
    for p, e in factorize(q):
        pe = p**e
        if p == 2:
            if e == 2:
                gens.append(_crt_lift(3, pe, q))
                orders.append(2)
            elif e >= 3:
                gens.append(_crt_lift(pe - 1, pe, q))
                orders.append(2)
                gens.append(_crt_lift(5, pe, q))
                orders.append(pe // 4)
        else:
            gens.append(_crt_lift(primitive_root(pe), pe, q))
            orders.append(pe // p * (p - 1))
    dlog: list = [None] * q
    for ks in itertools.product(*(range(o) for o in orders)):
        b = 1 % q
        for g, k in zip(gens, ks):
            b = b * pow(g, k, q) % q
        dlog[b] = ks
    if q == 1:
        dlog[0] = ()
    expo = lcm(*orders) if orders else 1
    return UnitGroup(q, tuple(gens), tuple(orders), expo, tuple(dlog))


@dataclass(frozen=True)
class DirichletCharacter:
    """A character mod ``modulus``: chi(b) = exp(2 pi i exponents[b] / denominator).

    ``exponents[b]`` is -1 where gcd(b, q) > 1.  ``label`` is the exponent
    vector on the unit-group generators, ``index`` its position in
    :func:`enumerate_characters`.
    """

    modulus: int
    exponents: tuple[int, ...] = field(repr=False)
    denominator: int
    label: tuple[int, ...]
    index: int

    @cached_property
    def values(self) -> np.ndarray:
        e = np.asarray(self.exponents)
        z = np.exp(2j * np.pi * np.where(e < 0, 0, e) / self.denominator)
        z = np.where(e < 0, 0, z)
        # exact rendering of the real cases
        rz = np.round(z.real * 2) / 2
        iz = np.round(z.imag * 2) / 2
        exact = (np.abs(z.real - rz) < 1e-15) & (np.abs(z.imag - iz) < 1e-15)
        return np.where(exact, rz + 1j * iz, z)

    @property
    def parity(self) -> int:
        q = self.modulus
        if q <= 2:
            return 1
        return -1 if 2 * self.exponents[q - 1] == self.denominator else 1

    @property
    def is_principal(self) -> bool:
        return all(e <= 0 for e in self.exponents)

    @property
    def is_real(self) -> bool:
        return all(e < 0 or (2 * e) % self.denominator == 0 for e in self.exponents)

    def __call__(self, n):
        return self.values[np.asarray(n) % self.modulus]

    def spec_string(self) -> str:
        return f"char(q={self.modulus},index={self.index})"


@lru_cache(maxsize=None)
def _characters(q: int) -> tuple[DirichletCharacter, ...]:
    G = unit_group(q)
    M = G.exponent
    out = []
    for idx, js in enumerate(itertools.product(*(range(o) for o in G.orders))):
        ex = []
        for b in range(q):
            ks = G.dlog[b]
            if ks is None:
                ex.append(-1)
            else:
                ex.append(sum(j * k * (M // o) for j, k, o in zip(js, ks, G.orders)) % M)
        out.append(DirichletCharacter(q, tuple(ex), M, tuple(js), idx))
    return tuple(out)


def enumerate_characters(q: int) -> list[DirichletCharacter]:
    """All phi(q) characters mod q, principal first."""
    if q == 0:
        raise RangeError("modulus q = 0 has no characters")
    if q < 0:
        raise RangeError(f"modulus must be positive, got {q}")
    return list(_characters(int(q)))


def character(q: int, index: int) -> DirichletCharacter:
    chars = enumerate_characters(q)
    if not 0 <= index < len(chars):
        raise RangeError(f"character index {index} out of range for q={q} (phi={len(chars)})")
    return chars[index]


def odd_characters(q: int) -> list[DirichletCharacter]:
    return [c for c in enumerate_characters(q) if c.parity == -1]


def character_from_exponents(q: int, exps: dict[int, int], denominator: int) -> DirichletCharacter:
    """Look up the enumerated character with chi(b) = e(exps[b] / denominator) on units."""
    for c in enumerate_characters(q):
        if all((c.exponents[b] * denominator - e * c.denominator) % (c.denominator * denominator) == 0
               for b, e in exps.items()):
            return c
    raise ValueError(f"no character mod {q} matches the given exponents")
