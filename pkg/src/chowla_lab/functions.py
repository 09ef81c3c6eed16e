"""1-bounded multiplicative functions: built-ins, user rules, and a small spec grammar.

Grammar accepted by :func:`parse_spec`::

    liouville | mobius | one
    lambda_q(3)            lambda_q(q=3)
    char(q=4,index=1)
    archimedean(t=1.5)
    twist(char(q=3,index=1), t=2.0)
    product(spec, spec, ...)
    conj(spec)
"""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numba import njit

from .characters import DirichletCharacter, character
from .errors import BoundViolation, RangeError, SpecParseError
from .sieve import FactorBlock, base_for

BOUND_SLACK = 2.0**-40


class FunctionSpec:
    """Base class; subclasses are immutable and hashable."""

    is_real = False

    @property
    def label(self) -> str:
        return self.to_string()

    def to_string(self) -> str:
        raise NotImplementedError

    def evaluate(self, block: FactorBlock) -> np.ndarray:
        raise NotImplementedError

    def at_primes(self, p: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __str__(self):
        return self.to_string()


@dataclass(frozen=True)
class Liouville(FunctionSpec):
    is_real = True

    def to_string(self):
        return "liouville"

    def evaluate(self, block):
        return block.liouville.astype(np.float64)

    def at_primes(self, p):
        return -np.ones(len(p))


@dataclass(frozen=True)
class Moebius(FunctionSpec):
    is_real = True

    def to_string(self):
        return "mobius"

    def evaluate(self, block):
        return block.mobius_array().astype(np.float64)

    def at_primes(self, p):
        return -np.ones(len(p))


@dataclass(frozen=True)
class LambdaQ(FunctionSpec):
    """n -> exp(2 pi i Omega(n) / q)."""

    q: int

    def __post_init__(self):
        if self.q < 1:
            raise RangeError(f"lambda_q needs q >= 1, got {self.q}")

    @property
    def is_real(self):
        return self.q <= 2

    def to_string(self):
        return f"lambda_q({self.q})"

    def roots(self) -> np.ndarray:
        k = np.arange(self.q)
        z = np.exp(2j * np.pi * k / self.q)
        if self.q <= 2:
            return z.real.round()
        return z

    def evaluate(self, block):
        return self.roots()[block.omega % self.q]

    def at_primes(self, p):
        return np.full(len(p), self.roots()[1 % self.q])


@dataclass(frozen=True)
class Character(FunctionSpec):
    chi: DirichletCharacter

    @property
    def is_real(self):
        return self.chi.is_real

    def to_string(self):
        return self.chi.spec_string()

    def _table(self):
        v = self.chi.values
        return v.real.copy() if self.is_real else v

    def evaluate(self, block):
        q = self.chi.modulus
        start = block.lo % q
        idx = (np.arange(len(block), dtype=np.int64) + start) % q
        return self._table()[idx]

    def at_primes(self, p):
        return self._table()[np.asarray(p) % self.chi.modulus]


@dataclass(frozen=True)
class Archimedean(FunctionSpec):
    """n -> n^{it} in double precision."""

    t: float

    @property
    def is_real(self):
        return self.t == 0

    def to_string(self):
        return f"archimedean(t={_fmt(self.t)})"

    def evaluate(self, block):
        if self.t == 0:
            return np.ones(len(block))
        return np.exp(1j * self.t * np.log(block.integers().astype(np.float64)))

    def at_primes(self, p):
        if self.t == 0:
            return np.ones(len(p))
        return np.exp(1j * self.t * np.log(np.asarray(p, dtype=np.float64)))


@dataclass(frozen=True)
class Twisted(FunctionSpec):
    """n -> chi(n) n^{it}."""

    chi: DirichletCharacter
    t: float

    def to_string(self):
        return f"twist({self.chi.spec_string()}, t={_fmt(self.t)})"

    def evaluate(self, block):
        return Character(self.chi).evaluate(block) * Archimedean(self.t).evaluate(block)

    def at_primes(self, p):
        return Character(self.chi).at_primes(p) * Archimedean(self.t).at_primes(p)


@dataclass(frozen=True)
class Product(FunctionSpec):
    factors: tuple[FunctionSpec, ...]

    def __post_init__(self):
        if not self.factors:
            raise ValueError("product of zero functions")

    @property
    def is_real(self):
        return all(f.is_real for f in self.factors)

    def to_string(self):
        return "product(" + ", ".join(f.to_string() for f in self.factors) + ")"

    def evaluate(self, block):
        out = self.factors[0].evaluate(block)
        for f in self.factors[1:]:
            out = out * f.evaluate(block)
        return out

    def at_primes(self, p):
        out = self.factors[0].at_primes(p)
        for f in self.factors[1:]:
            out = out * f.at_primes(p)
        return out


@dataclass(frozen=True)
class Conjugate(FunctionSpec):
    inner: FunctionSpec

    @property
    def is_real(self):
        return self.inner.is_real

    def to_string(self):
        return f"conj({self.inner.to_string()})"

    def evaluate(self, block):
        v = self.inner.evaluate(block)
        return v if self.inner.is_real else np.conj(v)

    def at_primes(self, p):
        v = self.inner.at_primes(p)
        return v if self.inner.is_real else np.conj(v)


@njit(nogil=True, cache=True)
def _multiplicative_kernel(lo, hi, primes, offsets, table, out, rem):
    n = hi - lo
    for i in range(n):
        out[i] = 1.0
        rem[i] = lo + i
    top = hi - 1
    for k in range(primes.shape[0]):
        p = primes[k]
        if p * p > top:
            break
        start = ((lo + p - 1) // p) * p - lo
        for m in range(start, n, p):
            j = 0
            while rem[m] % p == 0:
                rem[m] //= p
                j += 1
            out[m] *= table[offsets[k] + j - 1]


@dataclass(frozen=True)
class Custom(FunctionSpec):
    """Multiplicative function given by its values at prime powers.

    ``rule(p, j)`` receives int64 arrays of primes and exponents (j >= 1) and
    returns the values g(p**j).  NaN marks an unspecified prime power; those
    default to 1 with a warning.  The function is extended multiplicatively.
    """

    rule: Callable[[np.ndarray, np.ndarray], np.ndarray] = field(compare=True)
    name: str = "custom"
    real: bool = False

    @property
    def is_real(self):
        return self.real

    def to_string(self):
        return f"custom({self.name})"

    def _apply(self, p, j):
        v = np.asarray(self.rule(np.asarray(p, np.int64), np.asarray(j, np.int64)),
                       dtype=np.complex128)
        missing = np.isnan(v)
        if missing.any():
            warnings.warn(f"{self.name}: {int(missing.sum())} prime powers unspecified, using 1",
                          stacklevel=3)
            v = np.where(missing, 1.0, v)
        bad = np.abs(v) > 1 + BOUND_SLACK
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise BoundViolation(
                f"{self.name}: |g({int(np.asarray(p).flat[i])}^{int(np.asarray(j).flat[i])})| "
                f"= {abs(v[i])} exceeds 1")
        return v.real.copy() if self.real else v

    def evaluate(self, block):
        base = block.base or base_for(block.hi)
        top = block.hi - 1
        primes = base.primes[base.primes * base.primes <= top]
        ps, js, offsets = [], [], []
        for p in primes.tolist():
            offsets.append(len(ps))
            jmax = int(math.log(top) / math.log(p)) + 1
            while p**jmax > top:
                jmax -= 1
            ps.extend([p] * jmax)
            js.extend(range(1, jmax + 1))
        table = self._apply(np.array(ps, np.int64), np.array(js, np.int64)).astype(np.complex128)
        out = np.empty(len(block), np.complex128)
        rem = np.empty(len(block), np.int64)
        _multiplicative_kernel(block.lo, block.hi, primes, np.array(offsets, np.int64),
                               table, out, rem)
        big = rem > 1
        if big.any():
            out[big] *= self._apply(rem[big], np.ones(int(big.sum()), np.int64))
        return out.real.copy() if self.real else out

    def at_primes(self, p):
        return self._apply(p, np.ones(len(p), np.int64))

    @classmethod
    def from_table(cls, values: dict[tuple[int, int], complex], name="custom"):
        """Custom function from a finite {(p, j): value} table."""
        real = all(complex(v).imag == 0 for v in values.values())

        def rule(p, j):
            out = np.full(len(p), np.nan, dtype=np.complex128)
            for i, key in enumerate(zip(p.tolist(), j.tolist())):
                if key in values:
                    out[i] = values[key]
            return out

        return cls(rule, name, real)


def evaluate_range(g: FunctionSpec, block: FactorBlock) -> np.ndarray:
    """Values of g on ``[block.lo, block.hi)``.

    Real-valued specs come back as float64, others as complex128.
    """
    return g.evaluate(block)


def evaluate_at(g: FunctionSpec, n: int) -> complex:
    """Single value g(n); 0 for n <= 0 by convention."""
    from .sieve import sieve_block

    if n <= 0:
        return 0
    v = g.evaluate(sieve_block(n, n + 1))[0]
    return v


def one() -> FunctionSpec:
    return Character(character(1, 0))


# --- grammar ----------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<num>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)|"
                    r"(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<punct>[(),=]))")


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.toks: list[tuple[str, str, int]] = []
        i = 0
        while i < len(text):
            if text[i:].strip() == "":
                break
            m = _TOKEN.match(text, i)
            if not m or m.end() == i:
                j = i + len(text[i:]) - len(text[i:].lstrip())
                raise SpecParseError(f"unexpected character {text[j]!r}", text, j)
            kind = m.lastgroup
            self.toks.append((kind, m.group(kind), m.start(kind)))
            i = m.end()
        self.k = 0

    def peek(self):
        return self.toks[self.k] if self.k < len(self.toks) else ("eof", "", len(self.text))

    def take(self, kind=None, value=None):
        tok = self.peek()
        if (kind and tok[0] != kind) or (value and tok[1] != value):
            want = value or kind
            got = tok[1] or "end of input"
            raise SpecParseError(f"expected {want!r}, found {got!r}", self.text, tok[2])
        self.k += 1
        return tok

    def parse(self) -> FunctionSpec:
        spec = self.spec()
        tok = self.peek()
        if tok[0] != "eof":
            raise SpecParseError(f"trailing input {tok[1]!r}", self.text, tok[2])
        return spec

    def args(self):
        """Positional and keyword arguments inside parentheses."""
        pos, kw = [], {}
        if self.peek()[1] != "(":
            return pos, kw, self.peek()[2]
        open_at = self.take("punct", "(")[2]
        if self.peek()[1] == ")":
            self.take()
            return pos, kw, open_at
        while True:
            tok = self.peek()
            if tok[0] == "name" and self.k + 1 < len(self.toks) and self.toks[self.k + 1][1] == "=":
                self.take()
                self.take("punct", "=")
                num = self.take("num")
                kw[tok[1]] = (num[1], num[2])
            elif tok[0] == "num":
                self.take()
                pos.append((tok[1], tok[2]))
            else:
                pos.append((self.spec(), tok[2]))
            sep = self.peek()
            if sep[1] == ",":
                self.take()
                continue
            self.take("punct", ")")
            return pos, kw, open_at

    def _int(self, raw, where):
        s, at = raw
        try:
            return int(s)
        except ValueError:
            raise SpecParseError(f"{where} must be an integer, got {s!r}", self.text, at)

    def _float(self, raw):
        return float(raw[0])

    def spec(self) -> FunctionSpec:
        kind, name, at = self.take("name")
        pos, kw, open_at = self.args()
        lname = name.lower()

        def need(n_pos, keys):
            if len(pos) > n_pos or set(kw) - set(keys):
                extra = sorted(set(kw) - set(keys))
                raise SpecParseError(f"bad arguments for {name}" + (f": {extra}" if extra else ""),
                                     self.text, open_at)

        if lname in ("liouville", "lambda"):
            need(0, ())
            return Liouville()
        if lname in ("mobius", "moebius", "mu"):
            need(0, ())
            return Moebius()
        if lname == "one":
            need(0, ())
            return one()
        if lname == "lambda_q":
            need(1, ("q",))
            raw = kw.get("q") or (pos[0] if pos else None)
            if raw is None or not isinstance(raw[0], str):
                raise SpecParseError("lambda_q needs an integer q", self.text, open_at)
            q = self._int(raw, "q")
            if q < 1:
                raise SpecParseError("lambda_q needs q >= 1", self.text, raw[1])
            return LambdaQ(q)
        if lname in ("char", "character"):
            need(0, ("q", "index"))
            if "q" not in kw:
                raise SpecParseError("char needs q=", self.text, open_at)
            q = self._int(kw["q"], "q")
            idx = self._int(kw["index"], "index") if "index" in kw else 0
            try:
                return Character(character(q, idx))
            except RangeError as e:
                raise SpecParseError(str(e), self.text, kw.get("index", kw["q"])[1]) from None
        if lname == "archimedean":
            need(1, ("t",))
            raw = kw.get("t") or (pos[0] if pos else None)
            if raw is None or not isinstance(raw[0], str):
                raise SpecParseError("archimedean needs t=", self.text, open_at)
            return Archimedean(self._float(raw))
        if lname == "twist":
            need(1, ("t",))
            if len(pos) != 1 or not isinstance(pos[0][0], Character):
                raise SpecParseError("twist needs a char(...) argument", self.text, open_at)
            t = self._float(kw["t"]) if "t" in kw else 0.0
            return Twisted(pos[0][0].chi, t)
        if lname == "product":
            if kw or not pos or not all(isinstance(p[0], FunctionSpec) for p in pos):
                raise SpecParseError("product needs one or more specs", self.text, open_at)
            return Product(tuple(p[0] for p in pos))
        if lname in ("conj", "conjugate"):
            if kw or len(pos) != 1 or not isinstance(pos[0][0], FunctionSpec):
                raise SpecParseError("conj needs exactly one spec", self.text, open_at)
            return Conjugate(pos[0][0])
        raise SpecParseError(f"unknown function {name!r}", self.text, at)


def parse_spec(text: str) -> FunctionSpec:
    return _Parser(text).parse()


def _fmt(x: float) -> str:
    return repr(float(x))
