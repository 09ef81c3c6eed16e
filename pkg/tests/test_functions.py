import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from chowla_lab.errors import BoundViolation, SpecParseError
from chowla_lab.functions import (Archimedean, Character, Conjugate, Custom, LambdaQ, Liouville, Moebius,
                                  Product, Twisted, evaluate_at, evaluate_range, one, parse_spec)
from chowla_lab.characters import character
from chowla_lab.sieve import sieve_block

BLOCK = sieve_block(1, 20_001)


def test_examples():
    assert evaluate_at(LambdaQ(3), 8) == pytest.approx(1)
    assert evaluate_at(one(), 97) == 1
    assert evaluate_at(Archimedean(0.0), 12345) == pytest.approx(1)
    assert evaluate_at(Liouville(), 0) == 0 and evaluate_at(Liouville(), -3) == 0


def test_builtins_match_oracle():
    lam = evaluate_range(Liouville(), BLOCK)
    mu = evaluate_range(Moebius(), BLOCK)
    for n in range(1, 2000):
        assert lam[n - 1] == oracles.liouville(n)
        assert mu[n - 1] == oracles.mobius(n)


@pytest.mark.parametrize("spec", [
    "liouville", "mobius", "lambda_q(3)", "char(q=4,index=1)", "archimedean(t=1.5)",
    "twist(char(q=3,index=1), t=2.0)", "product(liouville, char(q=5,index=2))", "conj(lambda_q(5))",
])
def test_grammar_roundtrip_and_bound(spec):
    g = parse_spec(spec)
    assert parse_spec(g.to_string()) == g
    v = evaluate_range(g, BLOCK)
    assert np.all(np.abs(v) <= 1 + 1e-12)


@pytest.mark.parametrize("text, col", [("liouvile", 1), ("lambda_q(q=x)", 12), ("char(q=5,index=9)", 15),
                                       ("product(liouville,", 19)])
def test_grammar_errors_have_positions(text, col):
    with pytest.raises(SpecParseError) as e:
        parse_spec(text)
    assert e.value.line == 1
    assert "column" in str(e.value)


def test_conjugate_pointwise():
    g = Twisted(character(7, 2), 1.3)
    assert np.allclose(evaluate_range(Conjugate(g), BLOCK), np.conj(evaluate_range(g, BLOCK)))


def test_archimedean_values():
    n = np.arange(1, 20_001)
    v = evaluate_range(Archimedean(2.5), BLOCK)
    assert np.allclose(v, np.exp(2.5j * np.log(n)), rtol=0, atol=1e-12)


def test_custom_rule_and_bound():
    # g(p^j) = (-1)^j recovers lambda
    g = Custom(lambda p, j: np.where(j % 2, -1.0, 1.0), "lam", real=True)
    assert np.array_equal(evaluate_range(g, BLOCK), evaluate_range(Liouville(), BLOCK).astype(float))
    bad = Custom(lambda p, j: np.full(len(p), 1 + 2.0**-30), "big")
    with pytest.raises(BoundViolation):
        evaluate_range(bad, BLOCK)


def test_custom_missing_values_warn():
    g = Custom.from_table({(2, 1): -1.0}, "partial")
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        v = evaluate_range(g, sieve_block(1, 50))
    assert w
    assert v[1] == -1 and v[2] == 1 and v[3] == 1


ALL = [Liouville(), Moebius(), LambdaQ(3), LambdaQ(5), Character(character(12, 3)), Archimedean(1.5),
       Twisted(character(5, 1), -0.7), Product((Liouville(), Character(character(3, 1))))]


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(ALL), st.integers(1, 140), st.integers(1, 140))
def test_multiplicative_on_coprime_pairs(g, n, m):
    if math.gcd(n, m) != 1:
        return
    v = evaluate_range(g, BLOCK)
    assert v[n * m - 1] == pytest.approx(v[n - 1] * v[m - 1], abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from([Liouville(), LambdaQ(3), LambdaQ(7)]), st.integers(1, 140), st.integers(1, 140))
def test_complete_multiplicativity(g, n, m):
    v = evaluate_range(g, BLOCK)
    assert v[n * m - 1] == pytest.approx(v[n - 1] * v[m - 1], abs=1e-12)
