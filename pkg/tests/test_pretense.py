import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from chowla_lab.averaging import ScaleGrid
from chowla_lab.characters import character, enumerate_characters
from chowla_lab.errors import CapabilityError, RangeError
from chowla_lab.functions import Archimedean, LambdaQ, Liouville, Product, Twisted, Character, one
from chowla_lab.pretense import (classify_product, fit_twisted_character, pretentious_distance_sq, twist_of,
                                 weak_pretension_profile)

MERTENS = 0.2614972128476428
LAM = Liouville()
GRID = ScaleGrid.explicit([1e2, 1e3, 1e4, 1e5, 1e6])


def test_distance_matches_direct_prime_sum():
    ps = [p for p in range(2, 2000) if oracles.is_prime(p)]
    g = Twisted(character(5, 1), 0.7)
    vals = g.at_primes(np.array(ps))
    ref = math.fsum((1 - (-1 * np.conj(v)).real) / p for v, p in zip(vals, ps))
    assert pretentious_distance_sq(LAM, g, 1999) == pytest.approx(ref, rel=1e-13)


def test_lambda_against_one_follows_mertens():
    X = 1e6
    d = pretentious_distance_sq(LAM, one(), X)
    assert d == pytest.approx(2 * math.log(math.log(X)) + 2 * MERTENS, abs=5e-3)
    prof = weak_pretension_profile(LAM, one(), GRID)
    assert prof.verdict == "trending-inf"
    assert prof.normalized[-1] > 1.5


def test_self_and_squares():
    prof = weak_pretension_profile(LambdaQ(5), LambdaQ(5), GRID)
    assert np.all(prof.normalized == 0) and prof.verdict == "trending-0"
    lam2 = Product((LAM, LAM))
    assert np.all(weak_pretension_profile(lam2, one(), GRID).dist_sq == 0)


def test_profile_errors():
    with pytest.raises(RangeError):
        weak_pretension_profile(LAM, one(), ScaleGrid.explicit([2, 10]))
    with pytest.raises(RangeError):
        pretentious_distance_sq(LAM, one(), 1)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([LAM, LambdaQ(3), Archimedean(1.0), Twisted(character(4, 1), 2.0)]),
       st.sampled_from([one(), Character(character(3, 1)), Archimedean(-0.5)]),
       st.lists(st.floats(3, 1e5), min_size=2, max_size=6, unique=True))
def test_distance_nonnegative_and_monotone(f, g, xs):
    xs = sorted(xs)
    if any(b / a < 1 + 1e-9 for a, b in zip(xs, xs[1:])):
        return
    prof = weak_pretension_profile(f, g, ScaleGrid.explicit(xs))
    assert np.all(prof.dist_sq >= 0)
    assert np.all(np.diff(prof.dist_sq) >= 0)


def test_fit_recovers_planted_twist():
    chi = enumerate_characters(4)[1]
    fit = fit_twisted_character(Twisted(chi, 1.0), q_max=8, t_max=5, X=1e6)
    assert fit.chi == chi
    assert abs(fit.t - 1.0) <= fit.grid_resolution
    # chi(2) = 0 leaves the p = 2 term: the floor is sum_{p | 4} 1/p
    assert fit.dist_sq == pytest.approx(0.5, abs=1e-3)
    assert twist_of(fit).to_string().startswith("twist(")


def test_fit_minimises_over_the_grid():
    fit = fit_twisted_character(LAM, q_max=8, t_max=5, X=1e6)
    rng = np.random.default_rng(0)
    for _ in range(20):
        q = int(rng.integers(1, 9))
        chi = enumerate_characters(q)[int(rng.integers(0, len(enumerate_characters(q))))]
        t = float(rng.uniform(-5, 5))
        assert fit.dist_sq <= pretentious_distance_sq(LAM, Twisted(chi, t), 1e6) + 1e-9
    assert fit.dist_sq == pytest.approx(pretentious_distance_sq(LAM, Twisted(fit.chi, fit.t), 1e6), abs=1e-9)
    assert fit.dist_sq > 1.5


def test_fit_finds_character_inside_product():
    chi3 = character(3, 1)
    kind, fit = classify_product([LAM, LAM, Character(chi3)], q_max=8, t_max=5, X=1e6)
    assert kind == "pretentious"
    assert fit.chi == chi3 and fit.t == 0


def test_fit_budget_and_range():
    with pytest.raises(CapabilityError):
        fit_twisted_character(LAM, q_max=50, t_max=100, X=1e7, budget=1e6)
    with pytest.raises(RangeError):
        fit_twisted_character(LAM, q_max=4, X=50)
