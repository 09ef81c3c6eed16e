import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from chowla_lab.averaging import ScaleGrid
from chowla_lab.characters import character
from chowla_lab.correlation import (CorrelationQuery, Mollifier, archimedean_isotopy_residual,
                                    argument_equidistribution, brute_force_correlation, correlate, fd_table,
                                    is_progression, nonarch_isotopy_residual, smooth_bump, smooth_step,
                                    three_point_bound_check, window_correlation)
from chowla_lab.errors import RangeError
from chowla_lab.functions import (Archimedean, Character, Conjugate, LambdaQ, Liouville, Moebius, Twisted,
                                  one)

LAM = Liouville()
GRID = ScaleGrid(10, 2**0.5, 20)


def q(fs, hs, **kw):
    return CorrelationQuery(tuple(fs), tuple(hs), **kw)


def test_examples():
    assert np.allclose(correlate(q([LAM, LAM], [0, 0], grid=GRID)).values, 1)
    s = correlate(q([LAM, LAM], [0, 1], grid=ScaleGrid.explicit([10])))
    lam = [oracles.liouville(n) for n in range(1, 12)]
    assert s.values[0] == pytest.approx(sum(lam[i] * lam[i + 1] for i in range(10)) / 10)
    assert s.values[0] == pytest.approx(-0.4)
    assert np.allclose(correlate(q([one()], [7], grid=GRID)).values, 1)


def test_negative_arguments_contribute_zero():
    s = correlate(q([one(), one()], [0, -3], grid=ScaleGrid.explicit([10])))
    assert s.values[0] == pytest.approx(7 / 10)


def test_query_validation():
    with pytest.raises(RangeError):
        q([], [])
    with pytest.raises(RangeError):
        q([LAM], [0, 1])
    with pytest.raises(RangeError):
        q([LAM], [0], d=0)
    with pytest.raises(RangeError):
        q([LAM], [0], scheme="prime_log")


SPECS = [LAM, Moebius(), LambdaQ(3), Character(character(5, 1)), Archimedean(0.8), Twisted(character(4, 1), 1.1)]


@settings(max_examples=25, deadline=None)
@given(st.lists(st.sampled_from(SPECS), min_size=1, max_size=3), st.data(),
       st.sampled_from(["unweighted", "log", "loglog"]), st.integers(1, 3), st.sampled_from([1.0, 1.5, 3.0]))
def test_brute_force_equivalence(fs, data, scheme, a, d):
    hs = data.draw(st.lists(st.integers(-4, 4), min_size=len(fs), max_size=len(fs)))
    X = data.draw(st.integers(20, 400))
    query = q(fs, hs, a=a, d=d, scheme=scheme, grid=ScaleGrid.explicit([X]))
    fast = correlate(query, segment_size=4096).values[0]
    assert abs(fast - brute_force_correlation(query, X)) <= 1e-12


def test_series_invariants():
    rng = np.random.default_rng(3)
    for _ in range(6):
        fs = [SPECS[i] for i in rng.integers(0, len(SPECS), size=2)]
        for d in (1.0, 2.5):
            s = correlate(q(fs, [0, int(rng.integers(1, 5))], d=d, scheme="log", grid=GRID))
            v, x = s.values, s.scales
            assert np.all(np.abs(v) <= 1 + 1e-12)
            for i in range(len(x)):
                for j in range(i + 1, len(x)):
                    bound = 2 * abs(math.log(x[i]) - math.log(x[j])) + 4 * d / min(x[i], x[j])
                    assert abs(v[i] - v[j]) <= bound


def test_conjugation_gives_conjugate_series():
    g = Twisted(character(7, 2), 0.9)
    a = correlate(q([g, LAM], [0, 1], grid=GRID)).values
    b = correlate(q([Conjugate(g), LAM], [0, 1], grid=GRID)).values
    assert np.allclose(b, np.conj(a), atol=1e-15)


def test_shift_translation():
    c = 3
    X = 10**5
    base = correlate(q([LAM, LambdaQ(3)], [0, 2], grid=ScaleGrid.explicit([X]))).values[0]
    moved = correlate(q([LAM, LambdaQ(3)], [c, 2 + c], grid=ScaleGrid.explicit([X]))).values[0]
    assert abs(base - moved) <= 2 * (abs(c) + 1) / X


def test_fd_table_trivial():
    tab = fd_table([one(), one()], [0, 1], [1, 2, 3.5, 10], [1, 2], 1e4)
    assert np.allclose(tab.values, 1)
    t, c, r = tab.best_t(5)
    assert t == 0 and np.allclose(r, 0, atol=1e-12)


def test_fd_table_recovers_archimedean_t():
    tab = fd_table([Archimedean(1.5)], [0], np.exp(np.linspace(0, 4, 30)), [1], 1e6)
    t, _, r = tab.best_t(5)
    assert t == pytest.approx(1.5, abs=0.05)
    assert np.all(r < 0.01)


def test_archimedean_isotopy():
    one_q = q([one()], [0], grid=GRID)
    assert np.allclose(archimedean_isotopy_residual(one_q, 2, 0.0).residual, 0, atol=1e-15)
    g = q([Archimedean(1.5)], [0], grid=ScaleGrid.spanning(1e3, 1e6))
    res = archimedean_isotopy_residual(g, 2, 1.5)
    assert np.all(res.residual * res.scales <= 10)


def test_lambda_isotopy_decays_in_trend():
    g = q([LAM, LAM], [0, 1], grid=ScaleGrid.spanning(1e4, 1e7, 10**0.25))
    r = archimedean_isotopy_residual(g, 2, 0.0).residual
    assert r[-4:].mean() < r[:4].mean()


def test_nonarch_isotopy():
    odd = character(3, 1)
    even = character(5, 2)
    assert even.parity == 1
    zero_a = q([LAM, LAM], [0, 1], a=0, grid=GRID)
    s = correlate(zero_a).values
    assert np.allclose(nonarch_isotopy_residual(zero_a, even).residual, 0, atol=1e-15)
    assert np.allclose(nonarch_isotopy_residual(zero_a, odd).residual, 2 * np.abs(s))
    r = nonarch_isotopy_residual(q([LAM, LAM], [0, 1], grid=ScaleGrid.explicit([1e6])), character(1, 0))
    assert r.residual[0] < 0.01


def test_equidistribution_examples():
    radial = Mollifier(0.1, smooth_bump(0.1, 2.0))
    query = q([Archimedean(2.0)], [0], grid=GRID)
    res = argument_equidistribution(query, radial, [1e3, 1e4])
    assert np.allclose(res.statistic, 0, atol=1e-12)
    ones = argument_equidistribution(q([one()], [0]), Mollifier(0.25, smooth_step(0.25, 0.5), harmonic=1),
                                     [1e3, 1e4])
    assert np.allclose(ones.statistic, 1, atol=1e-12)


def test_equidistribution_archimedean_trend():
    t0 = 2.0
    r = 1 / abs(1 + 1j * t0)
    m = Mollifier(r / 2, smooth_bump(r / 2, 2.0), harmonic=1)
    query = q([Archimedean(t0)], [0])
    res = argument_equidistribution(query, m, [1e2, 1e4, 1e6])
    mag = np.abs(res.statistic)
    # the log-average of X^{it} over X <= X0 decays like 1/(t ln X0)
    assert np.all(np.diff(mag) < 0) and mag[-1] < 0.5 * mag[0]
    sub = argument_equidistribution(query, m, [1e6], mode="grid", grid=ScaleGrid(1, 2**0.125, 160))
    assert sub.mode == "subsampled" and abs(sub.statistic[0]) < 0.5 * mag[0]


def test_mollifier_must_vanish_near_zero():
    with pytest.raises(RangeError):
        Mollifier(0.1, lambda r: np.ones_like(r))


def test_windows_and_three_point():
    w = window_correlation([one()], [0], [(1000, 10), (1e5, 1e3)])
    assert np.allclose(w, 1)
    tp = three_point_bound_check(one(), [0, 1, 2], [(1e4, 10)])
    assert tp.magnitudes[0] == pytest.approx(1)
    with pytest.raises(RangeError):
        three_point_bound_check(LAM, [0, 1, 1], [(1e4, 10)])
    assert is_progression([0, 1, 2]) and not is_progression([0, 1, 3])


def test_window_matches_direct_sum():
    lam = np.array([oracles.liouville(n) for n in range(1, 2004)], float)
    n = np.arange(1, 2001)
    v = lam[:2000] * lam[1:2001] * lam[3:2003]
    keep = n >= math.ceil(2000 / 7)
    ref = np.sum(v[keep] / n[keep]) / np.sum(1 / n[keep])
    got = window_correlation([LAM, LAM, LAM], [0, 1, 3], [(2000, 7)])[0]
    assert got == pytest.approx(ref, abs=1e-13)
