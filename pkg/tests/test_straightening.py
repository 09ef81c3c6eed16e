import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chowla_lab.characters import enumerate_characters, unit_group
from chowla_lab.errors import EpsilonTooLarge, RangeError, StraighteningFailed
from chowla_lab.straightening import (PositiveRealQuasimorphism, UnitGroupQuasimorphism, character_separation,
                                      noisy_archimedean, perturbed_character, snap_to_archimedean,
                                      snap_to_dirichlet)


def exact(chi):
    return UnitGroupQuasimorphism(chi.modulus, {b: complex(chi.values[b]) for b in unit_group(chi.modulus).units})


@pytest.mark.parametrize("q", range(1, 51))
def test_exact_characters_are_fixed(q):
    for chi in enumerate_characters(q):
        got, err = snap_to_dirichlet(exact(chi), 0.0)
        assert got == chi and err == 0


def test_trivial_groups():
    for q in (1, 2):
        chi, err = snap_to_dirichlet(UnitGroupQuasimorphism(q, {1 % q: 1.0}), 0.05)
        assert chi.is_principal and err == 0


def test_planted_mod_12():
    rng = np.random.default_rng(12)
    for chi in enumerate_characters(12):
        psi = perturbed_character(chi, 0.05, rng)
        got, err = snap_to_dirichlet(psi, 0.05)
        assert got == chi and err <= 0.05


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 50), st.integers(0, 10**6), st.floats(0.0, 0.05))
def test_planted_characters_recovered(q, seed, eps):
    rng = np.random.default_rng(seed)
    chars = enumerate_characters(q)
    chi = chars[int(rng.integers(len(chars)))]
    got, err = snap_to_dirichlet(perturbed_character(chi, eps, rng), eps)
    assert got == chi
    assert err <= 10 * eps + 1e-15


def test_dirichlet_errors():
    with pytest.raises(EpsilonTooLarge):
        snap_to_dirichlet(exact(enumerate_characters(5)[1]), 0.2)
    with pytest.raises(RangeError):
        UnitGroupQuasimorphism(5, {1: 1, 2: 1j})
    with pytest.raises(RangeError):
        UnitGroupQuasimorphism(5, {1: 1j, 2: 1j, 3: 1, 4: 1})
    vals = {b: complex(np.exp(0.4j * (b != 1))) for b in unit_group(7).units}
    with pytest.raises((StraighteningFailed, EpsilonTooLarge)):
        snap_to_dirichlet(UnitGroupQuasimorphism(7, vals), 0.1)


def test_large_cocycle_rejected():
    vals = {b: complex(np.exp(2.5j * (b != 1))) for b in unit_group(5).units}
    with pytest.raises(EpsilonTooLarge):
        snap_to_dirichlet(UnitGroupQuasimorphism(5, vals), 0.05)


def test_separation():
    assert character_separation(4) == pytest.approx(2)
    assert character_separation(5) == pytest.approx(2)  # chi_0 - chi_1 at b = 4
    assert character_separation(7) == pytest.approx(math.sqrt(3))
    assert character_separation(1) == math.inf


def test_archimedean_exact():
    a = PositiveRealQuasimorphism(lambda x: np.exp(-2.5j * np.log(x)), 0.03)
    snap = snap_to_archimedean(a)
    assert snap.t == pytest.approx(2.5, abs=1e-6)
    assert snap.sup_error < 1e-4


def test_archimedean_identity():
    snap = snap_to_archimedean(PositiveRealQuasimorphism(lambda x: np.ones(np.shape(x), complex), 0.03))
    assert snap.t == 0 and snap.sup_error == 0


@settings(max_examples=15, deadline=None)
@given(st.floats(-5, 5), st.integers(0, 2**32), st.sampled_from([0.01, 0.02, 0.03]))
def test_archimedean_noisy(t0, seed, eps):
    snap = snap_to_archimedean(noisy_archimedean(t0, eps, seed), x_max=1e4)
    assert abs(snap.t - t0) <= 10 * eps / math.log(1e4)
    assert snap.sup_error <= 10 * eps


def test_noise_is_seeded_and_bounded():
    a, b = noisy_archimedean(1.0, 0.03, 7), noisy_archimedean(1.0, 0.03, 7)
    x = np.exp(np.linspace(-5, 5, 1000))
    assert np.array_equal(a.sampler(x), b.sampler(x))
    dev = np.abs(np.angle(a.sampler(x) * np.exp(1j * np.log(x))))
    assert dev.max() <= 0.03 + 1e-12


def test_archimedean_errors():
    a = noisy_archimedean(1.0, 0.2, 0)
    with pytest.raises(EpsilonTooLarge):
        snap_to_archimedean(a)
    with pytest.raises(RangeError):
        snap_to_archimedean(noisy_archimedean(1.0, 0.03, 0), M=10)


def test_inconsistent_ladder():
    # a phase that is not a power of x: x^{-i t} with t depending on scale
    bad = PositiveRealQuasimorphism(lambda x: np.exp(-1j * np.log(np.asarray(x)) ** 2), 0.03)
    with pytest.raises(StraighteningFailed):
        snap_to_archimedean(bad)
