from __future__ import annotations

from fractions import Fraction
from math import comb

import pytest

from hypercontraction.multiindex import (
    WeightSequence,
    add,
    beta_m,
    count_indices,
    dominates,
    enumerate_indices,
    gamma_from_beta,
    gamma_m,
    graded_key,
    homogeneous_indices,
    index_map,
    rho,
    subtract,
    unit,
)


def test_enumerate_small_cases():
    assert enumerate_indices(1, 2) == ((0,), (1,), (2,))
    assert enumerate_indices(2, 1) == ((0, 0), (1, 0), (0, 1))


def test_enumerate_length_matches_binomial():
    assert len(enumerate_indices(3, 4)) == 35
    for n in range(1, 5):
        for N in range(0, 7):
            assert len(enumerate_indices(n, N)) == comb(n + N, n) == count_indices(n, N)


def test_enumerate_sorted_and_unique():
    idx = enumerate_indices(3, 5)
    keys = [graded_key(k) for k in idx]
    assert keys == sorted(keys)
    assert len(set(idx)) == len(idx)


def test_enumerate_matches_brute_force():
    from itertools import product

    brute = {k for k in product(range(5), repeat=3) if sum(k) <= 4}
    assert set(enumerate_indices(3, 4)) == brute


def test_homogeneous_and_index_map():
    assert homogeneous_indices(2, 2) == ((2, 0), (1, 1), (0, 2))
    pos = index_map(2, 2)
    assert [pos[k] for k in enumerate_indices(2, 2)] == list(range(6))


def test_index_arithmetic():
    assert add((1, 2), (0, 1)) == (1, 3)
    assert subtract((1, 2), (0, 1)) == (1, 1)
    assert subtract((1, 0), (0, 1)) is None
    assert dominates((2, 1), (1, 1))
    assert not dominates((0, 1), (1, 0))
    assert unit(3, 1) == (0, 1, 0)


def test_rho_values():
    for m in range(1, 6):
        assert rho(m, (0, 0)) == 1
    assert rho(0, (1, 0)) == 0
    assert rho(0, (0, 0)) == 1
    assert rho(2, (1, 1)) == 6
    assert rho(1, (2, 1)) == 3


def test_rho_large_index_is_exact():
    k = (20, 22, 22)
    assert rho(3, k) == comb(66, 2) * rho(1, k)
    assert isinstance(rho(3, k), int)


def test_beta_m_values():
    for m in range(1, 6):
        assert beta_m(m, 0) == 1
    assert beta_m(2, 3) == Fraction(1, 4)


def test_gamma_of_beta2_is_constant_one():
    # 1/beta_j(2) = j + 1, so every increment is 1.
    g = gamma_from_beta([beta_m(2, j) for j in range(4)])
    assert g == [1, 1, 1, 1]
    assert gamma_m(2, 3) == 1


def test_gamma_of_beta3_prefix():
    g = gamma_from_beta([beta_m(3, j) for j in range(4)])
    assert g == [1, Fraction(1, 2), Fraction(1, 3), Fraction(1, 4)]


def test_gamma_matches_binomial_formula():
    for m in range(2, 6):
        for j in range(1, 10):
            assert gamma_m(m, j) == Fraction(1, comb(m + j - 2, j))


def test_gamma_from_beta_trivial_and_errors():
    assert gamma_from_beta([1]) == [1]
    with pytest.raises(ValueError):
        gamma_from_beta([1, 2])
    with pytest.raises(ValueError):
        gamma_from_beta([Fraction(1, 2), Fraction(1, 3)])


def test_weight_sequence_roundtrip_from_gamma():
    w = WeightSequence.from_gamma([1, Fraction(1, 2), Fraction(1, 3)])
    assert w.values == (1, Fraction(1, 3), Fraction(1, 6))
    assert w.gamma == [1, Fraction(1, 2), Fraction(1, 3)]


def test_weight_sequence_m1_is_degenerate():
    w = WeightSequence.from_m(1, 5)
    assert not w.strict
    assert w.inverse_gamma() == [1, 0, 0, 0, 0, 0]
    with pytest.raises(ValueError):
        w.gamma


def test_weight_sequence_rejects_increasing():
    with pytest.raises(ValueError):
        WeightSequence((1, 2))


def test_generating_identity_partial_sums():
    z = (0.1, 0.1, 0.1)
    s = sum(z)
    for p in (1, 2, 3):
        N = 30
        partial = sum(rho(p, k) * _mono(z, k) for k in enumerate_indices(3, N))
        exact = (1 - s) ** (-p)
        # Degree-j layer sums to comb(p+j-1, j) s^j, so the tail is a
        # negative binomial tail bounded by its first term over (1 - s).
        tail = comb(p + N, N + 1) * s ** (N + 1) / (1 - s) ** (p + 1)
        # Plus float rounding from summing a few thousand terms.
        assert abs(partial - exact) <= tail + 1e-12


def _mono(z, k):
    out = 1.0
    for zi, ki in zip(z, k):
        out *= zi ** ki
    return out
