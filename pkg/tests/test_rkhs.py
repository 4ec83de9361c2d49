from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from hypercontraction.multiindex import WeightSequence, enumerate_indices, rho
from hypercontraction.rkhs import (
    AnalyticOperatorFunction,
    KernelDefectError,
    PowerKernel,
    TruncatedSpace,
    inner,
    kernel_eval,
    kernel_positivity,
    monomial,
    monomial_vector,
    mult_operator_matrix,
    multiplier_gram,
    multiplier_source_gram,
    partial_isometry_residual,
    power_kernel_partial,
    sample_pairs,
    sample_points,
    shift_matrix,
)


def _z_function():
    return AnalyticOperatorFunction.from_taylor(1, {(1,): np.eye(1)}, 1, "z")


def test_space_weights_and_dimension():
    sp = TruncatedSpace.power(2, 3, 2, 3)
    assert sp.dim == 10 * 2
    for k in sp.indices:
        assert sp.weight(k) * rho(3, k) == 1


def test_beta_m_space_equals_power_space():
    for m in (2, 3, 4):
        a = TruncatedSpace.power(2, 5, 1, m)
        b = TruncatedSpace.beta(2, 5, 1, WeightSequence.from_m(m, 5))
        assert [a.weight(k) for k in a.indices] == [b.weight(k) for k in b.indices]


def test_space_rejects_short_prefix_and_bad_p():
    with pytest.raises(ValueError):
        TruncatedSpace.beta(1, 5, 1, WeightSequence.from_m(2, 3))
    with pytest.raises(ValueError):
        TruncatedSpace.power(1, 3, 1, 0)


def test_coordinate_roundtrip():
    sp = TruncatedSpace.power(2, 2, 2, 2)
    rng = np.random.default_rng(0)
    coeffs = {k: rng.standard_normal(2) for k in sp.indices}
    back = sp.to_coefficients(sp.to_orthonormal(coeffs))
    for k in sp.indices:
        assert np.allclose(back[k], coeffs[k])


def test_monomial_vector_matches_monomial():
    z = np.array([0.3 + 0.1j, -0.2j, 0.4])
    vec = monomial_vector(z, 4)
    expected = [monomial(z, k) for k in enumerate_indices(3, 4)]
    assert np.allclose(vec, expected)


def test_function_from_taylor_and_coefficient_errors():
    f = AnalyticOperatorFunction(1, 1, 1, lambda z: np.eye(1), {(0,): np.eye(1)}, None, 0)
    with pytest.raises(KeyError):
        f.coefficient((3,))
    g = _z_function()
    assert np.allclose(g(np.array([0.5])), 0.5)
    assert not g.coefficient((5,)).any()


def test_kernel_eval_examples():
    w = np.array([0.3, 0.4j])
    for p in (1, 2, 3):
        assert kernel_eval(PowerKernel(p), np.zeros(2), w).value == 1
    z = np.array([np.sqrt(0.5), 0.0])
    assert kernel_eval(PowerKernel(1), z, z).value == pytest.approx(2.0)


def test_kernel_eval_beta2_matches_closed_form():
    beta = WeightSequence.from_m(2, 120)
    for z, w in sample_pairs(2, 10, 4):
        kv = kernel_eval(beta, z, w)
        exact = (1 - inner(z, w)) ** -2
        assert abs(kv.value - exact) <= kv.tail + 1e-12


def test_kernel_eval_rejects_points_outside_ball():
    with pytest.raises(ValueError):
        kernel_eval(PowerKernel(1), np.array([1.0]), np.array([0.0]))


def test_power_kernel_partial_p0_is_one():
    assert power_kernel_partial(0, [0.5], [0.5], 10) == 1


def test_mult_identity_on_same_space():
    sp = TruncatedSpace.power(2, 3, 2, 2)
    M = mult_operator_matrix(AnalyticOperatorFunction.constant(np.eye(2), 2), sp, sp)
    assert np.allclose(M, np.eye(sp.dim))


def test_mult_identity_between_spaces_has_weight_ratio():
    src = TruncatedSpace.power(1, 4, 1, 1)
    tgt = TruncatedSpace.power(1, 4, 1, 2)
    M = mult_operator_matrix(AnalyticOperatorFunction.constant(np.eye(1), 1), src, tgt)
    assert np.allclose(np.diag(M), [np.sqrt(1 / (k + 1)) for k in range(5)])


def test_mult_z_hardy_to_bergman_matches_inner_products():
    src = TruncatedSpace.power(1, 5, 1, 1)
    tgt = TruncatedSpace.power(1, 6, 1, 2)
    M = mult_operator_matrix(_z_function(), src, tgt)
    for k in range(6):
        # e_k = z^k has Hardy norm 1 and f = z^{k+1} sqrt(k+2) is a Bergman unit
        # vector, so <z e_k, f> = sqrt(k+2) ||z^{k+1}||^2 = 1/sqrt(k+2).
        norm_sq = 1.0 / (k + 2)
        assert M[k + 1, k] == pytest.approx(np.sqrt(k + 2) * norm_sq)


def test_shift_on_hardy_is_partial_isometry_on_safe_part():
    sp = TruncatedSpace.power(1, 6, 1, 1)
    S = shift_matrix(sp, 0)
    assert partial_isometry_residual(S, 6) < 1e-12
    # The top basis vector is pushed out of the truncation.
    assert not S[:, 6].any()


def test_partial_isometry_residual_unitary_and_errors():
    Q, _ = np.linalg.qr(np.random.default_rng(1).standard_normal((5, 5)))
    assert partial_isometry_residual(Q, 5) < 1e-14
    with pytest.raises(ValueError):
        partial_isometry_residual(Q, 6)


def test_multiplier_gram_matches_assembled_matrix():
    rng = np.random.default_rng(3)
    table = {k: rng.standard_normal((2, 3)) for k in enumerate_indices(2, 2)}
    phi = AnalyticOperatorFunction.from_taylor(2, table, 2)
    src = TruncatedSpace.power(2, 4, 3, 1)
    tgt = TruncatedSpace.power(2, 4, 2, 2)
    M = mult_operator_matrix(phi, src, tgt)
    assert np.allclose(multiplier_gram(phi, src, tgt), M @ M.conj().T, atol=1e-12)
    assert np.allclose(multiplier_source_gram(phi, src, tgt), M.conj().T @ M, atol=1e-12)


def test_adjoint_consistency():
    rng = np.random.default_rng(5)
    table = {k: rng.standard_normal((1, 1)) + 1j * rng.standard_normal((1, 1)) for k in enumerate_indices(2, 2)}
    phi = AnalyticOperatorFunction.from_taylor(2, table, 2)
    src = TruncatedSpace.power(2, 3, 1, 1)
    tgt = TruncatedSpace.power(2, 5, 1, 3)
    M = mult_operator_matrix(phi, src, tgt)
    f = rng.standard_normal(src.dim) + 1j * rng.standard_normal(src.dim)
    g = rng.standard_normal(tgt.dim) + 1j * rng.standard_normal(tgt.dim)
    assert abs(np.vdot(g, M @ f) - np.vdot(M.conj().T @ g, f)) < 1e-12


def test_mult_respects_composition_on_safe_subspace():
    rng = np.random.default_rng(7)
    a = {k: rng.standard_normal((1, 1)) for k in enumerate_indices(2, 1)}
    b = {k: rng.standard_normal((1, 1)) for k in enumerate_indices(2, 1)}
    A = AnalyticOperatorFunction.from_taylor(2, a, 1)
    B = AnalyticOperatorFunction.from_taylor(2, b, 1)
    prod = {}
    for k in enumerate_indices(2, 2):
        prod[k] = sum(
            A.coefficient(i) @ B.coefficient((k[0] - i[0], k[1] - i[1]))
            for i in enumerate_indices(2, 1)
            if i[0] <= k[0] and i[1] <= k[1]
        )
    AB = AnalyticOperatorFunction.from_taylor(2, prod, 2)
    sp = [TruncatedSpace.power(2, N, 1, 1) for N in (2, 3, 4)]
    lhs = mult_operator_matrix(AB, sp[0], sp[2])
    rhs = mult_operator_matrix(A, sp[1], sp[2]) @ mult_operator_matrix(B, sp[0], sp[1])
    assert np.linalg.norm(lhs - rhs, 2) < 1e-10


def test_kernel_positivity_examples():
    pts = sample_points(2, 5, 0)
    rep = kernel_positivity(pts, lambda z, w: kernel_eval(PowerKernel(1), z, w).value * np.eye(1))
    assert rep.positive and rep.min_eigenvalue > 0


def test_kernel_positivity_rejects_non_hermitian_expression():
    pts = sample_points(1, 4, 0)
    with pytest.raises(KernelDefectError):
        kernel_positivity(pts, lambda z, w: np.array([[z[0] + 2 * w[0]]]))


def test_sample_points_deterministic_and_inside():
    a = sample_points(3, 10, 42)
    b = sample_points(3, 10, 42)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    assert max(np.linalg.norm(x) for x in a) <= 0.8
    with pytest.raises(ValueError):
        sample_points(2, 3, 0, radius=1.0)


def test_exact_weights_are_fractions():
    sp = TruncatedSpace.beta(2, 3, 1, WeightSequence.from_m(3, 3))
    assert all(isinstance(sp.weight(k), Fraction) for k in sp.indices)
