from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from hypercontraction.chartriple import build_triple, char_fn, eval_char_fn, polynomial_degree
from hypercontraction.corpus import polynomial_family
from hypercontraction.factorization import (
    Colligation,
    UniversalMultiplier,
    canonical_transfer,
    factor_through_universal,
    joint_invariant_subspace_check,
    k_beta_inner_check,
    psi_eval,
    psi_kernel,
    relate_row_char_fn,
    relate_transfer_functions,
    row_char_fn,
    subspace_factor_functions,
    transfer_eval,
    unique_kinner_factor,
    verify_m1_reduction,
    verify_psi_coisometry,
    verify_thm_factchar,
    wandering_subspace_ops,
)
from hypercontraction.multiindex import WeightSequence, enumerate_indices, rho
from hypercontraction.rkhs import AnalyticOperatorFunction, TruncatedSpace, inner, sample_pairs, sample_points
from hypercontraction.tuples import OperatorTuple, nilpotency_order


def zero_tuple(n=1, d=1):
    return OperatorTuple([np.zeros((d, d))] * n)


def poly(n, table, degree):
    return AnalyticOperatorFunction.from_taylor(n, {k: np.atleast_2d(np.asarray(v, dtype=complex)) for k, v in table.items()}, degree)


# -- transfer functions ---------------------------------------------------


def test_transfer_at_origin_is_D():
    t = build_triple(polynomial_family(2, 3, seed=1), 2)
    col = Colligation.from_triple(t)
    np.testing.assert_allclose(transfer_eval(col, np.zeros(2)), col.D, atol=0)


def test_transfer_with_zero_A_is_linear():
    rng = np.random.default_rng(0)
    d, n, e, f = 2, 2, 3, 2
    B = rng.standard_normal((n * d, e))
    C = rng.standard_normal((f, d))
    D = rng.standard_normal((f, e))
    col = Colligation(np.zeros((n * d, d)), B, C, D, n)
    z = np.array([0.3, -0.2j])
    expected = D + C @ (z[0] * B[:d] + z[1] * B[d:])
    np.testing.assert_allclose(transfer_eval(col, z), expected, atol=1e-14)


def test_transfer_contractive_on_corpus(nilpotent):
    for mem in nilpotent:
        for m in (1, 2, 3):
            col = Colligation.from_triple(build_triple(mem.tuple, m))
            assert col.unitarity_residual < 1e-12
            for z in sample_points(mem.tuple.n, 10, seed=3, radius=0.9):
                assert np.linalg.norm(transfer_eval(col, z), 2) <= 1 + 1e-10, mem.name


# -- universal multiplier -------------------------------------------------


@pytest.mark.parametrize("m", [1, 2, 3])
def test_psi_at_origin(m):
    val = psi_eval(m, 2, np.zeros(2), 3)
    expected = np.zeros_like(val)
    expected[:, :2] = np.eye(2)
    np.testing.assert_allclose(val, expected, atol=0)


def test_psi_bergman_blocks():
    # In one variable rho_1(k) = 1 and gamma_k(2) = 1, so every block is 1;
    # this matches Psi(z) Psi(w)^* = 1 / (1 - z conj(w)).
    U = UniversalMultiplier(WeightSequence.from_m(2, 6), 1, 1, 6)
    np.testing.assert_allclose(U.scalars(), np.ones(7), atol=1e-14)


@pytest.mark.parametrize("m", [2, 3, 4])
def test_psi_bridge_identity(m):
    U = UniversalMultiplier(WeightSequence.from_m(m, 5), 1, 2, 5)
    expected = [np.sqrt(float(rho(m - 1, k))) for k in enumerate_indices(2, 5)]
    np.testing.assert_allclose(U.scalars(), expected, atol=1e-13)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_psi_kernel_closed_form(m):
    for z, w in sample_pairs(2, 10, seed=4, radius=0.5):
        expected = (1 - inner(z, w)) ** (-(m - 1))
        assert psi_kernel(m, z, w, 60) == pytest.approx(expected, abs=1e-10)


def test_psi_coisometry_bergman():
    rep = verify_psi_coisometry(2, 1, 1, 6, sample_pairs(1, 10, seed=0, radius=0.5), kernel_degree=80)
    assert rep.coisometry_residual < 1e-10
    assert rep.kernel_residual < 1e-10


def test_psi_coisometry_degenerate_m1_exact():
    rep = verify_psi_coisometry(1, 2, 2, 3, sample_pairs(2, 5, seed=0))
    assert rep.coisometry_residual == 0.0
    assert rep.kernel_residual < 1e-14


def test_psi_kernel_random_rational_gamma():
    rng = np.random.default_rng(12)
    gamma = [Fraction(int(a), int(b)) for a, b in zip(rng.integers(2, 9, 100), rng.integers(1, 4, 100))]
    beta = WeightSequence.from_gamma(gamma)
    rep = verify_psi_coisometry(beta, 1, 2, 4, sample_pairs(2, 10, seed=1, radius=0.5), kernel_degree=80)
    assert rep.coisometry_residual < 1e-10
    assert rep.kernel_residual < 1e-10


# -- canonical factorization ----------------------------------------------


@pytest.mark.parametrize("m", [1, 2, 3])
def test_factchar_on_corpus(nilpotent, m):
    for mem in nilpotent[::2]:
        t = build_triple(mem.tuple, m)
        rep = verify_thm_factchar(t, sample_points(t.n, 10, seed=6))
        assert rep.residual < 1e-8, mem.name
        if m == 1:
            assert rep.m1_psi_exact
            assert rep.m1_first_row_residual < 1e-12


def test_factchar_at_origin():
    t = build_triple(polynomial_family(2, 4, seed=2), 2)
    zero = np.zeros(2)
    D0 = t.D_blocks[(0, 0)]
    rhs = psi_eval(2, t.r, zero, t.core_degree) @ canonical_transfer(t, zero)
    np.testing.assert_allclose(rhs, D0, atol=1e-14)


def test_factor_of_zero_is_zero():
    theta = AnalyticOperatorFunction.constant(np.zeros((2, 1)), 2)
    rep = factor_through_universal(theta, 2, 3, sample_points(2, 5, seed=0))
    for k in enumerate_indices(2, 3):
        assert np.abs(rep.theta_tilde.coefficient(k)).max() == 0.0
    assert rep.accepted


def test_factor_of_psi_reconstructs():
    w = WeightSequence.from_m(3, 4)
    theta = UniversalMultiplier(w, 1, 2, 4).as_function()
    rep = factor_through_universal(theta, w, 4, sample_points(2, 10, seed=1))
    assert rep.reconstruction_residual < 1e-10


@pytest.mark.parametrize("m", [1, 2, 3])
def test_factor_of_char_fn_three_routes(nilpotent, m):
    for mem in nilpotent[::4]:
        t = build_triple(mem.tuple, m)
        deg = polynomial_degree(t)
        theta = char_fn(t, deg)
        pts = sample_points(t.n, 8, seed=7)
        rep = factor_through_universal(theta, m, deg, pts, diagnostics=False)
        assert rep.accepted, mem.name
        col = Colligation.from_triple(t)
        for z in pts:
            direct = eval_char_fn(t, z)
            via_transfer = psi_eval(m, t.r, z, t.core_degree, n=t.n) @ transfer_eval(col, z)
            via_factor = psi_eval(m, t.r, z, deg, n=t.n) @ rep.theta_tilde(z)
            np.testing.assert_allclose(via_transfer, direct, atol=1e-8)
            np.testing.assert_allclose(via_factor, direct, atol=1e-8)


def test_factor_diagnostics_small_members(nilpotent):
    for mem in nilpotent[:6]:
        t = build_triple(mem.tuple, 2)
        deg = polynomial_degree(t)
        rep = factor_through_universal(char_fn(t, deg), 2, deg, sample_points(t.n, 6, seed=7))
        # M_Phi is a partial isometry into H_2, so it is contractive.
        assert rep.theta_contractivity <= 1 + 1e-8, mem.name
        # The lifted factor is reported, not required to be contractive.
        assert rep.contractivity > 0
        assert np.isfinite(rep.positivity_min_eig)


# -- K-inner functions ----------------------------------------------------


def test_z_is_inner_in_hardy():
    rep = k_beta_inner_check(poly(1, {(1,): 1.0}, 1), 1, 6)
    assert rep.inner
    assert rep.isometry_defect < 1e-15


def test_constant_half_not_inner():
    rep = k_beta_inner_check(AnalyticOperatorFunction.constant(np.array([[0.5]]), 1), 2, 4)
    assert not rep.inner
    assert rep.isometry_defect == pytest.approx(0.75)


def test_unnormalized_z_not_inner_in_bergman():
    rep = k_beta_inner_check(poly(1, {(1,): 1.0}, 1), 2, 4)
    assert rep.isometry_defect == pytest.approx(0.5)


def _kinner_examples():
    b3 = WeightSequence.from_m(3, 4)
    bg = WeightSequence.from_gamma([1, Fraction(3, 2), Fraction(5, 2), 4, 7])
    return [
        ("sqrt2-z-bergman", poly(1, {(1,): np.sqrt(2)}, 1), WeightSequence.from_m(2, 4)),
        ("z1z2-beta3", poly(2, {(1, 1): 1 / np.sqrt(float(b3[2]) / 2)}, 2), b3),
        (
            "column-z-gamma",
            AnalyticOperatorFunction.from_taylor(
                2,
                {
                    (1, 0): np.array([[1.0], [0.0]]) / np.sqrt(2 * float(bg[1])),
                    (0, 1): np.array([[0.0], [1.0]]) / np.sqrt(2 * float(bg[1])),
                },
                1,
            ),
            bg,
        ),
    ]


@pytest.mark.parametrize("name,theta,beta", _kinner_examples(), ids=lambda x: x if isinstance(x, str) else "")
def test_unique_kinner_factor(name, theta, beta):
    res = unique_kinner_factor(theta, beta)
    assert res.input_report.inner
    assert res.inner_report.inner
    assert res.inner_report.isometry_defect < 1e-8
    assert res.inner_report.orthogonality_defect < 1e-8
    assert res.pipeline_agreement < 1e-10
    assert res.closing_residual < 1e-10


def test_kinner_factor_rejects_non_inner():
    with pytest.raises(ValueError, match="not K_beta-inner"):
        unique_kinner_factor(AnalyticOperatorFunction.constant(np.array([[0.5]]), 1), 2)


def test_kinner_factor_degenerate_m1():
    theta = poly(1, {(1,): 1.0}, 1)
    res = unique_kinner_factor(theta, 1)
    coef = res.theta_tilde.coefficient((1,))
    assert coef[0, 0] == pytest.approx(1.0)
    assert np.abs(coef[1:]).max() == 0.0


def test_char_fn_on_isometric_subspace_is_kinner():
    # For T = 0 and m = 2 the core column and the first tail column are both
    # z, so their normalized sum is sqrt(2) z, isometric into the Bergman space.
    t = build_triple(zero_tuple(), 2)
    phi = char_fn(t, 2, tail_degree=1)
    eta = np.array([[1.0], [1.0]]) / np.sqrt(2)
    theta = AnalyticOperatorFunction.from_taylor(1, {k: phi.coefficient(k) @ eta for k in enumerate_indices(1, 2)}, 1)
    np.testing.assert_allclose(theta.coefficient((1,)), [[np.sqrt(2)]], atol=1e-14)
    res = unique_kinner_factor(theta, 2)
    assert res.inner_report.inner


def test_char_fn_isometric_subspace_corpus():
    T = polynomial_family(1, 3, seed=4)
    t = build_triple(T, 2)
    deg = polynomial_degree(t)
    phi = char_fn(t, deg)
    w = WeightSequence.from_m(2, deg)
    G = sum(
        float(w[sum(l)] / rho(1, l)) * phi.coefficient(l).conj().T @ phi.coefficient(l)
        for l in enumerate_indices(1, deg)
    )
    vals, vecs = np.linalg.eigh(G)
    V = vecs[:, np.abs(vals - 1) < 1e-10]
    assert V.shape[1] > 0
    theta = AnalyticOperatorFunction.from_taylor(1, {l: phi.coefficient(l) @ V for l in enumerate_indices(1, deg)}, deg)
    rep = k_beta_inner_check(theta, 2, deg)
    assert rep.inner


# -- wandering subspaces --------------------------------------------------


def test_constants_wander_in_bergman():
    N = 5
    W = np.zeros((N + 1, 1))
    W[0, 0] = 1.0
    rep = wandering_subspace_ops(W, 2, 1, N, 1)
    assert rep.wandering and rep.tilde_wandering
    assert rep.parametrization_residual < 1e-12


def test_span_one_z_does_not_wander_in_hardy():
    N = 5
    W = np.zeros((N + 1, 2))
    W[0, 0] = W[1, 1] = 1.0
    rep = wandering_subspace_ops(W, 1, 1, N, 1)
    assert not rep.wandering
    assert rep.wandering_defect == pytest.approx(1.0)


def test_kinner_range_wanders():
    # W = Theta F for the K-inner Theta(z) = z1 z2 normalized in beta(3).
    N = 6
    b = WeightSequence.from_m(3, N)
    space = TruncatedSpace.beta(2, N, 1, b)
    W = space.to_orthonormal({(1, 1): np.array([[1 / np.sqrt(float(b[2]) / 2)]])})
    rep = wandering_subspace_ops(W, b, 2, N, 1)
    assert rep.wandering and rep.tilde_wandering
    assert rep.parametrization_residual < 1e-8


def test_wandering_rejects_non_orthonormal():
    with pytest.raises(ValueError, match="orthonormal"):
        wandering_subspace_ops(2 * np.eye(4)[:, :1], 2, 1, 3, 1)


# -- joint invariant subspaces --------------------------------------------


def test_invariant_subspace_range_T1_kernel_psd(nilpotent):
    for mem in nilpotent[:12]:
        T = mem.tuple
        t = build_triple(T, 2)
        rep = joint_invariant_subspace_check(t, "subspace->kernel", T[0], sample_points(T.n, 25, seed=8))
        assert rep.min_eigenvalue > -1e-9, mem.name
        assert rep.residual < 1e-8, mem.name


def test_invariant_subspace_trivial_flags():
    T = polynomial_family(2, 3, seed=1)
    t = build_triple(T, 2)
    pts = sample_points(2, 6, seed=0)
    full = joint_invariant_subspace_check(t, "subspace->kernel", np.eye(3), pts)
    zero = joint_invariant_subspace_check(t, "subspace->kernel", np.zeros((3, 0)), pts)
    assert full.trivial == "full"
    assert zero.trivial == "zero"


def test_non_invariant_subspace_rejected():
    T = polynomial_family(1, 3, seed=1)
    t = build_triple(T, 2)
    with pytest.raises(ValueError, match="not jointly invariant"):
        joint_invariant_subspace_check(t, "subspace->kernel", np.array([[0.0], [0.0], [1.0]]), sample_points(1, 3, seed=0))


def test_factorization_to_subspace_recovers_invariant_subspace(nilpotent):
    for mem in nilpotent[:10]:
        T = mem.tuple
        t = build_triple(T, 2)
        N = polynomial_degree(t)
        H1 = T[0]
        phi1, phi2 = subspace_factor_functions(t, H1, N)
        rep = joint_invariant_subspace_check(t, "factorization->subspace", (phi1, phi2), N=N)
        assert rep.residual < 1e-10, mem.name
        assert rep.invariance < 1e-8, mem.name
        assert rep.details["dim_H1"] == np.linalg.matrix_rank(H1, tol=1e-10), mem.name


def test_factorization_to_subspace_trivial():
    T = polynomial_family(2, 3, seed=2)
    t = build_triple(T, 2)
    N = polynomial_degree(t)
    zero = joint_invariant_subspace_check(t, "factorization->subspace", subspace_factor_functions(t, np.zeros((3, 0)), N), N=N)
    full = joint_invariant_subspace_check(t, "factorization->subspace", subspace_factor_functions(t, np.eye(3), N), N=N)
    assert zero.trivial == "zero"
    assert zero.details["rank_M_phi2"] == zero.details["rank_M_phiT"]
    assert full.trivial == "full"


# -- row contractions and reductions --------------------------------------


def test_row_char_fn_zero_is_z():
    for z in [0.2, -0.4j, 0.5 + 0.5j]:
        np.testing.assert_allclose(row_char_fn(zero_tuple(), [z]), [[z]], atol=1e-15)


def test_row_char_fn_at_origin():
    T = polynomial_family(2, 3, seed=5)
    from hypercontraction.factorization import row_defects

    rd = row_defects(T)
    expected = -rd.V_Tstar.conj().T @ T.row() @ rd.V_T
    np.testing.assert_allclose(row_char_fn(T, np.zeros(2), rd), expected, atol=1e-14)


def test_row_char_fn_jordan_block():
    # J e1 = e0; the defect spaces are span{e0} and span{e1}, and the
    # resolvent series stops after one term, leaving z^2 up to a unimodular constant.
    T = OperatorTuple([np.array([[0.0, 1.0], [0.0, 0.0]])])
    vals = [row_char_fn(T, [z])[0, 0] / z**2 for z in [0.3, 0.5j, -0.2 + 0.6j]]
    assert abs(abs(vals[0]) - 1) < 1e-14
    np.testing.assert_allclose(vals, vals[0], atol=1e-14)


def test_m1_reduction(nilpotent):
    assert verify_m1_reduction(zero_tuple(), sample_points(1, 5, seed=0)) < 1e-15
    for mem in nilpotent:
        assert verify_m1_reduction(mem.tuple, sample_points(mem.tuple.n, 10, seed=9)) < 1e-10, mem.name


def test_relate_same_order_is_identity():
    T = polynomial_family(2, 3, seed=6)
    t = build_triple(T, 2)
    rep = relate_transfer_functions(T, 2, 2, t, t, sample_points(2, 5, seed=0))
    assert rep.residual < 1e-13
    C = t.cmt.c_matrix
    np.testing.assert_allclose(rep.Y @ C, C, atol=1e-13)
    np.testing.assert_allclose(rep.X @ t.B.conj().T, t.B.conj().T, atol=1e-13)


def test_relate_zero_tuple():
    T = zero_tuple()
    rep = relate_transfer_functions(T, 1, 2, build_triple(T, 1), build_triple(T, 2), sample_points(1, 5, seed=0))
    assert rep.residual < 1e-10


@pytest.mark.parametrize("pair", [(1, 2), (2, 3), (1, 3)])
def test_relate_corpus(nilpotent, pair):
    m1, m2 = pair
    pts = sample_points(2, 8, seed=10)
    for mem in nilpotent:
        T = mem.tuple
        pts = sample_points(T.n, 8, seed=10)
        rep = relate_transfer_functions(T, m1, m2, build_triple(T, m1), build_triple(T, m2), pts)
        assert rep.range_defect_C < 1e-12, mem.name
        assert rep.residual < 1e-8, mem.name


def test_relate_row_char_fn(nilpotent):
    for mem in nilpotent[::3]:
        T = mem.tuple
        rep = relate_row_char_fn(T, build_triple(T, 2), sample_points(T.n, 5, seed=11))
        assert rep.residual < 1e-8, mem.name


def test_nilpotency_used_for_exactness(nilpotent):
    for mem in nilpotent:
        assert build_triple(mem.tuple, 2).exact
        assert nilpotency_order(mem.tuple) is not None
