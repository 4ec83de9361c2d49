"""Universal multipliers, transfer functions and factorization checks.

The universal multiplier ``Psi_{beta,E}`` maps the Drury-Arveson space with
fiber ``l^2(Z_+^n, E)`` onto ``H^2_n(beta, E)``.  Its row block at ``k`` is
``sqrt(rho_1(k) / gamma_{|k|}) z^k I_E``.  Every result here is checked
through an explicit residual.  That covers:

* factoring through ``Psi``;
* the canonical transfer function of a characteristic triple;
* ``K_beta``-inner functions and wandering subspaces;
* joint invariant subspaces;
* the reductions relating different orders ``m``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chartriple import (
    CharacteristicTriple,
    _core_value,
    char_fn,
    defect_resolvent,
    eval_char_fn,
)
from .dilation import build_dilation
from .multiindex import (
    WeightSequence,
    add,
    count_indices,
    enumerate_indices,
    index_map,
    rho,
    subtract,
)
from .rkhs import (
    AnalyticOperatorFunction,
    TruncatedSpace,
    inner,
    kernel_eval,
    kernel_positivity,
    monomial_vector,
    mult_operator_matrix,
    multiplier_norm,
    power_kernel_partial,
)
from .tuples import OperatorTuple, _opnorm, defect_data, psd_sqrt

SV_TOL = 1e-10
POSITIVITY_GRAM_LIMIT = 1500


def as_weights(beta, N: int) -> WeightSequence:
    """Accept a WeightSequence or an order ``m`` meaning ``beta(m)``."""
    if isinstance(beta, WeightSequence):
        if beta.N < N:
            raise ValueError(f"weight prefix has degree {beta.N} < {N}")
        return beta
    return WeightSequence.from_m(int(beta), N)


# ---------------------------------------------------------------------------
# Colligations and transfer functions


@dataclass(frozen=True)
class Colligation:
    """Block operator ``[[A, B], [C, D]] : H + E -> H^n + F``.

    ``A`` is stored as the column ``T^* : H -> H^n``.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    n: int
    unitarity_residual: float = field(init=False)

    def __post_init__(self):
        U = self.matrix()
        r1 = _opnorm(U.conj().T @ U - np.eye(U.shape[1]))
        r2 = _opnorm(U @ U.conj().T - np.eye(U.shape[0]))
        object.__setattr__(self, "unitarity_residual", max(r1, r2))

    @property
    def d(self) -> int:
        return self.A.shape[1]

    def matrix(self) -> np.ndarray:
        return np.block([[self.A, self.B], [self.C, self.D]])

    @classmethod
    def from_triple(cls, triple: CharacteristicTriple) -> "Colligation":
        """The finite core of the unitary attached to a triple."""
        return cls(
            triple.T.adjoint_column(), triple.B, triple.cmt.c_matrix, triple.D_core, triple.n
        )


def _zrow(z, M: np.ndarray, d: int) -> np.ndarray:
    """``Z M = sum_i z_i M_i`` for a block column ``M = [M_1; ...; M_n]``."""
    out = np.zeros((d, M.shape[1]), dtype=complex)
    for i, zi in enumerate(z):
        out += zi * M[i * d:(i + 1) * d]
    return out


def transfer_eval(col: Colligation, z) -> np.ndarray:
    """Transfer function ``D + C (I - Z A)^{-1} Z B`` at `z`."""
    z = np.asarray(z, dtype=complex)
    d = col.d
    ZA = _zrow(z, col.A, d)
    ZB = _zrow(z, col.B, d)
    return col.D + col.C @ np.linalg.solve(np.eye(d) - ZA, ZB)


def canonical_transfer(
    triple: CharacteristicTriple, z, K: int | None = None, col: Colligation | None = None
) -> np.ndarray:
    """``Phi~_T(z)`` with rows for fibers up to degree K and tail columns up to K.

    Tail columns of ``E`` are constant inclusions into their fibers.
    """
    K = triple.core_degree if K is None else max(K, triple.core_degree)
    r = triple.r
    col = col if col is not None else Colligation.from_triple(triple)
    core = transfer_eval(col, z)
    rows = r * count_indices(triple.n, K)
    out = np.zeros((rows, triple.source_dim(K)), dtype=complex)
    out[: core.shape[0], : triple.core_dim] = core
    pos = index_map(triple.n, K)
    for p, k in enumerate(triple.tail_indices(K)):
        row0 = pos[k] * r
        col0 = triple.core_dim + p * r
        out[row0:row0 + r, col0:col0 + r] = np.eye(r)
    return out


# ---------------------------------------------------------------------------
# Universal multiplier


@dataclass(frozen=True)
class UniversalMultiplier:
    """``Psi_{beta,E}`` truncated to fibers of degree at most N.

    For the constant sequence ``beta(1)`` all blocks beyond ``k = 0``
    vanish and ``Psi = [I, 0, 0, ...]``.
    """

    beta: WeightSequence
    r: int
    n: int
    N: int

    def scalars(self) -> np.ndarray:
        inv_gamma = self.beta.inverse_gamma()
        return np.array(
            [np.sqrt(float(rho(1, k) * inv_gamma[sum(k)])) for k in enumerate_indices(self.n, self.N)]
        )

    def __call__(self, z) -> np.ndarray:
        return psi_eval(self.beta, self.r, z, self.N, n=self.n)

    def as_function(self) -> AnalyticOperatorFunction:
        r, cnt = self.r, count_indices(self.n, self.N)
        sc = self.scalars()
        table = {}
        for p, k in enumerate(enumerate_indices(self.n, self.N)):
            C = np.zeros((r, r * cnt), dtype=complex)
            C[:, p * r:(p + 1) * r] = sc[p] * np.eye(r)
            table[k] = C
        fn = AnalyticOperatorFunction(self.n, r * cnt, r, self.__call__, table, self.N, self.N, None, "Psi")
        return fn


def psi_eval(beta, r: int, z, N: int, n: int | None = None) -> np.ndarray:
    """Row ``[... sqrt(rho_1(k)/gamma_{|k|}) z^k I_r ...]`` for ``|k| <= N``.

    Parameters
    ----------
    beta : WeightSequence or int
        An integer ``m`` stands for ``beta(m)``; ``m = 1`` gives the
        degenerate form ``[I, 0, 0, ...]``.
    r : int
        Fiber dimension.
    z : array_like
    N : int
        Fiber truncation degree.

    Returns
    -------
    ndarray
        ``r x (count(n, N) r)``.
    """
    z = np.asarray(z, dtype=complex)
    n = len(z) if n is None else n
    w = as_weights(beta, N)
    inv_gamma = w.inverse_gamma()
    cnt = count_indices(n, N)
    out = np.zeros((r, r * cnt), dtype=complex)
    mono = monomial_vector(z, N)
    for p, k in enumerate(enumerate_indices(n, N)):
        g = inv_gamma[sum(k)]
        if g == 0:
            continue
        out[:, p * r:(p + 1) * r] = np.sqrt(float(rho(1, k) * g)) * mono[p] * np.eye(r)
    return out


def psi_kernel(beta, z, w, N: int) -> complex:
    """``Psi(z) Psi(w)^*`` for a scalar fiber, summed over fibers to degree N."""
    return complex((psi_eval(beta, 1, z, N) @ psi_eval(beta, 1, w, N).conj().T)[0, 0])


def psi_multiplication_matrix(beta, r: int, n: int, N: int):
    """``M_Psi`` from ``H^2_n(l^2_N(C^r))`` to ``H^2_n(beta, C^r)``, both at degree N."""
    w = as_weights(beta, N)
    psi = UniversalMultiplier(w, r, n, N).as_function()
    src = TruncatedSpace.power(n, N, psi.source_dim, 1)
    tgt = TruncatedSpace.beta(n, N, r, w)
    return mult_operator_matrix(psi, src, tgt), src, tgt


@dataclass(frozen=True)
class PsiReport:
    coisometry_residual: float
    kernel_residual: float
    kernel_tail: float


def verify_psi_coisometry(beta, r: int, n: int, N: int, pairs, kernel_degree: int | None = None) -> PsiReport:
    """Co-isometry of ``M_Psi`` and the kernel form of ``Psi Psi^*``.

    The matrix check is exact on the full target truncation because every
    source vector reaching a target row of degree at most N is present.
    The kernel check compares ``K_beta(z, w)`` with
    ``Psi(z) Psi(w)^* / (1 - <z, w>)``, both summed to `kernel_degree`.
    """
    M, _, _ = psi_multiplication_matrix(beta, r, n, N)
    co = _opnorm(M @ M.conj().T - np.eye(M.shape[0]))
    Nk = kernel_degree if kernel_degree is not None else N
    w = as_weights(beta, Nk)
    worst = 0.0
    tail = 0.0
    for z, v in pairs:
        if not w.strict:
            k_val = 1.0 / (1 - inner(z, v))
            k_tail = 0.0
        else:
            kv = kernel_eval(w, z, v, Nk)
            k_val, k_tail = kv.value, kv.tail
        pp = psi_eval(w, r, z, Nk) @ psi_eval(w, r, v, Nk).conj().T
        res = _opnorm(k_val * np.eye(r) - pp / (1 - inner(z, v)))
        worst = max(worst, res)
        tail = max(tail, k_tail)
    return PsiReport(co, worst, tail)


# ---------------------------------------------------------------------------
# Canonical factorization of the characteristic function


@dataclass(frozen=True)
class FactcharReport:
    residual: float
    m1_psi_exact: bool | None = None
    m1_first_row_residual: float | None = None


def verify_thm_factchar(triple: CharacteristicTriple, points, tail_degree: int | None = None) -> FactcharReport:
    """``max ||Phi_T(z) - Psi_{beta(m)}(z) Phi~_T(z)||`` over `points`.

    Core and tail columns up to `tail_degree` are compared.  For ``m = 1``
    the degenerate ``Psi`` form and the first-fiber identity are checked in
    addition.
    """
    K = triple.core_degree + 2 if tail_degree is None else max(tail_degree, triple.core_degree)
    r, m, n = triple.r, triple.m, triple.n
    worst = 0.0
    first_row = 0.0
    exact_psi = None
    col = Colligation.from_triple(triple)
    for z in points:
        lhs = eval_char_fn(triple, z, K)
        psi = psi_eval(m, r, z, K, n=n)
        tr = canonical_transfer(triple, z, K, col)
        worst = max(worst, _opnorm(lhs - psi @ tr))
        if m == 1:
            form = np.zeros_like(psi)
            form[:, :r] = np.eye(r)
            exact_psi = bool(np.array_equal(psi, form)) if exact_psi is None else exact_psi and bool(np.array_equal(psi, form))
            first_row = max(first_row, _opnorm(lhs - tr[:r]))
    if m == 1:
        return FactcharReport(worst, exact_psi, first_row)
    return FactcharReport(worst)


@dataclass(frozen=True)
class FactorReport:
    theta_tilde: AnalyticOperatorFunction
    reconstruction_residual: float
    contractivity: float | None
    theta_contractivity: float | None
    positivity_min_eig: float | None
    accepted: bool


def _inv_gamma_floats(w: WeightSequence, N: int) -> list:
    ig = w.inverse_gamma()
    return [float(ig[j]) for j in range(N + 1)]


def adjoint_psi_coefficients(theta_table: dict, beta: WeightSequence, n: int, N: int, r_star: int, e: int) -> dict:
    """Coefficients of ``M_Psi^* (Theta eta)`` by the closed-form adjoint.

    ``M_Psi^*(z^l a) = sum_{j + k = l} sqrt(rho_1(k)/gamma_{|k|}) (beta_{|l|}/rho_1(l)) rho_1(j) z^j (e_k x a)``.
    The result maps ``E`` into ``l^2_N(E_*)`` fiberwise: coefficient at j is
    ``(count(n, N) r_star) x e``.
    """
    ig = beta.inverse_gamma()
    pos = index_map(n, N)
    cnt = count_indices(n, N)
    out = {j: np.zeros((cnt * r_star, e), dtype=complex) for j in enumerate_indices(n, N)}
    for l in enumerate_indices(n, N):
        Tl = theta_table.get(l)
        if Tl is None or not np.any(Tl):
            continue
        wl = beta[sum(l)] / rho(1, l)
        for k in enumerate_indices(n, sum(l)):
            j = subtract(l, k)
            if j is None or ig[sum(k)] == 0:
                continue
            c = np.sqrt(float(rho(1, k) * ig[sum(k)])) * float(wl * rho(1, j))
            p = pos[k]
            out[j][p * r_star:(p + 1) * r_star] += c * Tl
    return out


def adjoint_psi_matrix_pipeline(theta_table: dict, beta: WeightSequence, n: int, N: int, r_star: int, e: int) -> dict:
    """Same coefficients as :func:`adjoint_psi_coefficients`, via the matrix of ``M_Psi``."""
    M, src, tgt = psi_multiplication_matrix(beta, r_star, n, N)
    full = {l: theta_table.get(l, np.zeros((r_star, e))) for l in enumerate_indices(n, N)}
    vec = tgt.to_orthonormal(full)
    back = M.conj().T @ vec
    return src.to_coefficients(back)


def _max_sv_on_safe(phi: AnalyticOperatorFunction, n: int, safe: int, delta: int, p_src: int, target_space) -> float:
    src = TruncatedSpace.power(n, safe, phi.source_dim, p_src)
    tgt = target_space(safe + delta)
    return multiplier_norm(phi, src, tgt)


def factor_through_universal(
    theta: AnalyticOperatorFunction,
    beta,
    N: int,
    points,
    tol: float = 1e-8,
    safe_degree: int = 2,
    diagnostics: bool = True,
) -> FactorReport:
    """Candidate ``Theta~`` with ``Theta = Psi_{beta,E_*} Theta~``.

    Parameters
    ----------
    theta : AnalyticOperatorFunction
        Polynomial multiplier into ``H^2_n(beta, E_*)`` with Taylor table to
        degree at least its degree bound.
    beta : WeightSequence or int
    N : int
        Degree of the Taylor data used; must be at least the degree of theta.
    points : sequence
        Sample points for the reconstruction and positivity checks.  The
        positivity Gram uses a prefix of the points so that its size stays
        near ``POSITIVITY_GRAM_LIMIT``.
    diagnostics : bool
        Compute the contractivity norms and the kernel positivity.  These
        dominate the cost for wide fibers; when False they are None.

    Returns
    -------
    FactorReport
        ``accepted`` is False when the reconstruction residual exceeds `tol`.

    Notes
    -----
    ``Theta~`` is obtained by applying ``M_Psi^*`` to ``Theta eta`` for
    constants ``eta``.  This is one representative; outside the ``K``-inner
    case the factor is not unique.
    """
    n = theta.n
    w = as_weights(beta, N)
    r_star, e = theta.target_dim, theta.source_dim
    table = {l: theta.coefficient(l) for l in enumerate_indices(n, N)}
    coeffs = adjoint_psi_coefficients(table, w, n, N, r_star, e)
    delta = theta.degree_bound if theta.degree_bound is not None else N
    tt = AnalyticOperatorFunction.from_taylor(n, coeffs, N, "Theta~")
    psi = UniversalMultiplier(w, r_star, n, N)

    recon = 0.0
    for z in points:
        recon = max(recon, _opnorm(theta(z) - psi(z) @ tt(z)))

    if not diagnostics:
        return FactorReport(tt, recon, None, None, None, recon <= tol)

    c_tilde = _max_sv_on_safe(tt, n, safe_degree, N, 1, lambda D: TruncatedSpace.power(n, D, tt.target_dim, 1))
    c_theta = _max_sv_on_safe(
        theta, n, safe_degree, delta, 1, lambda D: TruncatedSpace.beta(n, D, r_star, _extend(w, D))
    )

    def expr(z, v):
        return (np.eye(tt.target_dim) - tt(z) @ tt(v).conj().T) / (1 - inner(z, v))

    # Keep the positivity Gram near POSITIVITY_GRAM_LIMIT rows; wide fibers use fewer points.
    npos = max(2, POSITIVITY_GRAM_LIMIT // max(tt.target_dim, 1))
    pos = kernel_positivity(list(points)[:npos], expr)
    return FactorReport(tt, recon, c_tilde, c_theta, pos.min_eigenvalue, recon <= tol)


def _extend(w: WeightSequence, D: int) -> WeightSequence:
    if w.N >= D:
        return w
    fam = w.metadata.get("family", "")
    if fam.startswith("beta("):
        return WeightSequence.from_m(int(fam[5:-1]), D)
    raise ValueError(f"weight prefix has degree {w.N} < {D}")


# ---------------------------------------------------------------------------
# K_beta-inner functions


@dataclass(frozen=True)
class InnerReport:
    inner: bool
    isometry_defect: float
    orthogonality_defect: float
    checked_shifts: int


def _weights_for(beta, n: int, N: int):
    w = as_weights(beta, N)
    return {l: float(w[sum(l)] / rho(1, l)) for l in enumerate_indices(n, N)}


def k_beta_inner_check(theta: AnalyticOperatorFunction, beta, N: int, tol: float = 1e-8, deg_cap: int | None = None) -> InnerReport:
    """Test the ``K_beta``-inner property from Taylor data.

    (a) ``sum_l w(l) Theta_l^* Theta_l = I`` (isometric on constants);
    (b) ``sum_l w(l) Theta_{l-k}^* Theta_l = 0`` for ``1 <= |k| <= kmax``, i.e.
    ``Theta E`` is orthogonal to ``z^k Theta E``.

    For a polynomial of degree ``delta <= N`` all shifts up to ``delta`` are
    exact and larger shifts are trivially orthogonal.  Otherwise shifts up
    to ``N - deg_cap`` are tested on the truncated data.
    """
    n = theta.n
    if theta.degree_bound is not None and theta.degree_bound <= N:
        kmax = theta.degree_bound
    else:
        kmax = N - (deg_cap if deg_cap is not None else N // 2)
    w = _weights_for(beta, n, N)
    coef = {l: theta.coefficient(l) for l in enumerate_indices(n, N)}
    e = theta.source_dim
    G0 = sum(w[l] * coef[l].conj().T @ coef[l] for l in coef)
    iso = _opnorm(G0 - np.eye(e))
    orth = 0.0
    count = 0
    for k in enumerate_indices(n, max(kmax, 0)):
        if sum(k) == 0:
            continue
        G = np.zeros((e, e), dtype=complex)
        for l in coef:
            base = subtract(l, k)
            if base is None:
                continue
            G += w[l] * coef[base].conj().T @ coef[l]
        orth = max(orth, _opnorm(G))
        count += 1
    return InnerReport(iso <= tol and orth <= tol, iso, orth, count)


@dataclass(frozen=True)
class KInnerFactor:
    theta_tilde: AnalyticOperatorFunction
    inner_report: InnerReport
    pipeline_agreement: float
    closing_residual: float
    input_report: InnerReport


def unique_kinner_factor(
    theta: AnalyticOperatorFunction, beta, N: int | None = None, tol: float = 1e-8, shift_degree: int = 2
) -> KInnerFactor:
    """The ``K``-inner factor ``Theta~ eta = M_Psi^* Theta eta`` and its checks.

    Two pipelines produce ``Theta~``: the closed-form adjoint of ``M_Psi``
    on coefficients, and the conjugate transpose of the assembled matrix.
    ``closing_residual`` is ``max ||M_Psi (z^k Theta~ eta) - z^k Theta eta||`` for
    ``|k| <= shift_degree``, computed with the assembled ``M_Psi``.

    Raises
    ------
    ValueError
        If `theta` is not ``K_beta``-inner within `tol`.
    """
    n = theta.n
    delta = theta.degree_bound
    if delta is None:
        raise ValueError("a polynomial Theta with known degree is required")
    N = delta if N is None else N
    rep = k_beta_inner_check(theta, beta, N, tol)
    if not rep.inner:
        raise ValueError(
            f"Theta is not K_beta-inner (isometry defect {rep.isometry_defect:.3e}, "
            f"orthogonality defect {rep.orthogonality_defect:.3e})"
        )
    w = as_weights(beta, N + shift_degree)
    r_star, e = theta.target_dim, theta.source_dim
    table = {l: theta.coefficient(l) for l in enumerate_indices(n, N)}
    c1 = adjoint_psi_coefficients(table, w, n, N, r_star, e)
    c2 = adjoint_psi_matrix_pipeline(table, w, n, N, r_star, e)
    agree = max(_opnorm(c1[j] - c2[j]) for j in c1)
    tt = AnalyticOperatorFunction.from_taylor(n, c1, N, "Theta~")

    closing = closing_identity_residual(theta, tt, w, N, shift_degree)
    inner_rep = k_beta_inner_check(tt, 1, N, tol)
    return KInnerFactor(tt, inner_rep, agree, closing, rep)


def closing_identity_residual(theta, theta_tilde, beta, N: int, shift_degree: int) -> float:
    """``max_{|k| <= shift_degree} ||M_Psi (z^k Theta~) - z^k Theta||`` in orthonormal coordinates.

    Both sides live at degree ``N + shift_degree``; fibers of ``Theta~`` are
    zero-padded to the larger ``l^2`` truncation.
    """
    n = theta.n
    D = N + shift_degree
    w = _extend(beta, D)
    r_star = theta.target_dim
    M, src, tgt = psi_multiplication_matrix(w, r_star, n, D)
    rows = src.coeff_dim
    worst = 0.0
    for k in enumerate_indices(n, shift_degree):
        lifted = {add(j, k): _pad_fiber(theta_tilde.coefficient(j), rows) for j in enumerate_indices(n, N)}
        target = {add(l, k): theta.coefficient(l) for l in enumerate_indices(n, N)}
        lhs = M @ src.to_orthonormal(lifted)
        rhs = tgt.to_orthonormal(target)
        worst = max(worst, _opnorm(lhs - rhs))
    return worst


def _pad_fiber(M: np.ndarray, rows: int) -> np.ndarray:
    if M.shape[0] == rows:
        return M
    out = np.zeros((rows, M.shape[1]), dtype=complex)
    out[: M.shape[0]] = M
    return out


# ---------------------------------------------------------------------------
# Wandering subspaces


@dataclass(frozen=True)
class WanderingReport:
    wandering: bool
    wandering_defect: float
    tilde_wandering: bool
    tilde_wandering_defect: float
    parametrization_residual: float
    shifts_checked: int


def _support_degree(space: TruncatedSpace, W: np.ndarray) -> int:
    r = space.coeff_dim
    deg = 0
    for i, k in enumerate(space.indices):
        if np.any(np.abs(W[i * r:(i + 1) * r]) > 1e-14):
            deg = max(deg, sum(k))
    return deg


def _wandering_defect(space: TruncatedSpace, W: np.ndarray, kmax: int) -> tuple:
    worst, count = 0.0, 0
    n, r = space.n, space.coeff_dim
    for k in enumerate_indices(n, max(kmax, 0)):
        if sum(k) == 0:
            continue
        phi = AnalyticOperatorFunction.from_taylor(n, {k: np.eye(r)}, sum(k))
        S = mult_operator_matrix(phi, space, space)
        worst = max(worst, _opnorm(W.conj().T @ S @ W))
        count += 1
    return worst, count


def wandering_subspace_ops(W: np.ndarray, beta, n: int, N: int, r_star: int, tol: float = 1e-8) -> WanderingReport:
    """Wandering test for ``W`` in ``H^2_n(beta, C^{r_star})`` and its lift.

    Parameters
    ----------
    W : ndarray
        Orthonormal columns in the degree-N truncation (orthonormal basis).

    Notes
    -----
    Shifts are tested up to ``N - deg(W)`` so no truncation affects the
    Gram blocks.  ``W~ = M_Psi^* W`` is tested in the Drury-Arveson space
    with fiber ``l^2_N(C^{r_star})``, and ``W = M_Psi W~`` is verified.
    """
    w = as_weights(beta, N)
    space = TruncatedSpace.beta(n, N, r_star, w)
    if W.shape[0] != space.dim:
        raise ValueError(f"W has {W.shape[0]} rows, expected {space.dim}")
    gram = _opnorm(W.conj().T @ W - np.eye(W.shape[1]))
    if gram > 1e-10:
        raise ValueError(f"input basis is not orthonormal (defect {gram:.3e})")
    delta = _support_degree(space, W)
    kmax = N - delta
    wd, count = _wandering_defect(space, W, kmax)
    M, src, _ = psi_multiplication_matrix(w, r_star, n, N)
    Wt = M.conj().T @ W
    td, _ = _wandering_defect(src, Wt, kmax)
    par = _opnorm(W - M @ Wt)
    return WanderingReport(wd <= tol, wd, td <= tol, td, par, count)


# ---------------------------------------------------------------------------
# Joint invariant subspaces


@dataclass(frozen=True)
class InvariantReport:
    direction: str
    residual: float
    min_eigenvalue: float | None
    invariance: float
    trivial: str
    details: dict = field(default_factory=dict)


def _orth(A: np.ndarray, tol: float = SV_TOL) -> np.ndarray:
    if A.size == 0:
        return A.reshape(A.shape[0], 0)
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    return U[:, s > tol]


def _null_left(M: np.ndarray, tol: float = SV_TOL) -> np.ndarray:
    """Orthonormal basis of ``ker M^*``."""
    U, s, _ = np.linalg.svd(M, full_matrices=True)
    rank = int(np.sum(s > tol))
    return U[:, rank:]


def invariance_defect(T: OperatorTuple, basis: np.ndarray) -> float:
    """``max_i ||(I - P) T_i P||`` for the subspace spanned by `basis`."""
    if basis.shape[1] == 0:
        return 0.0
    Q = _orth(basis)
    P = Q @ Q.conj().T
    I = np.eye(T.d)
    return max(_opnorm((I - P) @ M @ P) for M in T.matrices)


def _tail_kernel(triple: CharacteristicTriple, z, w) -> complex:
    m = triple.m
    if m == 1:
        return 0.0
    x = inner(z, w)
    return (1 - x) ** (-(m - 1)) - power_kernel_partial(m - 1, z, w, triple.core_degree)


def _phi_kernel(triple: CharacteristicTriple, z, w) -> np.ndarray:
    """``Phi(z) Phi(w)^* / (1 - <z,w>)`` including the closed-form tail."""
    Pz = _core_value(triple, z)
    Pw = _core_value(triple, w)
    x = inner(z, w)
    return (Pz @ Pw.conj().T + _tail_kernel(triple, z, w) * np.eye(triple.r)) / (1 - x)


def subspace_factor_functions(triple: CharacteristicTriple, H1: np.ndarray, N: int):
    """A factorization ``Phi_T = Phi_2 Phi_1`` attached to an invariant subspace.

    ``Phi_2 = [Phi_T, G]`` with ``G(z) = D (I - Z T^*)^{-m}`` restricted to
    ``H1`` and ``Phi_1 = [I; 0]``.  The closure of ``ran M_{Phi_2}`` is
    ``ran M_{Phi_T} + Pi H1``.

    Returns
    -------
    phi1, phi2 : AnalyticOperatorFunction
        Taylor tables to degree N.
    """
    n, m = triple.n, triple.m
    Q = _orth(H1)
    phi = char_fn(triple, N, N)
    from .tuples import PowerTable

    powers = PowerTable(triple.T)
    Dc = triple.defect.compressed
    g = {}
    for k in enumerate_indices(n, N):
        if triple.nilpotency is not None and sum(k) >= triple.nilpotency:
            g[k] = np.zeros((triple.r, Q.shape[1]), dtype=complex)
        else:
            g[k] = rho(m, k) * (Dc @ powers.adjoint(k) @ Q)
    t2 = {k: np.hstack([phi.coefficient(k), g[k]]) for k in enumerate_indices(n, N)}
    e = phi.source_dim
    zero = tuple([0] * n)
    t1 = {zero: np.vstack([np.eye(e), np.zeros((Q.shape[1], e))])}
    phi2 = AnalyticOperatorFunction.from_taylor(n, t2, N, "Phi_2")
    phi1 = AnalyticOperatorFunction.from_taylor(n, t1, 0, "Phi_1")
    return phi1, phi2


def _product_taylor(phi2: AnalyticOperatorFunction, phi1: AnalyticOperatorFunction, n: int, N: int) -> dict:
    out = {}
    for l in enumerate_indices(n, N):
        acc = np.zeros((phi2.target_dim, phi1.source_dim), dtype=complex)
        for a in enumerate_indices(n, sum(l)):
            b = subtract(l, a)
            if b is None:
                continue
            acc += phi2.coefficient(a) @ phi1.coefficient(b)
        out[l] = acc
    return out


def joint_invariant_subspace_check(
    triple: CharacteristicTriple,
    direction: str,
    data,
    points=None,
    N: int | None = None,
    tol: float = 1e-8,
) -> InvariantReport:
    """Relate joint invariant subspaces to factorizations of ``Phi_T``.

    Parameters
    ----------
    direction : {"subspace->kernel", "factorization->subspace"}
    data
        For ``"subspace->kernel"``, a ``d x k`` basis of an invariant
        subspace ``H1``.  For ``"factorization->subspace"``, a pair
        ``(phi1, phi2)`` with ``Phi_T = phi2 phi1``.
    points : sequence, optional
        Sample points for the kernel test.
    N : int, optional
        Truncation degree for the factorization direction.

    Returns
    -------
    InvariantReport
        ``trivial`` is ``"full"`` when the subspace is all of ``H`` (range of
        ``Phi_2`` is everything), ``"zero"`` when it is ``{0}`` (range of
        ``Phi_2`` equals that of ``Phi_T``), and ``""`` otherwise.
    """
    T, m = triple.T, triple.m
    if direction == "subspace->kernel":
        H1 = np.asarray(data, dtype=complex).reshape(T.d, -1)
        Q1 = _orth(H1)
        inv = invariance_defect(T, Q1)
        if inv > tol:
            raise ValueError(f"subspace is not jointly invariant (defect {inv:.3e})")
        P1 = Q1 @ Q1.conj().T
        P2 = np.eye(T.d) - P1

        def expr(z, w):
            x = inner(z, w)
            k2 = (1 - x) ** (-m) * np.eye(triple.r) - defect_resolvent(triple, z) @ P2 @ defect_resolvent(triple, w).conj().T
            return k2 - _phi_kernel(triple, z, w)

        pos = kernel_positivity(points, expr)
        res = 0.0
        for z in points:
            for w in points:
                ref = defect_resolvent(triple, z) @ P1 @ defect_resolvent(triple, w).conj().T
                res = max(res, _opnorm(expr(z, w) - ref))
        rank = Q1.shape[1]
        trivial = "full" if rank == T.d else ("zero" if rank == 0 else "")
        return InvariantReport(direction, res, pos.min_eigenvalue, inv, trivial, {"dim_H1": rank})

    if direction == "factorization->subspace":
        phi1, phi2 = data
        n = triple.n
        delta = triple.core_degree if N is None else N
        N = max(delta, (triple.nilpotency or 0)) if N is None else N
        phi = char_fn(triple, N, N)
        prod = _product_taylor(phi2, phi1, n, N)
        fres = max(_opnorm(prod[l] - phi.coefficient(l)) for l in prod)
        if fres > tol:
            raise ValueError(f"Phi_T != Phi_2 Phi_1 (residual {fres:.3e})")
        src = TruncatedSpace.power(n, N, phi2.source_dim, 1)
        tgt = TruncatedSpace.power(n, N, triple.r, m)
        M2 = mult_operator_matrix(phi2, src, tgt)
        Qperp = _null_left(M2)
        dil = build_dilation(T, m, N, defect=triple.defect)
        Pi = dil.pi_matrix
        H2 = _orth(Pi.conj().T @ Qperp)
        H1 = _null_left(H2) if H2.shape[1] else np.eye(T.d, dtype=complex)
        inv = invariance_defect(T, H1)
        # Range comparison with Phi_T on the same truncation.
        M = mult_operator_matrix(phi, TruncatedSpace.power(n, N, phi.source_dim, 1), tgt)
        rank_phi = _orth(M).shape[1]
        rank_2 = _orth(M2).shape[1]
        if H1.shape[1] == T.d:
            trivial = "full"
        elif H1.shape[1] == 0:
            trivial = "zero"
        else:
            trivial = ""
        details = {
            "dim_H1": int(H1.shape[1]),
            "rank_M_phi2": rank_2,
            "rank_M_phiT": rank_phi,
            "target_dim": tgt.dim,
            "factorization_residual": fres,
        }
        return InvariantReport(direction, fres, None, inv, trivial, details | {"H1": H1})

    raise ValueError(f"unknown direction {direction!r}")


# ---------------------------------------------------------------------------
# Row contractions: the classical characteristic function


@dataclass(frozen=True)
class RowDefects:
    D_T: np.ndarray
    V_T: np.ndarray
    D_Tstar: np.ndarray
    V_Tstar: np.ndarray


def row_defects(T: OperatorTuple, rank_tol: float = 1e-10) -> RowDefects:
    """``D_T = (I - T^* T)^{1/2}`` on ``H^n`` and ``D_{T^*} = (I - T T^*)^{1/2}`` on ``H``."""
    Tc = T.adjoint_column()
    DT, VT, _ = psd_sqrt(np.eye(T.n * T.d) - Tc @ Tc.conj().T, rank_tol)
    dd = defect_data(T, 1, rank_tol)
    return RowDefects(DT, VT, dd.defect_operator, dd.defect_isometry)


def row_char_fn(T: OperatorTuple, z, defects: RowDefects | None = None) -> np.ndarray:
    """``Theta_T(z) = [-T + D_{T^*} (I - Z T^*)^{-1} Z D_T]`` restricted to ``D_T``.

    Returned in defect coordinates: ``r_{T^*} x r_T``.
    """
    z = np.asarray(z, dtype=complex)
    rd = defects if defects is not None else row_defects(T)
    d = T.d
    DV = rd.D_T @ rd.V_T
    ZD = _zrow(z, DV, d)
    A = np.eye(d) - T.z_combination(z, adjoint=True)
    inner_term = rd.D_Tstar @ np.linalg.solve(A, ZD)
    full = -T.row() @ rd.V_T + inner_term
    return rd.V_Tstar.conj().T @ full


def canonical_m1_colligation(T: OperatorTuple, defects: RowDefects | None = None) -> Colligation:
    """Finite part of the canonical triple for ``m = 1``.

    ``E = D_T`` (the remaining fibers are identity inclusions and play no
    role), ``B = D_T``, ``C = D_{T^*}`` into fiber 0, ``D = -T`` into fiber 0.
    """
    rd = defects if defects is not None else row_defects(T)
    A = T.adjoint_column()
    B = rd.D_T @ rd.V_T
    C = rd.V_Tstar.conj().T @ rd.D_Tstar
    D = -rd.V_Tstar.conj().T @ T.row() @ rd.V_T
    return Colligation(A, B, C, D, T.n)


def verify_m1_reduction(T: OperatorTuple, points) -> float:
    """``max ||Theta_T(z) - Phi~_T(z)|_{D_T}||`` for the canonical triple."""
    rd = row_defects(T)
    col = canonical_m1_colligation(T, rd)
    worst = 0.0
    for z in points:
        worst = max(worst, _opnorm(row_char_fn(T, z, rd) - transfer_eval(col, z)))
    return worst


# ---------------------------------------------------------------------------
# Relating transfer functions of different orders


@dataclass(frozen=True)
class RelateReport:
    Y: np.ndarray
    X: np.ndarray
    residual: float
    y_isometry_defect: float
    x_unitarity_defect: float
    range_defect_C: float
    range_defect_B: float


def _douglas(target: np.ndarray, source: np.ndarray, tol: float = SV_TOL):
    """Partial isometry ``W`` with ``W source = target`` on ``ran source``.

    Least squares on the retained singular directions, then the polar factor
    to remove round-off.  Returns ``W`` and an orthonormal basis of
    ``ran source``.
    """
    U, s, Vh = np.linalg.svd(source, full_matrices=False)
    keep = s > tol
    Ur, sr, Vr = U[:, keep], s[keep], Vh[keep].conj().T
    raw = target @ Vr / sr[None, :]
    if raw.size:
        Uw, _, Vwh = np.linalg.svd(raw, full_matrices=False)
        polished = Uw @ Vwh
    else:
        polished = raw
    return polished @ Ur.conj().T, Ur


def relate_colligations(col1: Colligation, col2: Colligation, points) -> RelateReport:
    """``Phi~_1(z)|_{(ker B_1)^perp} = Y Phi~_2(z) X`` for two unitary colligations of one tuple.

    ``Y`` solves ``Y C_2 = C_1`` on ``ran C_2`` and ``X`` solves
    ``X B_1^* = B_2^*`` on ``ran B_1^*``.
    """
    Y, QC = _douglas(col1.C, col2.C)
    X, QB = _douglas(col2.B.conj().T, col1.B.conj().T)
    yk = Y @ QC
    xk = X @ QB
    ydef = _opnorm(yk.conj().T @ yk - np.eye(yk.shape[1])) if yk.size else 0.0
    xdef = _opnorm(xk.conj().T @ xk - np.eye(xk.shape[1])) if xk.size else 0.0
    rc = _opnorm(col1.C.conj().T @ col1.C - col2.C.conj().T @ col2.C)
    rb = _opnorm(col1.B @ col1.B.conj().T - col2.B @ col2.B.conj().T)
    P1 = QB @ QB.conj().T
    worst = 0.0
    for z in points:
        lhs = transfer_eval(col1, z) @ P1
        rhs = Y @ transfer_eval(col2, z) @ X
        worst = max(worst, _opnorm(lhs - rhs))
    return RelateReport(Y, X, worst, ydef, xdef, rc, rb)


def relate_transfer_functions(
    T: OperatorTuple,
    m1: int,
    m2: int,
    t1: CharacteristicTriple,
    t2: CharacteristicTriple,
    points,
) -> RelateReport:
    """Relate the canonical transfer functions of triples of orders ``m1 <= m2``.

    Tail columns lie in ``ker B`` and the tail fibers are outside
    ``ran C``, so the finite cores carry the whole identity.

    Raises
    ------
    ValueError
        If the range inclusions behind the construction fail beyond 1e-8,
        which would indicate a construction bug.
    """
    if not 1 <= m1 <= m2:
        raise ValueError(f"need 1 <= m1 <= m2, got {m1}, {m2}")
    if (t1.m, t2.m) != (m1, m2):
        raise ValueError("triples do not match the requested orders")
    rep = relate_colligations(Colligation.from_triple(t1), Colligation.from_triple(t2), points)
    if rep.range_defect_C > 1e-8 or rep.range_defect_B > 1e-8:
        raise ValueError(
            f"range identities violated: C-Gram {rep.range_defect_C:.3e}, B-Gram {rep.range_defect_B:.3e}"
        )
    return rep


def relate_row_char_fn(T: OperatorTuple, t: CharacteristicTriple, points) -> RelateReport:
    """``Theta_T(z) = Y Phi~_{T,m}(z) X`` using the canonical ``m = 1`` triple."""
    col1 = canonical_m1_colligation(T)
    return relate_colligations(col1, Colligation.from_triple(t), points)
