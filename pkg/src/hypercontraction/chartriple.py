"""Characteristic triples and the characteristic function.

A triple ``(E, B, D)`` completes the isometry ``X_T = [T^*; C_{m,T}]`` to a
unitary ``[[T^*, B], [C_{m,T}, D]]``.  Here ``E`` is the orthogonal
complement of ``ran X_T`` in ``H^n + l^2(Z_+^n, D_{m,T^*})``.  That space is
infinite dimensional, so it is split in two parts:

* a finite core, the complement inside ``H^n`` plus the fibers of degree at
  most ``core_degree``, computed by a full orthogonal decomposition;
* a structured tail, the whole fibers of degree above ``core_degree``.  For
  a nilpotent tuple, ``C_{m,T}`` vanishes on them, so ``B = 0`` and ``D`` is
  the inclusion.

Tail columns are indexed by ``(k, s)`` with ``|k| > core_degree`` and
contribute ``sqrt(rho_{m-1}(k)) z^k e_s`` to the characteristic function.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg as sla

from .dilation import CmtData, build_cmt, build_dilation
from .multiindex import (
    count_indices,
    enumerate_indices,
    homogeneous_indices,
    rho,
    subtract,
    unit,
)
from .rkhs import (
    AnalyticOperatorFunction,
    TruncatedSpace,
    inner,
    monomial,
    mult_operator_matrix,
    multiplier_gram,
    partial_isometry_residual,
    power_kernel_partial,
)
from .tuples import (
    DefectData,
    OperatorTuple,
    PowerTable,
    _opnorm,
    defect_data,
    dilation_tail,
    nilpotency_order,
)

CONDITION_WARN = 1e12


class TripleConstructionError(ValueError):
    pass


@dataclass(frozen=True)
class CharacteristicTriple:
    """A characteristic triple with a finite core and a structured tail.

    Attributes
    ----------
    T : OperatorTuple
    m : int
    defect : DefectData
    core_degree : int
        Fibers of degree at most this value belong to the core.
    core_dim : int
        Dimension of the finite part of ``E``.
    B : ndarray
        ``(n d) x core_dim``; vanishes on tail columns.
    D_blocks : dict
        ``k -> (r x core_dim)`` for ``|k| <= core_degree``.
    cmt : CmtData
        ``C_{m,T}`` truncated at `core_degree`.
    unitarity_residual : float
        ``max(||U^* U - I||, ||U U^* - I||)`` of the finite block matrix.
    isometry_defect : float
        ``||X_T^* X_T - I||``.
    nilpotency : int or None
    method : str
        Orthonormalization used for the complement.
    """

    T: OperatorTuple
    m: int
    defect: DefectData
    core_degree: int
    core_dim: int
    B: np.ndarray
    D_blocks: dict
    cmt: CmtData
    unitarity_residual: float
    isometry_defect: float
    nilpotency: int | None
    method: str = "qr"
    notes: tuple = field(default_factory=tuple)

    @property
    def n(self) -> int:
        return self.T.n

    @property
    def d(self) -> int:
        return self.T.d

    @property
    def r(self) -> int:
        return self.defect.defect_rank

    @property
    def tail_start(self) -> int:
        """First degree whose fibers are whole tail columns."""
        return self.core_degree + 1

    @property
    def exact(self) -> bool:
        return self.nilpotency is not None and self.core_degree >= self.nilpotency - 1

    @property
    def D_core(self) -> np.ndarray:
        return np.vstack([self.D_blocks[k] for k in enumerate_indices(self.n, self.core_degree)])

    @property
    def Y(self) -> np.ndarray:
        """The isometry ``[B; D]`` restricted to the core."""
        return np.vstack([self.B, self.D_core])

    @property
    def X(self) -> np.ndarray:
        return np.vstack([self.T.adjoint_column(), self.cmt.c_matrix])

    def unitary(self) -> np.ndarray:
        """Finite block matrix ``[[T^*, B], [C, D]]``."""
        return np.hstack([self.X, self.Y])

    def B_blocks(self) -> list:
        """``B_i`` with ``B = [B_1; ...; B_n]``, each ``d x core_dim``."""
        d = self.d
        return [self.B[i * d:(i + 1) * d] for i in range(self.n)]

    def tail_indices(self, K: int) -> tuple:
        """Multi-indices of the tail fibers with degree at most `K`."""
        out = []
        for j in range(self.core_degree + 1, K + 1):
            out.extend(homogeneous_indices(self.n, j))
        return tuple(out)

    def source_dim(self, K: int) -> int:
        """Columns in ``core + tail fibers up to degree K``."""
        return self.core_dim + self.r * max(0, count_indices(self.n, K) - count_indices(self.n, self.core_degree))

    def rotate(self, W: np.ndarray) -> "CharacteristicTriple":
        """The triple ``(E, B W, D W)`` for a unitary `W` on the core."""
        W = np.asarray(W, dtype=complex)
        blocks = {k: v @ W for k, v in self.D_blocks.items()}
        return replace(self, B=self.B @ W, D_blocks=blocks, method=self.method + "+rotated")

    def block_identities(self) -> dict:
        """Residuals of the four block relations of ``U U^* = I``.

        ``Ts`` denotes the column ``T^* : H -> H^n``.
        """
        Ts = self.T.adjoint_column()
        C = self.cmt.c_matrix
        D = self.D_core
        B = self.B
        nd = Ts.shape[0]
        rows = C.shape[0]
        return {
            "Ts Ts* + B B* = I": _opnorm(Ts @ Ts.conj().T + B @ B.conj().T - np.eye(nd)),
            "Ts C* + B D* = 0": _opnorm(Ts @ C.conj().T + B @ D.conj().T),
            "C T + D B* = 0": _opnorm(C @ Ts.conj().T + D @ B.conj().T),
            "C C* + D D* = I": _opnorm(C @ C.conj().T + D @ D.conj().T - np.eye(rows)),
        }


def _normalize_phases(Y: np.ndarray) -> np.ndarray:
    # Make the largest entry of each column real and positive so the basis
    # does not depend on LAPACK sign conventions.
    if Y.size == 0:
        return Y
    idx = np.argmax(np.abs(Y), axis=0)
    piv = Y[idx, np.arange(Y.shape[1])]
    return Y * (np.abs(piv) / piv)[None, :]


def _complement(X: np.ndarray, method: str) -> np.ndarray:
    total, d = X.shape
    if method == "qr":
        Q, _ = sla.qr(X, mode="full")
        out = Q[:, d:]
    elif method == "qr-reversed":
        perm = np.arange(total)[::-1]
        Q, _ = sla.qr(X[perm], mode="full")
        out = np.empty_like(Q[:, d:])
        out[perm] = Q[:, d:]
    elif method == "svd":
        U, _, _ = np.linalg.svd(X, full_matrices=True)
        out = U[:, d:]
    else:
        raise ValueError(f"unknown orthonormalization method {method!r}")
    return _normalize_phases(out)


def build_triple(
    T: OperatorTuple,
    m: int,
    N: int | None = None,
    method: str = "qr",
    defect: DefectData | None = None,
    tol: float = 1e-10,
) -> CharacteristicTriple:
    """Construct a characteristic triple by unitary completion of ``X_T``.

    Parameters
    ----------
    T : OperatorTuple
        Pure m-hypercontraction.
    m : int
    N : int, optional
        Core degree for tuples that are not nilpotent.  For nilpotent tuples
        the core degree is ``nu - 1`` where ``nu`` is the nilpotency order,
        which makes the construction exact.
    method : {"qr", "qr-reversed", "svd"}
        Orthonormalization of the complement.  Different choices give
        triples related by a unitary on ``E``.
    tol : float
        Largest accepted isometry defect of ``X_T``.

    Raises
    ------
    TripleConstructionError
        If ``X_T`` is not an isometry within `tol` on the truncation.
    """
    dd = defect if defect is not None else defect_data(T, m)
    nu = nilpotency_order(T)
    notes = []
    if nu is not None:
        core = nu - 1
        if N is not None and N < core:
            notes.append(f"requested degree {N} below nilpotency order {nu}; using {core}")
    else:
        if N is None:
            raise TripleConstructionError("a truncation degree is required for non-nilpotent tuples")
        core = N
        notes.append("tuple is not nilpotent; tail columns beyond the core are approximate")
    cmt = build_cmt(T, m, core, dd)
    X = np.vstack([T.adjoint_column(), cmt.c_matrix])
    iso = _opnorm(X.conj().T @ X - np.eye(T.d))
    if iso > tol:
        tail = dilation_tail(T, m, core)
        raise TripleConstructionError(
            f"X_T is not isometric on the degree-{core} truncation "
            f"(defect {iso:.3e} > {tol:g}); purity tail at this degree is {tail:.3e}"
        )
    Y = _complement(X, method)
    nd = T.n * T.d
    B = Y[:nd]
    Dc = Y[nd:]
    r = dd.defect_rank
    blocks = {}
    for i, k in enumerate(enumerate_indices(T.n, core)):
        blocks[k] = Dc[i * r:(i + 1) * r]
    W = np.hstack([X, Y])
    I = np.eye(W.shape[0])
    unit_res = max(_opnorm(W.conj().T @ W - I), _opnorm(W @ W.conj().T - I))
    return CharacteristicTriple(
        T, m, dd, core, Y.shape[1], B, blocks, cmt, unit_res, iso, nu, method, tuple(notes)
    )


@dataclass(frozen=True)
class EquivalenceReport:
    U: np.ndarray
    residual: float
    unitarity_defect: float
    equivalent: bool


def triples_equivalent(t1: CharacteristicTriple, t2: CharacteristicTriple, tol: float = 1e-10) -> EquivalenceReport:
    """Unitary ``U = Y_1^* Y_2`` relating two triples of the same tuple.

    The tails coincide by construction, so only the cores are compared.
    """
    if t1.core_degree != t2.core_degree or t1.core_dim != t2.core_dim:
        return EquivalenceReport(np.zeros((0, 0)), float("inf"), float("inf"), False)
    Y1, Y2 = t1.Y, t2.Y
    U = Y1.conj().T @ Y2
    res = _opnorm(Y2 - Y1 @ U)
    ud = max(_opnorm(U.conj().T @ U - np.eye(U.shape[1])), _opnorm(U @ U.conj().T - np.eye(U.shape[0])))
    return EquivalenceReport(U, res, ud, res <= tol and ud <= tol)


class Resolvent:
    """``(I - Z T^*)^{-1}`` at a fixed point, applied by LU solves."""

    def __init__(self, T: OperatorTuple, z):
        A = np.eye(T.d) - T.z_combination(z, adjoint=True)
        cond = np.linalg.cond(A)
        if cond > CONDITION_WARN:
            warnings.warn(f"resolvent is ill-conditioned at |z|={np.linalg.norm(z):.4f} (cond {cond:.2e})")
        self.lu = sla.lu_factor(A)

    def power_solve(self, rhs: np.ndarray, m: int) -> np.ndarray:
        out = rhs
        for _ in range(m):
            out = sla.lu_solve(self.lu, out)
        return out


def zb(triple: CharacteristicTriple, z) -> np.ndarray:
    """``Z B = sum_i z_i B_i``."""
    out = np.zeros((triple.d, triple.core_dim), dtype=complex)
    for zi, Bi in zip(z, triple.B_blocks()):
        out += zi * Bi
    return out


def _core_value(triple: CharacteristicTriple, z) -> np.ndarray:
    m = triple.m
    out = np.zeros((triple.r, triple.core_dim), dtype=complex)
    for k, Dk in triple.D_blocks.items():
        c = rho(m - 1, k)
        if c:
            out += np.sqrt(float(c)) * monomial(z, k) * Dk
    res = Resolvent(triple.T, z)
    out += triple.defect.compressed @ res.power_solve(zb(triple, z), m)
    return out


def _tail_value(triple: CharacteristicTriple, z, K: int) -> np.ndarray:
    r = triple.r
    idx = triple.tail_indices(K)
    out = np.zeros((r, r * len(idx)), dtype=complex)
    for p, k in enumerate(idx):
        c = rho(triple.m - 1, k)
        if c:
            out[:, p * r:(p + 1) * r] = np.sqrt(float(c)) * monomial(z, k) * np.eye(r)
    return out


def eval_char_fn(triple: CharacteristicTriple, z, tail_degree: int | None = None) -> np.ndarray:
    """Evaluate ``Phi_T(z)`` on the core and on tail columns up to `tail_degree`.

    ``Phi_T(z) = sum_k sqrt(rho_{m-1}(k)) D_k z^k + D (I - Z T^*)^{-m} Z B``
    with the power of the resolvent applied by repeated solves.

    Returns
    -------
    ndarray
        ``r x source_dim(tail_degree)`` matrix; core columns first.
    """
    z = np.asarray(z, dtype=complex)
    if not np.linalg.norm(z) < 1:
        raise ValueError("z must lie in the open unit ball")
    core = _core_value(triple, z)
    if tail_degree is None or tail_degree <= triple.core_degree:
        return core
    return np.hstack([core, _tail_value(triple, z, tail_degree)])


def char_fn_taylor(triple: CharacteristicTriple, N: int, tail_degree: int | None = None) -> dict:
    """Taylor coefficients of ``Phi_T`` up to degree `N`.

    The coefficient at ``l`` on the core is
    ``sqrt(rho_{m-1}(l)) D_l + sum_{i: l_i >= 1} rho_m(l - e_i) D T^{*(l-e_i)} B_i``.
    Tail column ``(k, s)`` contributes ``sqrt(rho_{m-1}(k)) e_s`` at ``l = k``.
    """
    K = triple.core_degree if tail_degree is None else max(tail_degree, triple.core_degree)
    n, m, r = triple.n, triple.m, triple.r
    powers = PowerTable(triple.T)
    Dc = triple.defect.compressed
    Bs = triple.B_blocks()
    tail = triple.tail_indices(K)
    tail_pos = {k: p for p, k in enumerate(tail)}
    width = triple.source_dim(K)
    table = {}
    for l in enumerate_indices(n, N):
        coef = np.zeros((r, width), dtype=complex)
        if l in triple.D_blocks:
            c = rho(m - 1, l)
            if c:
                coef[:, :triple.core_dim] += np.sqrt(float(c)) * triple.D_blocks[l]
        for i in range(n):
            base = subtract(l, unit(n, i))
            if base is None:
                continue
            if triple.nilpotency is not None and sum(base) >= triple.nilpotency:
                continue
            coef[:, :triple.core_dim] += rho(m, base) * (Dc @ powers.adjoint(base) @ Bs[i])
        p = tail_pos.get(l)
        if p is not None:
            c = rho(m - 1, l)
            start = triple.core_dim + p * r
            coef[:, start:start + r] = np.sqrt(float(c)) * np.eye(r)
        table[l] = coef
    return table


def char_fn(triple: CharacteristicTriple, N: int, tail_degree: int | None = None) -> AnalyticOperatorFunction:
    """``Phi_T`` as an :class:`AnalyticOperatorFunction` with Taylor table to degree N."""
    K = triple.core_degree if tail_degree is None else max(tail_degree, triple.core_degree)
    table = char_fn_taylor(triple, N, K)
    bound = None
    if triple.exact:
        bound = max(triple.core_degree, triple.nilpotency, K if K > triple.core_degree else 0)
    return AnalyticOperatorFunction(
        triple.n,
        triple.source_dim(K),
        triple.r,
        lambda z: eval_char_fn(triple, z, K),
        table,
        bound,
        N,
        None,
        "Phi_T",
    )


def polynomial_degree(triple: CharacteristicTriple) -> int | None:
    """Degree of ``Phi_T`` on the core columns, or None when not polynomial."""
    if not triple.exact:
        return None
    return max(triple.core_degree, triple.nilpotency)


def defect_resolvent(triple: CharacteristicTriple, z) -> np.ndarray:
    """``F(z) = V^* D (I - Z T^*)^{-m}`` as an ``r x d`` matrix."""
    A = np.eye(triple.d) - triple.T.z_combination(z, adjoint=True)
    out = triple.defect.compressed.conj().T
    for _ in range(triple.m):
        out = np.linalg.solve(A.conj().T, out)
    return out.conj().T


def verify_kernel_identity(triple: CharacteristicTriple, pairs) -> float:
    """Maximal residual of the kernel identity over sample pairs.

    Checks ``K_m(z,w) I - Phi(z) Phi(w)^* / (1 - <z,w>) = F(z) F(w)^*`` with
    ``F(z) = D (I - Z T^*)^{-m}``.  The tail columns contribute
    ``(K_{m-1}(z,w) - sum_{|k| <= core} rho_{m-1}(k) z^k conj(w)^k) I`` in closed form.
    """
    m, r = triple.m, triple.r
    worst = 0.0
    for z, w in pairs:
        z = np.asarray(z, dtype=complex)
        w = np.asarray(w, dtype=complex)
        x = inner(z, w)
        Pz = _core_value(triple, z)
        Pw = _core_value(triple, w)
        if m - 1 == 0:
            tail = 0.0
        else:
            tail = (1 - x) ** (-(m - 1)) - power_kernel_partial(m - 1, z, w, triple.core_degree)
        phiphi = Pz @ Pw.conj().T + tail * np.eye(r)
        Fz = defect_resolvent(triple, z)
        Fw = defect_resolvent(triple, w)
        lhs = (1 - x) ** (-m) * np.eye(r) - phiphi / (1 - x)
        worst = max(worst, _opnorm(lhs - Fz @ Fw.conj().T))
    return worst


@dataclass(frozen=True)
class ModelReport:
    model_residual: float
    partial_isometry_residual: float
    target_degree: int
    safe_degree: int
    pi_isometry_residual: float
    source_side_residual: float | None = None


def _multiplier_on_selection(triple: CharacteristicTriple, N_src: int, N_tgt: int, K: int):
    phi = char_fn(triple, N_tgt, K)
    src = TruncatedSpace.power(triple.n, N_src, phi.source_dim, 1)
    tgt = TruncatedSpace.power(triple.n, N_tgt, triple.r, triple.m)
    return mult_operator_matrix(phi, src, tgt), src, phi


def verify_model_identity(
    triple: CharacteristicTriple, N: int | None = None, safe_degree: int = 1, source_check: bool = False
) -> ModelReport:
    """Check ``Pi Pi^* + M_Phi M_Phi^* = I`` and partial isometry of ``M_Phi``.

    Parameters
    ----------
    triple : CharacteristicTriple
    N : int, optional
        Target truncation degree.  Defaults to the polynomial degree of the
        core part.
    safe_degree : int
        Source degree for the optional source-side check.
    source_check : bool
        Also assemble ``M_Phi`` on a larger source truncation and evaluate
        ``||((M^* M)^2 - M^* M) P||`` on leakage-free columns.  Memory grows
        quickly with n, so this is off by default.

    Notes
    -----
    Every source vector reaching a target row of degree at most N has degree
    at most N, so ``M_Phi M_Phi^*`` is exact on the target truncation.  The
    partial isometry residual is ``||G^2 - G||`` for that Gram matrix ``G``.
    It is exact when ``ran Pi`` lies in the truncation, which holds for
    nilpotent T once N reaches the nilpotency order minus one.
    """
    T, m = triple.T, triple.m
    delta = polynomial_degree(triple)
    if delta is None:
        delta = triple.core_degree
    if N is None:
        N = delta
    dil = build_dilation(T, m, N, defect=triple.defect)
    phi = char_fn(triple, N, N)
    src = TruncatedSpace.power(triple.n, N, phi.source_dim, 1)
    tgt = TruncatedSpace.power(triple.n, N, triple.r, m)
    G = multiplier_gram(phi, src, tgt)
    Pi = dil.pi_matrix
    model = _opnorm(Pi @ Pi.conj().T + G - np.eye(G.shape[0]))
    pir = _opnorm(G @ G - G)

    src_res = None
    if source_check:
        N_src = safe_degree + delta
        N_tgt = N_src + delta
        M2, src2, phi2 = _multiplier_on_selection(triple, N_src, N_tgt, N_src)
        # Column degrees: core columns have degree delta, tail column (k, s) has |k|.
        col_deg = np.concatenate(
            [np.full(triple.core_dim, delta)]
            + [np.full(triple.r, sum(k)) for k in triple.tail_indices(N_src)]
        )
        safe = []
        w = phi2.source_dim
        for jpos, j in enumerate(src2.indices):
            reach = sum(j) + col_deg
            safe.extend((jpos * w + np.nonzero(reach <= N_src)[0]).tolist())
        src_res = partial_isometry_residual(M2, np.array(safe, dtype=int))
    return ModelReport(model, pir, N, safe_degree, dil.isometry_residual, src_res)


@dataclass(frozen=True)
class CoincidenceResult:
    verdict: str
    tau_star: np.ndarray | None
    tau: np.ndarray | None
    residual: float
    iterations: int
    reason: str = ""


def _polar(M: np.ndarray) -> np.ndarray:
    U, _, Vh = np.linalg.svd(M)
    return U @ Vh


def _stacked(phi: AnalyticOperatorFunction, N: int) -> list:
    return [phi.coefficient(k) for k in enumerate_indices(phi.n, N)]


def _spectral_obstruction(A: list, B: list, tol: float) -> str:
    """A necessary condition: singular values of each coefficient and of both stackings agree."""
    tests = [
        (np.vstack(A), np.vstack(B), "vertically stacked coefficients"),
        (np.hstack(A), np.hstack(B), "horizontally stacked coefficients"),
    ]
    for a, b, what in tests:
        sa = np.linalg.svd(a, compute_uv=False)
        sb = np.linalg.svd(b, compute_uv=False)
        if np.max(np.abs(sa - sb)) > max(tol, 1e-6):
            return f"singular values of the {what} differ by {np.max(np.abs(sa - sb)):.3e}"
    return ""


def _intertwiner_start(A: list, B: list, limit: int = 12) -> np.ndarray:
    """Unitary P with ``P a_k a_l^* P^* = b_k b_l^*``, the best least-squares fit.

    The source unitary cancels in ``a_k a_l^*``, so a target unitary is an
    intertwiner of these *-closed families.  The polar part of a generic
    element of the null space is unitary when the families are equivalent.
    """
    r = A[0].shape[0]
    idx = range(min(limit, len(A)))
    I = np.eye(r)
    rows = []
    for k in idx:
        for l in idx:
            X = A[k] @ A[l].conj().T
            Y = B[k] @ B[l].conj().T
            # row-major vec: vec(P X) = (I kron X^T) vec(P), vec(Y P) = (Y kron I) vec(P)
            rows.append(np.kron(I, X.T) - np.kron(Y, I))
    _, s, Vh = np.linalg.svd(np.vstack(rows), full_matrices=False)
    null = Vh[s <= max(1e-9, 1e-9 * s[0])] if s[0] > 0 else Vh
    if null.shape[0] == 0:
        null = Vh[-1:]
    rng = np.random.default_rng(0)
    coef = rng.standard_normal(null.shape[0]) + 1j * rng.standard_normal(null.shape[0])
    P = (coef @ null.conj()).reshape(r, r)
    return _polar(P)


def coincidence_test(
    phi_a: AnalyticOperatorFunction,
    phi_b: AnalyticOperatorFunction,
    N: int,
    tol: float = 1e-8,
    max_iter: int = 2000,
    restarts: int = 4,
    seed: int = 0,
) -> CoincidenceResult:
    """Search unitaries with ``Phi_b(z) = tau_* Phi_a(z) tau`` on Taylor data.

    Two-sided orthogonal Procrustes by alternation over the stacked
    coefficients up to degree `N`.  The first start fits the defect-side
    unitary as an intertwiner of the products ``a_k a_l^*``, the second
    aligns eigenvectors of the Gram matrices, and further starts are seeded
    random unitaries.

    Returns
    -------
    CoincidenceResult
        ``verdict`` is ``"coincide"`` when the best residual is below `tol`,
        ``"do not coincide"`` on a dimension or spectral obstruction, and
        ``"inconclusive"`` otherwise.
    """
    if (phi_a.target_dim, phi_a.source_dim) != (phi_b.target_dim, phi_b.source_dim):
        return CoincidenceResult(
            "do not coincide", None, None, float("inf"), 0,
            f"dimension mismatch: {phi_a.target_dim}x{phi_a.source_dim} vs "
            f"{phi_b.target_dim}x{phi_b.source_dim}",
        )
    A = _stacked(phi_a, N)
    B = _stacked(phi_b, N)
    obstruction = _spectral_obstruction(A, B, tol)
    if obstruction:
        return CoincidenceResult("do not coincide", None, None, float("inf"), 0, obstruction)
    r, s = A[0].shape
    rng = np.random.default_rng(seed)

    def residual(P, Q):
        return max(_opnorm(b - P @ a @ Q) for a, b in zip(A, B))

    GA = sum(a.conj().T @ a for a in A)
    GB = sum(b.conj().T @ b for b in B)
    _, UA = np.linalg.eigh(GA)
    _, UB = np.linalg.eigh(GB)
    starts = [UA @ UB.conj().T]
    for _ in range(restarts):
        Z = rng.standard_normal((s, s)) + 1j * rng.standard_normal((s, s))
        starts.append(_polar(Z))

    P0 = _intertwiner_start(A, B)
    starts.insert(0, _polar(sum((P0 @ a).conj().T @ b for a, b in zip(A, B))))

    best = (float("inf"), None, None)
    total = 0
    for Q in starts:
        prev = float("inf")
        for it in range(max_iter):
            P = _polar(sum(b @ (a @ Q).conj().T for a, b in zip(A, B)))
            Q = _polar(sum((P @ a).conj().T @ b for a, b in zip(A, B)))
            total += 1
            res = residual(P, Q)
            if res < best[0]:
                best = (res, P, Q)
            if res < tol * 1e-3 or prev - res <= 1e-15 * max(1.0, prev):
                break
            prev = res
        if best[0] < tol:
            break
    verdict = "coincide" if best[0] < tol else "inconclusive"
    return CoincidenceResult(verdict, best[1], best[2], best[0], total)
