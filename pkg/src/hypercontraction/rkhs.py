"""Truncated reproducing kernel Hilbert spaces on the unit ball.

Two families of spaces are represented up to a total degree ``N``:

* ``H_p`` with kernel ``(1 - <z, w>)^{-p}`` and monomial norms
  ``||z^k||^2 = 1 / rho_p(k)``;
* ``H^2_n(beta)`` with kernel ``sum_j <z, w>^j / beta_j`` and monomial norms
  ``beta_{|k|} / rho_1(k)``.

Operators between truncations are matrices in the orthonormal monomial
bases ``z^k e_s / ||z^k||``, so adjoints are conjugate transposes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Callable, Mapping, Sequence

import numpy as np

from .multiindex import (
    MultiIndex,
    WeightSequence,
    add,
    count_indices,
    dominates,
    enumerate_indices,
    index_map,
    rho,
    subtract,
)


@dataclass(frozen=True)
class TruncatedSpace:
    """A weighted coefficient space ``H(B^n, C^r)`` truncated at degree N.

    Parameters
    ----------
    n : int
        Number of variables.
    N : int
        Maximal total degree.
    coeff_dim : int
        Dimension r of the coefficient space.
    weight : callable
        ``k -> ||z^k e||^2`` for a unit vector ``e``, as an exact rational.
    label : str
        Human-readable description.
    """

    n: int
    N: int
    coeff_dim: int
    weight: Callable[[MultiIndex], Fraction]
    label: str = ""

    @classmethod
    def power(cls, n: int, N: int, r: int, p: int) -> "TruncatedSpace":
        """``H_p(B^n, C^r)``; ``p = 1`` is the Drury-Arveson space."""
        if p < 1:
            raise ValueError(f"p must be at least 1, got {p}")
        return cls(n, N, r, lambda k: Fraction(1, rho(p, k)), f"H_{p}")

    @classmethod
    def beta(cls, n: int, N: int, r: int, beta: WeightSequence) -> "TruncatedSpace":
        """``H^2_n(beta, C^r)``; `beta` must reach degree `N`."""
        if beta.N < N:
            raise ValueError(f"weight prefix has degree {beta.N} < N = {N}")
        return cls(n, N, r, lambda k: Fraction(beta[sum(k)]) / rho(1, k), "H2(beta)")

    @property
    def indices(self) -> tuple:
        return enumerate_indices(self.n, self.N)

    @property
    def dim(self) -> int:
        return count_indices(self.n, self.N) * self.coeff_dim

    def weights(self) -> np.ndarray:
        """Float weights per multi-index, in layout order."""
        return np.array([float(self.weight(k)) for k in self.indices])

    def position(self, k: MultiIndex, s: int = 0) -> int:
        return index_map(self.n, self.N)[tuple(k)] * self.coeff_dim + s

    def degree_mask(self, max_degree: int) -> np.ndarray:
        """Boolean mask of basis vectors with degree at most `max_degree`."""
        deg = np.repeat([sum(k) for k in self.indices], self.coeff_dim)
        return deg <= max_degree

    def to_orthonormal(self, coeffs: Mapping[MultiIndex, np.ndarray]) -> np.ndarray:
        """Orthonormal coordinates of ``sum_k c_k z^k``; `coeffs` maps k to a vector or matrix."""
        first = next(iter(coeffs.values()))
        cols = () if np.ndim(first) == 1 else (np.shape(first)[1],)
        out = np.zeros((self.dim,) + cols, dtype=complex)
        r = self.coeff_dim
        for i, k in enumerate(self.indices):
            c = coeffs.get(k)
            if c is not None:
                out[i * r:(i + 1) * r] = np.sqrt(float(self.weight(k))) * np.asarray(c)
        return out

    def to_coefficients(self, vec: np.ndarray) -> dict:
        """Inverse of :meth:`to_orthonormal`."""
        r = self.coeff_dim
        out = {}
        for i, k in enumerate(self.indices):
            out[k] = np.asarray(vec[i * r:(i + 1) * r]) / np.sqrt(float(self.weight(k)))
        return out


@dataclass
class AnalyticOperatorFunction:
    """Operator-valued analytic function on the ball.

    Attributes
    ----------
    n : int
    source_dim, target_dim : int
    evaluator : callable
        ``z -> (target_dim x source_dim)`` matrix.
    taylor : dict
        Multi-index to coefficient matrix, possibly only up to `taylor_degree`.
    degree_bound : int or None
        Exact polynomial degree bound if known; coefficients beyond it vanish.
    taylor_degree : int
        Degree up to which `taylor` is populated.
    tail_bound : callable or None
        ``z -> bound`` on the Taylor remainder beyond `taylor_degree`.
    """

    n: int
    source_dim: int
    target_dim: int
    evaluator: Callable[[np.ndarray], np.ndarray]
    taylor: dict = field(default_factory=dict)
    degree_bound: int | None = None
    taylor_degree: int = -1
    tail_bound: Callable | None = None
    name: str = ""

    def __call__(self, z) -> np.ndarray:
        return self.evaluator(np.asarray(z, dtype=complex))

    def coefficient(self, k: MultiIndex) -> np.ndarray:
        k = tuple(k)
        if k in self.taylor:
            return self.taylor[k]
        if self.degree_bound is not None and sum(k) > self.degree_bound:
            return np.zeros((self.target_dim, self.source_dim), dtype=complex)
        if sum(k) <= self.taylor_degree:
            return np.zeros((self.target_dim, self.source_dim), dtype=complex)
        raise KeyError(f"Taylor coefficient {k} not populated (degree {self.taylor_degree})")

    def partial_sum(self, z, N: int | None = None) -> np.ndarray:
        """Degree-N Taylor partial sum at `z`."""
        N = self.taylor_degree if N is None else N
        z = np.asarray(z, dtype=complex)
        out = np.zeros((self.target_dim, self.source_dim), dtype=complex)
        for k in enumerate_indices(self.n, N):
            out += monomial(z, k) * self.coefficient(k)
        return out

    @classmethod
    def from_taylor(cls, n: int, taylor: dict, degree: int, name: str = "") -> "AnalyticOperatorFunction":
        """A polynomial given by its coefficients up to `degree`."""
        shape = next(iter(taylor.values())).shape
        table = {tuple(k): np.asarray(v, dtype=complex) for k, v in taylor.items()}
        fn = cls(n, shape[1], shape[0], lambda z: None, table, degree, degree, None, name)
        fn.evaluator = lambda z: fn.partial_sum(z, degree)
        return fn

    @classmethod
    def constant(cls, M: np.ndarray, n: int) -> "AnalyticOperatorFunction":
        M = np.asarray(M, dtype=complex)
        return cls.from_taylor(n, {tuple([0] * n): M}, 0, "constant")


def monomial(z: np.ndarray, k: Sequence[int]) -> complex:
    out = 1.0 + 0j
    for zi, ki in zip(z, k):
        if ki:
            out *= zi ** ki
    return out


@lru_cache(maxsize=64)
def exponent_table(n: int, N: int) -> np.ndarray:
    """Integer array of all multi-indices up to degree N, one per row."""
    E = np.array(enumerate_indices(n, N), dtype=int).reshape(-1, n)
    E.setflags(write=False)
    return E


def monomial_vector(z, N: int) -> np.ndarray:
    """All monomials ``z^k`` with ``|k| <= N`` in graded lexicographic order."""
    z = np.asarray(z, dtype=complex)
    E = exponent_table(len(z), N)
    return np.prod(z[None, :] ** E, axis=1)


def inner(z, w) -> complex:
    """``<z, w> = sum_i z_i conj(w_i)``."""
    return complex(np.vdot(np.asarray(w, dtype=complex), np.asarray(z, dtype=complex)))


@dataclass(frozen=True)
class PowerKernel:
    """Kernel ``(1 - <z, w>)^{-p}``; ``p = 0`` is the constant kernel 1."""

    p: int


@dataclass(frozen=True)
class KernelValue:
    value: complex
    tail: float = 0.0


def _check_ball(z, name):
    r = float(np.linalg.norm(z))
    if not r < 1:
        raise ValueError(f"{name} must lie in the open unit ball, got norm {r:.6g}")


def kernel_eval(kernel, z, w, N: int | None = None) -> KernelValue:
    """Evaluate a radial kernel at ``(z, w)``.

    Parameters
    ----------
    kernel : PowerKernel or WeightSequence
        Power kernels use the closed form.  Weighted kernels sum
        ``<z, w>^j / beta_j`` up to degree `N` (default: the prefix length).
    z, w : array_like
        Points of the open unit ball.
    N : int, optional
        Partial-sum degree for weighted kernels.

    Returns
    -------
    KernelValue
        Value and a tail estimate extrapolated geometrically from the last
        two terms (zero for closed forms).
    """
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    _check_ball(z, "z")
    _check_ball(w, "w")
    x = inner(z, w)
    if isinstance(kernel, PowerKernel):
        return KernelValue(complex((1 - x) ** (-kernel.p)), 0.0)
    if isinstance(kernel, WeightSequence):
        N = kernel.N if N is None else N
        if N > kernel.N:
            raise ValueError(f"weight prefix has degree {kernel.N} < N = {N}")
        terms = [x ** j / float(kernel[j]) for j in range(N + 1)]
        tail = 0.0
        if N >= 1 and terms[-2] != 0:
            q = abs(terms[-1] / terms[-2])
            tail = abs(terms[-1]) * q / (1 - q) if q < 1 else float("inf")
        return KernelValue(complex(sum(terms)), tail)
    raise TypeError(f"unsupported kernel {kernel!r}")


def power_kernel_partial(p: int, z, w, N: int) -> complex:
    """``sum_{|k| <= N} rho_p(k) z^k conj(w)^k``, the degree-N part of ``K_p``."""
    x = inner(z, w)
    if p == 0:
        return 1.0 + 0j
    return complex(sum(comb(p + j - 1, j) * x ** j for j in range(N + 1)))


def mult_operator_matrix(
    phi: AnalyticOperatorFunction, source: TruncatedSpace, target: TruncatedSpace
) -> np.ndarray:
    """Matrix of ``f -> phi f`` between truncations in orthonormal bases.

    The block from source index j to target index k is
    ``phi_{k-j} sqrt(w_tgt(k) / w_src(j))`` when ``k >= j`` entrywise, else 0.

    Raises
    ------
    ValueError
        On mismatched dimensions.
    KeyError
        If a needed Taylor coefficient is not populated.
    """
    if source.n != target.n or phi.n != source.n:
        raise ValueError("source, target and phi must share n")
    if phi.source_dim != source.coeff_dim or phi.target_dim != target.coeff_dim:
        raise ValueError(
            f"phi maps C^{phi.source_dim} -> C^{phi.target_dim}, spaces have "
            f"C^{source.coeff_dim} -> C^{target.coeff_dim}"
        )
    rs, rt = source.coeff_dim, target.coeff_dim
    M = np.zeros((target.dim, source.dim), dtype=complex)
    ws = source.weights()
    wt = target.weights()
    coeffs = {}
    for it, k in enumerate(target.indices):
        for js, j in enumerate(source.indices):
            if sum(j) > sum(k):
                break
            if not dominates(k, j):
                continue
            diff = subtract(k, j)
            C = coeffs.get(diff)
            if C is None:
                C = phi.coefficient(diff)
                coeffs[diff] = C
            if not C.any():
                continue
            M[it * rt:(it + 1) * rt, js * rs:(js + 1) * rs] = C * np.sqrt(wt[it] / ws[js])
    return M


def multiplier_gram(
    phi: AnalyticOperatorFunction, source: TruncatedSpace, target: TruncatedSpace
) -> np.ndarray:
    """``M M^*`` for the truncated multiplication matrix without assembling ``M``.

    The Taylor coefficients are first compressed to their joint row space:
    with ``[phi_l]_l = U S V^*`` the coefficients ``(U S)_l`` give the same
    products ``phi_l phi_{l'}^*``.  The Gram matrix is then accumulated one
    source multi-index at a time.
    """
    if phi.source_dim != source.coeff_dim or phi.target_dim != target.coeff_dim:
        raise ValueError("phi dimensions do not match the spaces")
    rt = target.coeff_dim
    span = enumerate_indices(target.n, target.N)
    stacked = np.vstack([phi.coefficient(l) for l in span])
    U, sv, _ = np.linalg.svd(stacked, full_matrices=False)
    keep = sv > sv[0] * 1e-15 if sv.size and sv[0] > 0 else np.zeros(sv.shape, bool)
    comp = U[:, keep] * sv[keep]
    width = comp.shape[1]
    pos = index_map(target.n, target.N)
    small = {l: comp[pos[l] * rt:(pos[l] + 1) * rt] for l in span}
    ws = source.weights()
    wt = target.weights()
    G = np.zeros((target.dim, target.dim), dtype=complex)
    if width == 0:
        return G
    for js, j in enumerate(source.indices):
        Mj = np.zeros((target.dim, width), dtype=complex)
        for it, k in enumerate(target.indices):
            if sum(k) < sum(j) or not dominates(k, j):
                continue
            Mj[it * rt:(it + 1) * rt] = small[subtract(k, j)] * np.sqrt(wt[it] / ws[js])
        G += Mj @ Mj.conj().T
    return 0.5 * (G + G.conj().T)


def multiplier_source_gram(
    phi: AnalyticOperatorFunction, source: TruncatedSpace, target: TruncatedSpace
) -> np.ndarray:
    """``M^* M`` for the truncated multiplication matrix without assembling ``M``.

    The mirror of :func:`multiplier_gram`: with ``[phi_l]_l = U S V^*`` taken
    side by side, the blocks of ``S V^*`` give the same products
    ``phi_l^* phi_{l'}``.  The Gram matrix is accumulated one target
    multi-index at a time, so memory scales with the source dimension.
    """
    if phi.source_dim != source.coeff_dim or phi.target_dim != target.coeff_dim:
        raise ValueError("phi dimensions do not match the spaces")
    rs = source.coeff_dim
    span = enumerate_indices(target.n, target.N)
    side = np.hstack([phi.coefficient(l) for l in span])
    _, sv, Vh = np.linalg.svd(side, full_matrices=False)
    keep = sv > sv[0] * 1e-15 if sv.size and sv[0] > 0 else np.zeros(sv.shape, bool)
    comp = sv[keep, None] * Vh[keep]
    height = comp.shape[0]
    pos = index_map(target.n, target.N)
    small = {l: comp[:, pos[l] * rs:(pos[l] + 1) * rs] for l in span}
    ws = source.weights()
    wt = target.weights()
    G = np.zeros((source.dim, source.dim), dtype=complex)
    if height == 0:
        return G
    for it, k in enumerate(target.indices):
        Mk = np.zeros((height, source.dim), dtype=complex)
        for js, j in enumerate(source.indices):
            if sum(j) > sum(k):
                break
            if not dominates(k, j):
                continue
            Mk[:, js * rs:(js + 1) * rs] = small[subtract(k, j)] * np.sqrt(wt[it] / ws[js])
        G += Mk.conj().T @ Mk
    return 0.5 * (G + G.conj().T)


def multiplier_norm(
    phi: AnalyticOperatorFunction, source: TruncatedSpace, target: TruncatedSpace, dense_limit: int = 800
) -> float:
    """Operator norm of the truncated multiplication matrix.

    Small sources use :func:`multiplier_source_gram`.  Larger ones run a
    Lanczos solver on ``M^* M`` applied matrix-free, one Taylor coefficient
    at a time across all source fibers.
    """
    if source.dim <= dense_limit:
        G = multiplier_source_gram(phi, source, target)
        return float(np.sqrt(max(np.linalg.eigvalsh(G)[-1], 0.0))) if G.size else 0.0
    from scipy.sparse.linalg import LinearOperator, eigsh

    rs, rt = source.coeff_dim, target.coeff_dim
    ws, wt = source.weights(), target.weights()
    tpos = index_map(target.n, target.N)
    plan = []
    for l in enumerate_indices(target.n, target.N):
        C = phi.coefficient(l)
        if not C.any():
            continue
        js_list, it_list = [], []
        for js, j in enumerate(source.indices):
            it = tpos.get(add(j, l))
            if it is not None:
                js_list.append(js)
                it_list.append(it)
        if js_list:
            js_arr, it_arr = np.array(js_list), np.array(it_list)
            # j -> j + l is injective, so fancy-index updates never collide.
            plan.append((C, C.conj().T, js_arr, it_arr, np.sqrt(wt[it_arr] / ws[js_arr])))
    if not plan:
        return 0.0
    ns, nt = len(source.indices), len(target.indices)

    def normal(x):
        X = np.asarray(x).reshape(ns, rs).T
        y = np.zeros((nt, rt), dtype=complex)
        for C, _, js, it, sc in plan:
            y[it] += sc[:, None] * (C @ X[:, js]).T
        out = np.zeros((ns, rs), dtype=complex)
        for _, Ch, js, it, sc in plan:
            out[js] += (Ch @ (sc[:, None] * y[it]).T).T
        return out.reshape(-1)

    # Real symmetric form [[Re, -Im], [Im, Re]] of the Hermitian operator, so
    # the symmetric Lanczos driver applies; every eigenvalue appears twice.
    n = source.dim

    def real_normal(v):
        out = normal(v[:n] + 1j * v[n:])
        return np.concatenate([out.real, out.imag])

    op = LinearOperator((2 * n, 2 * n), matvec=real_normal, dtype=float)
    top = eigsh(op, k=1, which="LA", return_eigenvectors=False, tol=1e-10, v0=np.ones(2 * n))
    return float(np.sqrt(max(top[0], 0.0)))


def shift_matrix(space: TruncatedSpace, i: int, target: TruncatedSpace | None = None) -> np.ndarray:
    """Matrix of multiplication by ``z_i`` (top degree dropped)."""
    target = space if target is None else target
    n, r = space.n, space.coeff_dim
    e = tuple(1 if j == i else 0 for j in range(n))
    phi = AnalyticOperatorFunction.from_taylor(n, {e: np.eye(r)}, 1, f"z_{i + 1}")
    return mult_operator_matrix(phi, space, target)


def _as_columns(M: np.ndarray, safe) -> np.ndarray:
    if isinstance(safe, (int, np.integer)):
        if safe > M.shape[1]:
            raise ValueError(f"safe_dim {safe} exceeds source dimension {M.shape[1]}")
        return M[:, :safe]
    return M[:, np.asarray(safe)]


def partial_isometry_residual(M: np.ndarray, safe_dim) -> float:
    """``||((M^* M)^2 - M^* M) P||`` on a leakage-free source subspace.

    Parameters
    ----------
    M : ndarray
        Truncated operator matrix.
    safe_dim : int or index array
        Either the number of leading source basis vectors, or explicit column
        indices, for which truncation does not affect ``(M^* M)^2``.

    Returns
    -------
    float
        Zero exactly when ``M^* M`` acts as an orthogonal projection on that
        subspace.
    """
    MP = _as_columns(M, safe_dim)
    G1 = M.conj().T @ MP
    G2 = M.conj().T @ (M @ G1)
    diff = G2 - G1
    if diff.size == 0:
        return 0.0
    return float(np.linalg.norm(diff, 2))


class KernelDefectError(ValueError):
    pass


@dataclass(frozen=True)
class PositivityReport:
    min_eigenvalue: float
    hermitian_defect: float
    positive: bool
    threshold: float = -1e-9


def gram_matrix(points: Sequence, kernel_expr: Callable) -> np.ndarray:
    """Block Gram matrix ``[kernel_expr(z_i, z_j)]``."""
    blocks = [[np.atleast_2d(kernel_expr(zi, zj)) for zj in points] for zi in points]
    return np.block(blocks)


def kernel_positivity(points: Sequence, kernel_expr: Callable, threshold: float = -1e-9) -> PositivityReport:
    """Minimum eigenvalue of the assembled block Gram matrix.

    Raises
    ------
    KernelDefectError
        If the Gram matrix departs from Hermitian by more than 1e-8, which
        points to a wrongly implemented kernel expression.
    """
    G = gram_matrix(points, kernel_expr)
    defect = float(np.max(np.abs(G - G.conj().T))) if G.size else 0.0
    if defect > 1e-8:
        raise KernelDefectError(f"Gram matrix is not Hermitian (defect {defect:.3e})")
    lo = float(np.linalg.eigvalsh(0.5 * (G + G.conj().T))[0])
    return PositivityReport(lo, defect, lo >= threshold, threshold)


def sample_points(n: int, count: int, seed: int, radius: float = 0.8) -> list:
    """Deterministic points in the ball of the given radius.

    Directions are complex Gaussian; radii are uniform in ``[0, radius]``.
    """
    if not 0 < radius < 1:
        raise ValueError(f"radius must be in (0, 1), got {radius}")
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        v /= np.linalg.norm(v)
        out.append(v * radius * rng.uniform())
    return out


def sample_pairs(n: int, count: int, seed: int, radius: float = 0.8) -> list:
    pts = sample_points(n, 2 * count, seed, radius)
    return list(zip(pts[:count], pts[count:]))
