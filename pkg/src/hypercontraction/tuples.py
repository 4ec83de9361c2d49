"""Commuting operator tuples and their spectral-side quantities.

Covers the completely positive map ``sigma_T(X) = sum_i T_i X T_i^*``, the
hereditary powers ``(I - sigma_T)^p(I)``, hypercontractivity and purity
certificates, and the defect operator with an isometric factor for its
range.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Sequence

import numpy as np

from .multiindex import enumerate_indices, homogeneous_indices, rho, subtract, unit

COMMUTATOR_TOL = 1e-12


class NonCommutingError(ValueError):
    """Raised when a tuple fails the commutativity tolerance."""

    def __init__(self, pair, residual):
        self.pair = pair
        self.residual = residual
        i, j = pair
        super().__init__(
            f"operators {i + 1} and {j + 1} do not commute: "
            f"||T_i T_j - T_j T_i|| = {residual:.3e}"
        )


def _opnorm(A: np.ndarray) -> float:
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))


def hermitian_part(X: np.ndarray) -> np.ndarray:
    return 0.5 * (X + X.conj().T)


@dataclass(frozen=True)
class OperatorTuple:
    """A commuting n-tuple of d x d complex matrices.

    Parameters
    ----------
    matrices : tuple of ndarray
        The operators ``T_1, ..., T_n``.
    tol : float
        Commutativity tolerance in operator norm.

    Attributes
    ----------
    n, d : int
    commutator_residual : float
        Largest ``||T_i T_j - T_j T_i||`` over pairs.
    """

    matrices: tuple
    tol: float = COMMUTATOR_TOL
    commutator_residual: float = field(init=False)

    def __post_init__(self):
        mats = tuple(np.array(M, dtype=complex) for M in self.matrices)
        if not mats:
            raise ValueError("a tuple needs at least one operator")
        d = mats[0].shape[0]
        for M in mats:
            if M.shape != (d, d):
                raise ValueError(f"expected square {d}x{d} matrices, got {M.shape}")
            if not np.all(np.isfinite(M)):
                raise ValueError("matrix entries must be finite")
        for M in mats:
            M.setflags(write=False)
        worst, pair = 0.0, None
        for i in range(len(mats)):
            for j in range(i + 1, len(mats)):
                r = _opnorm(mats[i] @ mats[j] - mats[j] @ mats[i])
                if r > worst:
                    worst, pair = r, (i, j)
        if worst > self.tol:
            raise NonCommutingError(pair, worst)
        object.__setattr__(self, "matrices", mats)
        object.__setattr__(self, "commutator_residual", worst)

    @property
    def n(self) -> int:
        return len(self.matrices)

    @property
    def d(self) -> int:
        return self.matrices[0].shape[0]

    def __getitem__(self, i: int) -> np.ndarray:
        return self.matrices[i]

    def adjoint_column(self) -> np.ndarray:
        """The column operator ``T^* : H -> H^n`` as an ``(n d) x d`` matrix."""
        return np.vstack([M.conj().T for M in self.matrices])

    def row(self) -> np.ndarray:
        """The row operator ``T : H^n -> H`` as a ``d x (n d)`` matrix."""
        return np.hstack(self.matrices)

    def conjugate(self, W: np.ndarray) -> "OperatorTuple":
        """The tuple ``W T W^*`` for a unitary `W`."""
        W = np.asarray(W, dtype=complex)
        return OperatorTuple(tuple(W @ M @ W.conj().T for M in self.matrices), tol=self.tol)

    def z_combination(self, z: Sequence[complex], adjoint: bool = True) -> np.ndarray:
        """``Z T^* = sum_i z_i T_i^*`` (or ``sum_i z_i T_i`` when not `adjoint`)."""
        out = np.zeros((self.d, self.d), dtype=complex)
        for zi, M in zip(z, self.matrices):
            out += zi * (M.conj().T if adjoint else M)
        return out


class PowerTable:
    """Lazy cache of monomials ``T^k`` keyed by multi-index."""

    def __init__(self, T: OperatorTuple):
        self.T = T
        self._cache = {tuple([0] * T.n): np.eye(T.d, dtype=complex)}

    def __call__(self, k) -> np.ndarray:
        k = tuple(k)
        hit = self._cache.get(k)
        if hit is not None:
            return hit
        # Peel off the last non-zero coordinate to reuse earlier products.
        i = max(idx for idx, x in enumerate(k) if x > 0)
        prev = self(subtract(k, unit(self.T.n, i)))
        val = self.T[i] @ prev
        self._cache[k] = val
        return val

    def adjoint(self, k) -> np.ndarray:
        return self(k).conj().T


def apply_sigma(T: OperatorTuple, X: np.ndarray) -> np.ndarray:
    """Apply ``sigma_T(X) = sum_i T_i X T_i^*``.

    Parameters
    ----------
    T : OperatorTuple
    X : ndarray
        Hermitian ``d x d`` matrix.

    Returns
    -------
    ndarray
        Hermitian matrix, symmetrized before returning.
    """
    X = np.asarray(X, dtype=complex)
    if X.shape != (T.d, T.d):
        raise ValueError(f"X has shape {X.shape}, expected {(T.d, T.d)}")
    out = np.zeros_like(X)
    for M in T.matrices:
        out += M @ X @ M.conj().T
    return hermitian_part(out)


def defect_power(T: OperatorTuple, p: int) -> np.ndarray:
    """The hereditary power ``(I - sigma_T)^p(I)`` by iterated differences."""
    if p < 0:
        raise ValueError(f"p must be non-negative, got {p}")
    X = np.eye(T.d, dtype=complex)
    for _ in range(p):
        X = X - apply_sigma(T, X)
    return hermitian_part(X)


def defect_power_alternating(T: OperatorTuple, p: int) -> np.ndarray:
    """``(I - sigma_T)^p(I)`` from the alternating multinomial sum.

    ``sum_j (-1)^j C(p, j) sum_{|k|=j} rho_1(k) T^k T^{*k}``, evaluated term by
    term.  Used as an independent cross-check of :func:`defect_power`.
    """
    powers = PowerTable(T)
    out = np.zeros((T.d, T.d), dtype=complex)
    for j in range(p + 1):
        layer = np.zeros_like(out)
        for k in homogeneous_indices(T.n, j):
            Tk = powers(k)
            layer += rho(1, k) * (Tk @ Tk.conj().T)
        out += (-1) ** j * comb(p, j) * layer
    return hermitian_part(out)


@dataclass(frozen=True)
class HypercontractionReport:
    is_hypercontraction: bool
    m: int
    min_eig_p1: float
    min_eig_pm: float
    tol: float

    def __bool__(self) -> bool:
        return self.is_hypercontraction


def _min_eig(X: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(hermitian_part(X))[0])


def is_m_hypercontraction(T: OperatorTuple, m: int, tol: float = 1e-12) -> HypercontractionReport:
    """Test positivity of ``(I - sigma_T)^p(I)`` for ``p = 1`` and ``p = m``.

    Both powers are tested directly; nothing is inferred for intermediate
    orders.
    """
    if m < 1:
        raise ValueError(f"m must be at least 1, got {m}")
    e1 = _min_eig(defect_power(T, 1))
    em = e1 if m == 1 else _min_eig(defect_power(T, m))
    ok = e1 >= -tol and em >= -tol
    return HypercontractionReport(ok, m, e1, em, tol)


def _weighted_orbit_sum(T: OperatorTuple, m: int, X: np.ndarray, N: int) -> np.ndarray:
    """``sum_{|k| <= N} rho_m(k) T^k X T^{*k}`` using graded layers.

    Within a layer, ``sum_{|k|=j} rho_m(k) T^k X T^{*k}`` equals
    ``comb(m+j-1, j) sigma_T^j(X)`` because ``rho_m(k) = comb(m+|k|-1, |k|) rho_1(k)``.
    For ``m = 0`` only the ``k = 0`` term survives.
    """
    out = X.copy()
    if m == 0:
        return hermitian_part(out)
    layer = X
    for j in range(1, N + 1):
        layer = apply_sigma(T, layer)
        out = out + comb(m + j - 1, j) * layer
    return hermitian_part(out)


def dilation_tail(T: OperatorTuple, m: int, N: int, D2: np.ndarray | None = None) -> float:
    """``||I - sum_{|k|<=N} rho_m(k) T^k D^2 T^{*k}||`` with ``D^2 = (I-sigma_T)^m(I)``."""
    if D2 is None:
        D2 = defect_power(T, m)
    S = _weighted_orbit_sum(T, m, D2, N)
    return _opnorm(np.eye(T.d) - S)


@dataclass(frozen=True)
class PurityCertificate:
    """Evidence for or against purity of a row contraction.

    Attributes
    ----------
    iterates : tuple of float
        ``||sigma_T^p(I)||`` for ``p = 1, ..., P`` (stops early once zero).
    nilpotency_order : int or None
        Smallest ``nu`` with ``sigma_T^nu(I) = 0`` up to 1e-14.
    verdict : str
        ``"pure"``, ``"not-pure"`` or ``"inconclusive"``.
    tail_bound : float or None
        Dilation tail at degree `degree` for order `m`.
    heuristic : str
        How a ``"not-pure"`` verdict was reached, if it was.
    """

    iterates: tuple
    nilpotency_order: int | None
    verdict: str
    tail_bound: float | None = None
    m: int = 1
    degree: int | None = None
    heuristic: str = ""

    @property
    def is_pure(self) -> bool:
        return self.verdict == "pure"


NILPOTENT_TOL = 1e-14


def purity_certificate(
    T: OperatorTuple,
    P: int = 200,
    tol: float = 1e-12,
    m: int = 1,
    degree: int | None = None,
    window: int = 10,
    stall: float = 1e-6,
) -> PurityCertificate:
    """Certify whether ``sigma_T^p(I) -> 0``.

    Parameters
    ----------
    T : OperatorTuple
        A row contraction.
    P : int
        Maximal number of iterations.
    tol : float
        An iterate below `tol` certifies purity.
    m : int
        Order used for the dilation tail bound.
    degree : int, optional
        Truncation degree for the tail bound.  Defaults to the nilpotency
        order when one is found, otherwise no tail is computed.
    window, stall : int, float
        Stagnation heuristic: a relative change below `stall` across
        `window` consecutive iterates, all above `tol`, gives ``"not-pure"``.

    Returns
    -------
    PurityCertificate
    """
    X = np.eye(T.d, dtype=complex)
    iterates: list[float] = []
    nu = None
    verdict = "inconclusive"
    heuristic = ""
    for p in range(1, P + 1):
        X = apply_sigma(T, X)
        val = _opnorm(X)
        iterates.append(val)
        if val <= NILPOTENT_TOL:
            nu = p
            verdict = "pure"
            break
        if val < tol:
            verdict = "pure"
            break
        if len(iterates) > window:
            old = iterates[-1 - window]
            if old > tol and abs(old - val) <= stall * old:
                verdict = "not-pure"
                heuristic = (
                    f"relative change {abs(old - val) / old:.2e} over {window} steps "
                    f"below {stall:g}"
                )
                break
    if degree is None and nu is not None:
        degree = nu
    tail = None
    if degree is not None:
        tail = dilation_tail(T, m, degree)
    return PurityCertificate(tuple(iterates), nu, verdict, tail, m, degree, heuristic)


def nilpotency_order(T: OperatorTuple, P: int | None = None) -> int | None:
    """Smallest ``nu`` with ``sigma_T^nu(I) = 0``, or None."""
    P = P if P is not None else max(T.d * T.n, T.d) + 1
    X = np.eye(T.d, dtype=complex)
    for p in range(1, P + 1):
        X = apply_sigma(T, X)
        if _opnorm(X) <= NILPOTENT_TOL:
            return p
    return None


class NotHypercontractionError(ValueError):
    pass


@dataclass(frozen=True)
class DefectData:
    """The defect operator ``D_{m,T^*}`` with an isometric range factor.

    Attributes
    ----------
    m : int
    defect_operator : ndarray
        ``d x d`` positive square root of ``(I - sigma_T)^m(I)``.
    defect_rank : int
    defect_isometry : ndarray
        ``d x r`` matrix ``V`` with orthonormal columns spanning the range.
    eigenvalues : ndarray
        Retained eigenvalues of ``(I - sigma_T)^m(I)`` (length r).
    """

    m: int
    defect_operator: np.ndarray
    defect_rank: int
    defect_isometry: np.ndarray
    eigenvalues: np.ndarray

    @property
    def compressed(self) -> np.ndarray:
        """``V^* D`` as an ``r x d`` matrix (defect operator in range coordinates)."""
        return np.sqrt(self.eigenvalues)[:, None] * self.defect_isometry.conj().T


def psd_sqrt(X: np.ndarray, rank_tol: float = 1e-10):
    """Square root of a Hermitian PSD matrix with eigenvalue clamping.

    Returns
    -------
    root : ndarray
    V : ndarray
        Eigenvectors for eigenvalues above `rank_tol`.
    w : ndarray
        Those eigenvalues, in descending order.
    """
    w, U = np.linalg.eigh(hermitian_part(X))
    keep = w > rank_tol
    # Descending order gives a stable layout of the defect coordinates.
    idx = np.nonzero(keep)[0][::-1]
    V = U[:, idx]
    wk = w[idx]
    root = (V * np.sqrt(wk)) @ V.conj().T
    return hermitian_part(root), V, wk


def defect_data(T: OperatorTuple, m: int, rank_tol: float = 1e-10, tol: float = 1e-12) -> DefectData:
    """Defect operator ``[(I - sigma_T)^m(I)]^{1/2}`` and its range.

    Raises
    ------
    NotHypercontractionError
        If ``(I - sigma_T)^m(I)`` has an eigenvalue below ``-tol``.
    """
    D2 = defect_power(T, m)
    lo = _min_eig(D2)
    if lo < -tol:
        raise NotHypercontractionError(
            f"(I - sigma_T)^{m}(I) has eigenvalue {lo:.3e} < -{tol:g}; "
            f"T is not an {m}-hypercontraction"
        )
    root, V, w = psd_sqrt(D2, rank_tol)
    return DefectData(m, root, V.shape[1], V, w)


def orbit_blocks(T: OperatorTuple, dd: DefectData, weight_order: int, N: int) -> dict:
    """Blocks ``sqrt(rho_q(k)) V^* D T^{*k}`` for ``|k| <= N``.

    With ``q = m`` these are the rows of the dilation map and with
    ``q = m - 1`` the blocks of ``C_{m,T}``.
    """
    powers = PowerTable(T)
    Dc = dd.compressed
    out = {}
    for k in enumerate_indices(T.n, N):
        c = rho(weight_order, k)
        if c == 0:
            out[k] = np.zeros((dd.defect_rank, T.d), dtype=complex)
        else:
            out[k] = np.sqrt(float(c)) * (Dc @ powers.adjoint(k))
    return out
