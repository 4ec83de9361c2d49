"""Multi-index enumeration and exact coefficient combinatorics.

Multi-indices are plain tuples of non-negative integers.  Every series,
block matrix and Taylor table in the package is laid out in graded
lexicographic order: first by total degree ``|k|``, then by the entries,
with larger leading entries first, so ``(1, 0)`` precedes ``(0, 1)``.

All coefficients are computed with exact integer or rational arithmetic.
Conversion to floating point happens only where linear algebra starts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import Iterable, Iterator, Sequence

MultiIndex = tuple[int, ...]


def order(k: Sequence[int]) -> int:
    """Total degree ``|k|`` of a multi-index."""
    return sum(k)


def _homogeneous(n: int, j: int) -> Iterator[MultiIndex]:
    # Leading entry runs from j down to 0 so the result is lexicographically
    # descending within a fixed degree.
    if n == 1:
        yield (j,)
        return
    for first in range(j, -1, -1):
        for rest in _homogeneous(n - 1, j - first):
            yield (first,) + rest


@lru_cache(maxsize=None)
def homogeneous_indices(n: int, j: int) -> tuple[MultiIndex, ...]:
    """All multi-indices of length `n` with total degree exactly `j`."""
    if n < 1 or j < 0:
        raise ValueError(f"need n >= 1 and j >= 0, got n={n}, j={j}")
    return tuple(_homogeneous(n, j))


@lru_cache(maxsize=None)
def enumerate_indices(n: int, N: int) -> tuple[MultiIndex, ...]:
    """Enumerate every multi-index of length `n` with ``|k| <= N``.

    Parameters
    ----------
    n : int
        Number of variables, at least 1.
    N : int
        Maximal total degree, at least 0.

    Returns
    -------
    tuple of tuple of int
        The indices in graded lexicographic order.  The length is
        ``comb(n + N, n)``.

    Examples
    --------
    >>> enumerate_indices(2, 1)
    ((0, 0), (1, 0), (0, 1))
    """
    if n < 1 or N < 0:
        raise ValueError(f"need n >= 1 and N >= 0, got n={n}, N={N}")
    out: list[MultiIndex] = []
    for j in range(N + 1):
        out.extend(homogeneous_indices(n, j))
    return tuple(out)


def count_indices(n: int, N: int) -> int:
    """Number of multi-indices with ``|k| <= N``; zero when ``N < 0``."""
    if N < 0:
        return 0
    return comb(n + N, n)


@lru_cache(maxsize=None)
def index_map(n: int, N: int) -> dict[MultiIndex, int]:
    """Position of each multi-index in :func:`enumerate_indices`."""
    return {k: i for i, k in enumerate(enumerate_indices(n, N))}


def graded_key(k: Sequence[int]) -> tuple:
    """Sort key realizing graded lexicographic order."""
    return (sum(k), tuple(-x for x in k))


def unit(n: int, i: int) -> MultiIndex:
    """The multi-index ``e_i`` (zero-based `i`)."""
    return tuple(1 if j == i else 0 for j in range(n))


def add(k: Sequence[int], l: Sequence[int]) -> MultiIndex:
    return tuple(a + b for a, b in zip(k, l))


def subtract(k: Sequence[int], l: Sequence[int]) -> MultiIndex | None:
    """Return ``k - l`` or None when some entry would be negative."""
    out = tuple(a - b for a, b in zip(k, l))
    if any(x < 0 for x in out):
        return None
    return out


def dominates(k: Sequence[int], l: Sequence[int]) -> bool:
    """True when ``k >= l`` entrywise."""
    return all(a >= b for a, b in zip(k, l))


@lru_cache(maxsize=None)
def rho(m: int, k: MultiIndex) -> int:
    """Multinomial coefficient ``rho_m(k) = (m+|k|-1)! / (k! (m-1)!)``.

    For ``m = 0`` this is the indicator of ``k = 0``.  The value is always a
    non-negative integer and is computed exactly.

    Parameters
    ----------
    m : int
        Non-negative order.
    k : tuple of int
        Multi-index.

    Returns
    -------
    int
    """
    k = tuple(k)
    if m < 0:
        raise ValueError(f"m must be non-negative, got {m}")
    if any(x < 0 for x in k):
        raise ValueError(f"multi-index entries must be non-negative, got {k}")
    if m == 0:
        return 1 if not any(k) else 0
    num = factorial(m + sum(k) - 1)
    den = factorial(m - 1)
    for x in k:
        den *= factorial(x)
    return num // den


def beta_m(m: int, j: int) -> Fraction:
    """The weight ``beta_j(m) = 1 / comb(m+j-1, j)``."""
    if m < 1 or j < 0:
        raise ValueError(f"need m >= 1 and j >= 0, got m={m}, j={j}")
    return Fraction(1, comb(m + j - 1, j))


def gamma_m(m: int, j: int) -> Fraction:
    """The derived weight ``gamma_j(m)``.

    Equals ``1 / comb(m+j-2, j)`` for ``j >= 1`` and ``m >= 2``, and 1 at
    ``j = 0``.  For ``m = 1`` the sequence is undefined beyond ``j = 0``
    because ``beta(1)`` is constant.
    """
    if j == 0:
        return Fraction(1)
    if m < 2:
        raise ValueError("gamma(1) is undefined for j >= 1 (beta(1) is constant)")
    return Fraction(1, comb(m + j - 2, j))


def _as_exact(x):
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    return x


def gamma_from_beta(beta: Iterable) -> list:
    """Derived sequence ``gamma_j = (1/beta_j - 1/beta_{j-1})^{-1}``.

    Parameters
    ----------
    beta : sequence of numbers or WeightSequence
        A prefix ``beta_0, ..., beta_N`` with ``beta_0 = 1``, strictly
        decreasing.  Integers and fractions are handled exactly.

    Returns
    -------
    list
        ``gamma_0, ..., gamma_N`` with ``gamma_0 = 1``.

    Raises
    ------
    ValueError
        If ``beta_0 != 1``, an entry is not positive, or the prefix is not
        strictly decreasing.
    """
    if isinstance(beta, WeightSequence):
        beta = beta.values
    vals = [_as_exact(b) for b in beta]
    if not vals:
        raise ValueError("weight prefix is empty")
    if vals[0] != 1:
        raise ValueError(f"beta_0 must equal 1, got {vals[0]}")
    gam = [Fraction(1) if isinstance(vals[0], Fraction) else 1.0]
    for j in range(1, len(vals)):
        if not vals[j] > 0:
            raise ValueError(f"beta_{j} = {vals[j]} is not positive")
        diff = 1 / vals[j] - 1 / vals[j - 1]
        if not diff > 0:
            raise ValueError(
                f"beta is not strictly decreasing at j={j}: "
                f"1/beta_{j} - 1/beta_{j-1} = {diff} <= 0"
            )
        gam.append(1 / diff)
    return gam


@dataclass(frozen=True)
class WeightSequence:
    """Finite prefix of a weight sequence ``beta_0 = 1 > beta_1 > ...``.

    The asymptotic condition ``liminf beta_j^{1/j} >= 1`` cannot be decided
    from a prefix; it is kept as metadata only.

    Parameters
    ----------
    values : tuple
        ``beta_0, ..., beta_N``.
    strict : bool
        When False, a constant sequence is accepted.  This is the
        degenerate ``beta(1)`` case whose derived ``gamma`` is infinite
        beyond degree zero.
    metadata : dict
        Free-form annotations, e.g. a note on the liminf condition.
    """

    values: tuple
    strict: bool = True
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        vals = tuple(_as_exact(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if self.strict:
            gamma_from_beta(vals)
        else:
            if vals[0] != 1 or any(v != 1 for v in vals):
                raise ValueError("a non-strict weight sequence must be constant 1")

    @classmethod
    def from_m(cls, m: int, N: int) -> "WeightSequence":
        """The prefix of ``beta(m)`` up to degree `N`."""
        vals = tuple(beta_m(m, j) for j in range(N + 1))
        meta = {"family": f"beta({m})", "liminf_condition": "holds (polynomial decay)"}
        return cls(vals, strict=(m >= 2 or N == 0), metadata=meta)

    @classmethod
    def from_gamma(cls, gamma: Sequence, metadata: dict | None = None) -> "WeightSequence":
        """Build ``beta`` from positive increments ``1/beta_j - 1/beta_{j-1} = 1/gamma_j``."""
        inv = [Fraction(1)]
        for g in list(gamma)[1:]:
            g = _as_exact(g)
            if not g > 0:
                raise ValueError(f"gamma entries must be positive, got {g}")
            inv.append(inv[-1] + 1 / g)
        return cls(tuple(1 / x for x in inv), metadata=dict(metadata or {}))

    @property
    def N(self) -> int:
        return len(self.values) - 1

    def __getitem__(self, j: int):
        return self.values[j]

    def __len__(self) -> int:
        return len(self.values)

    @property
    def gamma(self) -> list:
        if not self.strict:
            raise ValueError("gamma is undefined for the constant sequence beta(1)")
        return gamma_from_beta(self.values)

    def inverse_gamma(self) -> list:
        """``1/gamma_j``; zero beyond degree 0 for the constant sequence."""
        out = [Fraction(1)]
        for j in range(1, len(self.values)):
            out.append(1 / self.values[j] - 1 / self.values[j - 1])
        return out
