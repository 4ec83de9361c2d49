"""Deterministic test corpus of pure commuting tuples.

Jointly nilpotent members come from three constructions:

* polynomials without constant term in one strictly upper-triangular
  generator;
* Kronecker pairs ``(A x I, I x B)``;
* compressions of the shifts to low-degree polynomials in ``H_3``.

Scalar and diagonal members are pure but not nilpotent.  Every random member
records the seed that produced it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .rkhs import TruncatedSpace, shift_matrix
from .tuples import OperatorTuple, is_m_hypercontraction, nilpotency_order

ROW_NORM = 0.3


@dataclass(frozen=True)
class CorpusMember:
    name: str
    tuple: OperatorTuple
    family: str
    seed: int | None = None
    nilpotent: bool = True
    metadata: dict = field(default_factory=dict)


def _scale(mats: list, target: float = ROW_NORM) -> list:
    norm = np.linalg.norm(np.hstack(mats), 2)
    if norm == 0:
        return mats
    return [M * (target / norm) for M in mats]


def _strict_upper(rng: np.random.Generator, d: int) -> np.ndarray:
    # The unit superdiagonal keeps high powers from collapsing below the
    # nilpotency tolerance.
    A = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return np.eye(d, k=1) + 0.3 * np.triu(A, 1)


def polynomial_family(n: int, d: int, seed: int) -> OperatorTuple:
    """``T_i = p_i(N)`` with ``N`` strictly upper triangular and ``p_i(0) = 0``."""
    rng = np.random.default_rng(seed)
    N = _strict_upper(rng, d)
    powers = [np.linalg.matrix_power(N, j) for j in range(1, d)]
    mats = []
    for _ in range(n):
        c = rng.standard_normal(d - 1) + 1j * rng.standard_normal(d - 1)
        c[0] = 1.0 + 0.5 * abs(c[0])
        mats.append(sum(ci * P for ci, P in zip(c, powers)))
    return OperatorTuple(_scale(mats))


def kronecker_pair(d1: int, d2: int, seed: int) -> OperatorTuple:
    """``(A x I, I x B)`` for strictly upper-triangular ``A`` and ``B``."""
    rng = np.random.default_rng(seed)
    A = _strict_upper(rng, d1)
    B = _strict_upper(rng, d2)
    mats = [np.kron(A, np.eye(d2)), np.kron(np.eye(d1), B)]
    return OperatorTuple(_scale(mats))


def model_tuple(n: int, degree: int, p: int = 3) -> OperatorTuple:
    """Compression of ``M_z`` to polynomials of degree at most `degree` in ``H_p``."""
    space = TruncatedSpace.power(n, degree, 1, p)
    return OperatorTuple([shift_matrix(space, i) for i in range(n)])


def scalar_tuple(value: complex, d: int = 1) -> OperatorTuple:
    return OperatorTuple([value * np.eye(d)])


def diagonal_pair() -> OperatorTuple:
    return OperatorTuple([np.diag([0.3, 0.1]), np.diag([0.2, -0.25j])])


def jordan_pair() -> tuple:
    """Nilpotent Jordan block and a scaled copy; their defects have different ranks at m = 1."""
    J = np.array([[0.0, 1.0], [0.0, 0.0]])
    return OperatorTuple([J]), OperatorTuple([0.5 * J])


def generate_corpus(seed: int = 0, check_order: int = 3) -> list:
    """The default corpus: 24 nilpotent members plus 3 non-nilpotent ones.

    Raises
    ------
    RuntimeError
        If a generated member fails the `check_order`-hypercontraction test.
    """
    ss = np.random.SeedSequence(seed)
    seeds = [int(s.generate_state(1)[0]) for s in ss.spawn(32)]
    members = []
    it = iter(seeds)
    for n, d in [(1, 2), (1, 3), (1, 5), (1, 6), (2, 2), (2, 3), (2, 4), (2, 5), (2, 6),
                 (3, 3), (3, 4), (3, 5), (3, 6), (2, 4), (3, 2), (1, 4)]:
        s = next(it)
        members.append(CorpusMember(f"poly-n{n}-d{d}-{s % 10000:04d}", polynomial_family(n, d, s), "polynomial", s))
    for d1, d2 in [(2, 2), (2, 3), (3, 2), (2, 2)]:
        s = next(it)
        members.append(CorpusMember(f"kron-{d1}x{d2}-{s % 10000:04d}", kronecker_pair(d1, d2, s), "kronecker", s))
    for n, deg in [(1, 3), (1, 5), (2, 1), (2, 2)]:
        members.append(CorpusMember(f"model-n{n}-deg{deg}", model_tuple(n, deg), "model"))
    members.append(CorpusMember("scalar-half", scalar_tuple(0.5), "scalar", nilpotent=False))
    members.append(CorpusMember("scalar-half-d2", scalar_tuple(0.5, 2), "scalar", nilpotent=False))
    members.append(CorpusMember("diagonal-pair", diagonal_pair(), "diagonal", nilpotent=False))
    for mem in members:
        rep = is_m_hypercontraction(mem.tuple, check_order)
        if not rep:
            raise RuntimeError(f"corpus member {mem.name} is not a {check_order}-hypercontraction")
        if mem.nilpotent and nilpotency_order(mem.tuple) is None:
            raise RuntimeError(f"corpus member {mem.name} is not jointly nilpotent")
    return members


def nilpotent_members(members: list) -> list:
    return [m for m in members if m.nilpotent]
