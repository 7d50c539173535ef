"""Truncated q-deformed Fock space over C^d in monomial coordinates.

Vectors are expanded over the monomials ``e_{i1} ⊗ ... ⊗ e_{in}`` (``n <= N``),
which are not orthogonal for ``q != 0``; the q-inner product is carried by an
explicit Gram matrix.  The inner product is linear in its first argument:
``<x, y>_q = y^* G x``.

Creators drop their degree ``N + 1`` images, so operator identities are only
meaningful on input degrees ``<= N - 1``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import RejectedInputError, ResourceLimitError
from .exchange import Permutation
from .numkernel import CMat, frob_norm, hermitian_min_eig

MAX_DEGREE = 8


def inversions(p: Sequence[int]) -> int:
    """Number of pairs ``a < b`` with ``p[a] > p[b]``."""
    return sum(1 for a, b in itertools.combinations(range(len(p)), 2) if p[a] > p[b])


@lru_cache(maxsize=None)
def _perms_with_inversions(n: int) -> tuple:
    if n > MAX_DEGREE:
        raise ResourceLimitError(f"degree {n} exceeds {MAX_DEGREE}")
    return tuple((p, inversions(p)) for p in itertools.permutations(range(n)))


def q_inner(u: Sequence[int], v: Sequence[int], q: float) -> float:
    """q-inner product of two monomials over an orthonormal one-particle basis."""
    if len(u) != len(v):
        return 0.0
    total = 0.0
    for p, inv in _perms_with_inversions(len(u)):
        if all(u[k] == v[p[k]] for k in range(len(u))):
            total += q**inv
    return total


@dataclass(frozen=True)
class MonomialBasis:
    d: int
    N: int
    vectors: tuple = field(init=False)
    index: dict = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        if self.d < 1 or self.N < 0:
            raise RejectedInputError("need d >= 1 and N >= 0")
        vecs = tuple(t for n in range(self.N + 1) for t in itertools.product(range(1, self.d + 1), repeat=n))
        object.__setattr__(self, "vectors", vecs)
        object.__setattr__(self, "index", {t: k for k, t in enumerate(vecs)})

    def __len__(self) -> int:
        return len(self.vectors)

    def degree_slice(self, n: int) -> slice:
        start = sum(self.d**m for m in range(n))
        return slice(start, start + self.d**n)

    def low_degree_mask(self, max_degree: int) -> np.ndarray:
        return np.array([len(t) <= max_degree for t in self.vectors])


class QSpace:
    def __init__(self, d: int, N: int, q: float):
        if not -1 < q < 1:
            raise RejectedInputError("q must lie in (-1,1)")
        if N > MAX_DEGREE:
            raise ResourceLimitError(f"truncation degree {N} exceeds {MAX_DEGREE}")
        self.basis = MonomialBasis(d, N)
        self.q = float(q)
        dim = len(self.basis)
        g = np.zeros((dim, dim), dtype=complex)
        for n in range(N + 1):
            sl = self.basis.degree_slice(n)
            g[sl, sl] = self._gram_block(n)
        self.gram_matrix = g
        self.vacuum = np.zeros(dim, dtype=complex)
        self.vacuum[0] = 1

    @property
    def d(self) -> int:
        return self.basis.d

    @property
    def N(self) -> int:
        return self.basis.N

    @property
    def dim(self) -> int:
        return len(self.basis)

    def _gram_block(self, n: int) -> CMat:
        mons = self.basis.vectors[self.basis.degree_slice(n)]
        block = np.empty((len(mons), len(mons)), dtype=complex)
        for a, u in enumerate(mons):
            for b in range(a, len(mons)):
                block[a, b] = block[b, a] = q_inner(u, mons[b], self.q)
        return block

    def inner(self, x: np.ndarray, y: np.ndarray) -> complex:
        return complex(np.vdot(y, self.gram_matrix @ x))

    def monomial(self, t: Sequence[int]) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[self.basis.index[tuple(t)]] = 1
        return v


def gram(space: QSpace, degree: int) -> CMat:
    if not 0 <= degree <= space.N:
        raise RejectedInputError(f"degree {degree} outside 0..{space.N}")
    sl = space.basis.degree_slice(degree)
    return space.gram_matrix[sl, sl].copy()


@dataclass(frozen=True)
class LadderOps:
    creator: CMat
    annihilator: CMat
    field: CMat


def _check_vec(space: QSpace, f) -> np.ndarray:
    f = np.asarray(f, dtype=complex).reshape(-1)
    if f.shape != (space.d,):
        raise RejectedInputError(f"one-particle vector must have length {space.d}")
    return f


def ladder_ops(space: QSpace, f) -> LadderOps:
    """Creator, annihilator and field operator for the one-particle vector ``f``."""
    f = _check_vec(space, f)
    dim, idx, q = space.dim, space.basis.index, space.q
    cre = np.zeros((dim, dim), dtype=complex)
    ann = np.zeros((dim, dim), dtype=complex)
    for col, t in enumerate(space.basis.vectors):
        if len(t) < space.N:
            for i in range(space.d):
                if f[i] != 0:
                    cre[idx[(i + 1,) + t], col] += f[i]
        for k in range(len(t)):
            # <e_{t_k}, f> = conj(f_{t_k})
            ann[idx[t[:k] + t[k + 1:]], col] += q**k * np.conj(f[t[k] - 1])
    return LadderOps(cre, ann, cre + ann)


def unit_vector(d: int, i: int) -> np.ndarray:
    e = np.zeros(d, dtype=complex)
    e[i - 1] = 1
    return e


def field_op(space: QSpace, i: int) -> CMat:
    """``s_i = a_i + a_i^dagger``."""
    return ladder_ops(space, unit_vector(space.d, i)).field


def vacuum_moment(space: QSpace, word: Sequence[CMat]) -> complex:
    """``<X_1 ... X_k Omega, Omega>_q``.

    Exact whenever every component created along the way can still be
    annihilated, i.e. for words of length ``<= 2 N``.
    """
    v = space.vacuum
    for op in reversed(word):
        op = np.asarray(op)
        if op.shape != (space.dim, space.dim):
            raise RejectedInputError(f"operator shape {op.shape} does not match the space")
        v = op @ v
    return space.inner(v, space.vacuum)


def field_moment(space: QSpace, indices: Sequence[int]) -> complex:
    """Vacuum moment of ``s_{i_1} ... s_{i_k}``."""
    cache: dict[int, CMat] = {}
    ops = []
    for i in indices:
        if i not in cache:
            cache[i] = field_op(space, i)
        ops.append(cache[i])
    return vacuum_moment(space, ops)


def index_action(space: QSpace, g: Permutation) -> CMat:
    """Monomial relabeling ``e_{i1}⊗...⊗e_{in} -> e_{g(i1)}⊗...⊗e_{g(in)}``; ``g`` must preserve ``{1..d}``."""
    if any(not 1 <= i <= space.d or not 1 <= g(i) <= space.d for i in g.support):
        raise RejectedInputError("permutation must act inside {1..d}")
    idx = space.basis.index
    u = np.zeros((space.dim, space.dim), dtype=complex)
    for col, t in enumerate(space.basis.vectors):
        u[idx[tuple(g(i) for i in t)], col] = 1
    return u


@dataclass
class QFockReport:
    d: int
    N: int
    q: float
    gram_min_eig: list[float]
    commutation_residual: float
    adjointness_residual: float

    def as_dict(self) -> dict:
        return {
            "d": self.d,
            "N": self.N,
            "q": self.q,
            "gram_min_eig": self.gram_min_eig,
            "commutation_residual": self.commutation_residual,
            "adjointness_residual": self.adjointness_residual,
        }


def commutation_residual(space: QSpace, f, g) -> float:
    """Frobenius norm of ``a(f) a^†(g) - q a^†(g) a(f) - <g,f> 1`` on input degrees ``<= N - 1``."""
    f, g = _check_vec(space, f), _check_vec(space, g)
    af = ladder_ops(space, f).annihilator
    cg = ladder_ops(space, g).creator
    rel = af @ cg - space.q * cg @ af - np.vdot(f, g) * np.eye(space.dim)
    cols = space.basis.low_degree_mask(space.N - 1)
    return frob_norm(rel[:, cols])


def adjointness_residual(space: QSpace, f) -> float:
    """Frobenius norm of ``G a^†(f) - a(f)^* G`` on input degrees ``<= N - 1``."""
    ops = ladder_ops(space, _check_vec(space, f))
    g = space.gram_matrix
    rel = g @ ops.creator - ops.annihilator.conj().T @ g
    cols = space.basis.low_degree_mask(space.N - 1)
    return frob_norm(rel[:, cols])


def report(space: QSpace, rng: np.random.Generator, samples: int = 20) -> QFockReport:
    mins = [hermitian_min_eig(gram(space, n)) for n in range(space.N + 1)]
    comm, adj = 0.0, 0.0
    for _ in range(samples):
        f = rng.normal(size=space.d) + 1j * rng.normal(size=space.d)
        g = rng.normal(size=space.d) + 1j * rng.normal(size=space.d)
        comm = max(comm, commutation_residual(space, f, g))
        adj = max(adj, adjointness_residual(space, f))
    return QFockReport(space.d, space.N, space.q, mins, comm, adj)
