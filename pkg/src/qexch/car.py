"""Finite CAR algebra in ``M_{2^n}`` via Jordan-Wigner.

Mode ``j`` (1-based) is ``a_j = Z^{⊗(j-1)} ⊗ σ⁻ ⊗ I^{⊗(n-j)}`` with
``σ⁻ = [[0, 1], [0, 0]]`` and ``Z = diag(1, -1)``; the all-zero basis vector is
the Fock vacuum.  States are density matrices paired by the trace,
``φ(X) = tr(ρ X)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property, reduce
from typing import Sequence

import numpy as np

from .errors import InternalConsistencyError, RejectedInputError, ResourceLimitError
from .exchange import Permutation, enumerate_perms
from .numkernel import CMat, adjoint, anticommutator, hermitian_min_eig

MAX_MODES = 8
MAX_SYMMETRIZE = 6

SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)
I2 = np.eye(2, dtype=complex)


def _kron_all(mats: Sequence[CMat]) -> CMat:
    return reduce(np.kron, mats)


@dataclass(frozen=True, eq=False)
class CarSystem:
    n: int
    a: tuple
    parity_unitary: CMat

    @property
    def dim(self) -> int:
        return 2**self.n

    def ann(self, j: int) -> CMat:
        return self.a[j - 1]

    def cre(self, j: int) -> CMat:
        return adjoint(self.a[j - 1])

    @cached_property
    def _unitaries(self) -> dict:
        return {}

    def unitary(self, g: Permutation) -> CMat:
        cache = self._unitaries
        if g not in cache:
            cache[g] = permutation_unitary(self, g)
        return cache[g]

    def all_unitaries(self) -> list[CMat]:
        if self.n > MAX_SYMMETRIZE:
            raise ResourceLimitError(f"n = {self.n} exceeds the n! guard {MAX_SYMMETRIZE}")
        return [self.unitary(g) for g in enumerate_perms(range(1, self.n + 1))]


def jw_generators(n: int) -> CarSystem:
    if not 1 <= n <= MAX_MODES:
        raise ResourceLimitError(f"number of modes must be in 1..{MAX_MODES}, got {n}")
    a = tuple(_kron_all([Z] * j + [SIGMA_MINUS] + [I2] * (n - j - 1)) for j in range(n))
    return CarSystem(n, a, _kron_all([Z] * n))


def car_residual(sys: CarSystem) -> float:
    """Largest entry deviation from the anticommutation relations."""
    worst = 0.0
    eye = np.eye(sys.dim)
    for j in range(1, sys.n + 1):
        for k in range(j, sys.n + 1):
            checks = [
                anticommutator(sys.cre(j), sys.ann(k)) - (eye if j == k else 0),
                anticommutator(sys.ann(j), sys.ann(k)),
                anticommutator(sys.cre(j), sys.cre(k)),
            ]
            if j != k:
                checks.append(anticommutator(sys.cre(k), sys.ann(j)))
            worst = max(worst, *(float(np.max(np.abs(c))) for c in checks))
    return worst


def parity_residual(sys: CarSystem) -> float:
    th = sys.parity_unitary
    eye = np.eye(sys.dim)
    worst = max(float(np.max(np.abs(th @ th - eye))), float(np.max(np.abs(th @ adjoint(th) - eye))))
    for j in range(1, sys.n + 1):
        worst = max(worst, float(np.max(np.abs(th @ sys.ann(j) @ th + sys.ann(j)))))
    return worst


def parity(sys: CarSystem, x: CMat) -> CMat:
    """The parity automorphism applied to a matrix."""
    return sys.parity_unitary @ x @ sys.parity_unitary


def _null_vector(m: CMat, tol: float = 1e-10) -> np.ndarray:
    _, s, vh = np.linalg.svd(m)
    null = [k for k in range(vh.shape[0]) if (s[k] if k < len(s) else 0.0) <= tol]
    if len(null) != 1:
        raise InternalConsistencyError(f"intertwiner solution space has dimension {len(null)}, expected 1")
    return vh[null[0]].conj()


def _occupied(k: int, n: int) -> list[int]:
    # basis index bits, most significant = mode 1
    return [j + 1 for j in range(n) if (k >> (n - 1 - j)) & 1]


def permutation_unitary(sys: CarSystem, g: Permutation, tol: float = 1e-10) -> CMat:
    """Unitary ``U`` with ``U a_j U^* = a_{g(j)}``, defined up to a global phase.

    Any intertwiner ``X`` (``X a_j = a_{g(j)} X`` and ``X a_j^† = a_{g(j)}^† X``)
    sends the vacuum into the joint kernel of the ``a_{g(j)}``; that kernel is
    found numerically and must be one-dimensional.  ``X`` is then fixed on
    every occupation basis vector by the creators.
    """
    n = sys.n
    if any(not 1 <= i <= n for i in g.support):
        raise RejectedInputError(f"permutation must act inside 1..{n}")
    psi = _null_vector(np.vstack([sys.ann(g(j)) for j in range(1, n + 1)]), tol)
    vac = np.zeros(sys.dim, dtype=complex)
    vac[0] = 1
    u = np.zeros((sys.dim, sys.dim), dtype=complex)
    for k in range(sys.dim):
        src, dst = vac, psi
        for j in reversed(_occupied(k, n)):
            src = sys.cre(j) @ src
            dst = sys.cre(g(j)) @ dst
        sign = src[k]
        if abs(abs(sign) - 1) > tol:
            raise InternalConsistencyError("creator string did not reach the expected basis vector")
        u[:, k] = dst / sign
    if np.max(np.abs(u @ adjoint(u) - np.eye(sys.dim))) > tol:
        raise InternalConsistencyError("constructed intertwiner is not unitary")
    for j in range(1, n + 1):
        if np.max(np.abs(u @ sys.ann(j) @ adjoint(u) - sys.ann(g(j)))) > tol:
            raise InternalConsistencyError(f"intertwiner fails on a_{j}")
    return u


# -- states -----------------------------------------------------------------


@dataclass(frozen=True)
class SiteState:
    rho: CMat

    def __post_init__(self):
        r = np.asarray(self.rho, dtype=complex)
        object.__setattr__(self, "rho", r)
        if r.shape != (2, 2):
            raise RejectedInputError("site state must be 2x2")
        _check_density(r)

    @property
    def even(self) -> bool:
        return bool(np.allclose(self.rho @ Z, Z @ self.rho, atol=1e-12))

    def expect(self, a: CMat) -> complex:
        return complex(np.trace(self.rho @ a))


def _check_density(r: CMat, tol: float = 1e-12) -> None:
    if abs(np.trace(r) - 1) > 1e-10:
        raise RejectedInputError("density matrix must have unit trace")
    if hermitian_min_eig(r, 1e-10) < -tol:
        raise RejectedInputError("density matrix is not positive semidefinite")


@dataclass(frozen=True)
class CarState:
    density: CMat

    def __post_init__(self):
        r = np.asarray(self.density, dtype=complex)
        object.__setattr__(self, "density", r)
        _check_density(r)

    def expect(self, x: CMat) -> complex:
        return complex(np.trace(self.density @ x))


def product_state(site: SiteState, n: int) -> CarState:
    return CarState(_kron_all([site.rho] * n))


def mixture(states: Sequence[CarState], weights: Sequence[float]) -> CarState:
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
        raise RejectedInputError("weights must be a probability vector")
    return CarState(sum(wk * s.density for wk, s in zip(w, states)))


def state_permute(st: CarState, sys: CarSystem, g: Permutation) -> CarState:
    """The state ``φ ∘ α_g``."""
    u = sys.unitary(g)
    return CarState(adjoint(u) @ st.density @ u)


def symmetrize(st: CarState, sys: CarSystem) -> CarState:
    us = sys.all_unitaries()
    return CarState(sum(adjoint(u) @ st.density @ u for u in us) / len(us))


def fixed_point_expectation(sys: CarSystem, x: CMat) -> CMat:
    """Average of ``U_g X U_g^*`` over all mode permutations."""
    us = sys.all_unitaries()
    return sum(u @ x @ adjoint(u) for u in us) / len(us)


def site_embedding(sys: CarSystem, j: int, a: CMat) -> CMat:
    """Image of a ``2x2`` matrix under the *-homomorphism ``M_2 -> CAR`` of mode ``j``.

    Matrix units go to ``e_00 -> a a^†``, ``e_01 -> a``, ``e_10 -> a^†``,
    ``e_11 -> a^† a``.
    """
    a = np.asarray(a, dtype=complex)
    an, cr = sys.ann(j), sys.cre(j)
    return a[0, 0] * an @ cr + a[0, 1] * an + a[1, 0] * cr + a[1, 1] * cr @ an


def monomial_test_set(sys: CarSystem) -> list[tuple[tuple, CMat]]:
    """All ``a^#_i a^#_j`` with ``i != j``, labelled by ``((i, #), (j, #))``."""
    ops = {}
    for j in range(1, sys.n + 1):
        ops[(j, "a")] = sys.ann(j)
        ops[(j, "c")] = sys.cre(j)
    out = []
    for i, j in itertools.permutations(range(1, sys.n + 1), 2):
        for si, sj in itertools.product("ac", repeat=2):
            out.append((((i, si), (j, sj)), ops[(i, si)] @ ops[(j, sj)]))
    return out


def transpositions(n: int) -> list[Permutation]:
    return [Permutation.transposition(i, j) for i, j in itertools.combinations(range(1, n + 1), 2)]


def evenness_gap(st: CarState, sys: CarSystem) -> float:
    """Max over transpositions and the monomial test set of ``|φ(α_g(m)) - φ(m)|``."""
    worst = 0.0
    for g in transpositions(sys.n):
        moved = state_permute(st, sys, g)
        for _, m in monomial_test_set(sys):
            worst = max(worst, abs(moved.expect(m) - st.expect(m)))
    return worst


TWO_BY_TWO_TEST_SET = (
    np.array([[1, 0], [0, 0]], dtype=complex),
    np.array([[0, 0], [0, 1]], dtype=complex),
    np.array([[0, 1], [0, 0]], dtype=complex),
    np.array([[0, 0], [1, 0]], dtype=complex),
    np.array([[0.3, 0.2 - 0.1j], [0.5j, -0.7]], dtype=complex),
)


def definetti_mixture_gap(sys: CarSystem, sites: Sequence[SiteState], weights: Sequence[float]) -> float:
    """Largest ``|φ(ι_1(A) ι_2(B)) - Σ_k w_k ψ_k(A) ψ_k(B)|`` over the 2x2 test set.

    ``φ`` is the mixture of product states ``Σ_k w_k ψ_k^{⊗n}``.
    """
    if sys.n < 2:
        raise RejectedInputError("need at least two modes")
    st = mixture([product_state(s, sys.n) for s in sites], weights)
    worst = 0.0
    for a in TWO_BY_TWO_TEST_SET:
        for b in TWO_BY_TWO_TEST_SET:
            lhs = st.expect(site_embedding(sys, 1, a) @ site_embedding(sys, 2, b))
            rhs = sum(w * s.expect(a) * s.expect(b) for w, s in zip(weights, sites))
            worst = max(worst, abs(lhs - rhs))
    return worst
