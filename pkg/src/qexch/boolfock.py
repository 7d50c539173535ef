"""Boolean Fock space ``C ⊕ C^d`` with basis ``(e_#, e_1, ..., e_d)``.

The ladder operators are 0/1 integer matrices, so their algebraic identities
are checked exactly in integer arithmetic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Hashable

import numpy as np

from .errors import DegenerateRegimeError, RejectedInputError
from .exchange import Permutation
from .numkernel import CMat, hermitian_min_eig

VAC = "#"


@dataclass(frozen=True)
class BooleanSpace:
    d: int

    def __post_init__(self):
        if self.d < 1:
            raise RejectedInputError("need d >= 1")

    @property
    def dim(self) -> int:
        return self.d + 1

    @staticmethod
    def pos(x: Hashable) -> int:
        """Matrix index of ``'#'`` (0) or of site ``j`` (``j``)."""
        return 0 if x == VAC else int(x)


@dataclass(frozen=True)
class BooleanOps:
    b: dict
    bdag: dict
    r: dict


def elementary(dim: int, i: int, j: int) -> np.ndarray:
    e = np.zeros((dim, dim), dtype=np.int64)
    e[i, j] = 1
    return e


def boolean_ops(space: BooleanSpace) -> BooleanOps:
    """``b_j = |e_#><e_j|``, ``b_j^† = |e_j><e_#|``, ``r_j = b_j + b_j^†``."""
    dim = space.dim
    b = {j: elementary(dim, 0, j) for j in range(1, space.d + 1)}
    bdag = {j: m.T.copy() for j, m in b.items()}
    r = {j: b[j] + bdag[j] for j in b}
    return BooleanOps(b, bdag, r)


def matrix_units(ops: BooleanOps) -> dict:
    """All ``ε_xy`` over ``{#, 1..d}``, built only from products of ``b`` and ``b^†``."""
    sites = sorted(ops.b)
    i0 = sites[0]
    units = {(VAC, VAC): ops.b[i0] @ ops.bdag[i0]}
    for j in sites:
        units[(VAC, j)] = ops.b[j]
        units[(j, VAC)] = ops.bdag[j]
        for i in sites:
            units[(i, j)] = ops.bdag[i] @ ops.b[j]
    return units


def span_rank(mats) -> int:
    stacked = np.array([np.asarray(m, dtype=float).reshape(-1) for m in mats])
    return int(np.linalg.matrix_rank(stacked))


def ladder_products(ops: BooleanOps, max_len: int = 2) -> list[np.ndarray]:
    """Identity and all products of at most ``max_len`` operators from ``{b_j, b_j^†}``."""
    letters = list(ops.b.values()) + list(ops.bdag.values())
    dim = letters[0].shape[0]
    out = [np.eye(dim, dtype=np.int64)]
    for n in range(1, max_len + 1):
        for combo in itertools.product(letters, repeat=n):
            m = combo[0]
            for x in combo[1:]:
                m = m @ x
            out.append(m)
    return out


def generated_algebra_dim(gens, max_rounds: int = 16) -> int:
    """Dimension of the unital algebra generated by ``gens`` (closure under left multiplication)."""
    gens = [np.asarray(g, dtype=float) for g in gens]
    dim = gens[0].shape[0]
    span = [np.eye(dim)]
    rank = 1
    for _ in range(max_rounds):
        new = span + [g @ m for g in gens for m in span]
        basis = _row_basis(new)
        if len(basis) == rank:
            break
        span, rank = basis, len(basis)
    return rank


def _row_basis(mats) -> list[np.ndarray]:
    stacked = np.array([m.reshape(-1) for m in mats])
    _, s, vh = np.linalg.svd(stacked, full_matrices=False)
    k = int(np.sum(s > 1e-9 * max(s[0], 1.0)))
    n = int(np.sqrt(stacked.shape[1]))
    return [vh[i].reshape(n, n) for i in range(k)]


def relation_residuals(space: BooleanSpace) -> dict:
    """Integer deviations from the matrix-unit, ``r_i r_j`` and ``b b^†`` identities (all should be 0)."""
    ops = boolean_ops(space)
    units = matrix_units(ops)
    dim = space.dim
    pos = BooleanSpace.pos
    unit_dev = max(int(np.max(np.abs(m - elementary(dim, pos(x), pos(y))))) for (x, y), m in units.items())
    e = lambda x, y: elementary(dim, pos(x), pos(y))  # noqa: E731
    rr_dev = 0
    rsq_dev = 0
    bbdag_dev = 0
    for i in ops.r:
        for j in ops.r:
            d = int(i == j)
            rr = ops.r[i] @ ops.r[j] - (d * e(VAC, VAC) + e(i, j))
            r2 = ops.r[i] @ ops.r[i]
            rsq = r2 - r2 @ ops.r[j] @ ops.r[j] - (e(i, i) - d * e(i, j))
            bb = ops.b[i] @ ops.bdag[j] - d * e(VAC, VAC)
            rr_dev = max(rr_dev, int(np.max(np.abs(rr))))
            rsq_dev = max(rsq_dev, int(np.max(np.abs(rsq))))
            bbdag_dev = max(bbdag_dev, int(np.max(np.abs(bb))))
    adj_dev = max(int(np.max(np.abs(ops.bdag[j] - ops.b[j].T))) for j in ops.b)
    return {
        "matrix_units": unit_dev,
        "r_products": rr_dev,
        "r_squares": rsq_dev,
        "b_bdag": bbdag_dev,
        "adjoint": adj_dev,
    }


def site_permutation_unitary(space: BooleanSpace, g: Permutation) -> np.ndarray:
    """Permutation matrix ``e_j -> e_{g(j)}`` fixing ``e_#``."""
    if any(not 1 <= i <= space.d for i in g.support):
        raise RejectedInputError(f"permutation must act inside 1..{space.d}")
    u = np.zeros((space.dim, space.dim), dtype=np.int64)
    u[0, 0] = 1
    for j in range(1, space.d + 1):
        u[g(j), j] = 1
    return u


def invariant_family_eval(d: int, gamma: float, observable) -> complex:
    """``γ ω_#(X) + (1 - γ) (1/d) Σ_i <X e_i, e_i>``.

    The second term is the normalized trace over the site sector; on any fixed
    finite-rank observable it decays like ``1/d``.
    """
    if not 0 <= gamma <= 1:
        raise RejectedInputError("gamma must lie in [0, 1]")
    x = np.asarray(observable, dtype=complex)
    if x.shape != (d + 1, d + 1):
        raise RejectedInputError(f"observable must be {d + 1}x{d + 1}")
    return complex(gamma * x[0, 0] + (1 - gamma) * np.trace(x[1:, 1:]) / d)


def invariant_state_space_dim(d: int) -> int:
    """Dimension of the span of ``(d+1)x(d+1)`` matrices fixed by every site permutation.

    States invariant under the site permutations are exactly the invariant
    density matrices, so this bounds the finite-``d`` invariant set from above.
    """
    space = BooleanSpace(d)
    gens = [Permutation.cycle(*range(1, d + 1))] if d >= 2 else []
    if d >= 2:
        gens.append(Permutation.transposition(1, 2))
    n = space.dim
    rows = []
    for g in gens:
        u = site_permutation_unitary(space, g).astype(float)
        # vec(U X U^T) = (U ⊗ U) vec(X)
        rows.append(np.kron(u, u) - np.eye(n * n))
    if not rows:
        return n * n
    return int(n * n - np.linalg.matrix_rank(np.vstack(rows)))


@dataclass(frozen=True)
class ObstructionCase:
    overlap_sq: float
    ratio: float

    @property
    def gap(self) -> float:
        return abs(self.ratio - self.overlap_sq)


def conditional_expectation(x: CMat, site_density: CMat) -> CMat:
    """``F(A) = ω_#(A) P_# + φ(P_#^⊥ A P_#^⊥) P_#^⊥`` with ``φ = tr(σ ·)`` on the site block."""
    x = np.asarray(x, dtype=complex)
    n = x.shape[0]
    p = np.zeros((n, n), dtype=complex)
    p[0, 0] = 1
    perp = np.eye(n) - p
    phi = np.trace(site_density @ (perp @ x @ perp)[1:, 1:])
    return x[0, 0] * p + phi * perp


def ce_obstruction(d: int, xi, site_density) -> ObstructionCase:
    """Ratio ``ω_ξ(F(A)) / ω_ξ(A)`` for the rank-one ``A = <·, ξ> e_#``.

    Raises:
        DegenerateRegimeError: ``|<e_#, ξ>|`` is 0 or 1, or ``ω_ξ(A)`` vanishes.
    """
    xi = np.asarray(xi, dtype=complex).reshape(-1)
    if xi.shape != (d + 1,):
        raise RejectedInputError(f"xi must have length {d + 1}")
    if abs(np.linalg.norm(xi) - 1) > 1e-12:
        raise RejectedInputError("xi must be a unit vector")
    sigma = np.asarray(site_density, dtype=complex)
    if sigma.shape != (d, d) or abs(np.trace(sigma) - 1) > 1e-10 or hermitian_min_eig(sigma) < -1e-12:
        raise RejectedInputError(f"site state must be a {d}x{d} density matrix")
    overlap_sq = float(abs(xi[0]) ** 2)
    if not 0 < overlap_sq < 1:
        raise DegenerateRegimeError("need 0 < |<e_#, xi>| < 1")
    e_vac = np.zeros(d + 1, dtype=complex)
    e_vac[0] = 1
    a = np.outer(e_vac, xi.conj())
    omega_a = np.vdot(xi, a @ xi)
    if abs(omega_a) < 1e-300:
        raise DegenerateRegimeError("omega_xi(A) vanishes")
    f_a = conditional_expectation(a, sigma)
    ratio = np.vdot(xi, f_a @ xi) / omega_a
    if abs(ratio.imag) > 1e-12:
        raise RejectedInputError("ratio is not real")
    return ObstructionCase(overlap_sq, float(ratio.real))


def random_obstruction_cases(d: int, rng: np.random.Generator, count: int, lo: float = 0.1, hi: float = 0.9):
    """Unit vectors with ``|<e_#, ξ>|^2`` uniform in ``(lo, hi)``, paired with random site densities."""
    cases = []
    for _ in range(count):
        overlap_sq = rng.uniform(lo, hi)
        rest = rng.normal(size=d) + 1j * rng.normal(size=d)
        rest *= np.sqrt(1 - overlap_sq) / np.linalg.norm(rest)
        phase = np.exp(2j * np.pi * rng.uniform())
        xi = np.concatenate([[np.sqrt(overlap_sq) * phase], rest])
        m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        sigma = m @ m.conj().T
        cases.append((xi, sigma / np.trace(sigma).real))
    return cases


def report(d: int, rng: np.random.Generator, samples: int = 10) -> dict:
    space = BooleanSpace(d)
    ops = boolean_ops(space)
    cases = [ce_obstruction(d, xi, sigma) for xi, sigma in random_obstruction_cases(d, rng, samples)]
    return {
        "d": d,
        "relation_residuals": relation_residuals(space),
        "span_rank": span_rank(ladder_products(ops, 2)),
        "obstruction_cases": [{"overlap_sq": c.overlap_sq, "ratio": c.ratio, "gap": c.gap} for c in cases],
    }
