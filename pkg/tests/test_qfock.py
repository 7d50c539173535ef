import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qexch.errors import RejectedInputError, ResourceLimitError
from qexch.exchange import Permutation
from qexch.numkernel import hermitian_min_eig
from qexch.qfock import (
    MonomialBasis,
    QSpace,
    adjointness_residual,
    commutation_residual,
    field_moment,
    field_op,
    gram,
    index_action,
    inversions,
    ladder_ops,
    q_inner,
    report,
    unit_vector,
    vacuum_moment,
)

Q_GRID = [-0.9, -0.5, 0.0, 0.5, 0.9]


def brute_q_inner(u, v, q):
    """Sum over bijections k -> pi(k) of q^{#crossings} * prod <u_k, v_pi(k)>."""
    if len(u) != len(v):
        return 0.0
    total = 0.0
    n = len(u)
    for pi in itertools.permutations(range(n)):
        crossings = sum(1 for a in range(n) for b in range(a + 1, n) if pi[a] > pi[b])
        if all(u[k] == v[pi[k]] for k in range(n)):
            total += q**crossings
    return total


def q_factorial(n, q):
    return math.prod(sum(q**j for j in range(k)) for k in range(1, n + 1))


def test_inversions_examples():
    assert inversions((0, 1, 2)) == 0
    assert inversions((2, 1, 0)) == 3
    for p in itertools.permutations(range(5)):
        inv = tuple(sorted(range(5), key=lambda k: p[k]))
        assert inversions(p) == inversions(inv)


def test_q_inner_examples():
    q = 0.37
    assert q_inner((), (), q) == 1
    assert q_inner((1, 1), (1, 1), q) == 1 + q
    assert q_inner((1, 2), (2, 1), q) == q
    assert q_inner((1,), (1, 1), q) == 0
    assert q_inner((1, 2), (2, 1), 0.0) == 0


@given(st.lists(st.integers(1, 3), max_size=5), st.data(), st.sampled_from(Q_GRID))
def test_q_inner_matches_brute_force(u, data, q):
    v = data.draw(st.permutations(u)) if data.draw(st.booleans()) else data.draw(
        st.lists(st.integers(1, 3), min_size=len(u), max_size=len(u))
    )
    assert q_inner(tuple(u), tuple(v), q) == pytest.approx(brute_q_inner(u, v, q), abs=1e-14)


@pytest.mark.parametrize("q", Q_GRID)
def test_single_mode_norms_are_q_factorials(q):
    space = QSpace(1, 5, q)
    for n in range(6):
        assert gram(space, n)[0, 0].real == pytest.approx(q_factorial(n, q), abs=1e-13)


def test_gram_examples():
    space = QSpace(2, 3, 0.5)
    assert np.array_equal(gram(space, 0), np.ones((1, 1)))
    assert np.array_equal(gram(space, 1), np.eye(2))
    assert hermitian_min_eig(gram(space, 2)) > 0
    with pytest.raises(RejectedInputError):
        gram(space, 4)


def test_free_case_is_orthonormal():
    space = QSpace(3, 3, 0.0)
    assert np.array_equal(space.gram_matrix, np.eye(space.dim))


def test_basis_enumeration():
    b = MonomialBasis(2, 2)
    assert b.vectors == ((), (1,), (2,), (1, 1), (1, 2), (2, 1), (2, 2))
    assert len(MonomialBasis(3, 4)) == sum(3**n for n in range(5))


def test_construction_guards():
    for q in (1.0, -1.0, 1.5):
        with pytest.raises(RejectedInputError, match=r"q must lie in \(-1,1\)"):
            QSpace(2, 2, q)
    with pytest.raises(ResourceLimitError):
        QSpace(1, 9, 0.1)


def test_ladder_examples():
    q = 0.3
    space = QSpace(2, 3, q)
    e1 = unit_vector(2, 1)
    ops = ladder_ops(space, e1)
    assert not np.any(ops.annihilator @ space.vacuum)
    assert np.array_equal(ops.creator @ space.vacuum, space.monomial((1,)))
    assert np.allclose(ops.annihilator @ space.monomial((1, 1)), (1 + q) * space.monomial((1,)), atol=1e-15)
    assert np.array_equal(ops.field, ops.creator + ops.annihilator)
    with pytest.raises(RejectedInputError):
        ladder_ops(space, [1, 0, 0])


def test_vacuum_moment_examples():
    q = -0.4
    space = QSpace(2, 2, q)
    assert vacuum_moment(space, []) == 1
    assert field_moment(space, [1, 1]) == pytest.approx(1, abs=1e-14)
    assert field_moment(space, [1, 2, 1, 2]) == pytest.approx(q, abs=1e-14)
    assert field_moment(space, [1, 1, 1, 1]) == pytest.approx(2 + q, abs=1e-14)
    assert field_moment(space, [1, 1, 2, 2]) == pytest.approx(1, abs=1e-14)
    with pytest.raises(RejectedInputError):
        vacuum_moment(space, [np.eye(3)])


@pytest.mark.parametrize("q", Q_GRID)
def test_metric_adjointness_on_basis_pairs(q):
    space = QSpace(2, 3, q)
    f = np.array([0.3 - 1j, 2.0])
    ops = ladder_ops(space, f)
    low = [k for k, t in enumerate(space.basis.vectors) if len(t) <= space.N - 1]
    eye = np.eye(space.dim)
    for a in low:
        for b in range(space.dim):
            u, v = eye[a], eye[b]
            lhs = space.inner(ops.creator @ u, v)
            rhs = space.inner(u, ops.annihilator @ v)
            assert abs(lhs - rhs) <= 1e-10


@pytest.mark.parametrize("q", Q_GRID)
def test_relations_on_random_vectors(q, rng):
    space = QSpace(3, 3, q)
    for _ in range(5):
        f = rng.normal(size=3) + 1j * rng.normal(size=3)
        g = rng.normal(size=3) + 1j * rng.normal(size=3)
        assert commutation_residual(space, f, g) <= 1e-10
        assert adjointness_residual(space, f) <= 1e-10


def test_truncation_is_visible_on_top_degree():
    space = QSpace(2, 2, 0.5)
    e1 = unit_vector(2, 1)
    ops = ladder_ops(space, e1)
    rel = ops.annihilator @ ops.creator - 0.5 * ops.creator @ ops.annihilator - np.eye(space.dim)
    top = space.basis.degree_slice(2)
    assert np.max(np.abs(rel[:, top])) > 0.1


@settings(max_examples=60)
@given(st.lists(st.integers(1, 3), min_size=0, max_size=4), st.sampled_from(Q_GRID), st.permutations([1, 2, 3]))
def test_vacuum_state_is_permutation_invariant(word, q, images):
    space = QSpace(3, 2, q)
    g = Permutation.from_images([1, 2, 3], images)
    assert abs(field_moment(space, [g(i) for i in word]) - field_moment(space, word)) <= 1e-12
    u = index_action(space, g)
    ops = [field_op(space, i) for i in word]
    conj = [u @ op @ u.T for op in ops]
    assert abs(vacuum_moment(space, conj) - vacuum_moment(space, ops)) <= 1e-12


@settings(max_examples=40)
@given(st.lists(st.integers(1, 2), min_size=0, max_size=4), st.sampled_from(Q_GRID))
def test_vacuum_state_is_shift_invariant(word, q):
    space = QSpace(3, 2, q)
    assert abs(field_moment(space, [i + 1 for i in word]) - field_moment(space, word)) <= 1e-12


def test_index_action_rejects_outside_permutations():
    with pytest.raises(RejectedInputError):
        index_action(QSpace(2, 1, 0.1), Permutation.transposition(1, 3))


def test_report_schema(rng):
    rep = report(QSpace(2, 3, 0.5), rng, samples=3).as_dict()
    assert list(rep) == ["d", "N", "q", "gram_min_eig", "commutation_residual", "adjointness_residual"]
    assert len(rep["gram_min_eig"]) == 4 and min(rep["gram_min_eig"]) > 0
    assert rep["commutation_residual"] < 1e-10
