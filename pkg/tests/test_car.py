import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qexch.car import (
    CarState,
    SiteState,
    car_residual,
    definetti_mixture_gap,
    evenness_gap,
    fixed_point_expectation,
    jw_generators,
    mixture,
    monomial_test_set,
    parity,
    parity_residual,
    permutation_unitary,
    product_state,
    site_embedding,
    state_permute,
    symmetrize,
    transpositions,
)
from qexch.errors import RejectedInputError, ResourceLimitError
from qexch.exchange import Permutation, enumerate_perms
from qexch.numkernel import adjoint, hermitian_min_eig

from conftest import random_cmat


def kron_intertwiner(sys, g):
    """Null space of X -> X a_j - a_g(j) X and X a_j^* - a_g(j)^* X, solved on vec(X)."""
    dim = sys.dim
    eye = np.eye(dim)
    rows = []
    for j in range(1, sys.n + 1):
        for a, b in ((sys.ann(j), sys.ann(g(j))), (sys.cre(j), sys.cre(g(j)))):
            # row-major vec: vec(X A) = (I ⊗ A^T) vec X, vec(B X) = (B ⊗ I) vec X
            rows.append(np.kron(eye, a.T) - np.kron(b, eye))
    _, s, vh = np.linalg.svd(np.vstack(rows))
    assert np.sum(s < 1e-10) == 1
    x = vh[-1].conj().reshape(dim, dim)
    return x / np.sqrt(np.trace(adjoint(x) @ x) / dim)


def same_up_to_phase(u, v, tol=1e-10):
    k = np.argmax(np.abs(v))
    phase = u.flat[k] / v.flat[k]
    return abs(abs(phase) - 1) <= tol and np.max(np.abs(u - phase * v)) <= tol


def random_density(rng, dim):
    m = random_cmat(rng, dim, dim)
    r = m @ adjoint(m)
    return r / np.trace(r).real


def test_single_mode():
    sys = jw_generators(1)
    assert np.array_equal(sys.ann(1), np.array([[0, 1], [0, 0]]))
    assert np.array_equal(sys.cre(1) @ sys.ann(1) + sys.ann(1) @ sys.cre(1), np.eye(2))


def test_two_modes_anticommute_exactly():
    sys = jw_generators(2)
    assert not np.any(sys.ann(1) @ sys.ann(2) + sys.ann(2) @ sys.ann(1))
    assert not np.any(sys.cre(1) @ sys.ann(2) + sys.ann(2) @ sys.cre(1))


@pytest.mark.parametrize("n", range(1, 7))
def test_car_relations(n):
    assert car_residual(jw_generators(n)) <= 1e-12


def test_car_relations_smoke_at_eight_modes():
    assert car_residual(jw_generators(8)) <= 1e-12


def test_mode_guard():
    with pytest.raises(ResourceLimitError):
        jw_generators(9)
    with pytest.raises(ResourceLimitError):
        jw_generators(0)


@pytest.mark.parametrize("n", [1, 3, 5])
def test_parity(n):
    sys = jw_generators(n)
    assert parity_residual(sys) <= 1e-12
    for j in range(1, n + 1):
        assert np.array_equal(parity(sys, sys.ann(j)), -sys.ann(j))
        assert np.array_equal(parity(sys, parity(sys, sys.ann(j))), sys.ann(j))


def test_identity_and_swap_unitaries():
    sys = jw_generators(2)
    assert same_up_to_phase(permutation_unitary(sys, Permutation.identity()), np.eye(4))
    u = permutation_unitary(sys, Permutation.transposition(1, 2))
    assert np.max(np.abs(u @ sys.ann(1) @ adjoint(u) - sys.ann(2))) <= 1e-10
    assert np.max(np.abs(u @ sys.ann(2) @ adjoint(u) - sys.ann(1))) <= 1e-10


@pytest.mark.parametrize("n", [1, 2, 3])
def test_unitaries_match_kronecker_oracle(n):
    sys = jw_generators(n)
    for g in enumerate_perms(range(1, n + 1)):
        assert same_up_to_phase(permutation_unitary(sys, g), kron_intertwiner(sys, g))


def test_composition_up_to_phase():
    sys = jw_generators(4)
    perms = list(enumerate_perms(range(1, 5)))
    for g, h in itertools.islice(itertools.product(perms, perms), 0, None, 37):
        assert same_up_to_phase(sys.unitary(g @ h), sys.unitary(g) @ sys.unitary(h))


def test_unitary_rejects_foreign_permutation():
    with pytest.raises(RejectedInputError):
        permutation_unitary(jw_generators(2), Permutation.transposition(1, 3))


def test_site_state_validation():
    with pytest.raises(RejectedInputError):
        SiteState(np.eye(2))
    with pytest.raises(RejectedInputError):
        SiteState(np.diag([1.5, -0.5]))
    with pytest.raises(RejectedInputError):
        SiteState(np.eye(3) / 3)
    assert SiteState(np.diag([0.2, 0.8])).even
    assert not SiteState(np.array([[0.6, 0.3], [0.3, 0.4]])).even


def test_product_state_examples():
    sys = jw_generators(2)
    vac = product_state(SiteState(np.diag([1.0, 0.0])), 2)
    for j in (1, 2):
        assert vac.expect(sys.cre(j) @ sys.ann(j)) == pytest.approx(0, abs=1e-15)
    st_ = product_state(SiteState(np.diag([0.3, 0.7])), 3)
    sys3 = jw_generators(3)
    occ = [st_.expect(sys3.cre(j) @ sys3.ann(j)) for j in (1, 2, 3)]
    assert np.allclose(occ, 0.7, atol=1e-14)


def test_tracial_state_is_invariant():
    sys = jw_generators(3)
    tr = product_state(SiteState(np.eye(2) / 2), 3)
    for g in enumerate_perms([1, 2, 3]):
        assert np.max(np.abs(state_permute(tr, sys, g).density - tr.density)) <= 1e-14


@pytest.mark.parametrize("p", [0.0, 0.25, 0.9])
def test_even_product_states_are_symmetric(p):
    for n in (3, 4):
        sys = jw_generators(n)
        assert evenness_gap(product_state(SiteState(np.diag([p, 1 - p])), n), sys) <= 1e-10


def test_non_even_product_state_is_not_symmetric():
    sys = jw_generators(3)
    st_ = product_state(SiteState(np.array([[0.6, 0.3], [0.3, 0.4]])), 3)
    assert evenness_gap(st_, sys) >= 1e-3


def test_monomial_test_set_size():
    sys = jw_generators(3)
    assert len(monomial_test_set(sys)) == 6 * 4
    assert len(transpositions(4)) == 6


def test_symmetrize(rng):
    sys = jw_generators(3)
    sym = product_state(SiteState(np.diag([0.4, 0.6])), 3)
    assert np.max(np.abs(symmetrize(sym, sys).density - sym.density)) <= 1e-12
    st_ = CarState(random_density(rng, 8))
    once = symmetrize(st_, sys)
    assert np.max(np.abs(symmetrize(once, sys).density - once.density)) <= 1e-12
    for g in transpositions(3):
        assert np.max(np.abs(state_permute(once, sys, g).density - once.density)) <= 1e-10


def test_fixed_point_expectation(rng):
    sys = jw_generators(3)
    exp = lambda x: fixed_point_expectation(sys, x)  # noqa: E731
    assert np.max(np.abs(exp(np.eye(8)) - np.eye(8))) <= 1e-12
    x = random_cmat(rng, 8, 8)
    ex = exp(x)
    assert np.max(np.abs(exp(ex) - ex)) <= 1e-10
    n1, n2 = sys.cre(1) @ sys.ann(1), sys.cre(2) @ sys.ann(2)
    number = sum(sys.cre(j) @ sys.ann(j) for j in (1, 2, 3)) / 3
    assert np.max(np.abs(exp(n1) - exp(n2))) <= 1e-10
    assert np.max(np.abs(exp(n1) - number)) <= 1e-10
    assert hermitian_min_eig(exp(adjoint(x) @ x)) >= -1e-10
    a, b = exp(random_cmat(rng, 8, 8)), exp(random_cmat(rng, 8, 8))
    assert np.max(np.abs(exp(a @ x @ b) - a @ ex @ b)) <= 1e-10
    st_ = symmetrize(CarState(random_density(rng, 8)), sys)
    assert abs(st_.expect(ex) - st_.expect(x)) <= 1e-10


def test_symmetrize_guard():
    sys = jw_generators(7)
    with pytest.raises(ResourceLimitError):
        sys.all_unitaries()


def test_site_embedding_is_a_homomorphism(rng):
    sys = jw_generators(3)
    for j in (1, 2, 3):
        a, b = random_cmat(rng, 2, 2), random_cmat(rng, 2, 2)
        ea, eb = site_embedding(sys, j, a), site_embedding(sys, j, b)
        assert np.max(np.abs(ea @ eb - site_embedding(sys, j, a @ b))) <= 1e-12
        assert np.max(np.abs(adjoint(ea) - site_embedding(sys, j, adjoint(a)))) <= 1e-12
    assert np.array_equal(site_embedding(sys, 2, np.eye(2)), np.eye(8))


def test_mixture_validation():
    st_ = product_state(SiteState(np.diag([0.5, 0.5])), 2)
    with pytest.raises(RejectedInputError):
        mixture([st_, st_], [0.7, 0.7])


@settings(max_examples=25)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=3), st.integers(0, 2**32 - 1))
def test_mixtures_of_even_products_factorize(ps, seed):
    sys = jw_generators(3)
    w = np.random.default_rng(seed).dirichlet(np.ones(len(ps)))
    sites = [SiteState(np.diag([p, 1 - p])) for p in ps]
    assert definetti_mixture_gap(sys, sites, w) <= 1e-10


@settings(max_examples=25)
@given(st.floats(0, 1), st.sampled_from(list(enumerate_perms([1, 2, 3, 4]))))
def test_even_product_is_invariant_under_every_permutation(p, g):
    sys = jw_generators(4)
    st_ = product_state(SiteState(np.diag([p, 1 - p])), 4)
    assert np.max(np.abs(state_permute(st_, sys, g).density - st_.density)) <= 1e-10
