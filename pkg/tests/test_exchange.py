import itertools
import math
import random
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qexch.errors import RejectedInputError, ResourceLimitError
from qexch.exchange import (
    CSV_HEADER,
    InfeasiblePlacementWarning,
    Permutation,
    cesaro_mean,
    cesaro_mean_local,
    check_condition,
    disjoint_fraction,
    enumerate_perms,
    make_report,
    reports_to_csv,
)
from qexch.haagerup import FreeWord, HaagerupState


def brute_disjoint(n, s, t):
    dom = list(range(n))
    first, second = set(range(s)), list(range(s, s + t))
    hits = total = 0
    for images in itertools.permutations(dom):
        total += 1
        hits += all(images[i] not in first for i in second)
    return Fraction(hits, total)


def test_permutation_basics():
    g = Permutation.transposition(1, 2)
    assert g(1) == 2 and g(2) == 1 and g(7) == 7
    assert g.inverse() == g
    assert (g @ g).is_identity()
    c = Permutation.cycle(1, 2, 3)
    assert [c(i) for i in (1, 2, 3)] == [2, 3, 1]
    assert (c @ c.inverse()).is_identity()
    assert Permutation.from_dict({4: 4}) == Permutation.identity()
    with pytest.raises(RejectedInputError):
        Permutation(((1, 2), (2, 2)))


def test_compose_applies_right_factor_first():
    g, h = Permutation.transposition(1, 2), Permutation.transposition(2, 3)
    assert (g @ h)(3) == g(h(3)) == 1


def test_enumerate_examples():
    assert list(enumerate_perms([1])) == [Permutation.identity()]
    assert len(list(enumerate_perms([1, 2]))) == 2
    perms = list(enumerate_perms(range(1, 6)))
    assert len(perms) == 120 and len(set(perms)) == 120


def test_enumerate_is_lexicographic():
    images = [tuple(g(i) for i in (1, 2, 3)) for g in enumerate_perms([1, 2, 3])]
    assert images == sorted(images)


def test_enumeration_guard():
    with pytest.raises(ResourceLimitError):
        next(enumerate_perms(range(11)))
    with pytest.raises(ResourceLimitError):
        cesaro_mean(lambda g: 1, range(11))


def test_cesaro_examples():
    assert cesaro_mean(lambda g: 2.5 - 1j, range(1, 5)) == 2.5 - 1j
    for n in range(1, 7):
        assert cesaro_mean(lambda g: 1.0 if g(1) == 1 else 0.0, range(1, n + 1)) == pytest.approx(1 / n, abs=1e-15)


def test_cesaro_mean_order_independent():
    rng = random.Random(3)
    dom = list(range(1, 7))

    def f(g):
        return math.sin(sum(k * g(k) for k in dom)) + 1j * g(2)

    vals = [f(g) for g in enumerate_perms(dom)]
    rng.shuffle(vals)
    shuffled = sum(vals) / len(vals)
    assert abs(cesaro_mean(f, dom) - shuffled) <= 1e-12


def test_local_mean_matches_full():
    dom = range(1, 7)

    def f(g):
        return math.cos(g(2) + 3 * g(5)) + 1j * g(2) * g(5)

    assert abs(cesaro_mean(f, dom) - cesaro_mean_local(f, dom, [2, 5])) <= 1e-12


def test_disjoint_fraction_examples():
    assert disjoint_fraction(5, 0, 3) == 1
    assert disjoint_fraction(4, 1, 1) == Fraction(3, 4) == brute_disjoint(4, 1, 1)
    values = [disjoint_fraction(n, 2, 2) for n in range(4, 10)]
    assert values == sorted(values) and len(set(values)) == len(values)


def test_disjoint_fraction_infeasible_flags():
    with pytest.warns(InfeasiblePlacementWarning):
        assert disjoint_fraction(3, 2, 2) == 0
    with pytest.raises(RejectedInputError):
        disjoint_fraction(3, 4, 0)


@pytest.mark.parametrize("n", range(0, 8))
def test_disjoint_fraction_brute_force(n):
    for s in range(n + 1):
        for t in range(n - s + 1):
            assert disjoint_fraction(n, s, t) == brute_disjoint(n, s, t)


def test_report_csv():
    r = make_report(3, 0.5 + 0.25j, 0.5, 0.1)
    assert r.gap == 0.25
    text = reports_to_csv([r])
    assert text.splitlines()[0] == ",".join(CSV_HEADER) == "n,mean_re,mean_im,target_re,target_im,gap,bound"
    assert text.splitlines()[1] == "3,0.5,0.25,0.5,0.0,0.25,0.1"


def haagerup_phi(lam):
    st_ = HaagerupState(lam)
    return st_


def test_block_singleton_with_unit_middle():
    phi = haagerup_phi(1.0)
    a1, a3 = FreeWord.gen(1), FreeWord.gen(3, -2)
    rep = check_condition(phi, "block-singleton", [a1, FreeWord(), a3])
    assert rep.gap == 0


def test_product_state_on_disjoint_words():
    phi = haagerup_phi(0.7)
    rep = check_condition(phi, "product-state", [FreeWord.gen(1), FreeWord.gen(2)])
    assert rep.gap == 0


@pytest.mark.parametrize("lam", [0.3, 1.0, 2.5])
def test_block_singleton_failure(lam):
    phi = haagerup_phi(lam)
    g1, g2 = FreeWord.gen(1), FreeWord.gen(2)
    rep = check_condition(phi, "block-singleton", [g1, g2, g1.inverse()])
    assert rep.gap == pytest.approx(abs(math.exp(-3 * lam) - math.exp(-lam)), abs=1e-15)
    assert rep.gap > 0


def test_condition_rejects_overlapping_supports():
    phi = haagerup_phi(1.0)
    g1 = FreeWord.gen(1)
    with pytest.raises(RejectedInputError):
        check_condition(phi, "product-state", [g1, g1])
    with pytest.raises(RejectedInputError):
        check_condition(phi, "block-singleton", [g1, g1, FreeWord.gen(2)])
    with pytest.raises(RejectedInputError):
        check_condition(phi, "nonsense", [g1, g1])


def test_weak_clustering_rows_for_product_state_functional():
    phi = haagerup_phi(1.0)
    v, w = FreeWord.reduce([(1, 1), (2, 1)]), FreeWord.reduce([(3, -1), (4, 1)])
    rep = check_condition(phi, "weak-clustering", [v, w], n_max=9)
    assert [r.n for r in rep.rows] == list(range(4, 10))
    for r in rep.rows:
        assert r.gap <= r.bound
    gaps = [r.gap for r in rep.rows]
    assert gaps == sorted(gaps, reverse=True)


@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
def test_weak_clustering_gap_decays_at_the_exact_rate(lam):
    phi = haagerup_phi(lam)
    v, w = FreeWord.gen(1), FreeWord.gen(2, -1)
    rep = check_condition(phi, "weak-clustering", [v, w], n_max=9)
    for r in rep.rows:
        assert r.gap == pytest.approx((1 - math.exp(-2 * lam)) / r.n, abs=1e-14)
        assert r.gap <= r.bound


def test_weak_clustering_requires_room():
    phi = haagerup_phi(1.0)
    v = FreeWord.reduce([(k, 1) for k in range(1, 6)])
    with pytest.raises(RejectedInputError):
        check_condition(phi, "weak-clustering", [v, v], n_max=9)
