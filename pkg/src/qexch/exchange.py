"""Finitely supported permutations, Cesaro means and the ergodic conditions.

The permutation group of a finite index set is enumerated exhaustively, so
every "limit over growing index sets" becomes a finite table of means indexed
by the set size.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .errors import RejectedInputError, ResourceLimitError

MAX_ENUM = 10

CSV_HEADER = ("n", "mean_re", "mean_im", "target_re", "target_im", "gap", "bound")


@dataclass(frozen=True)
class Permutation:
    """Bijection of integers that moves finitely many points.

    ``mapping`` stores only the moved points, as sorted ``(i, g(i))`` pairs, so
    two permutations are equal exactly when they act identically.
    """

    mapping: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        moved = tuple(sorted((int(i), int(j)) for i, j in self.mapping if i != j))
        src = [i for i, _ in moved]
        dst = sorted(j for _, j in moved)
        if len(set(src)) != len(src) or sorted(src) != dst:
            raise RejectedInputError(f"not a bijection on its support: {self.mapping!r}")
        object.__setattr__(self, "mapping", moved)

    @classmethod
    def identity(cls) -> Permutation:
        return cls()

    @classmethod
    def from_dict(cls, d: dict[int, int]) -> Permutation:
        return cls(tuple(d.items()))

    @classmethod
    def from_images(cls, domain: Sequence[int], images: Sequence[int]) -> Permutation:
        if len(domain) != len(images):
            raise RejectedInputError("domain and images differ in length")
        return cls(tuple(zip(domain, images)))

    @classmethod
    def transposition(cls, i: int, j: int) -> Permutation:
        return cls(((i, j), (j, i)))

    @classmethod
    def cycle(cls, *points: int) -> Permutation:
        """Cycle ``points[0] -> points[1] -> ... -> points[0]``."""
        n = len(points)
        return cls(tuple((points[k], points[(k + 1) % n]) for k in range(n)))

    @property
    def support(self) -> frozenset[int]:
        return frozenset(i for i, _ in self.mapping)

    def __call__(self, i: int) -> int:
        for a, b in self.mapping:
            if a == i:
                return b
        return i

    def as_dict(self) -> dict[int, int]:
        return dict(self.mapping)

    def compose(self, other: Permutation) -> Permutation:
        """``self o other``: apply ``other`` first."""
        pts = self.support | other.support
        return Permutation(tuple((i, self(other(i))) for i in pts))

    __matmul__ = compose

    def inverse(self) -> Permutation:
        return Permutation(tuple((j, i) for i, j in self.mapping))

    def is_identity(self) -> bool:
        return not self.mapping


def _guard(n: int, limit: int = MAX_ENUM) -> None:
    if n > limit:
        raise ResourceLimitError(f"|I| = {n} exceeds the factorial guard {limit}")


def enumerate_perms(index_set: Iterable[int]) -> Iterator[Permutation]:
    """All permutations of ``index_set``, lexicographic by image tuple."""
    dom = sorted(set(index_set))
    _guard(len(dom))
    for images in itertools.permutations(dom):
        yield Permutation.from_images(dom, images)


def _ordered_mean(values: np.ndarray) -> complex:
    # fsum is exactly rounded, hence independent of summation order
    return complex(math.fsum(values.real), math.fsum(values.imag)) / len(values)


def cesaro_mean(f: Callable[[Permutation], complex], index_set: Iterable[int]) -> complex:
    """Arithmetic mean of ``f`` over every permutation of ``index_set``."""
    dom = sorted(set(index_set))
    _guard(len(dom))
    vals = np.empty(math.factorial(len(dom)), dtype=complex)
    for k, g in enumerate(enumerate_perms(dom)):
        vals[k] = f(g)
    return _ordered_mean(vals)


def cesaro_mean_local(
    f: Callable[[Permutation], complex], index_set: Iterable[int], depends_on: Iterable[int]
) -> complex:
    """Same value as :func:`cesaro_mean` when ``f(g)`` only sees ``g`` on ``depends_on``.

    Each of the ``n!`` permutations restricts to one of the ``n!/(n-t)!``
    injections ``depends_on -> index_set``, each hit exactly ``(n-t)!`` times,
    so averaging over injections gives the same mean at a fraction of the cost.
    """
    dom = sorted(set(index_set))
    local = sorted(set(depends_on))
    if not set(local) <= set(dom):
        raise RejectedInputError("depends_on must lie inside the index set")
    vals = []
    for images in itertools.permutations(dom, len(local)):
        rest_src = [i for i in dom if i not in local]
        rest_dst = [i for i in dom if i not in images]
        vals.append(f(Permutation.from_images(local + rest_src, list(images) + rest_dst)))
    return _ordered_mean(np.asarray(vals, dtype=complex))


class InfeasiblePlacementWarning(UserWarning):
    """No placement of the second support avoids the first one."""


def disjoint_fraction(n: int, s: int, t: int) -> Fraction:
    """Fraction of permutations of an ``n``-set moving a fixed ``t``-subset off a fixed ``s``-subset.

    ``g(T)`` is a uniformly distributed ``t``-subset, so the fraction is
    ``C(n-s, t) / C(n, t)``.  When ``s + t > n`` no such placement exists; the
    result is 0 and an :class:`InfeasiblePlacementWarning` is issued.
    """
    if min(n, s, t) < 0 or s > n or t > n:
        raise RejectedInputError(f"invalid sizes n={n}, s={s}, t={t}")
    if s + t > n:
        warnings.warn(f"s + t = {s + t} > |I| = {n}", InfeasiblePlacementWarning, stacklevel=2)
        return Fraction(0)
    return Fraction(math.comb(n - s, t), math.comb(n, t))


@dataclass(frozen=True)
class CesaroReport:
    n: int
    mean: complex
    target: complex
    gap: float
    bound: float

    def row(self) -> tuple:
        return (
            self.n,
            self.mean.real,
            self.mean.imag,
            self.target.real,
            self.target.imag,
            self.gap,
            self.bound,
        )


def make_report(n: int, mean: complex, target: complex, bound: float) -> CesaroReport:
    mean, target = complex(mean), complex(target)
    return CesaroReport(n, mean, target, abs(mean - target), float(bound))


def reports_to_csv(rows: Iterable[CesaroReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in r.row()])
    return buf.getvalue()


@dataclass
class ConditionReport:
    kind: str
    lhs: complex | None = None
    rhs: complex | None = None
    gap: float | None = None
    rows: list[CesaroReport] = field(default_factory=list)

    @property
    def max_gap(self) -> float:
        if self.rows:
            return max(r.gap for r in self.rows)
        return float(self.gap)


KINDS = ("product-state", "block-singleton", "weak-clustering")


def _support(x, declared) -> frozenset[int]:
    if declared is not None:
        return frozenset(declared)
    return frozenset(x.support)


def _padded_index_set(base: Iterable[int], n: int) -> list[int]:
    """``base`` plus the smallest unused positive integers, ``n`` points in total."""
    out = set(base)
    candidate = 1
    while len(out) < n:
        out.add(candidate)
        candidate += 1
    return sorted(out)


def check_condition(
    phi: Callable,
    kind: str,
    elements: Sequence,
    supports: Sequence[Iterable[int]] | None = None,
    n_max: int = 9,
    act: Callable | None = None,
    norms: tuple[float, float] = (1.0, 1.0),
) -> ConditionReport:
    """Evaluate one of the product-state, block-singleton or weak-clustering conditions.

    Elements must support ``*``; their supports default to ``x.support``.  For
    ``weak-clustering`` the pair ``(A, B)`` is averaged as ``phi(A * act(g, B))``
    over the permutations of index sets of growing size ``n`` up to ``n_max``;
    ``act`` defaults to ``B.permute(g)``.  Each row carries the counting bound
    ``2 ||A|| ||B|| (1 - disjoint_fraction)`` with ``norms = (||A||, ||B||)``.
    """
    if kind not in KINDS:
        raise RejectedInputError(f"unknown condition {kind!r}; expected one of {KINDS}")
    sup = [_support(x, None if supports is None else supports[k]) for k, x in enumerate(elements)]

    if kind == "product-state":
        if len(elements) != 2:
            raise RejectedInputError("product-state needs two elements")
        if sup[0] & sup[1]:
            raise RejectedInputError("product-state requires disjoint supports")
        a1, a2 = elements
        lhs, rhs = complex(phi(a1 * a2)), complex(phi(a1)) * complex(phi(a2))
        return ConditionReport(kind, lhs, rhs, abs(lhs - rhs))

    if kind == "block-singleton":
        if len(elements) != 3:
            raise RejectedInputError("block-singleton needs three elements")
        if (sup[0] | sup[2]) & sup[1]:
            raise RejectedInputError("block-singleton requires the middle support disjoint from the outer ones")
        a1, a2, a3 = elements
        lhs = complex(phi(a1 * a2 * a3))
        rhs = complex(phi(a1 * a3)) * complex(phi(a2))
        return ConditionReport(kind, lhs, rhs, abs(lhs - rhs))

    if len(elements) != 2:
        raise RejectedInputError("weak-clustering needs two elements")
    a, b = elements
    if act is None:
        def act(g, x):
            return x.permute(g)
    s, t = len(sup[0]), len(sup[1])
    base = sup[0] | sup[1]
    n0 = max(len(base), s + t, 1)
    if n0 > n_max:
        raise RejectedInputError(f"supports need |I| >= {n0} > n_max = {n_max}")
    _guard(n_max)
    target = complex(phi(a)) * complex(phi(b))
    rows = []
    for n in range(n0, n_max + 1):
        idx = _padded_index_set(base, n)
        mean = cesaro_mean_local(lambda g: phi(a * act(g, b)), idx, sup[1])
        bound = 2 * norms[0] * norms[1] * float(1 - disjoint_fraction(n, s, t))
        rows.append(make_report(n, mean, target, bound))
    return ConditionReport(kind, rows=rows)
