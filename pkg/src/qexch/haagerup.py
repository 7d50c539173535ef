"""Free-group words and the length-exponential states ``w -> exp(-lam |w|)``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import RejectedInputError
from .exchange import (
    CesaroReport,
    Permutation,
    cesaro_mean,
    cesaro_mean_local,
    disjoint_fraction,
    make_report,
)
from .numkernel import hermitian_min_eig

MAX_GRAM = 200


def reduce_word(raw: Iterable[tuple[int, int]]) -> tuple[tuple[int, int], ...]:
    """Merge equal neighbouring generators and drop zero exponents until stable."""
    stack: list[list[int]] = []
    for gen, exp in raw:
        gen, exp = int(gen), int(exp)
        if exp == 0:
            continue
        if stack and stack[-1][0] == gen:
            stack[-1][1] += exp
            if stack[-1][1] == 0:
                stack.pop()
        else:
            stack.append([gen, exp])
    return tuple((g, e) for g, e in stack)


@dataclass(frozen=True, order=True)
class FreeWord:
    syllables: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        syl = tuple((int(g), int(e)) for g, e in self.syllables)
        if any(e == 0 for _, e in syl) or any(a[0] == b[0] for a, b in zip(syl, syl[1:])):
            raise RejectedInputError(f"not a reduced word: {syl!r}; use FreeWord.reduce")
        object.__setattr__(self, "syllables", syl)

    @classmethod
    def reduce(cls, raw: Iterable[tuple[int, int]]) -> FreeWord:
        return cls(reduce_word(raw))

    @classmethod
    def gen(cls, i: int, exp: int = 1) -> FreeWord:
        return cls.reduce([(i, exp)])

    def __mul__(self, other: FreeWord) -> FreeWord:
        return FreeWord.reduce(self.syllables + other.syllables)

    def inverse(self) -> FreeWord:
        return FreeWord(tuple((g, -e) for g, e in reversed(self.syllables)))

    @property
    def support(self) -> frozenset[int]:
        return frozenset(g for g, _ in self.syllables)

    def permute(self, g: Permutation) -> FreeWord:
        return group_permute(g, self)

    def __len__(self) -> int:
        return word_length(self)

    def __str__(self) -> str:
        if not self.syllables:
            return "e"
        return " ".join(f"g{g}" if e == 1 else f"g{g}^{e}" for g, e in self.syllables)


UNIT = FreeWord()


def word_length(w: FreeWord) -> int:
    return sum(abs(e) for _, e in w.syllables)


def group_permute(g: Permutation, w: FreeWord) -> FreeWord:
    # a bijective relabeling keeps neighbours distinct, so the result stays reduced
    return FreeWord(tuple((g(i), e) for i, e in w.syllables))


@dataclass(frozen=True)
class HaagerupState:
    """``lam = math.inf`` is the canonical trace."""

    lam: float

    def __post_init__(self):
        lam = float(self.lam)
        if not lam > 0:
            raise RejectedInputError("lambda must be positive or inf")
        object.__setattr__(self, "lam", lam)

    def __call__(self, w: FreeWord) -> float:
        return haagerup_eval(self, w)


def haagerup_eval(st: HaagerupState, w: FreeWord) -> float:
    n = word_length(w)
    if math.isinf(st.lam):
        return 1.0 if n == 0 else 0.0
    return math.exp(-st.lam * n)


def cesaro_cluster(st: HaagerupState, v: FreeWord, w: FreeWord, n: int, exhaustive: bool = True) -> CesaroReport:
    """Mean of ``phi(v * g(w))`` over all permutations of ``{1..n}``.

    ``exhaustive=False`` averages over injections of the support of ``w``
    instead, which gives the same value.
    """
    if not (v.support | w.support) <= set(range(1, n + 1)):
        raise RejectedInputError(f"generators must lie in 1..{n}")
    idx = range(1, n + 1)

    def term(g: Permutation) -> float:
        return haagerup_eval(st, v * group_permute(g, w))

    mean = cesaro_mean(term, idx) if exhaustive else cesaro_mean_local(term, idx, w.support)
    target = haagerup_eval(st, v) * haagerup_eval(st, w)
    bound = 2 * float(1 - disjoint_fraction(n, len(v.support), len(w.support)))
    return make_report(n, mean, target, bound)


def clustering_closed_form(lam: float, n: int) -> float:
    """Mean for ``v = g1``, ``w = g2^-1``: only the ``(n-1)!`` maps with ``g(2) = 1`` cancel."""
    return (1 + (n - 1) * math.exp(-2 * lam)) / n


def block_singleton_witness(st: HaagerupState, i: int = 1, j: int = 2) -> tuple[float, float]:
    """``(phi(g_i g_j g_i^-1), phi(g_i g_i^-1) phi(g_j))``; unequal for every finite positive ``lam``."""
    gi, gj = FreeWord.gen(i), FreeWord.gen(j)
    lhs = haagerup_eval(st, gi * gj * gi.inverse())
    rhs = haagerup_eval(st, gi * gi.inverse()) * haagerup_eval(st, gj)
    return lhs, rhs


def kernel_matrix(st: HaagerupState, words: Sequence[FreeWord]) -> np.ndarray:
    if len(words) > MAX_GRAM:
        raise RejectedInputError(f"at most {MAX_GRAM} words")
    return np.array([[haagerup_eval(st, v.inverse() * w) for w in words] for v in words])


def gram_psd_check(st: HaagerupState, words: Sequence[FreeWord]) -> float:
    """Smallest eigenvalue of ``K[v, w] = phi(v^-1 w)``."""
    return hermitian_min_eig(kernel_matrix(st, list(words)))


def word_ball(radius: int, gens: Iterable[int]) -> list[FreeWord]:
    """All reduced words of length at most ``radius`` in the given generators, sorted."""
    letters = [FreeWord.gen(i, s) for i in gens for s in (1, -1)]
    ball = {UNIT}
    shell = {UNIT}
    for _ in range(radius):
        shell = {w * x for w in shell for x in letters} - ball
        ball |= shell
    return sorted((w for w in ball if word_length(w) <= radius), key=lambda w: (word_length(w), w))


def gram_summary(lam: float, radius: int, gens: int) -> dict:
    words = word_ball(radius, range(1, gens + 1))
    return {
        "lambda": "inf" if math.isinf(lam) else lam,
        "ball_radius": radius,
        "generators": gens,
        "min_eig": gram_psd_check(HaagerupState(lam), words),
    }
