"""Algebraic free product of a matrix algebra over a set of sites.

An element is stored in canonical form: a finite map from *basis words*
(tuples of ``(site, label)`` letters, adjacent sites distinct) to complex
coefficients.  Labels index a fixed basis of the site algebra, 1-based, with
label 1 the unit.  In the non-unital mode every label may appear; in the
unital mode the unit is identified across sites, so letters only carry labels
``>= 2`` and the empty word carries the scalar part.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import RejectedInputError
from .exchange import Permutation
from .numkernel import CMat, adjoint, as_cmat, op_norm

NONUNITAL = "non-unital"
UNITAL = "unital"
MODES = (NONUNITAL, UNITAL)

PRUNE = 1e-14
# structure constants are snapped to this dyadic grid so that merges with
# small Gaussian-integer coefficients stay bit-exact
_SNAP_GRID = 2.0**20
_SNAP_TOL = 1e-12

Letter = tuple[int, int]
Word = tuple[Letter, ...]


def _snap(z: complex) -> complex:
    def s(x: float) -> float:
        r = round(x * _SNAP_GRID) / _SNAP_GRID
        return r if abs(r - x) <= _SNAP_TOL else x

    return complex(s(z.real), s(z.imag))


class SiteAlgebra:
    """The algebra of ``k x k`` matrices with a fixed basis whose first element is the unit."""

    def __init__(self, basis: Sequence, name: str = "custom"):
        mats = [as_cmat(b) for b in basis]
        k = mats[0].shape[0]
        if len(mats) != k * k or any(m.shape != (k, k) for m in mats):
            raise RejectedInputError(f"need {k * k} basis matrices of shape ({k}, {k})")
        if not np.allclose(mats[0], np.eye(k), atol=1e-14):
            raise RejectedInputError("first basis element must be the identity")
        self._change = np.column_stack([m.reshape(-1) for m in mats])
        if np.linalg.matrix_rank(self._change) != k * k:
            raise RejectedInputError("basis is not linearly independent")
        self.k = k
        self.name = name
        self.basis = tuple(mats)
        nb = k * k
        self.structure = np.empty((nb, nb, nb), dtype=complex)
        self.adjoint_coords = np.empty((nb, nb), dtype=complex)
        for a in range(nb):
            self.adjoint_coords[a] = [_snap(c) for c in self._solve(adjoint(mats[a]))]
            for b in range(nb):
                self.structure[a, b] = [_snap(c) for c in self._solve(mats[a] @ mats[b])]
        for a in range(nb):
            for b in range(nb):
                rebuilt = np.tensordot(self.structure[a, b], np.asarray(mats), axes=1)
                if not np.allclose(rebuilt, mats[a] @ mats[b], atol=1e-12):
                    raise RejectedInputError("structure tensor does not reproduce the product")
        self._mul_cache: dict = {}

    @classmethod
    def pauli(cls) -> SiteAlgebra:
        """``M_2`` with basis ``(I, X, Y, Z)`` (labels 1..4)."""
        return cls(
            [
                np.eye(2),
                np.array([[0, 1], [1, 0]]),
                np.array([[0, -1j], [1j, 0]]),
                np.array([[1, 0], [0, -1]]),
            ],
            name="pauli",
        )

    @classmethod
    def matrix_units(cls, k: int) -> SiteAlgebra:
        """``M_k`` with basis ``I`` followed by the matrix units ``E_ij``, ``(i, j) != (0, 0)``."""
        basis = [np.eye(k)]
        for i in range(k):
            for j in range(k):
                if (i, j) != (0, 0):
                    e = np.zeros((k, k))
                    e[i, j] = 1
                    basis.append(e)
        return cls(basis, name=f"matrix-units-{k}")

    @property
    def nbasis(self) -> int:
        return self.k * self.k

    def _solve(self, m: CMat) -> np.ndarray:
        return np.linalg.solve(self._change, m.reshape(-1))

    def coords(self, a: CMat) -> np.ndarray:
        """Coordinates of ``a`` in the basis, tiny entries pruned to zero."""
        a = as_cmat(a)
        if a.shape != (self.k, self.k):
            raise RejectedInputError(f"expected a {self.k}x{self.k} matrix, got {a.shape}")
        c = self._solve(a)
        c[np.abs(c) < PRUNE] = 0
        return c

    def product_coords(self, a: int, b: int) -> dict[int, complex]:
        """Nonzero coordinates of ``basis[a-1] @ basis[b-1]``, keyed by 1-based label."""
        key = (a, b)
        hit = self._mul_cache.get(key)
        if hit is None:
            row = self.structure[a - 1, b - 1]
            hit = {c + 1: complex(row[c]) for c in range(self.nbasis) if abs(row[c]) >= PRUNE}
            self._mul_cache[key] = hit
        return hit

    def adjoint_label_coords(self, a: int) -> dict[int, complex]:
        row = self.adjoint_coords[a - 1]
        return {c + 1: complex(row[c]) for c in range(self.nbasis) if abs(row[c]) >= PRUNE}

    def matrix(self, label: int) -> CMat:
        return self.basis[label - 1]


def _add(acc: dict, word: Word, coeff: complex) -> None:
    acc[word] = acc.get(word, 0j) + coeff


def _pruned(terms: Mapping[Word, complex]) -> dict[Word, complex]:
    return {w: complex(c) for w, c in terms.items() if abs(c) >= PRUNE}


class CanonicalElement:
    """Immutable element of the free product in canonical form."""

    __slots__ = ("alg", "mode", "scalar", "terms")

    def __init__(self, alg: SiteAlgebra, mode: str, terms: Mapping[Word, complex] = None, scalar: complex = 0j):
        if mode not in MODES:
            raise RejectedInputError(f"unknown mode {mode!r}")
        terms = _pruned(terms or {})
        min_label = 2 if mode == UNITAL else 1
        for word in terms:
            if not word:
                raise RejectedInputError("empty word is not a term; use the scalar part")
            for (s1, _), (s2, _) in zip(word, word[1:]):
                if s1 == s2:
                    raise RejectedInputError(f"adjacent letters share site {s1}: {word}")
            for _, lab in word:
                if not min_label <= lab <= alg.nbasis:
                    raise RejectedInputError(f"label {lab} not allowed in {mode} mode")
        scalar = complex(scalar)
        if abs(scalar) < PRUNE:
            scalar = 0j
        if mode == NONUNITAL and scalar != 0:
            raise RejectedInputError("the non-unital free product has no scalar part")
        object.__setattr__(self, "alg", alg)
        object.__setattr__(self, "mode", mode)
        object.__setattr__(self, "scalar", scalar)
        object.__setattr__(self, "terms", terms)

    def __setattr__(self, name, value):
        raise AttributeError("CanonicalElement is immutable")

    def __eq__(self, other):
        if not isinstance(other, CanonicalElement):
            return NotImplemented
        return self.mode == other.mode and self.scalar == other.scalar and self.terms == other.terms

    def __repr__(self):
        parts = [] if self.scalar == 0 else [f"{self.scalar}*1"]
        parts += [f"{c}*{list(w)}" for w, c in sorted(self.terms.items())]
        return f"CanonicalElement({self.mode}: {' + '.join(parts) or '0'})"

    def is_zero(self) -> bool:
        return self.scalar == 0 and not self.terms

    @property
    def support(self) -> frozenset[int]:
        return frozenset(s for w in self.terms for s, _ in w)

    def __add__(self, other: CanonicalElement) -> CanonicalElement:
        _check_compatible(self, other)
        acc = dict(self.terms)
        for w, c in other.terms.items():
            _add(acc, w, c)
        return CanonicalElement(self.alg, self.mode, acc, self.scalar + other.scalar)

    def __sub__(self, other: CanonicalElement) -> CanonicalElement:
        return self + other.scale(-1)

    def scale(self, c: complex) -> CanonicalElement:
        return CanonicalElement(self.alg, self.mode, {w: c * v for w, v in self.terms.items()}, c * self.scalar)

    def __mul__(self, other):
        if isinstance(other, CanonicalElement):
            return fp_mul(self, other)
        return self.scale(other)

    def __rmul__(self, c):
        return self.scale(c)

    def permute(self, g: Permutation) -> CanonicalElement:
        return fp_permute(g, self)

    def adjoint(self) -> CanonicalElement:
        return fp_adjoint(self)


def _check_compatible(x: CanonicalElement, y: CanonicalElement) -> None:
    if x.mode != y.mode:
        raise RejectedInputError(f"mode mismatch: {x.mode} vs {y.mode}")
    if x.alg is not y.alg:
        raise RejectedInputError("elements belong to different site algebras")


def zero(alg: SiteAlgebra, mode: str) -> CanonicalElement:
    return CanonicalElement(alg, mode)


def one(alg: SiteAlgebra) -> CanonicalElement:
    return CanonicalElement(alg, UNITAL, scalar=1)


def basis_word(alg: SiteAlgebra, mode: str, word: Iterable[Letter], coeff: complex = 1) -> CanonicalElement:
    return CanonicalElement(alg, mode, {tuple(tuple(l) for l in word): coeff})


def embed_letter(alg: SiteAlgebra, site: int, a: CMat, mode: str) -> CanonicalElement:
    """Canonical embedding of the matrix ``a`` at ``site``."""
    c = alg.coords(a)
    if mode == NONUNITAL:
        return CanonicalElement(alg, mode, {((site, lab + 1),): c[lab] for lab in range(alg.nbasis)})
    if mode == UNITAL:
        return CanonicalElement(alg, mode, {((site, lab + 1),): c[lab] for lab in range(1, alg.nbasis)}, c[0])
    raise RejectedInputError(f"unknown mode {mode!r}")


def _mul_words(alg: SiteAlgebra, mode: str, v: Word, w: Word) -> dict:
    """Product of two basis words as a canonical ``{word: coeff}`` map (empty word = scalar)."""
    return dict(_mul_words_cached(alg, mode, v, w))


@lru_cache(maxsize=200_000)
def _mul_words_cached(alg: SiteAlgebra, mode: str, v: Word, w: Word) -> tuple:
    if not v or not w or v[-1][0] != w[0][0]:
        return ((v + w, 1 + 0j),)
    site = v[-1][0]
    head, tail = v[:-1], w[1:]
    acc: dict = {}
    for lab, c in alg.product_coords(v[-1][1], w[0][1]).items():
        if mode == UNITAL and lab == 1:
            # unit component contracts the word; the new junction may merge again
            for word, c2 in _mul_words_cached(alg, mode, head, tail):
                _add(acc, word, c * c2)
        else:
            _add(acc, head + ((site, lab),) + tail, c)
    return tuple(acc.items())


def _from_map(alg: SiteAlgebra, mode: str, acc: dict) -> CanonicalElement:
    scalar = acc.pop((), 0j)
    return CanonicalElement(alg, mode, acc, scalar)


def fp_mul(x: CanonicalElement, y: CanonicalElement) -> CanonicalElement:
    """Free-product multiplication, extended bilinearly from basis words."""
    _check_compatible(x, y)
    alg, mode = x.alg, x.mode
    xs = list(x.terms.items())
    ys = list(y.terms.items())
    if mode == UNITAL:
        if x.scalar != 0:
            xs.append(((), x.scalar))
        if y.scalar != 0:
            ys.append(((), y.scalar))
    acc: dict = {}
    for v, cv in xs:
        for w, cw in ys:
            for word, c in _mul_words_cached(alg, mode, v, w):
                _add(acc, word, cv * cw * c)
    return _from_map(alg, mode, acc)


def from_letters(alg: SiteAlgebra, mode: str, letters: Sequence[Letter], coeff: complex = 1) -> CanonicalElement:
    """Canonicalize an arbitrary letter sequence (equal adjacent sites allowed) by left folding."""
    if mode == UNITAL:
        out = one(alg)
    else:
        out = None
    for site, lab in letters:
        if mode == UNITAL and lab == 1:
            continue
        letter = basis_word(alg, mode, [(site, lab)])
        out = letter if out is None else fp_mul(out, letter)
    if out is None:
        raise RejectedInputError("empty product in the non-unital free product")
    return out.scale(coeff)


def fp_adjoint(x: CanonicalElement) -> CanonicalElement:
    """Reverse every word and take the adjoint letterwise; coefficients are conjugated."""
    alg, mode = x.alg, x.mode
    total = CanonicalElement(alg, mode, {}, np.conj(x.scalar))
    for word, c in x.terms.items():
        prod = None
        for site, lab in reversed(word):
            coords = alg.adjoint_label_coords(lab)
            if mode == UNITAL:
                letter = CanonicalElement(
                    alg, mode, {((site, l),): v for l, v in coords.items() if l != 1}, coords.get(1, 0j)
                )
            else:
                letter = CanonicalElement(alg, mode, {((site, l),): v for l, v in coords.items()})
            prod = letter if prod is None else fp_mul(prod, letter)
        total = total + prod.scale(np.conj(c))
    return total


def fp_permute(g: Permutation, x: CanonicalElement) -> CanonicalElement:
    """Relabel every site ``j`` as ``g(j)``."""
    terms = {tuple((g(s), lab) for s, lab in w): c for w, c in x.terms.items()}
    return CanonicalElement(x.alg, x.mode, terms, x.scalar)


def fp_quotient(x: CanonicalElement) -> CanonicalElement:
    """Quotient map from the non-unital to the unital free product.

    Every letter splits as (unit component) + (W component); in the fixed basis
    a letter is either the unit (label 1) or already in W, so the expansion
    keeps the W letters and drops unit letters, re-merging the sites that
    become adjacent.
    """
    if x.mode != NONUNITAL:
        raise RejectedInputError("fp_quotient expects a non-unital element")
    alg = x.alg
    acc: dict = {}
    for word, c in x.terms.items():
        img = from_letters(alg, UNITAL, word)
        if img.scalar != 0:
            _add(acc, (), c * img.scalar)
        for w2, c2 in img.terms.items():
            _add(acc, w2, c * c2)
    return _from_map(alg, UNITAL, acc)


# -- representations --------------------------------------------------------


@dataclass(frozen=True)
class ProcessRep:
    """Concrete stochastic process: unital *-homomorphisms per site plus a unit vector.

    ``site_maps[j][label - 1]`` is the image of basis element ``label`` at site ``j``.
    """

    alg: SiteAlgebra
    site_maps: Mapping[int, tuple]
    cyclic_vector: np.ndarray

    def __post_init__(self):
        om = np.asarray(self.cyclic_vector, dtype=complex).reshape(-1)
        object.__setattr__(self, "cyclic_vector", om)
        if abs(np.linalg.norm(om) - 1) > 1e-10:
            raise RejectedInputError("cyclic vector must have unit norm")
        dim = om.shape[0]
        alg = self.alg
        for site, images in self.site_maps.items():
            if len(images) != alg.nbasis or any(m.shape != (dim, dim) for m in images):
                raise RejectedInputError(f"site {site}: need {alg.nbasis} images of shape ({dim}, {dim})")
            if not np.allclose(images[0], np.eye(dim), atol=1e-10):
                raise RejectedInputError(f"site {site}: unit is not mapped to the identity")
            for a in range(alg.nbasis):
                adj = sum(c * images[l - 1] for l, c in alg.adjoint_label_coords(a + 1).items())
                if np.max(np.abs(adj - adjoint(images[a]))) > 1e-10:
                    raise RejectedInputError(f"site {site}: map does not preserve adjoints")
                for b in range(alg.nbasis):
                    prod = sum(c * images[l - 1] for l, c in alg.product_coords(a + 1, b + 1).items())
                    if np.max(np.abs(prod - images[a] @ images[b]), initial=0.0) > 1e-10:
                        raise RejectedInputError(f"site {site}: map does not preserve products")

    @property
    def space_dim(self) -> int:
        return self.cyclic_vector.shape[0]

    @classmethod
    def from_homomorphisms(cls, alg: SiteAlgebra, maps: Mapping[int, Callable[[CMat], CMat]], omega) -> ProcessRep:
        return cls(alg, {j: tuple(np.asarray(f(b), dtype=complex) for b in alg.basis) for j, f in maps.items()}, omega)

    def operator(self, x: CanonicalElement) -> CMat:
        """``pi(x)`` as a matrix."""
        dim = self.space_dim
        out = x.scalar * np.eye(dim, dtype=complex)
        for word, c in x.terms.items():
            m = np.eye(dim, dtype=complex)
            for site, lab in word:
                m = m @ self._image(site, lab)
            out = out + c * m
        return out

    def _image(self, site: int, lab: int) -> CMat:
        try:
            return self.site_maps[site][lab - 1]
        except KeyError:
            raise RejectedInputError(f"representation has no map for site {site}") from None


def fp_eval(x: CanonicalElement, rep: ProcessRep) -> complex:
    """``<pi(x) Omega, Omega>``, applying letters right to left to the vector."""
    om = rep.cyclic_vector
    total = x.scalar * np.vdot(om, om)
    for word, c in x.terms.items():
        v = om
        for site, lab in reversed(word):
            v = rep._image(site, lab) @ v
        total += c * np.vdot(om, v)
    return complex(total)


def rep_norm(x: CanonicalElement, rep: ProcessRep) -> float:
    """Operator norm of ``pi(x)`` in the given representation."""
    return op_norm(rep.operator(x))


def tensor_product_rep(alg: SiteAlgebra, sites: Sequence[int], omega) -> ProcessRep:
    """Sites act on separate tensor factors of ``(C^k)^{⊗n}``; ``omega`` is any unit vector."""
    k, n = alg.k, len(sites)
    maps = {}
    for pos, site in enumerate(sites):
        left, right = np.eye(k**pos), np.eye(k ** (n - pos - 1))
        maps[site] = tuple(np.kron(np.kron(left, b), right) for b in alg.basis)
    return ProcessRep(alg, maps, omega)


def product_vector(xi, n: int) -> np.ndarray:
    xi = np.asarray(xi, dtype=complex)
    xi = xi / np.linalg.norm(xi)
    out = np.ones(1, dtype=complex)
    for _ in range(n):
        out = np.kron(out, xi)
    return out


def random_rep(alg: SiteAlgebra, sites: Sequence[int], rng: np.random.Generator, multiplicity: int = 2) -> ProcessRep:
    """Sites act as ``U_j (A ⊗ I_m) U_j^*`` for independent random unitaries ``U_j``."""
    dim = alg.k * multiplicity
    maps = {}
    for site in sites:
        z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        u, _ = np.linalg.qr(z)
        maps[site] = tuple(u @ np.kron(b, np.eye(multiplicity)) @ u.conj().T for b in alg.basis)
    om = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return ProcessRep(alg, maps, om / np.linalg.norm(om))


def random_element(
    alg: SiteAlgebra,
    mode: str,
    rng: np.random.Generator,
    sites: Sequence[int] = (1, 2, 3, 4),
    max_len: int = 4,
    max_terms: int = 3,
) -> CanonicalElement:
    """Random canonical element with small Gaussian-integer coefficients.

    Integer coefficients keep every product exactly representable, so canonical
    forms of equal elements compare equal bit for bit.
    """
    min_label = 2 if mode == UNITAL else 1
    acc: dict = {}
    scalar = 0j
    if mode == UNITAL and rng.random() < 0.5:
        scalar = complex(*rng.integers(-2, 3, size=2))
    for _ in range(int(rng.integers(1, max_terms + 1))):
        length = int(rng.integers(1, max_len + 1))
        word = []
        for _ in range(length):
            choices = [s for s in sites if not word or s != word[-1][0]]
            word.append((int(rng.choice(choices)), int(rng.integers(min_label, alg.nbasis + 1))))
        _add(acc, tuple(word), complex(*rng.integers(-2, 3, size=2)))
    return CanonicalElement(alg, mode, acc, scalar)


def random_permutation(sites: Sequence[int], rng: np.random.Generator) -> Permutation:
    sites = list(sites)
    return Permutation.from_images(sites, [sites[k] for k in rng.permutation(len(sites))])


@dataclass
class FuzzResult:
    cases: int
    associativity_failures: int = 0
    adjoint_failures: int = 0
    quotient_failures: int = 0
    equivariance_failures: int = 0
    eval_residual: float = 0.0

    @property
    def exact_failures(self) -> int:
        return self.associativity_failures + self.adjoint_failures + self.quotient_failures + self.equivariance_failures

    def as_dict(self) -> dict:
        return {
            "cases": self.cases,
            "associativity_failures": self.associativity_failures,
            "adjoint_failures": self.adjoint_failures,
            "quotient_failures": self.quotient_failures,
            "equivariance_failures": self.equivariance_failures,
            "eval_residual": self.eval_residual,
        }


def fuzz(
    rng: np.random.Generator,
    cases: int = 1000,
    sites: Sequence[int] = (1, 2, 3, 4),
    max_len: int = 4,
    reps: int = 5,
    alg: SiteAlgebra | None = None,
) -> FuzzResult:
    """Randomized check of the algebraic identities of the free product.

    Exact canonical-form equality is required for associativity, the adjoint
    antihomomorphism, the quotient homomorphism and permutation equivariance;
    multiplicativity of ``x -> pi(x)`` is measured against ``reps`` random
    representations as the largest deviation of ``fp_eval``.
    """
    alg = alg or SiteAlgebra.pauli()
    res = FuzzResult(cases)
    representations = [random_rep(alg, sites, rng) for _ in range(reps)]
    for k in range(cases):
        mode = MODES[k % 2]
        x, y, z = (random_element(alg, mode, rng, sites, max_len) for _ in range(3))
        xy = fp_mul(x, y)
        if fp_mul(xy, z) != fp_mul(x, fp_mul(y, z)):
            res.associativity_failures += 1
        if fp_adjoint(xy) != fp_mul(fp_adjoint(y), fp_adjoint(x)):
            res.adjoint_failures += 1
        g = random_permutation(sites, rng)
        if fp_permute(g, xy) != fp_mul(fp_permute(g, x), fp_permute(g, y)):
            res.equivariance_failures += 1
        if mode == NONUNITAL:
            if fp_quotient(xy) != fp_mul(fp_quotient(x), fp_quotient(y)):
                res.quotient_failures += 1
            if fp_quotient(fp_permute(g, x)) != fp_permute(g, fp_quotient(x)):
                res.equivariance_failures += 1
            xq, yq = fp_quotient(x), fp_quotient(y)
        else:
            xq, yq = x, y
        rep = representations[k % reps]
        lhs = fp_eval(fp_mul(xq, yq), rep)
        rhs = np.vdot(rep.cyclic_vector, rep.operator(xq) @ rep.operator(yq) @ rep.cyclic_vector)
        res.eval_residual = max(res.eval_residual, float(abs(lhs - rhs)))
    return res


# -- serialization ----------------------------------------------------------


def to_json_obj(x: CanonicalElement) -> dict:
    return {
        "mode": x.mode,
        "scalar": [x.scalar.real, x.scalar.imag],
        "terms": [
            {"word": [[s, l] for s, l in w], "coeff": [c.real, c.imag]}
            for w, c in sorted(x.terms.items())
        ],
    }


def to_json(x: CanonicalElement) -> str:
    return json.dumps(to_json_obj(x))


def from_json(alg: SiteAlgebra, data: str | dict) -> CanonicalElement:
    obj = json.loads(data) if isinstance(data, str) else data
    try:
        terms = {tuple((int(s), int(l)) for s, l in t["word"]): complex(*t["coeff"]) for t in obj["terms"]}
        return CanonicalElement(alg, obj["mode"], terms, complex(*obj["scalar"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise RejectedInputError(f"malformed element: {exc}") from exc
