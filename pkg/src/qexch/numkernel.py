"""Dense complex-matrix kernel.

Matrices are plain ``numpy.ndarray`` objects of shape ``(rows, cols)``;
``CMat`` is only an alias used in signatures.
"""

from __future__ import annotations

import numpy as np

from .errors import RejectedInputError

CMat = np.ndarray

DEFAULT_TOL = 1e-10


def as_cmat(a) -> CMat:
    """Coerce ``a`` to a finite 2-D complex array."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or 0 in m.shape:
        raise RejectedInputError(f"expected a non-empty 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise RejectedInputError("matrix has non-finite entries")
    return m


def mul(a: CMat, b: CMat) -> CMat:
    """Matrix product accumulated over the inner index in a fixed order.

    Real and imaginary parts are formed with plain float products and sums
    (no fused multiply-add, no layout-dependent blocking), so that
    ``adjoint(mul(a, b)) == mul(adjoint(b), adjoint(a))`` holds bit for bit.
    """
    a, b = np.asarray(a), np.asarray(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise RejectedInputError(f"cannot multiply {a.shape} by {b.shape}")
    ar, ai = np.real(a).astype(float), np.imag(a).astype(float)
    br, bi = np.real(b).astype(float), np.imag(b).astype(float)
    re = np.zeros((a.shape[0], b.shape[1]))
    im = np.zeros_like(re)
    for k in range(a.shape[1]):
        re += np.multiply.outer(ar[:, k], br[k]) - np.multiply.outer(ai[:, k], bi[k])
        im += np.multiply.outer(ar[:, k], bi[k]) + np.multiply.outer(ai[:, k], br[k])
    return re + 1j * im


def adjoint(a: CMat) -> CMat:
    return a.conj().T


def is_hermitian(a: CMat, tol: float = DEFAULT_TOL) -> bool:
    return a.ndim == 2 and a.shape[0] == a.shape[1] and float(np.max(np.abs(a - adjoint(a)), initial=0.0)) <= tol


def hermitian_min_eig(a: CMat, tol: float = DEFAULT_TOL) -> float:
    """Smallest eigenvalue of a Hermitian matrix.

    Raises:
        RejectedInputError: ``a`` is not square, or deviates from its adjoint
            by more than ``tol`` in max-entry norm.
    """
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise RejectedInputError(f"expected a square matrix, got shape {a.shape}")
    if not is_hermitian(a, tol):
        raise RejectedInputError("matrix is not Hermitian within tolerance")
    h = (a + adjoint(a)) / 2
    return float(np.linalg.eigvalsh(h)[0])


def frob_norm(a: CMat) -> float:
    return float(np.linalg.norm(a, "fro"))


def op_norm(a: CMat) -> float:
    """Spectral (operator) norm."""
    return float(np.linalg.norm(a, 2))


def commutator(a: CMat, b: CMat) -> CMat:
    return a @ b - b @ a


def anticommutator(a: CMat, b: CMat) -> CMat:
    return a @ b + b @ a
