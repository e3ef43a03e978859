"""Dense complex linear algebra for small Hermitian positive-definite matrices.

Everything is built around :class:`HermitianPD`, which pairs a matrix with
its lower Cholesky factor so that determinants, solves and quadratic forms
reuse one factorization. Matrices here are array covariances of dimension
of order 8 to 32; no attempt is made at large-scale or sparse efficiency.
"""

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NotPositiveDefinite
from .validation import as_complex_matrix, as_complex_vector, check_hermitian

__all__ = [
    "HermitianPD",
    "cholesky",
    "logdet",
    "solve",
    "quad_form",
    "rank_one_logdet_update",
    "sample_cn",
    "sample_cn_cols",
]

HERMITIAN_RTOL = 1e-12


class HermitianPD:
    """A Hermitian positive-definite matrix with its lower Cholesky factor.

    Instances are immutable after construction and safe to share across
    threads. Build them with :func:`cholesky`.
    """

    __slots__ = ("matrix", "chol")

    def __init__(self, matrix, chol):
        self.matrix = matrix
        self.chol = chol

    @property
    def dim(self):
        return self.matrix.shape[0]

    def __repr__(self):
        return f"HermitianPD(dim={self.dim})"


def cholesky(a):
    """Factor a Hermitian matrix as L L† and return it as a :class:`HermitianPD`.

    Raises
    ------
    NotPositiveDefinite
        If a pivot is non-positive or non-finite. With fewer independent
        snapshots than channels the Gram matrix is singular and this is
        the error that surfaces.
    """
    a = as_complex_matrix(a, "matrix")
    check_hermitian(a, HERMITIAN_RTOL)
    try:
        L = scipy.linalg.cholesky(a, lower=True)
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise NotPositiveDefinite(f"Cholesky factorization failed: {exc}") from exc
    return HermitianPD(a, L)


def logdet(m):
    """log det of a factored matrix, computed as 2 Σ log diag(L)."""
    return 2.0 * float(np.sum(np.log(np.real(np.diagonal(m.chol)))))


def solve(m, b):
    """Solve M x = b using the stored factor. ``b`` may be a vector or matrix."""
    b = np.asarray(b, dtype=np.complex128)
    if b.shape[0] != m.dim:
        raise DimensionMismatch(
            f"right-hand side has leading dimension {b.shape[0]}, expected {m.dim}"
        )
    return scipy.linalg.cho_solve((m.chol, True), b, check_finite=False)


def quad_form(m, x, y):
    """Return x† M⁻¹ y through two triangular solves.

    For x == y the result is real and non-negative up to rounding; callers
    that need a real number should take ``.real``.
    """
    x = as_complex_vector(x, "x")
    y = as_complex_vector(y, "y")
    if x.size != m.dim or y.size != m.dim:
        raise DimensionMismatch(
            f"vectors of size {x.size}/{y.size} incompatible with dim {m.dim}"
        )
    return complex(np.vdot(solve(m, x), y))


def rank_one_logdet_update(m, x):
    """log det(M + x x†) without re-factoring.

    Uses log det(M + x x†) = log det M + log(1 + x† M⁻¹ x).
    """
    x = as_complex_vector(x, "x")
    if x.size != m.dim:
        raise DimensionMismatch(f"vector of size {x.size} incompatible with dim {m.dim}")
    q = quad_form(m, x, x).real
    return logdet(m) + float(np.log1p(q))


def sample_cn(m, rng):
    """Draw one circular complex normal vector with covariance M.

    The convention is unit complex variance: real and imaginary parts of
    each standard entry have variance 1/2, so E|u|² = 1 and L u has
    covariance exactly M.
    """
    return sample_cn_cols(m, rng, 1)[:, 0]


def sample_cn_cols(m, rng, n):
    """Draw ``n`` iid circular complex normal columns with covariance M.

    One generator call produces all real and imaginary parts, so a fixed
    stream yields a bit-reproducible matrix regardless of platform.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    w = rng.standard_normal((2, m.dim, n))
    u = (w[0] + 1j * w[1]) * np.sqrt(0.5)
    return m.chol @ u
