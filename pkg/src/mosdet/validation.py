"""Input validation helpers for array arguments.

All detector and kernel entry points normalise their inputs through
these functions so that shape or finiteness problems surface as clear
errors instead of numpy broadcasting accidents.
"""

import numpy as np

from .errors import DimensionMismatch

__all__ = [
    "as_complex_matrix",
    "as_complex_vector",
    "check_same_rows",
    "check_hermitian",
]


def as_complex_matrix(a, name="matrix"):
    """Return ``a`` as a finite 2-D complex128 array."""
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {a.shape}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionMismatch(f"{name} must be non-empty, got shape {a.shape}")
    if not np.all(np.isfinite(a.view(np.float64))):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def as_complex_vector(x, name="vector"):
    """Return ``x`` as a finite 1-D complex128 array."""
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim != 1:
        raise DimensionMismatch(f"{name} must be 1-D, got shape {x.shape}")
    if x.size < 1:
        raise DimensionMismatch(f"{name} must be non-empty")
    if not np.all(np.isfinite(x.view(np.float64))):
        raise ValueError(f"{name} contains non-finite entries")
    return x


def check_same_rows(name_a, a, name_b, b):
    """Require two arrays to agree on their first dimension."""
    if a.shape[0] != b.shape[0]:
        raise DimensionMismatch(
            f"{name_a} has {a.shape[0]} rows but {name_b} has {b.shape[0]}"
        )


def check_hermitian(a, rtol=1e-12, name="matrix"):
    """Require ``a`` to be square and Hermitian within a relative tolerance."""
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {a.shape}")
    scale = np.linalg.norm(a)
    if scale == 0.0:
        raise ValueError(f"{name} is identically zero")
    if np.linalg.norm(a - a.conj().T) > rtol * scale:
        raise ValueError(f"{name} is not Hermitian within rtol={rtol}")
