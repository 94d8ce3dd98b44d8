"""Input validation helpers shared by the public entry points."""

import numbers

import numpy as np

from .exceptions import NotSymmetric


def check_matrix(A, name="A", allow_empty=False):
    """Return ``A`` as a finite 2-D float64 array.

    Raises ``ValueError`` on wrong dimensionality or non-finite entries.
    """
    arr = np.asarray(A, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-D matrix, got shape {arr.shape}")
    if not allow_empty and arr.size == 0:
        raise ValueError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return arr


def check_square(A, name="A"):
    arr = check_matrix(A, name)
    if arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square, got shape {arr.shape}")
    return arr


def check_symmetric(A, name="A", atol=1e-12):
    """Square, finite and symmetric up to ``atol * max(1, |a_ij|)``.

    Returns the exactly symmetrised matrix.
    """
    arr = check_square(A, name)
    scale = np.maximum(1.0, np.maximum(np.abs(arr), np.abs(arr.T)))
    if np.any(np.abs(arr - arr.T) > atol * scale):
        raise NotSymmetric(f"{name} is not symmetric")
    return 0.5 * (arr + arr.T)


def check_gradient_stack(gradients, name="gradients"):
    """Validate a (T, m, n) stack of gradient matrices."""
    arr = np.asarray(gradients, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3 or arr.shape[0] == 0:
        raise ValueError(f"{name} must have shape (T, m, n), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return arr


def check_positive(value, name, strict=True):
    if not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise ValueError(f"{name} must be a finite real number, got {value!r}")
    if value < 0 or (strict and value == 0):
        raise ValueError(f"{name} must be {'positive' if strict else 'nonnegative'}, got {value}")
    return float(value)


def check_unit_interval(value, name, closed_right=True):
    if not isinstance(value, numbers.Real):
        raise ValueError(f"{name} must be a real number, got {value!r}")
    upper_ok = value <= 1 if closed_right else value < 1
    if not (0 < value and upper_ok):
        bracket = "]" if closed_right else ")"
        raise ValueError(f"{name} must lie in (0, 1{bracket}, got {value}")
    return float(value)
