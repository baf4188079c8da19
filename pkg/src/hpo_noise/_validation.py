"""Exception types and shared input-validation helpers."""

from __future__ import annotations

import numpy as np

MAX_QUBITS = 12
MAX_ENUMERATION_QUBITS = 6
MAX_DENSE_QUBITS = 5


class HPOError(Exception):
    """Base class for package errors."""


class ValidationError(HPOError, ValueError):
    """Rejected input: wrong shape, out-of-range value, malformed file."""


class CapacityError(HPOError):
    """The request is too large for explicit enumeration or dense storage."""


class ConditioningError(HPOError):
    """A learned channel is too ill-conditioned to invert."""

    def __init__(self, message, condition_number=None):
        super().__init__(message)
        self.condition_number = condition_number


class ContractViolation(HPOError, ValueError):
    """An argument breaks a structural contract (e.g. off-mask coordinates)."""


def check_qubit_count(n, *, low=1, high=MAX_QUBITS, name="n"):
    if isinstance(n, (bool, np.bool_)) or not isinstance(n, (int, np.integer)):
        raise ValidationError(f"{name} must be an integer, got {n!r}")
    n = int(n)
    if not low <= n <= high:
        raise ValidationError(f"{name}={n} outside the supported range [{low}, {high}]")
    return n


def check_enumerable(n, what="mask enumeration"):
    if n > MAX_ENUMERATION_QUBITS:
        raise CapacityError(
            f"{what} at n={n} would scan 16^{n} pairs; the limit is "
            f"n={MAX_ENUMERATION_QUBITS}. Use the closed-form counts instead."
        )


def check_probability(p, name="p", *, allow_one=True):
    p = float(p)
    if not np.isfinite(p) or p < 0.0 or p > 1.0 or (not allow_one and p >= 1.0):
        bound = "[0, 1]" if allow_one else "[0, 1)"
        raise ValidationError(f"{name}={p} must lie in {bound}")
    return p


def check_pauli_vector(v, n=None, *, name="v"):
    """Return ``v`` as a float array whose last axis has length ``4**n``."""
    arr = np.asarray(v, dtype=float)
    if arr.ndim not in (1, 2):
        raise ValidationError(f"{name} must be 1-D or 2-D, got shape {arr.shape}")
    dim = arr.shape[-1]
    if n is None:
        n = _log4(dim, name)
    elif dim != 4**n:
        raise ValidationError(f"{name} has length {dim}, expected 4^{n} = {4**n}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    return arr


def _log4(dim, name):
    n = 0
    size = 1
    while size < dim:
        size *= 4
        n += 1
    if size != dim or n == 0:
        raise ValidationError(f"{name} length {dim} is not a power of 4")
    return n
