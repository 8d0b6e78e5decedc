"""Small input-checking helpers shared by the public functions and estimators."""
from __future__ import annotations

import numbers

import numpy as np


def check_real(value, name: str) -> float:
    if isinstance(value, (bool, np.bool_)) or not isinstance(value, numbers.Real):
        raise TypeError(f"{name} must be a real number, got {type(value).__name__}")
    value = float(value)
    if not np.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value}")
    return value


def check_positive(value, name: str) -> float:
    value = check_real(value, name)
    if value <= 0:
        raise ValueError(f"{name} must be > 0, got {value}")
    return value


def check_int(value, name: str, minimum: int | None = None) -> int:
    if isinstance(value, (bool, np.bool_)) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    value = int(value)
    if minimum is not None and value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return value


def check_complex(value, name: str) -> complex:
    if not isinstance(value, numbers.Complex) or isinstance(value, (bool, np.bool_)):
        raise TypeError(f"{name} must be a number, got {type(value).__name__}")
    value = complex(value)
    if not (np.isfinite(value.real) and np.isfinite(value.imag)):
        raise ValueError(f"{name} must be finite, got {value}")
    return value


def check_increasing(values, name: str, *, strict: bool = True, positive: bool = False) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    steps = np.diff(arr)
    if strict and np.any(steps <= 0):
        raise ValueError(f"{name} must be strictly increasing")
    if not strict and np.any(steps < 0):
        raise ValueError(f"{name} must be non-decreasing")
    if positive and arr[0] <= 0:
        raise ValueError(f"{name} must be positive")
    return arr


def check_decreasing_to_zero(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size < 2:
        raise ValueError(f"{name} needs at least two entries")
    if np.any(arr <= 0) or np.any(np.diff(arr) >= 0):
        raise ValueError(f"{name} must be positive and strictly decreasing")
    return arr


def as_complex_array(values, name: str) -> np.ndarray:
    """Accept complex scalars/arrays or an (n, 2) array of (re, im) pairs."""
    arr = np.asarray(values)
    if arr.ndim == 2 and arr.shape[1] == 2 and not np.iscomplexobj(arr):
        arr = arr[:, 0] + 1j * arr[:, 1]
    arr = np.atleast_1d(arr).astype(complex)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_random_state(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None or isinstance(seed, numbers.Integral):
        return np.random.default_rng(seed)
    raise TypeError(f"cannot build a random generator from {seed!r}")
