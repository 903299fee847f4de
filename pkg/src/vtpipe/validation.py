"""Input validation helpers shared across modules.

These mirror the checking style of sklearn's ``check_array``: validate, copy
into the canonical dtype, and freeze the result so domain objects stay
immutable after construction.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .errors import ShapeMismatchError


def as_float_array(
    name: str,
    values,
    shape: tuple[int, ...] | None = None,
    dtype=np.float32,
    writeable: bool = False,
) -> np.ndarray:
    """Copy ``values`` into a validated, finite float array.

    Raises ShapeMismatchError on shape disagreement and ValueError on
    non-finite entries. The returned array is read-only unless requested
    otherwise.
    """
    arr = np.array(values, dtype=dtype)
    if shape is not None and arr.shape != shape:
        raise ShapeMismatchError(f"{name}: expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: non-finite entries")
    arr.setflags(write=writeable)
    return arr


def check_range(name: str, arr: np.ndarray, lo: float, hi: float) -> None:
    """Require every entry of ``arr`` to lie in [lo, hi]."""
    amin = float(arr.min()) if arr.size else lo
    amax = float(arr.max()) if arr.size else lo
    if amin < lo or amax > hi:
        raise ValueError(f"{name}: values outside [{lo}, {hi}] (min={amin}, max={amax})")


def check_timestamp(name: str, t) -> int:
    """Require an integer nanosecond timestamp in [0, 2**64)."""
    if not isinstance(t, (int, np.integer)):
        raise TypeError(f"{name}: timestamp must be an integer, got {type(t).__name__}")
    t = int(t)
    if t < 0 or t >= 2**64:
        raise ValueError(f"{name}: timestamp {t} outside unsigned 64-bit range")
    return t


def check_sorted_timestamps(name: str, times: Sequence[int]) -> None:
    """Require strictly increasing timestamps."""
    for i in range(1, len(times)):
        if times[i] <= times[i - 1]:
            raise ValueError(
                f"{name}: timestamps not strictly increasing at index {i} "
                f"({times[i - 1]} -> {times[i]})"
            )


def check_probability(name: str, p: float, inclusive_one: bool = False) -> float:
    p = float(p)
    hi_ok = p <= 1.0 if inclusive_one else p < 1.0
    if not (0.0 <= p and hi_ok):
        raise ValueError(f"{name}: probability {p} out of range")
    return p


def check_positive(name: str, x: float) -> float:
    x = float(x)
    if not x > 0.0:
        raise ValueError(f"{name}: must be > 0, got {x}")
    return x


def check_non_negative(name: str, x: float) -> float:
    x = float(x)
    if x < 0.0:
        raise ValueError(f"{name}: must be >= 0, got {x}")
    return x
