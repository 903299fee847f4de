"""Rotation geometry: canonical unit quaternions and the nearest-rotation
projection used by calibration.

Quaternions are (w, x, y, z), Hamilton convention, stored canonically:
w >= 0, and if w == 0 the first nonzero of (x, y, z) is positive, so q and
-q collapse to one value. Matrices are derived views; composing rotations
equals multiplying their matrices.

All math here is float64 regardless of how sensor payloads are stored.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateMatrixError
from .frames import canonical_quat

_NORM_EPS = 1e-12  # below this quaternion norm, direction is meaningless
_MATRIX_TOL = 1e-9  # orthonormality tolerance for from_matrix
_POLAR_TOL = 1e-12  # Frobenius convergence tolerance of the polar iteration
_POLAR_MAX_ITER = 100
_MIN_ABS_DET = 1e-6  # nearest_rotation degeneracy cutoff


class Rotation:
    """Immutable 3-D rotation stored as a canonical unit quaternion."""

    __slots__ = ("_q",)

    def __init__(self, w: float, x: float, y: float, z: float):
        q = np.array([w, x, y, z], dtype=np.float64)
        norm = float(np.linalg.norm(q))
        if not np.isfinite(norm) or norm < _NORM_EPS:
            raise ValueError(f"quaternion norm {norm} too small to normalize")
        q = canonical_quat(q / norm)
        q.setflags(write=False)
        self._q = q

    # --- constructors ----------------------------------------------------

    @classmethod
    def identity(cls) -> "Rotation":
        return cls(1.0, 0.0, 0.0, 0.0)

    @classmethod
    def from_quat(cls, quat) -> "Rotation":
        w, x, y, z = np.asarray(quat, dtype=np.float64)
        return cls(w, x, y, z)

    @classmethod
    def from_axis_angle(cls, axis, angle: float) -> "Rotation":
        axis = np.asarray(axis, dtype=np.float64)
        norm = float(np.linalg.norm(axis))
        if norm < _NORM_EPS:
            raise ValueError("rotation axis has near-zero norm")
        axis = axis / norm
        half = 0.5 * float(angle)
        s = np.sin(half)
        return cls(np.cos(half), s * axis[0], s * axis[1], s * axis[2])

    @classmethod
    def from_matrix(cls, m) -> "Rotation":
        """Convert an orthonormal matrix with determinant +1.

        Raises ValueError if m is not a rotation matrix within 1e-9; use
        nearest_rotation to project a noisy matrix instead.
        """
        m = np.asarray(m, dtype=np.float64)
        if m.shape != (3, 3):
            raise ValueError(f"expected a 3x3 matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("matrix has non-finite entries")
        if np.max(np.abs(m @ m.T - np.eye(3))) > _MATRIX_TOL:
            raise ValueError("matrix is not orthonormal within tolerance")
        if abs(np.linalg.det(m) - 1.0) > _MATRIX_TOL:
            raise ValueError("matrix determinant is not +1 within tolerance")
        return cls(*_quat_from_matrix(m))

    # --- views ------------------------------------------------------------

    @property
    def quat(self) -> np.ndarray:
        """Canonical (w, x, y, z), read-only."""
        return self._q

    def matrix(self) -> np.ndarray:
        w, x, y, z = self._q
        xx, yy, zz = x * x, y * y, z * z
        wx, wy, wz = w * x, w * y, w * z
        xy, xz, yz = x * y, x * z, y * z
        return np.array(
            [
                [1 - 2 * (yy + zz), 2 * (xy - wz), 2 * (xz + wy)],
                [2 * (xy + wz), 1 - 2 * (xx + zz), 2 * (yz - wx)],
                [2 * (xz - wy), 2 * (yz + wx), 1 - 2 * (xx + yy)],
            ]
        )

    # --- algebra -----------------------------------------------------------

    def compose(self, other: "Rotation") -> "Rotation":
        """Rotation equal to applying ``other`` first, then ``self``.

        matrix(a.compose(b)) == matrix(a) @ matrix(b) up to rounding.
        """
        w1, x1, y1, z1 = self._q
        w2, x2, y2, z2 = other._q
        return Rotation(
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        )

    def __matmul__(self, other: "Rotation") -> "Rotation":
        return self.compose(other)

    def inverse(self) -> "Rotation":
        w, x, y, z = self._q
        return Rotation(w, -x, -y, -z)

    def apply(self, v) -> np.ndarray:
        """Rotate one 3-vector or an (n, 3) stack of vectors."""
        v = np.asarray(v, dtype=np.float64)
        u = self._q[1:]
        w = self._q[0]
        t = 2.0 * np.cross(u, v)
        return v + w * t + np.cross(u, t)

    def angle_to(self, other: "Rotation") -> float:
        """Geodesic angle in radians between two rotations."""
        rel = self.inverse().compose(other)._q
        return 2.0 * float(np.arctan2(np.linalg.norm(rel[1:]), abs(rel[0])))

    def __eq__(self, other):
        if not isinstance(other, Rotation):
            return NotImplemented
        return bool(np.array_equal(self._q, other._q))

    def __hash__(self):
        return hash(self._q.tobytes())

    def __repr__(self):
        w, x, y, z = self._q
        return f"Rotation(w={w:.9g}, x={x:.9g}, y={y:.9g}, z={z:.9g})"


def rotation_compose(a: Rotation, b: Rotation) -> Rotation:
    """Composition a then-applied-after b: matrix product A @ B."""
    return a.compose(b)


def rotation_apply(r: Rotation, v) -> np.ndarray:
    return r.apply(v)


def nearest_rotation(m) -> Rotation:
    """Project a 3x3 matrix onto the closest proper rotation (Frobenius).

    Uses the Newton polar iteration X <- (X + X^-T) / 2, which converges to
    the orthogonal polar factor of m, followed by a sign correction along
    the smallest-stretch direction when det(m) < 0.

    Raises DegenerateMatrixError when |det(m)| <= 1e-6 (the projection is
    ill-defined near rank deficiency).
    """
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (3, 3):
        raise DegenerateMatrixError(f"expected a 3x3 matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DegenerateMatrixError("matrix has non-finite entries")
    det = float(np.linalg.det(m))
    if abs(det) <= _MIN_ABS_DET:
        raise DegenerateMatrixError(f"matrix determinant {det} too close to singular")

    x = m.copy()
    for _ in range(_POLAR_MAX_ITER):
        nxt = 0.5 * (x + np.linalg.inv(x).T)
        delta = float(np.linalg.norm(nxt - x))
        x = nxt
        if delta < _POLAR_TOL:
            break

    if det < 0.0:
        # Polar factor of a reflected matrix is itself a reflection. The
        # closest proper rotation flips the direction of least stretch:
        # with m = q @ h and h = V diag(s) V^T (s ascending), it is
        # q @ V @ diag(-1, 1, 1) @ V^T.
        h = x.T @ m
        h = 0.5 * (h + h.T)
        _, vecs = np.linalg.eigh(h)
        d = np.diag([-1.0, 1.0, 1.0])
        x = x @ vecs @ d @ vecs.T

    return Rotation(*_quat_from_matrix(x))


def _quat_from_matrix(m: np.ndarray) -> np.ndarray:
    """Shepperd's method: branch on the largest diagonal combination."""
    t = np.trace(m)
    if t > m[0, 0] and t > m[1, 1] and t > m[2, 2]:
        r = np.sqrt(1.0 + t)
        s = 0.5 / r
        q = np.array(
            [0.5 * r, (m[2, 1] - m[1, 2]) * s, (m[0, 2] - m[2, 0]) * s, (m[1, 0] - m[0, 1]) * s]
        )
    elif m[0, 0] >= m[1, 1] and m[0, 0] >= m[2, 2]:
        r = np.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2])
        s = 0.5 / r
        q = np.array(
            [(m[2, 1] - m[1, 2]) * s, 0.5 * r, (m[0, 1] + m[1, 0]) * s, (m[0, 2] + m[2, 0]) * s]
        )
    elif m[1, 1] >= m[2, 2]:
        r = np.sqrt(1.0 - m[0, 0] + m[1, 1] - m[2, 2])
        s = 0.5 / r
        q = np.array(
            [(m[0, 2] - m[2, 0]) * s, (m[0, 1] + m[1, 0]) * s, 0.5 * r, (m[1, 2] + m[2, 1]) * s]
        )
    else:
        r = np.sqrt(1.0 - m[0, 0] - m[1, 1] + m[2, 2])
        s = 0.5 / r
        q = np.array(
            [(m[1, 0] - m[0, 1]) * s, (m[0, 2] + m[2, 0]) * s, (m[1, 2] + m[2, 1]) * s, 0.5 * r]
        )
    return q
