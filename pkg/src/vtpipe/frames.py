"""Core stream frame types shared by every pipeline stage.

All timestamps are integer nanoseconds on a per-session monotonic clock;
zero is the session-start epoch. Frames are immutable values: array fields
are copied at construction and marked read-only, so they can be shared
across threads without synchronization.

Sensor payloads are held as float32, matching the on-disk record layout
bit for bit. Geometry math promotes to float64 internally (see geometry).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum, IntEnum

import numpy as np

from .validation import as_float_array, check_range, check_timestamp

# Integer nanoseconds since session start.
Timestamp = int

NS_PER_S = 1_000_000_000

TAXEL_SHAPE = (5, 8, 16)  # five fingertip arrays, 8 rows x 16 columns
HAND_DOF = 19  # stretch/spread parameters
FORCE_MIN_N = -0.5  # sensor range 0-20 N plus drift margin
FORCE_MAX_N = 25.0

DEFAULT_VISION_WIDTH = 1920
DEFAULT_VISION_HEIGHT = 1080


def period_ns(rate_hz: float) -> int:
    """Nominal frame period of a stream, rounded to whole nanoseconds."""
    return round(NS_PER_S / float(rate_hz))


def ns_from_s(seconds: float) -> int:
    return round(seconds * NS_PER_S)


def s_from_ns(nanos: int) -> float:
    return nanos / NS_PER_S


class Modality(Enum):
    TACTILE = "tactile"
    VISION = "vision"
    KINEMATICS = "kinematics"
    POSE = "pose"


class PoseConfidence(IntEnum):
    """Tracker confidence levels, ordered worst to best."""

    FAILED = 0
    LOW = 1
    MEDIUM = 2
    HIGH = 3


@dataclass(frozen=True, eq=False)
class TactileFrame:
    """Five 8x16 fingertip force matrices (newtons) at one timestamp."""

    t: Timestamp
    forces: np.ndarray  # (5, 8, 16) float32

    def __post_init__(self):
        object.__setattr__(self, "t", check_timestamp("TactileFrame.t", self.t))
        forces = as_float_array("TactileFrame.forces", self.forces, TAXEL_SHAPE)
        check_range("TactileFrame.forces", forces, FORCE_MIN_N, FORCE_MAX_N)
        object.__setattr__(self, "forces", forces)

    def __eq__(self, other):
        if not isinstance(other, TactileFrame):
            return NotImplemented
        return self.t == other.t and np.array_equal(self.forces, other.forces)


@dataclass(frozen=True, eq=False)
class KinematicsFrame:
    """19 normalized stretch/spread parameters in [0, 1] at one timestamp."""

    t: Timestamp
    dof: np.ndarray  # (19,) float32

    def __post_init__(self):
        object.__setattr__(self, "t", check_timestamp("KinematicsFrame.t", self.t))
        dof = as_float_array("KinematicsFrame.dof", self.dof, (HAND_DOF,))
        check_range("KinematicsFrame.dof", dof, 0.0, 1.0)
        object.__setattr__(self, "dof", dof)

    def __eq__(self, other):
        if not isinstance(other, KinematicsFrame):
            return NotImplemented
        return self.t == other.t and np.array_equal(self.dof, other.dof)


# Quaternion norm tolerance for stored poses. Pose payloads live in float32
# (the record format), so unit norm only holds to f32 rounding; strict 1e-9
# normalization is enforced by geometry.Rotation, not here.
_QUAT_NORM_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class PoseSample:
    """6-DOF tracker pose with confidence, in the tracker's local frame.

    ``quat`` is (w, x, y, z) with canonical sign (w >= 0; if w == 0, the
    first nonzero of x, y, z is positive). Values are stored exactly as
    given (float32) so file round trips are bit-exact.
    """

    t: Timestamp
    position: np.ndarray  # (3,) float32, meters
    quat: np.ndarray  # (4,) float32, unit to f32 rounding
    confidence: PoseConfidence = PoseConfidence.HIGH

    def __post_init__(self):
        object.__setattr__(self, "t", check_timestamp("PoseSample.t", self.t))
        pos = as_float_array("PoseSample.position", self.position, (3,))
        quat = as_float_array("PoseSample.quat", self.quat, (4,))
        norm = float(np.linalg.norm(quat.astype(np.float64)))
        if abs(norm - 1.0) > _QUAT_NORM_TOL:
            raise ValueError(f"PoseSample.quat: norm {norm} not within {_QUAT_NORM_TOL} of 1")
        if not _canonical_sign_ok(quat):
            raise ValueError("PoseSample.quat: not in canonical sign form (w >= 0)")
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "quat", quat)
        object.__setattr__(self, "confidence", PoseConfidence(self.confidence))

    def __eq__(self, other):
        if not isinstance(other, PoseSample):
            return NotImplemented
        return (
            self.t == other.t
            and np.array_equal(self.position, other.position)
            and np.array_equal(self.quat, other.quat)
            and self.confidence == other.confidence
        )


def _canonical_sign_ok(quat: np.ndarray) -> bool:
    for c in quat:
        if c > 0:
            return True
        if c < 0:
            return False
    return False  # all-zero is never canonical


def canonical_quat(quat: np.ndarray) -> np.ndarray:
    """Flip sign so q and -q map to the same canonical representative."""
    q = np.asarray(quat)
    return q if _canonical_sign_ok(q) else -q


@dataclass(frozen=True)
class VisionFrame:
    """Reference to one frame of the session's video asset (no pixels)."""

    t: Timestamp
    frame_index: int
    width: int = DEFAULT_VISION_WIDTH
    height: int = DEFAULT_VISION_HEIGHT

    def __post_init__(self):
        object.__setattr__(self, "t", check_timestamp("VisionFrame.t", self.t))
        if self.frame_index < 0:
            raise ValueError("VisionFrame.frame_index must be >= 0")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("VisionFrame dimensions must be positive")


@dataclass(eq=False)
class RawSession:
    """Per-modality streams as captured: each sorted internally, mutually
    asynchronous. Vision and pose are optional and may be empty."""

    tactile: list[TactileFrame] = field(default_factory=list)
    vision: list[VisionFrame] = field(default_factory=list)
    kinematics: list[KinematicsFrame] = field(default_factory=list)
    pose: list[PoseSample] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def stream(self, modality: Modality) -> list:
        return getattr(self, modality.value)

    def streams_equal(self, other: "RawSession") -> bool:
        """Frame-exact equality of the four streams (meta excluded)."""
        return (
            self.tactile == other.tactile
            and self.vision == other.vision
            and self.kinematics == other.kinematics
            and self.pose == other.pose
        )

    def __eq__(self, other):
        if not isinstance(other, RawSession):
            return NotImplemented
        return self.streams_equal(other) and self.meta == other.meta


def stream_times(frames) -> np.ndarray:
    """Timestamps of a frame list as an int64 array."""
    return np.array([f.t for f in frames], dtype=np.int64)
