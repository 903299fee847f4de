"""Human-to-robot retargeting: hand joint mapping, tracker-to-base
calibration, and incremental end-effector pose transfer.

Hand retargeting is a two-layer map: a device-independent intermediate
representation of the 19 normalized hand parameters, then a per-robot
affine coupling clamped to joint limits. Swapping the robot description
changes only the second layer, so the same demonstration retargets to any
hand by replacing one declarative config block.

Arm retargeting transfers the tracker's incremental motion onto the robot
end-effector: position = initial + R_c2b * p_cam, orientation =
R_c2b * R_cam * R_initial. R_c2b comes from a prompted calibration where
the tracker is moved along each base axis; the mean motion directions are
projected onto the nearest rotation (orthogonal Procrustes).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import (
    DegenerateMotionError,
    ShapeMismatchError,
    TooFewSamplesError,
)
from .frames import HAND_DOF, KinematicsFrame, PoseConfidence, PoseSample
from .geometry import Rotation, nearest_rotation, rotation_apply, rotation_compose

MIN_AXIS_SAMPLES = 3
MIN_DISPLACEMENT_M = 0.01  # displacements shorter than 1 cm are noise
MIN_AXIS_ANGLE_DEG = 30.0
_AXES = ("x", "y", "z")


@dataclass(frozen=True)
class HandDescription:
    """Declarative description of one target hand: joint limits plus the
    affine coupling from the intermediate hand representation."""

    name: str
    joint_limits: np.ndarray  # (D, 2) radians, lower < upper
    mapping: np.ndarray  # (D, 19) coupling matrix
    offset: np.ndarray  # (D,) radians

    def __post_init__(self):
        limits = np.asarray(self.joint_limits, dtype=np.float64)
        mapping = np.asarray(self.mapping, dtype=np.float64)
        offset = np.asarray(self.offset, dtype=np.float64)
        if limits.ndim != 2 or limits.shape[1] != 2 or limits.shape[0] < 1:
            raise ShapeMismatchError("joint_limits must be (n_joints, 2)")
        d = limits.shape[0]
        if mapping.shape != (d, HAND_DOF):
            raise ShapeMismatchError(f"mapping must be ({d}, {HAND_DOF})")
        if offset.shape != (d,):
            raise ShapeMismatchError(f"offset must be ({d},)")
        for arr, nm in ((limits, "joint_limits"), (mapping, "mapping"), (offset, "offset")):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{nm}: non-finite entries")
        if np.any(limits[:, 0] >= limits[:, 1]):
            raise ValueError("every joint needs lower < upper")
        for arr in (limits, mapping, offset):
            arr.setflags(write=False)
        object.__setattr__(self, "joint_limits", limits)
        object.__setattr__(self, "mapping", mapping)
        object.__setattr__(self, "offset", offset)

    @property
    def robot_dofs(self) -> int:
        return self.joint_limits.shape[0]


def default_hand() -> HandDescription:
    """Identity 19-joint hand with [0, 1] rad limits; useful as a neutral
    target and in round-trip tests."""
    return HandDescription(
        name="identity19",
        joint_limits=np.tile([0.0, 1.0], (HAND_DOF, 1)),
        mapping=np.eye(HAND_DOF),
        offset=np.zeros(HAND_DOF),
    )


def hand_intermediate(h) -> np.ndarray:
    """Device-independent intermediate representation of the hand state.

    The capture layer already normalizes every stretch/spread parameter to
    [0, 1], so the affine normalization here is the identity; it exists as
    its own stage so the robot-specific layer can change without touching
    this one.
    """
    if isinstance(h, KinematicsFrame):
        h = h.dof
    h = np.asarray(h, dtype=np.float64)
    if h.shape != (HAND_DOF,):
        raise ShapeMismatchError(f"hand state must be ({HAND_DOF},), got {h.shape}")
    return h.copy()


def retarget_hand(h, desc: HandDescription) -> np.ndarray:
    """Map one hand state to robot joint targets, clamped to the limits."""
    inter = hand_intermediate(h)
    q = desc.mapping @ inter + desc.offset
    return np.clip(q, desc.joint_limits[:, 0], desc.joint_limits[:, 1])


# --------------------------------------------------------------------------
# tracker-to-base calibration
# --------------------------------------------------------------------------


@dataclass
class CalibrationRecord:
    """Displacement vectors recorded while the tracker moves along each
    base axis, plus the solved rotation once calibrated."""

    axis_motions: dict[str, list]  # "x"/"y"/"z" -> list of (3,) camera-frame vectors
    solved: Rotation | None = None
    residual: float | None = None  # mean angular error, radians


def calibrate_cam_to_base(rec: CalibrationRecord) -> Rotation:
    """Solve the tracker-to-base rotation from prompted axis motions.

    Displacements shorter than 1 cm are discarded; each axis needs three
    usable samples. The mean unit displacement directions are assembled
    column-wise and projected onto the nearest rotation, which maps each
    measured direction onto its base axis in the least-squares sense. The
    record's solved/residual fields are filled in.
    """
    directions = []
    for axis in _AXES:
        motions = rec.axis_motions.get(axis, [])
        usable = []
        for v in motions:
            v = np.asarray(v, dtype=np.float64)
            if v.shape != (3,):
                raise ShapeMismatchError(f"axis {axis}: displacement vectors must be (3,)")
            norm = float(np.linalg.norm(v))
            if norm >= MIN_DISPLACEMENT_M:
                usable.append(v / norm)
        if len(usable) < MIN_AXIS_SAMPLES:
            raise TooFewSamplesError(
                f"axis {axis}: {len(usable)} usable displacement samples, "
                f"need {MIN_AXIS_SAMPLES}"
            )
        mean = np.mean(usable, axis=0)
        norm = float(np.linalg.norm(mean))
        if norm < 1e-12:
            raise DegenerateMotionError(f"axis {axis}: mean displacement direction vanishes")
        directions.append(mean / norm)

    min_angle = np.deg2rad(MIN_AXIS_ANGLE_DEG)
    for i in range(3):
        for j in range(i + 1, 3):
            dot = abs(float(np.dot(directions[i], directions[j])))
            angle = np.arccos(min(dot, 1.0))  # folded to [0, pi/2]
            if angle < min_angle:
                raise DegenerateMotionError(
                    f"axes {_AXES[i]} and {_AXES[j]} are {np.rad2deg(angle):.1f} deg "
                    f"apart; need at least {MIN_AXIS_ANGLE_DEG} deg"
                )

    m = np.column_stack(directions)
    rotation = nearest_rotation(m.T)
    base = np.eye(3)
    residual = float(
        np.mean([_angle_between(rotation.apply(directions[i]), base[i]) for i in range(3)])
    )
    rec.solved = rotation
    rec.residual = residual
    return rotation


def _angle_between(a: np.ndarray, b: np.ndarray) -> float:
    cross = float(np.linalg.norm(np.cross(a, b)))
    dot = float(np.dot(a, b))
    return float(np.arctan2(cross, dot))


# --------------------------------------------------------------------------
# arm retargeting
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class EePose:
    """End-effector pose in the robot base frame."""

    position: np.ndarray  # (3,) float64, meters
    orientation: Rotation

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=np.float64)
        if pos.shape != (3,):
            raise ShapeMismatchError("position must be (3,)")
        if not np.all(np.isfinite(pos)):
            raise ValueError("position has non-finite entries")
        pos.setflags(write=False)
        object.__setattr__(self, "position", pos)

    def __eq__(self, other):
        if not isinstance(other, EePose):
            return NotImplemented
        return np.array_equal(self.position, other.position) and (
            self.orientation == other.orientation
        )

    def __hash__(self):
        return hash((self.position.tobytes(), self.orientation))


def identity_pose() -> EePose:
    return EePose(position=np.zeros(3), orientation=Rotation.identity())


def retarget_arm_pose(
    cam: PoseSample, r_c2b: Rotation, ee0: EePose
) -> tuple[EePose, bool]:
    """Transfer one tracker pose increment onto the end-effector.

    Returns (pose, low_confidence). The pose is always computed; the flag
    marks tracker confidence Low or Failed so callers can discount it.
    """
    position = ee0.position + rotation_apply(r_c2b, cam.position.astype(np.float64))
    cam_rot = Rotation.from_quat(cam.quat.astype(np.float64))
    orientation = rotation_compose(rotation_compose(r_c2b, cam_rot), ee0.orientation)
    low_confidence = cam.confidence in (PoseConfidence.LOW, PoseConfidence.FAILED)
    return EePose(position=position, orientation=orientation), low_confidence


@dataclass
class RetargetedDemo:
    """Per-sample robot joint targets and end-effector poses."""

    anchors: np.ndarray  # (N,) int64 ns
    joints: np.ndarray  # (N, robot_dofs) radians
    ee_poses: list[EePose]
    low_confidence: np.ndarray  # (N,) bool
    stale: np.ndarray  # (N,) bool; pose was held from the last valid sample
    hand_name: str = ""
    provenance: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.ee_poses)


def retarget_trajectory(
    demo, desc: HandDescription, r_c2b: Rotation, ee0: EePose
) -> RetargetedDemo:
    """Retarget every sample of a synchronized demo.

    Samples without a pose hold the last valid end-effector pose (the
    initial pose before any valid sample) and are flagged stale.
    """
    n = len(demo.samples)
    joints = np.empty((n, desc.robot_dofs), dtype=np.float64)
    ee_poses: list[EePose] = []
    low_conf = np.zeros(n, dtype=bool)
    stale = np.zeros(n, dtype=bool)
    anchors = np.empty(n, dtype=np.int64)
    last_pose = ee0
    for i, sample in enumerate(demo.samples):
        anchors[i] = sample.anchor_t
        joints[i] = retarget_hand(sample.kinematics, desc)
        if sample.pose is None:
            ee_poses.append(last_pose)
            stale[i] = True
        else:
            pose, flag = retarget_arm_pose(sample.pose, r_c2b, ee0)
            ee_poses.append(pose)
            low_conf[i] = flag
            last_pose = pose
    return RetargetedDemo(
        anchors=anchors,
        joints=joints,
        ee_poses=ee_poses,
        low_confidence=low_conf,
        stale=stale,
        hand_name=desc.name,
        provenance={"session_id": demo.provenance.get("session_id", "")},
    )


# --------------------------------------------------------------------------
# estimator-style wrappers
# --------------------------------------------------------------------------


class HandRetargeter(BaseEstimator, TransformerMixin):
    """transform(list of KinematicsFrame) -> (N, robot_dofs) joint array."""

    def __init__(self, hand: HandDescription | None = None):
        self.hand = hand

    def fit(self, X=None, y=None):
        return self

    def transform(self, X) -> np.ndarray:
        desc = self.hand if self.hand is not None else default_hand()
        return np.stack([retarget_hand(h, desc) for h in X])


class ArmRetargeter(BaseEstimator, TransformerMixin):
    """transform(list of PoseSample) -> list of EePose."""

    def __init__(self, rotation: Rotation | None = None, initial_pose: EePose | None = None):
        self.rotation = rotation
        self.initial_pose = initial_pose

    def fit(self, X=None, y=None):
        return self

    def transform(self, X) -> list[EePose]:
        r = self.rotation if self.rotation is not None else Rotation.identity()
        ee0 = self.initial_pose if self.initial_pose is not None else identity_pose()
        return [retarget_arm_pose(p, r, ee0)[0] for p in X]


class CamToBaseCalibrator(BaseEstimator):
    """fit(axis_motions dict) -> solved rotation_ and residual_ (radians)."""

    def fit(self, X: dict[str, list], y=None):
        record = CalibrationRecord(axis_motions=X)
        self.rotation_ = calibrate_cam_to_base(record)
        self.residual_ = record.residual
        return self
