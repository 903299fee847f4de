"""vtpipe: a visuo-tactile-kinematic demonstration pipeline.

Capture buffering, tactile-anchored synchronization, denoising,
human-to-robot retargeting, contrastive representation pretraining, and
bit-exact dataset formats, with a built-in deterministic stream simulator
as the test substrate.
"""

from .capture import (
    FrameLossReport,
    Gap,
    ModalityChannel,
    PushResult,
    SessionRecorder,
    detect_frame_loss,
    open_session,
)
from .denoise import TactileBias, TactileDenoiser, denoise_frame, estimate_bias
from .errors import PipelineError
from .frames import (
    KinematicsFrame,
    Modality,
    PoseConfidence,
    PoseSample,
    RawSession,
    TactileFrame,
    Timestamp,
    VisionFrame,
)
from .geometry import Rotation, nearest_rotation, rotation_apply, rotation_compose
from .pretrain import (
    AnchorFeatures,
    ContrastiveEncoder,
    EncoderParams,
    PretrainConfig,
    PretrainItem,
    assemble_policy_input,
    encode_kinematics,
    encode_tactile,
    fuse,
    infonce,
    pretrain_loss,
    retrieval_eval,
    train,
)
from .retarget import (
    ArmRetargeter,
    CalibrationRecord,
    CamToBaseCalibrator,
    EePose,
    HandDescription,
    HandRetargeter,
    calibrate_cam_to_base,
    default_hand,
    retarget_arm_pose,
    retarget_hand,
    retarget_trajectory,
)
from .simulate import (
    GhostSpec,
    GroundTruth,
    SimConfig,
    StreamSpec,
    generate_session,
    inject_ghost_noise,
    synth_pretrain_corpus,
)
from .sync import (
    SessionSynchronizer,
    SyncedDemo,
    SyncedSample,
    align_vision,
    downsample_kinematics,
    match_pose,
    select_anchors,
    synchronize_session,
)

__version__ = "0.1.0"

__all__ = [
    "AnchorFeatures",
    "ArmRetargeter",
    "CalibrationRecord",
    "CamToBaseCalibrator",
    "ContrastiveEncoder",
    "EePose",
    "EncoderParams",
    "FrameLossReport",
    "Gap",
    "GhostSpec",
    "GroundTruth",
    "HandDescription",
    "HandRetargeter",
    "KinematicsFrame",
    "Modality",
    "ModalityChannel",
    "PipelineError",
    "PoseConfidence",
    "PoseSample",
    "PretrainConfig",
    "PretrainItem",
    "PushResult",
    "RawSession",
    "Rotation",
    "SessionRecorder",
    "SessionSynchronizer",
    "SimConfig",
    "StreamSpec",
    "SyncedDemo",
    "SyncedSample",
    "TactileBias",
    "TactileDenoiser",
    "TactileFrame",
    "Timestamp",
    "VisionFrame",
    "align_vision",
    "assemble_policy_input",
    "calibrate_cam_to_base",
    "default_hand",
    "denoise_frame",
    "detect_frame_loss",
    "downsample_kinematics",
    "encode_kinematics",
    "encode_tactile",
    "estimate_bias",
    "fuse",
    "generate_session",
    "infonce",
    "inject_ghost_noise",
    "match_pose",
    "nearest_rotation",
    "open_session",
    "pretrain_loss",
    "retarget_arm_pose",
    "retarget_hand",
    "retarget_trajectory",
    "retrieval_eval",
    "rotation_apply",
    "rotation_compose",
    "select_anchors",
    "synchronize_session",
    "synth_pretrain_corpus",
    "train",
]
