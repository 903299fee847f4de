"""Bit-exact on-disk formats plus dataset statistics.

Raw stream log (one file per modality, extension .vtraw), little-endian:

    offset  size        field
    0       6           magic "VTRAW\\0"
    6       2           format version (u16) = 1
    8       1           modality id (u8): 0 tactile, 1 vision,
                        2 kinematics, 3 pose, 4 anchor features
    9       1           number of payload dimensions (u8)
    10      4           nominal rate in Hz (f32)
    14      2*ndim      payload dims (u16 each)
    then    per record  timestamp (u64 nanoseconds) + payload (f32 array)

Synchronized demo (.vtsync): magic "VTSYNC\\0", version u16, manifest
length u32, manifest (human-readable JSON: count + provenance), then
fixed 2704-byte records:

    anchor u64 | tactile 5*8*16 f32 | vision index i64 (-1 = none) |
    kinematics 19 f32 | pose 7 f32 (xyz + quaternion wxyz, all-NaN = none) |
    offsets 3 x i64 ns (vision, kinematics, pose; INT64_MIN = none)

Pose and kinematics timestamps are recoverable as anchor + offset, so the
records are self-contained. Payloads are stored exactly as held in memory
(float32), making write -> read the identity on every finite value
including signed zeros and subnormals; the all-NaN pose sentinel is the
single documented exception. Pose confidence is not part of the record
(it is consumed upstream by retargeting) and reads back as High.

Encoder checkpoints (.vtckpt) store named float64 tensors with explicit
shapes; loss curves and retargeted trajectories are CSV with repr-exact
floats. All JSON is written with sorted keys, so every writer here is
byte-deterministic.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .capture import FrameLossReport
from .errors import (
    BadMagicError,
    CountMismatchError,
    NoDemosError,
    NonMonotoneTimestampsError,
    TruncatedRecordError,
    VersionMismatchError,
)
from .frames import (
    HAND_DOF,
    TAXEL_SHAPE,
    KinematicsFrame,
    PoseConfidence,
    PoseSample,
    RawSession,
    TactileFrame,
    VisionFrame,
)
from .geometry import Rotation
from .pretrain import AnchorFeatures, EncoderParams
from .retarget import EePose, RetargetedDemo
from .sync import SyncedDemo, SyncedSample

RAW_MAGIC = b"VTRAW\0"
SYNC_MAGIC = b"VTSYNC\0"
CKPT_MAGIC = b"VTCKPT\0"
FORMAT_VERSION = 1

MODALITY_IDS = {"tactile": 0, "vision": 1, "kinematics": 2, "pose": 3, "features": 4}
_ID_TO_MODALITY = {v: k for k, v in MODALITY_IDS.items()}

_I64_NONE = -(2**63)  # offset sentinel for absent matches
_SYNC_RECORD_SIZE = 8 + 5 * 8 * 16 * 4 + 8 + HAND_DOF * 4 + 7 * 4 + 3 * 8  # 2704

_STREAM_FILES = ("tactile", "vision", "kinematics", "pose")


# --------------------------------------------------------------------------
# raw stream log
# --------------------------------------------------------------------------


def write_stream(path, modality: str, rate_hz: float, dims: tuple[int, ...], times, payloads):
    """Write one raw stream file: times (n,) int, payloads (n, *dims) f32."""
    path = Path(path)
    times = np.asarray(times, dtype=np.uint64)
    payloads = np.ascontiguousarray(payloads, dtype="<f4").reshape(len(times), -1)
    header = RAW_MAGIC + struct.pack(
        "<HBB f", FORMAT_VERSION, MODALITY_IDS[modality], len(dims), float(rate_hz)
    )
    header += struct.pack(f"<{len(dims)}H", *dims)
    with open(path, "wb") as fh:
        fh.write(header)
        for t, payload in zip(times, payloads):
            fh.write(struct.pack("<Q", int(t)))
            fh.write(payload.tobytes())


def read_stream(path):
    """Read one raw stream file -> (modality, rate_hz, dims, times, payloads)."""
    path = Path(path)
    data = path.read_bytes()
    if len(data) < len(RAW_MAGIC) or data[: len(RAW_MAGIC)] != RAW_MAGIC:
        raise BadMagicError(f"{path}: not a raw stream file")
    fixed = len(RAW_MAGIC) + struct.calcsize("<HBB f")
    if len(data) < fixed:
        raise TruncatedRecordError(f"{path}: truncated header at byte {len(data)}")
    version, modality_id, ndim, rate = struct.unpack_from("<HBB f", data, len(RAW_MAGIC))
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"{path}: format version {version}, expected {FORMAT_VERSION}")
    if modality_id not in _ID_TO_MODALITY:
        raise BadMagicError(f"{path}: unknown modality id {modality_id}")
    dims_end = fixed + 2 * ndim
    if len(data) < dims_end:
        raise TruncatedRecordError(f"{path}: truncated header at byte {len(data)}")
    dims = struct.unpack_from(f"<{ndim}H", data, fixed)
    payload_len = int(np.prod(dims, dtype=np.int64)) * 4
    record = 8 + payload_len

    body = len(data) - dims_end
    if body % record:
        offset = dims_end + (body // record) * record
        raise TruncatedRecordError(f"{path}: truncated record at byte {offset}")
    n = body // record
    times = np.empty(n, dtype=np.uint64)
    payloads = np.empty((n, payload_len // 4), dtype="<f4")
    pos = dims_end
    for i in range(n):
        (times[i],) = struct.unpack_from("<Q", data, pos)
        payloads[i] = np.frombuffer(data, dtype="<f4", count=payload_len // 4, offset=pos + 8)
        pos += record
    if n > 1 and np.any(times[1:] <= times[:-1]):
        raise NonMonotoneTimestampsError(f"{path}: timestamps not strictly increasing")
    return _ID_TO_MODALITY[modality_id], float(rate), tuple(int(d) for d in dims), times, payloads


def _session_rates(session: RawSession) -> dict[str, float]:
    rates = dict(session.meta.get("nominal_rate_hz") or {})
    defaults = {"tactile": 60.0, "vision": 60.0, "kinematics": 120.0, "pose": 200.0}
    return {k: float(rates.get(k, defaults[k])) for k in defaults}


def write_raw(path, session: RawSession) -> None:
    """Write a session directory: one .vtraw per modality plus meta.json."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    rates = _session_rates(session)

    tact = session.tactile
    write_stream(
        path / "tactile.vtraw", "tactile", rates["tactile"], TAXEL_SHAPE,
        [f.t for f in tact], np.array([f.forces for f in tact], dtype="<f4").reshape(len(tact), -1),
    )
    vis = session.vision
    write_stream(
        path / "vision.vtraw", "vision", rates["vision"], (3,),
        [f.t for f in vis],
        np.array([[f.frame_index, f.width, f.height] for f in vis], dtype="<f4").reshape(len(vis), -1),
    )
    kin = session.kinematics
    write_stream(
        path / "kinematics.vtraw", "kinematics", rates["kinematics"], (HAND_DOF,),
        [f.t for f in kin], np.array([f.dof for f in kin], dtype="<f4").reshape(len(kin), -1),
    )
    pose = session.pose
    pose_payload = np.array(
        [list(p.position) + list(p.quat) + [float(int(p.confidence))] for p in pose],
        dtype="<f4",
    ).reshape(len(pose), -1)
    write_stream(path / "pose.vtraw", "pose", rates["pose"], (8,), [p.t for p in pose], pose_payload)

    (path / "meta.json").write_text(json.dumps(session.meta, indent=2, sort_keys=True) + "\n")


def read_raw(path) -> RawSession:
    path = Path(path)
    meta = {}
    meta_path = path / "meta.json"
    if meta_path.exists():
        meta = json.loads(meta_path.read_text())

    modality, _, dims, times, payloads = read_stream(path / "tactile.vtraw")
    tactile = [
        TactileFrame(int(t), p.reshape(TAXEL_SHAPE)) for t, p in zip(times, payloads)
    ]
    modality, _, dims, times, payloads = read_stream(path / "vision.vtraw")
    vision = [
        VisionFrame(int(t), frame_index=int(round(float(p[0]))), width=int(round(float(p[1]))),
                    height=int(round(float(p[2]))))
        for t, p in zip(times, payloads)
    ]
    modality, _, dims, times, payloads = read_stream(path / "kinematics.vtraw")
    kinematics = [KinematicsFrame(int(t), p) for t, p in zip(times, payloads)]
    modality, _, dims, times, payloads = read_stream(path / "pose.vtraw")
    pose = [
        PoseSample(int(t), p[0:3], p[3:7], PoseConfidence(int(round(float(p[7])))))
        for t, p in zip(times, payloads)
    ]
    return RawSession(tactile=tactile, vision=vision, kinematics=kinematics, pose=pose, meta=meta)


def write_features(path, features: AnchorFeatures, rate_hz: float = 60.0) -> None:
    write_stream(
        path, "features", rate_hz, (features.embed_dim,),
        features.times, features.vectors.astype("<f4"),
    )


def read_features(path) -> AnchorFeatures:
    modality, _, dims, times, payloads = read_stream(path)
    if modality != "features":
        raise BadMagicError(f"{path}: expected an anchor features stream, got {modality}")
    vectors = payloads.astype(np.float64)
    # re-normalize away the f32 quantization so downstream math sees unit rows
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    vectors = vectors / np.where(norms == 0.0, 1.0, norms)
    return AnchorFeatures(times.astype(np.int64), vectors)


# --------------------------------------------------------------------------
# synchronized demo
# --------------------------------------------------------------------------


def write_synced(path, demo: SyncedDemo) -> None:
    path = Path(path)
    manifest = {"count": len(demo.samples), "provenance": demo.provenance}
    manifest_bytes = (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode()
    with open(path, "wb") as fh:
        fh.write(SYNC_MAGIC)
        fh.write(struct.pack("<HI", FORMAT_VERSION, len(manifest_bytes)))
        fh.write(manifest_bytes)
        for s in demo.samples:
            fh.write(struct.pack("<Q", s.anchor_t))
            fh.write(np.ascontiguousarray(s.tactile.forces, dtype="<f4").tobytes())
            fh.write(struct.pack("<q", -1 if s.vision_index is None else s.vision_index))
            fh.write(np.ascontiguousarray(s.kinematics.dof, dtype="<f4").tobytes())
            if s.pose is None:
                fh.write(np.full(7, np.nan, dtype="<f4").tobytes())
            else:
                pose7 = np.concatenate([s.pose.position, s.pose.quat]).astype("<f4")
                fh.write(pose7.tobytes())
            fh.write(
                struct.pack(
                    "<3q",
                    _I64_NONE if s.vision_offset_ns is None else s.vision_offset_ns,
                    s.kinematics_offset_ns,
                    _I64_NONE if s.pose_offset_ns is None else s.pose_offset_ns,
                )
            )


def read_synced(path) -> SyncedDemo:
    path = Path(path)
    data = path.read_bytes()
    if len(data) < len(SYNC_MAGIC) or data[: len(SYNC_MAGIC)] != SYNC_MAGIC:
        raise BadMagicError(f"{path}: not a synced demo file")
    head = len(SYNC_MAGIC)
    if len(data) < head + 6:
        raise TruncatedRecordError(f"{path}: truncated header at byte {len(data)}")
    version, manifest_len = struct.unpack_from("<HI", data, head)
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"{path}: format version {version}, expected {FORMAT_VERSION}")
    body_start = head + 6 + manifest_len
    if len(data) < body_start:
        raise TruncatedRecordError(f"{path}: truncated manifest at byte {len(data)}")
    manifest = json.loads(data[head + 6 : body_start].decode())

    body = len(data) - body_start
    if body % _SYNC_RECORD_SIZE:
        offset = body_start + (body // _SYNC_RECORD_SIZE) * _SYNC_RECORD_SIZE
        raise TruncatedRecordError(f"{path}: truncated record at byte {offset}")
    n = body // _SYNC_RECORD_SIZE
    if n != manifest.get("count"):
        raise CountMismatchError(
            f"{path}: manifest count {manifest.get('count')} != {n} records present"
        )

    samples = []
    pos = body_start
    for _ in range(n):
        (anchor,) = struct.unpack_from("<Q", data, pos)
        pos += 8
        forces = np.frombuffer(data, dtype="<f4", count=5 * 8 * 16, offset=pos).reshape(TAXEL_SHAPE)
        pos += 5 * 8 * 16 * 4
        (vision_index,) = struct.unpack_from("<q", data, pos)
        pos += 8
        dof = np.frombuffer(data, dtype="<f4", count=HAND_DOF, offset=pos)
        pos += HAND_DOF * 4
        pose7 = np.frombuffer(data, dtype="<f4", count=7, offset=pos)
        pos += 7 * 4
        v_off, k_off, p_off = struct.unpack_from("<3q", data, pos)
        pos += 24

        anchor = int(anchor)
        pose = None
        pose_offset = None
        if not np.all(np.isnan(pose7)):
            pose_offset = int(p_off)
            pose = PoseSample(anchor + pose_offset, pose7[0:3], pose7[3:7])
        samples.append(
            SyncedSample(
                anchor_t=anchor,
                tactile=TactileFrame(anchor, forces),
                vision_index=None if vision_index == -1 else int(vision_index),
                kinematics=KinematicsFrame(anchor + int(k_off), dof),
                pose=pose,
                vision_offset_ns=None if v_off == _I64_NONE else int(v_off),
                kinematics_offset_ns=int(k_off),
                pose_offset_ns=pose_offset,
            )
        )
    return SyncedDemo(samples=samples, provenance=manifest.get("provenance", {}))


def read_synced_summary(path) -> dict:
    """Manifest plus first/last anchor without decoding every record."""
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(len(SYNC_MAGIC))
        if magic != SYNC_MAGIC:
            raise BadMagicError(f"{path}: not a synced demo file")
        version, manifest_len = struct.unpack("<HI", fh.read(6))
        if version != FORMAT_VERSION:
            raise VersionMismatchError(f"{path}: format version {version}")
        manifest = json.loads(fh.read(manifest_len).decode())
        count = int(manifest.get("count", 0))
        first = last = None
        if count:
            (first,) = struct.unpack("<Q", fh.read(8))
            fh.seek((count - 1) * _SYNC_RECORD_SIZE - 8, 1)
            (last,) = struct.unpack("<Q", fh.read(8))
    return {"manifest": manifest, "count": count, "first_anchor": first, "last_anchor": last}


# --------------------------------------------------------------------------
# dataset statistics
# --------------------------------------------------------------------------


@dataclass
class TaskStats:
    task: str
    demos: int
    mean_duration_s: float
    demos_per_hour: float


@dataclass
class StatsReport:
    demos: int
    mean_duration_s: float
    demos_per_hour: float
    per_task: list[TaskStats]

    def to_csv(self) -> str:
        lines = ["scope,task,demos,mean_duration_s,demos_per_hour"]
        lines.append(
            f"overall,,{self.demos},{self.mean_duration_s!r},{self.demos_per_hour!r}"
        )
        for t in self.per_task:
            lines.append(
                f"task,{t.task},{t.demos},{t.mean_duration_s!r},{t.demos_per_hour!r}"
            )
        return "\n".join(lines) + "\n"


def stats(demo_paths) -> StatsReport:
    """Collection throughput over demo files: mean duration (last minus
    first anchor) and demos/hour = 3600 / mean duration, plus a per-task
    breakdown. Order-invariant in the input paths."""
    paths = sorted(Path(p) for p in demo_paths)
    if not paths:
        raise NoDemosError("need at least one demo file")
    durations = []
    tasks: dict[str, list[float]] = {}
    for p in paths:
        summary = read_synced_summary(p)
        if summary["count"] < 2:
            raise NoDemosError(f"{p}: demo has fewer than 2 samples; no duration")
        dur = (summary["last_anchor"] - summary["first_anchor"]) / 1e9
        durations.append(dur)
        task = str(summary["manifest"].get("provenance", {}).get("task", ""))
        tasks.setdefault(task, []).append(dur)
    mean = float(np.mean(durations))
    per_task = [
        TaskStats(
            task=task,
            demos=len(ds),
            mean_duration_s=float(np.mean(ds)),
            demos_per_hour=3600.0 / float(np.mean(ds)),
        )
        for task, ds in sorted(tasks.items())
    ]
    return StatsReport(
        demos=len(durations),
        mean_duration_s=mean,
        demos_per_hour=3600.0 / mean,
        per_task=per_task,
    )


# --------------------------------------------------------------------------
# checkpoints, curves, small JSON artifacts
# --------------------------------------------------------------------------


def save_checkpoint(path, params: EncoderParams) -> None:
    path = Path(path)
    names = sorted(params.tensors)
    with open(path, "wb") as fh:
        fh.write(CKPT_MAGIC)
        fh.write(struct.pack("<HH", FORMAT_VERSION, len(names)))
        for name in names:
            arr = np.ascontiguousarray(params.tensors[name], dtype="<f8")
            encoded = name.encode()
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<B", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.tobytes())


def load_checkpoint(path) -> EncoderParams:
    path = Path(path)
    data = path.read_bytes()
    if data[: len(CKPT_MAGIC)] != CKPT_MAGIC:
        raise BadMagicError(f"{path}: not a checkpoint file")
    pos = len(CKPT_MAGIC)
    version, count = struct.unpack_from("<HH", data, pos)
    pos += 4
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"{path}: checkpoint version {version}")
    tensors = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", data, pos)
        pos += 2
        name = data[pos : pos + name_len].decode()
        pos += name_len
        (ndim,) = struct.unpack_from("<B", data, pos)
        pos += 1
        shape = struct.unpack_from(f"<{ndim}I", data, pos)
        pos += 4 * ndim
        size = int(np.prod(shape, dtype=np.int64))
        if pos + size * 8 > len(data):
            raise TruncatedRecordError(f"{path}: truncated tensor {name} at byte {pos}")
        tensors[name] = np.frombuffer(data, dtype="<f8", count=size, offset=pos).reshape(shape)
        pos += size * 8
    embed_dim = tensors["proj_w"].shape[0]
    return EncoderParams({k: v.copy() for k, v in tensors.items()}, int(embed_dim))


def save_loss_curve(path, losses) -> None:
    lines = ["step,loss"]
    for i, loss in enumerate(np.asarray(losses, dtype=np.float64)):
        lines.append(f"{i},{float(loss)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def save_loss_report(path, report: FrameLossReport) -> None:
    Path(path).write_text(json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n")


def save_rotation_json(path, rotation: Rotation, residual: float | None = None) -> None:
    doc = {"quat_wxyz": [float(c) for c in rotation.quat]}
    if residual is not None:
        doc["residual_rad"] = float(residual)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_rotation_json(path) -> Rotation:
    doc = json.loads(Path(path).read_text())
    return Rotation.from_quat(doc["quat_wxyz"])


def write_retargeted_csv(path, demo: RetargetedDemo) -> None:
    d = demo.joints.shape[1]
    cols = ["anchor_ns"] + [f"q_{i}" for i in range(d)]
    cols += ["pos_x", "pos_y", "pos_z", "quat_w", "quat_x", "quat_y", "quat_z"]
    cols += ["low_confidence", "stale"]
    lines = [",".join(cols)]
    for i in range(len(demo)):
        ee = demo.ee_poses[i]
        vals = [str(int(demo.anchors[i]))]
        vals += [repr(float(v)) for v in demo.joints[i]]
        vals += [repr(float(v)) for v in ee.position]
        vals += [repr(float(v)) for v in ee.orientation.quat]
        vals += [str(int(demo.low_confidence[i])), str(int(demo.stale[i]))]
        lines.append(",".join(vals))
    Path(path).write_text("\n".join(lines) + "\n")
