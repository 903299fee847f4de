"""Online buffering layer: per-modality producer channels feeding a central
session recorder.

This is the in-process stand-in for a node graph: each modality has one
producer pushing self-timestamped frames into a bounded channel, and a
single finalizer drains everything into time-sorted streams. Overflow is a
caller-visible signal, never a silent drop; the conservation law
``accepted == stored + overflowed`` holds exactly per modality.

Thread contract: pushes on distinct modalities may run concurrently;
pushes within one modality must be externally serialized (one producer per
channel). finalize observes every push that returned before it started.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import (
    DuplicateModalityError,
    MissingMandatoryModalityError,
    OutOfOrderTimestampError,
    SessionNotRecordingError,
)
from .frames import (
    KinematicsFrame,
    Modality,
    PoseSample,
    RawSession,
    TactileFrame,
    VisionFrame,
    stream_times,
)

MANDATORY_MODALITIES = (Modality.TACTILE, Modality.KINEMATICS)

_FRAME_TYPES = {
    Modality.TACTILE: TactileFrame,
    Modality.VISION: VisionFrame,
    Modality.KINEMATICS: KinematicsFrame,
    Modality.POSE: PoseSample,
}

DEFAULT_CAPACITY_S = 4.0
DEFAULT_HIGH_WATERMARK = 0.75
DEFAULT_LOSS_TOLERANCE = 1.5


class PushResult(Enum):
    ACCEPTED = "accepted"
    OVERFLOW = "overflow"


class RecorderState(Enum):
    IDLE = "idle"
    RECORDING = "recording"
    FINALIZED = "finalized"


@dataclass(frozen=True)
class ModalityChannel:
    """Configuration of one producer queue."""

    modality: Modality
    nominal_rate: float  # Hz
    capacity: int | None = None  # default: 4 s of frames
    high_watermark: float = DEFAULT_HIGH_WATERMARK

    def __post_init__(self):
        if self.nominal_rate <= 0:
            raise ValueError("nominal_rate must be > 0")
        cap = self.capacity
        if cap is None:
            cap = int(round(DEFAULT_CAPACITY_S * self.nominal_rate))
            object.__setattr__(self, "capacity", cap)
        # at least two seconds of headroom
        if cap < 2 * self.nominal_rate:
            raise ValueError(
                f"capacity {cap} below two seconds of frames at {self.nominal_rate} Hz"
            )
        if not (0.0 < self.high_watermark < 1.0):
            raise ValueError("high_watermark must be in (0, 1)")


@dataclass
class Gap:
    """One detected frame-loss gap, bounded by the surviving neighbors."""

    gap_start: int  # ns, last frame before the gap
    gap_end: int  # ns, first frame after the gap
    expected_missing: int


@dataclass
class FrameLossReport:
    gaps: dict[Modality, list[Gap]] = field(default_factory=dict)

    def total_missing(self, modality: Modality | None = None) -> int:
        mods = [modality] if modality else list(self.gaps)
        return sum(g.expected_missing for m in mods for g in self.gaps.get(m, []))

    def as_dict(self) -> dict:
        return {
            m.value: [
                {"gap_start": g.gap_start, "gap_end": g.gap_end, "missing": g.expected_missing}
                for g in gaps
            ]
            for m, gaps in self.gaps.items()
        }


def detect_frame_loss(
    timestamps, nominal_rate: float, tolerance_factor: float = DEFAULT_LOSS_TOLERANCE
) -> list[Gap]:
    """Report gaps where the spacing exceeds tolerance_factor nominal
    periods; the expected missing count is the rounded number of whole
    periods the gap swallows."""
    if nominal_rate <= 0:
        raise ValueError("nominal_rate must be > 0")
    if tolerance_factor < 1.0:
        raise ValueError("tolerance_factor must be >= 1")
    times = list(timestamps)
    period = 1e9 / nominal_rate
    gaps = []
    for prev, cur in zip(times, times[1:]):
        dt = cur - prev
        if dt > tolerance_factor * period:
            gaps.append(
                Gap(gap_start=prev, gap_end=cur, expected_missing=max(1, round(dt / period) - 1))
            )
    return gaps


class _Channel:
    __slots__ = ("config", "lock", "frames", "last_t", "accepted", "overflowed", "watermark_hits")

    def __init__(self, config: ModalityChannel):
        self.config = config
        self.lock = threading.Lock()
        self.frames: list = []
        self.last_t: int | None = None
        self.accepted = 0
        self.overflowed = 0
        self.watermark_hits = 0


class SessionRecorder:
    """Central recorder: accepts frames while recording, then finalizes
    once into a RawSession plus a frame-loss report."""

    def __init__(self, channels: list[ModalityChannel], session_id: str = "", task: str = ""):
        seen = set()
        for ch in channels:
            if ch.modality in seen:
                raise DuplicateModalityError(f"duplicate channel for {ch.modality.value}")
            seen.add(ch.modality)
        for mandatory in MANDATORY_MODALITIES:
            if mandatory not in seen:
                raise MissingMandatoryModalityError(
                    f"missing mandatory modality {mandatory.value}"
                )
        self._channels = {ch.modality: _Channel(ch) for ch in channels}
        self._state = RecorderState.RECORDING
        self._state_lock = threading.Lock()
        self.session_id = session_id
        self.task = task

    @property
    def state(self) -> RecorderState:
        return self._state

    def push(self, modality: Modality, frame) -> PushResult:
        """Enqueue one frame. Returns OVERFLOW (and drops nothing silently:
        the rejection is counted and visible) when the buffer is full."""
        try:
            ch = self._channels[modality]
        except KeyError:
            raise MissingMandatoryModalityError(
                f"no channel configured for {modality.value}"
            ) from None
        expected = _FRAME_TYPES[modality]
        if not isinstance(frame, expected):
            raise TypeError(
                f"{modality.value} channel expects {expected.__name__}, "
                f"got {type(frame).__name__}"
            )
        with ch.lock:
            if self._state is not RecorderState.RECORDING:
                raise SessionNotRecordingError(f"recorder is {self._state.value}")
            if ch.last_t is not None and frame.t <= ch.last_t:
                raise OutOfOrderTimestampError(
                    f"{modality.value}: timestamp {frame.t} not after {ch.last_t}"
                )
            if len(ch.frames) >= ch.config.capacity:
                ch.overflowed += 1
                return PushResult.OVERFLOW
            ch.frames.append(frame)
            ch.last_t = frame.t
            ch.accepted += 1
            if len(ch.frames) >= ch.config.high_watermark * ch.config.capacity:
                ch.watermark_hits += 1
            return PushResult.ACCEPTED

    def counts(self) -> dict[Modality, dict[str, int]]:
        out = {}
        for m, ch in self._channels.items():
            with ch.lock:
                out[m] = {
                    "accepted": ch.accepted,
                    "buffered": len(ch.frames),
                    "overflowed": ch.overflowed,
                    "watermark_hits": ch.watermark_hits,
                }
        return out

    def finalize(
        self, tolerance_factor: float = DEFAULT_LOSS_TOLERANCE
    ) -> tuple[RawSession, FrameLossReport]:
        """Drain all buffers into time-sorted streams and close the session."""
        # take every channel lock (fixed order) so in-flight pushes finish
        ordered = sorted(self._channels.values(), key=lambda c: c.config.modality.value)
        for ch in ordered:
            ch.lock.acquire()
        try:
            with self._state_lock:
                if self._state is not RecorderState.RECORDING:
                    raise SessionNotRecordingError(f"recorder is {self._state.value}")
                self._state = RecorderState.FINALIZED

            streams = {m.value: list(ch.frames) for m, ch in self._channels.items()}
            report = FrameLossReport(
                gaps={
                    m: detect_frame_loss(
                        stream_times(ch.frames), ch.config.nominal_rate, tolerance_factor
                    )
                    for m, ch in self._channels.items()
                }
            )
            session = RawSession(
                tactile=streams.get("tactile", []),
                vision=streams.get("vision", []),
                kinematics=streams.get("kinematics", []),
                pose=streams.get("pose", []),
                meta={
                    "session_id": self.session_id,
                    "task": self.task,
                    "nominal_rate_hz": {
                        m.value: ch.config.nominal_rate for m, ch in self._channels.items()
                    },
                    "overflowed": {
                        m.value: ch.overflowed for m, ch in self._channels.items()
                    },
                },
            )
            return session, report
        finally:
            for ch in reversed(ordered):
                ch.lock.release()


def open_session(
    channels: list[ModalityChannel], session_id: str = "", task: str = ""
) -> SessionRecorder:
    """Open a recorder in the recording state with the session clock zeroed
    (frames carry their own timestamps on the session clock)."""
    return SessionRecorder(channels, session_id=session_id, task=task)


def default_channels(rates: dict[str, float] | None = None) -> list[ModalityChannel]:
    rates = rates or {"tactile": 60.0, "vision": 60.0, "kinematics": 120.0, "pose": 200.0}
    return [ModalityChannel(Modality(name), rate) for name, rate in rates.items()]


def replay_session(session: RawSession, channels: list[ModalityChannel] | None = None):
    """Push an existing session's frames through a fresh recorder and
    finalize, e.g. to re-derive a loss report. Returns (session, report)."""
    if channels is None:
        rates = session.meta.get("nominal_rate_hz") or {}
        channels = []
        for m in Modality:
            frames = session.stream(m)
            rate = rates.get(m.value)
            if rate is None:
                rate = _measured_rate(frames)
            if frames or m in MANDATORY_MODALITIES:
                cap = max(len(frames) + 1, int(2 * rate) + 1)
                channels.append(ModalityChannel(m, rate, capacity=cap))
    rec = open_session(
        channels,
        session_id=str(session.meta.get("session_id", "")),
        task=str(session.meta.get("task", "")),
    )
    for m in Modality:
        if any(ch.modality is m for ch in channels):
            for frame in session.stream(m):
                rec.push(m, frame)
    replayed, report = rec.finalize()
    replayed.meta.setdefault("replayed_from", str(session.meta.get("session_id", "")))
    return replayed, report


def _measured_rate(frames) -> float:
    if len(frames) >= 2:
        dts = np.diff(stream_times(frames))
        med = float(np.median(dts))
        if med > 0:
            return 1e9 / med
    return 60.0
