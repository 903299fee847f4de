"""Offline tactile-anchored alignment of an asynchronous session.

Every tactile timestamp is an anchor. Vision (same nominal rate) is paired
by equal-rate index offsetting with a nearest-neighbor fallback across
gaps; kinematics (integer rate multiple) is integer-downsampled at the
phase that minimizes mean timing error; high-rate poses are matched by
binary search. Exact ties resolve to the earlier sample, so a match never
uses information from after its anchor. Anchors whose best match lies
beyond half the source stream's nominal period plus a jitter slack yield
None rather than stale data.

The whole stage is a pure batch transformation: same session in, same
demo out.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import (
    EmptyStreamError,
    InsufficientOverlapError,
    MissingMandatoryModalityError,
    NonIntegerRateRatioError,
)
from .frames import (
    KinematicsFrame,
    PoseSample,
    RawSession,
    TactileFrame,
    VisionFrame,
    stream_times,
)
from .validation import check_sorted_timestamps

DEFAULT_SLACK_NS = 1_500_000  # covers 3 sigma of 500 us timestamp jitter
DEFAULT_MIN_OVERLAP_S = 0.5
_RATE_RATIO_TOL = 0.05


@dataclass(frozen=True, eq=False)
class SyncedSample:
    """One anchor-aligned observation tuple.

    The tactile frame is the anchor frame itself (zero offset by
    construction); offsets are matched-minus-anchor in nanoseconds, None
    where the modality had no acceptable match.
    """

    anchor_t: int
    tactile: TactileFrame
    vision_index: int | None
    kinematics: KinematicsFrame
    pose: PoseSample | None
    vision_offset_ns: int | None
    kinematics_offset_ns: int
    pose_offset_ns: int | None

    def __post_init__(self):
        if self.tactile.t != self.anchor_t:
            raise ValueError("tactile frame must be the anchor frame itself")
        if (self.vision_index is None) != (self.vision_offset_ns is None):
            raise ValueError("vision_index and vision_offset_ns must be None together")
        if (self.pose is None) != (self.pose_offset_ns is None):
            raise ValueError("pose and pose_offset_ns must be None together")

    @property
    def offsets(self) -> dict[str, int | None]:
        return {
            "vision": self.vision_offset_ns,
            "kinematics": self.kinematics_offset_ns,
            "pose": self.pose_offset_ns,
        }

    def __eq__(self, other):
        if not isinstance(other, SyncedSample):
            return NotImplemented
        return (
            self.anchor_t == other.anchor_t
            and self.tactile == other.tactile
            and self.vision_index == other.vision_index
            and self.kinematics == other.kinematics
            and self.pose == other.pose
            and self.vision_offset_ns == other.vision_offset_ns
            and self.kinematics_offset_ns == other.kinematics_offset_ns
            and self.pose_offset_ns == other.pose_offset_ns
        )


@dataclass(eq=False)
class SyncedDemo:
    samples: list[SyncedSample]
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        anchors = [s.anchor_t for s in self.samples]
        check_sorted_timestamps("SyncedDemo.anchors", anchors)

    def anchors(self) -> np.ndarray:
        return np.array([s.anchor_t for s in self.samples], dtype=np.int64)

    def duration_s(self) -> float:
        if len(self.samples) < 2:
            return 0.0
        return (self.samples[-1].anchor_t - self.samples[0].anchor_t) / 1e9

    def __eq__(self, other):
        if not isinstance(other, SyncedDemo):
            return NotImplemented
        return self.samples == other.samples and self.provenance == other.provenance


# --------------------------------------------------------------------------
# matching primitives
# --------------------------------------------------------------------------


def binary_nearest(times: list[int], query: int) -> int:
    """Binary-search index of the time closest to query; earlier on ties."""
    pos = bisect.bisect_left(times, query)
    if pos == 0:
        return 0
    if pos == len(times):
        return len(times) - 1
    before = times[pos - 1]
    after = times[pos]
    # strict inequality: an exact tie keeps the earlier sample
    if after - query < query - before:
        return pos
    return pos - 1


def _median_period_ns(times: np.ndarray) -> float:
    if times.size < 2:
        raise EmptyStreamError("need at least two samples to measure a rate")
    return float(np.median(np.diff(times)))


def select_anchors(tactile: list[TactileFrame]) -> list[int]:
    """Every tactile timestamp is a global anchor, in stream order."""
    if not tactile:
        raise EmptyStreamError("tactile stream is empty; no anchors")
    times = [f.t for f in tactile]
    check_sorted_timestamps("tactile", times)
    return times


def match_pose(
    anchors: list[int],
    poses: list[PoseSample],
    slack_ns: int = DEFAULT_SLACK_NS,
) -> list[tuple[int, PoseSample | None]]:
    """Nearest pose per anchor via binary search, earlier-tie; anchors whose
    best match is farther than half the pose period plus slack get None."""
    if not poses:
        return [(a, None) for a in anchors]
    times = [p.t for p in poses]
    check_sorted_timestamps("pose", times)
    if len(times) >= 2:
        cutoff = _median_period_ns(np.array(times, dtype=np.int64)) / 2.0 + slack_ns
    else:
        cutoff = float(slack_ns)
    out = []
    for a in anchors:
        idx = binary_nearest(times, a)
        if abs(times[idx] - a) <= cutoff:
            out.append((a, poses[idx]))
        else:
            out.append((a, None))
    return out


def align_vision(
    anchors: list[int],
    vision: list[VisionFrame],
    slack_ns: int = DEFAULT_SLACK_NS,
) -> list[tuple[int, int | None]]:
    """Equal-rate pairing of anchors to vision frame indices.

    The pairing is offset so the first anchor lines up with its
    nearest-period vision slot; missing slots (dropped frames) fall back
    to the nearest frame by timestamp. A best match beyond half the vision
    period plus slack yields None.
    """
    if not vision:
        return [(a, None) for a in anchors]
    times = [v.t for v in vision]
    check_sorted_timestamps("vision", times)
    if not anchors:
        return []
    if len(times) >= 2:
        period = _median_period_ns(np.array(times, dtype=np.int64))
    else:
        period = float(2 * slack_ns) if slack_ns else 1.0
    cutoff = period / 2.0 + slack_ns
    by_asset = {v.frame_index: j for j, v in enumerate(vision)}
    # integer slot shift between the anchor grid and the vision asset grid
    shift = round((anchors[0] - times[0]) / period) if period > 0 else 0
    base_asset = vision[0].frame_index + shift
    out = []
    for i, a in enumerate(anchors):
        j = by_asset.get(base_asset + i)
        if j is None:
            j = binary_nearest(times, a)  # gap in the asset grid
        if abs(times[j] - a) <= cutoff:
            out.append((a, vision[j].frame_index))
        else:
            out.append((a, None))
    return out


def _phase_matches(anchors, kin_times, phase, step):
    class_idx = np.arange(phase, len(kin_times), step)
    class_times = [int(kin_times[i]) for i in class_idx]
    matched = np.empty(len(anchors), dtype=np.int64)
    for i, a in enumerate(anchors):
        matched[i] = class_idx[binary_nearest(class_times, a)]
    return matched


def _downsample_search(anchors: list[int], kin: list[KinematicsFrame]):
    """Choose the downsampling phase minimizing mean |dt| and return
    (matched kin indices, phase, step)."""
    if not kin:
        raise EmptyStreamError("kinematics stream is empty")
    if not anchors:
        return np.empty(0, dtype=np.int64), 0, 1
    kin_times = stream_times(kin)
    check_sorted_timestamps("kinematics", kin_times.tolist())
    anchor_arr = np.array(anchors, dtype=np.int64)
    if len(anchors) >= 2 and len(kin) >= 2:
        ratio = _median_period_ns(anchor_arr) / _median_period_ns(kin_times)
        step = int(round(ratio))
        if step < 1 or abs(ratio - step) > _RATE_RATIO_TOL * max(step, 1):
            raise NonIntegerRateRatioError(
                f"kinematics/anchor rate ratio {ratio:.4f} is not an integer within 5%"
            )
    else:
        step = 1
    best = None
    for phase in range(step):
        if phase >= len(kin_times):
            break
        matched = _phase_matches(anchors, kin_times, phase, step)
        cost = float(np.mean(np.abs(kin_times[matched] - anchor_arr)))
        if best is None or cost < best[0]:
            best = (cost, phase, matched)
    _, phase, matched = best
    return matched, phase, step


def downsample_kinematics(
    anchors: list[int], kin: list[KinematicsFrame]
) -> list[tuple[int, KinematicsFrame]]:
    """Integer downsampling of the kinematics stream onto the anchors.

    The phase (which residue class of frames is kept) is chosen to
    minimize the mean |dt| to the anchors; within the chosen class each
    anchor takes its nearest frame, which on a drop-free stream is exactly
    the positional pairing.
    """
    matched, _, _ = _downsample_search(anchors, kin)
    return [(a, kin[int(j)]) for a, j in zip(anchors, matched)]


def synchronize_session(
    raw: RawSession,
    min_overlap_s: float = DEFAULT_MIN_OVERLAP_S,
    slack_ns: int = DEFAULT_SLACK_NS,
    loss_report: dict | None = None,
) -> SyncedDemo:
    """Compose anchor selection, vision pairing, kinematics downsampling
    and pose matching into a synchronized demo.

    Leading/trailing anchors outside the common span of the mandatory
    streams (tactile, kinematics) are trimmed and counted in provenance.
    """
    if not raw.tactile:
        raise EmptyStreamError("tactile stream is empty")
    if not raw.kinematics:
        raise MissingMandatoryModalityError("kinematics stream is empty")
    anchors = select_anchors(raw.tactile)

    kin_times = stream_times(raw.kinematics)
    span_lo = max(anchors[0], int(kin_times[0]))
    span_hi = min(anchors[-1], int(kin_times[-1]))
    if span_hi - span_lo < min_overlap_s * 1e9:
        raise InsufficientOverlapError(
            f"mandatory streams share {(span_hi - span_lo) / 1e9:.3f} s "
            f"of common time; need {min_overlap_s} s"
        )

    kept = [i for i, a in enumerate(anchors) if span_lo <= a <= span_hi]
    trimmed_leading = kept[0] if kept else len(anchors)
    trimmed_trailing = len(anchors) - 1 - kept[-1] if kept else 0
    anchors = [anchors[i] for i in kept]
    tactile = [raw.tactile[i] for i in kept]

    kin_matched, phase, step = _downsample_search(anchors, raw.kinematics)
    pose_pairs = match_pose(anchors, raw.pose, slack_ns=slack_ns)
    vision_pairs = align_vision(anchors, raw.vision, slack_ns=slack_ns)

    samples = []
    for i, a in enumerate(anchors):
        kin = raw.kinematics[int(kin_matched[i])]
        pose = pose_pairs[i][1]
        vision_index = vision_pairs[i][1]
        vision_offset = None
        if vision_index is not None:
            v = raw.vision[_vision_position(raw.vision, vision_index)]
            vision_offset = v.t - a
        samples.append(
            SyncedSample(
                anchor_t=a,
                tactile=tactile[i],
                vision_index=vision_index,
                kinematics=kin,
                pose=pose,
                vision_offset_ns=vision_offset,
                kinematics_offset_ns=kin.t - a,
                pose_offset_ns=(pose.t - a) if pose is not None else None,
            )
        )

    provenance = {
        "session_id": str(raw.meta.get("session_id", "")),
        "task": str(raw.meta.get("task", "")),
        "alignment": {
            "downsample_phase": int(phase),
            "downsample_step": int(step),
            "tie_rule": "earlier",
            "slack_ns": int(slack_ns),
            "min_overlap_s": float(min_overlap_s),
        },
        "trimmed_leading": int(trimmed_leading),
        "trimmed_trailing": int(trimmed_trailing),
        "loss_report": loss_report if loss_report is not None else {},
    }
    return SyncedDemo(samples=samples, provenance=provenance)


def _vision_position(vision: list[VisionFrame], frame_index: int) -> int:
    # frame_index is strictly increasing with t, so position by bisect
    keys = [v.frame_index for v in vision]
    pos = bisect.bisect_left(keys, frame_index)
    return pos


class SessionSynchronizer(BaseEstimator, TransformerMixin):
    """Estimator-style wrapper: transform(RawSession) -> SyncedDemo."""

    def __init__(
        self,
        min_overlap_s: float = DEFAULT_MIN_OVERLAP_S,
        slack_ns: int = DEFAULT_SLACK_NS,
    ):
        self.min_overlap_s = min_overlap_s
        self.slack_ns = slack_ns

    def fit(self, X=None, y=None):
        return self

    def transform(self, X: RawSession) -> SyncedDemo:
        return synchronize_session(
            X, min_overlap_s=self.min_overlap_s, slack_ns=self.slack_ns
        )
