"""Tactile zero-point denoising: per-taxel soft thresholding against a
no-load baseline.

clean = max(0, raw - bias - epsilon), elementwise in float32, which zeroes
background noise while keeping contact signals intact. The baseline is the
per-taxel mean over a no-load window; an optional sliding mode re-tracks
the baseline as a trailing per-taxel minimum for slowly drifting sensors.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import ShapeMismatchError, TooFewFramesError
from .frames import TAXEL_SHAPE, TactileFrame

DEFAULT_EPSILON_N = 0.05  # five times the 0.01 N sensor sensitivity
DEFAULT_WINDOW = 60  # no-load frames used for the baseline (1 s at 60 Hz)
MIN_BASELINE_FRAMES = 10


@dataclass(frozen=True)
class TactileBias:
    """No-load baseline field plus the noise-floor tolerance."""

    bias: np.ndarray  # (5, 8, 16) float32, >= 0
    epsilon: float  # N
    source_frames: int

    def __post_init__(self):
        bias = np.asarray(self.bias, dtype=np.float32)
        if bias.shape != TAXEL_SHAPE:
            raise ShapeMismatchError(f"bias: expected shape {TAXEL_SHAPE}, got {bias.shape}")
        if not np.all(np.isfinite(bias)):
            raise ValueError("bias: non-finite entries")
        if float(bias.min()) < 0.0:
            raise ValueError("bias cells must be >= 0")
        if self.epsilon < 0.0:
            raise ValueError("epsilon must be >= 0")
        bias.setflags(write=False)
        object.__setattr__(self, "bias", bias)


def estimate_bias(
    no_load_frames: list[TactileFrame], epsilon: float = DEFAULT_EPSILON_N
) -> TactileBias:
    """Per-taxel arithmetic mean over a no-load window.

    Negative means (possible under downward drift) clamp to zero, since a
    baseline below zero would inject force instead of removing it.
    """
    if len(no_load_frames) < MIN_BASELINE_FRAMES:
        raise TooFewFramesError(
            f"need at least {MIN_BASELINE_FRAMES} no-load frames, got {len(no_load_frames)}"
        )
    acc = np.zeros(TAXEL_SHAPE, dtype=np.float64)
    for f in no_load_frames:
        acc += f.forces
    mean = np.maximum(acc / len(no_load_frames), 0.0)
    return TactileBias(
        bias=mean.astype(np.float32), epsilon=float(epsilon), source_frames=len(no_load_frames)
    )


def denoise_frame(raw: TactileFrame, b: TactileBias) -> TactileFrame:
    """Soft-threshold one frame: max(0, raw - bias - epsilon), float32."""
    if raw.forces.shape != b.bias.shape:
        raise ShapeMismatchError(
            f"frame shape {raw.forces.shape} != bias shape {b.bias.shape}"
        )
    eps = np.float32(b.epsilon)
    clean = np.maximum(np.float32(0.0), (raw.forces - b.bias) - eps)
    return TactileFrame(raw.t, clean)


def denoise_frames(frames: list[TactileFrame], b: TactileBias) -> list[TactileFrame]:
    return [denoise_frame(f, b) for f in frames]


class TactileDenoiser(BaseEstimator, TransformerMixin):
    """Soft-thresholding denoiser with a fitted no-load baseline.

    Parameters
    ----------
    epsilon : noise-floor tolerance in newtons.
    window : number of leading no-load frames used by fit().
    sliding : when True, transform() re-tracks the baseline as the
        per-taxel minimum over the trailing ``window`` inputs (seeded with
        the fitted baseline), following slow drift at the cost of a
        window-length lag. Off by default: the static baseline is
        deterministic and order-independent.
    """

    def __init__(
        self,
        epsilon: float = DEFAULT_EPSILON_N,
        window: int = DEFAULT_WINDOW,
        sliding: bool = False,
    ):
        self.epsilon = epsilon
        self.window = window
        self.sliding = sliding

    def fit(self, frames: list[TactileFrame], y=None):
        self.bias_ = estimate_bias(frames[: self.window], epsilon=self.epsilon)
        return self

    def transform(self, frames: list[TactileFrame]) -> list[TactileFrame]:
        if not hasattr(self, "bias_"):
            raise TooFewFramesError("denoiser is not fitted; call fit() first")
        if not self.sliding:
            return denoise_frames(frames, self.bias_)
        trail: deque[np.ndarray] = deque(maxlen=self.window)
        trail.append(np.asarray(self.bias_.bias, dtype=np.float32))
        eps = np.float32(self.bias_.epsilon)
        out = []
        for f in frames:
            trail.append(f.forces)
            baseline = np.maximum(np.min(np.stack(trail), axis=0), np.float32(0.0))
            clean = np.maximum(np.float32(0.0), (f.forces - baseline) - eps)
            out.append(TactileFrame(f.t, clean))
        return out
