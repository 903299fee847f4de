"""Deterministic multi-stream session simulator.

Generates asynchronous tactile/vision/kinematics/pose streams driven by a
shared smooth 8-dimensional latent trajectory, with scripted fingertip
contacts, per-frame timestamp jitter, frame drops, and an optional
zero-point noise model (static bias, thermal drift, sparse spikes). Every
output is a pure function of the configuration, seed included, and the
returned ground truth carries exactly what downstream tests need: contact
intervals, true nearest-sample alignment per tactile anchor, dropped frame
indices, the pre-noise tactile frames, and the injected bias field.

The latent-to-signal maps (kinematics, pose, tactile rendering, anchor
features) are fixed module-level constants so that every session and every
synthetic pretraining corpus lives in the same signal space.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .frames import (
    NS_PER_S,
    TAXEL_SHAPE,
    KinematicsFrame,
    PoseSample,
    RawSession,
    TactileFrame,
    VisionFrame,
    canonical_quat,
    period_ns,
    stream_times,
)
from .pretrain import PretrainItem
from .validation import check_non_negative, check_positive, check_probability

# Seed of the fixed latent-to-signal maps (not of any session).
_MAP_SEED = 0x7AC71E
_LATENT_DIM = 8

_CONTACT_SIGMA = 1.5  # taxels; spatial spread of a contact footprint
_CONTACT_MARGIN_S = 0.05  # minimum spacing between contacts on one finger


@dataclass(frozen=True)
class StreamSpec:
    """Nominal rate plus timing-noise model of one modality."""

    rate_hz: float
    jitter_std_us: float = 0.0
    drop_prob: float = 0.0

    def __post_init__(self):
        check_positive("rate_hz", self.rate_hz)
        check_non_negative("jitter_std_us", self.jitter_std_us)
        check_probability("drop_prob", self.drop_prob)
        # jitter must never reorder frames: keep 3 sigma under half a period
        if 3.0 * self.jitter_std_us * 1000.0 >= 0.45 * period_ns(self.rate_hz):
            raise ValueError(
                f"jitter_std_us={self.jitter_std_us} too large for rate {self.rate_hz} Hz"
            )


@dataclass(frozen=True)
class GhostSpec:
    """Zero-point noise: static per-taxel bias, signed thermal drift, and
    sparse positive spikes."""

    bias_amp: float = 0.0  # N; per-taxel bias uniform in [0, bias_amp]
    drift: float = 0.0  # N/s per taxel, random sign
    spike_prob: float = 0.0  # per taxel per frame

    def __post_init__(self):
        check_non_negative("bias_amp", self.bias_amp)
        check_non_negative("drift", self.drift)
        check_probability("spike_prob", self.spike_prob)


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    duration_s: float = 5.0
    no_load_s: float = 1.0  # contact-free lead-in for bias estimation
    n_contacts: int = 3
    tactile: StreamSpec = StreamSpec(60.0)
    vision: StreamSpec = StreamSpec(60.0)
    kinematics: StreamSpec = StreamSpec(120.0)
    pose: StreamSpec = StreamSpec(200.0)
    ghost: GhostSpec = GhostSpec()
    vision_width: int = 1920
    vision_height: int = 1080
    task: str = "sim"

    def __post_init__(self):
        check_positive("duration_s", self.duration_s)
        check_non_negative("no_load_s", self.no_load_s)
        if self.n_contacts < 0:
            raise ValueError("n_contacts must be >= 0")
        if self.n_contacts > 0 and self.no_load_s >= self.duration_s - 0.3:
            raise ValueError("duration_s leaves no room for contacts after no_load_s")
        if self.ghost.bias_amp > 1.0:
            raise ValueError("bias_amp above 1.0 N exceeds the sensor noise envelope")
        if self.ghost.drift * self.duration_s > 0.45:
            raise ValueError("drift * duration_s must stay within 0.45 N")

    def streams(self) -> dict[str, StreamSpec]:
        return {
            "tactile": self.tactile,
            "vision": self.vision,
            "kinematics": self.kinematics,
            "pose": self.pose,
        }


@dataclass(frozen=True)
class ContactEvent:
    """One scripted fingertip press."""

    finger: int
    start: int  # ns
    end: int  # ns
    peak_force: float  # N at the footprint center, mid-interval
    row: float
    col: float


@dataclass(frozen=True)
class TrueAlignment:
    """Index of the nearest sample per tactile anchor, per matched stream
    (earlier sample wins exact ties). Indices refer to post-drop streams."""

    kinematics: np.ndarray
    pose: np.ndarray
    vision: np.ndarray


@dataclass(frozen=True)
class LatentTrajectory:
    """Smooth 8-dim trajectory: per-dimension sums of three sinusoids."""

    amps: np.ndarray  # (8, 3)
    freqs: np.ndarray  # (8, 3) Hz
    phases: np.ndarray  # (8, 3) rad

    def __call__(self, t_s) -> np.ndarray:
        t = np.asarray(t_s, dtype=np.float64)
        arg = 2.0 * np.pi * self.freqs * t[..., None, None] + self.phases
        return np.sum(self.amps * np.sin(arg), axis=-1)


@dataclass
class GroundTruth:
    contacts: list[ContactEvent]
    alignment: TrueAlignment
    latent: LatentTrajectory
    dropped: dict[str, list[int]]  # nominal grid indices removed per modality
    clean_tactile: list[TactileFrame]  # pre-noise frames
    bias_field: np.ndarray | None  # (5, 8, 16) injected static bias, if any


# --------------------------------------------------------------------------
# fixed latent-to-signal maps
# --------------------------------------------------------------------------


def _fixed_rng(*key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([_MAP_SEED, *key]))


def _kin_map() -> np.ndarray:
    return _fixed_rng(1).normal(0.0, 0.8, size=(19, _LATENT_DIM))


def _pose_maps() -> tuple[np.ndarray, np.ndarray]:
    rng = _fixed_rng(2)
    pos = rng.normal(0.0, 0.10, size=(3, _LATENT_DIM))
    rot = rng.normal(0.0, 0.15, size=(3, _LATENT_DIM))
    return pos, rot


def anchor_feature_map(embed_dim: int) -> np.ndarray:
    """Fixed linear map from the latent space to anchor feature space."""
    return _fixed_rng(3, embed_dim).normal(0.0, 1.0, size=(embed_dim, _LATENT_DIM))


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def kinematics_from_latent(u: np.ndarray) -> np.ndarray:
    """Smooth injective map latent -> 19 normalized hand parameters."""
    return _sigmoid(_KIN_MAP @ np.asarray(u, dtype=np.float64))


def tactile_from_latent(u: np.ndarray) -> np.ndarray:
    """Render a latent as per-finger Gaussian contact footprints.

    The first two latent dimensions steer the footprint center, the next
    five scale per-finger amplitude, and the last modulates the spread.
    """
    u = np.asarray(u, dtype=np.float64)
    r0 = 3.5 + 2.5 * np.tanh(u[0])
    c0 = 7.5 + 5.5 * np.tanh(u[1])
    sigma = 1.6 + 0.4 * np.tanh(u[7])
    rows = np.arange(8.0)[:, None]
    cols = np.arange(16.0)[None, :]
    bump = np.exp(-((rows - r0) ** 2 + (cols - c0) ** 2) / (2.0 * sigma**2))
    amps = 2.0 + 1.5 * np.tanh(u[2:7])
    return amps[:, None, None] * bump[None, :, :]


_KIN_MAP = _kin_map()
_POS_MAP, _ROT_MAP = _pose_maps()


def _quat_from_rotvec(v: np.ndarray) -> np.ndarray:
    angle = float(np.linalg.norm(v))
    if angle < 1e-12:
        return np.array([1.0, 0.0, 0.0, 0.0])
    axis = v / angle
    half = 0.5 * angle
    s = np.sin(half)
    return np.array([np.cos(half), s * axis[0], s * axis[1], s * axis[2]])


# --------------------------------------------------------------------------
# session generation
# --------------------------------------------------------------------------


def _nominal_times(rate_hz: float, duration_s: float) -> np.ndarray:
    n = int(np.floor(duration_s * rate_hz + 1e-9))
    k = np.arange(n, dtype=np.float64)
    return np.round(k * (NS_PER_S / rate_hz)).astype(np.int64)


def _jittered_times(nominal: np.ndarray, spec: StreamSpec, rng) -> np.ndarray:
    if spec.jitter_std_us <= 0.0:
        return nominal.copy()
    sigma = spec.jitter_std_us * 1000.0
    noise = np.clip(rng.normal(0.0, sigma, size=nominal.shape), -3.0 * sigma, 3.0 * sigma)
    times = nominal + np.round(noise).astype(np.int64)
    return np.maximum(times, 0)


def _drop_mask(n: int, drop_prob: float, rng) -> np.ndarray:
    if drop_prob <= 0.0:
        return np.ones(n, dtype=bool)
    return rng.random(n) >= drop_prob


def _place_contacts(cfg: SimConfig, rng) -> list[ContactEvent]:
    contacts: list[ContactEvent] = []
    taken: dict[int, list[tuple[float, float]]] = {f: [] for f in range(5)}
    usable = cfg.duration_s - cfg.no_load_s
    attempts = 0
    while len(contacts) < cfg.n_contacts:
        attempts += 1
        if attempts > 200 * max(cfg.n_contacts, 1):
            raise ValueError(
                f"could not place {cfg.n_contacts} non-overlapping contacts "
                f"in {usable:.2f} s of usable time"
            )
        finger = int(rng.integers(5))
        dur = float(rng.uniform(0.3, min(0.9, usable)))
        start = float(rng.uniform(cfg.no_load_s, cfg.duration_s - dur))
        end = start + dur
        overlap = any(
            start < e + _CONTACT_MARGIN_S and end > s - _CONTACT_MARGIN_S
            for s, e in taken[finger]
        )
        if overlap:
            continue
        taken[finger].append((start, end))
        contacts.append(
            ContactEvent(
                finger=finger,
                start=round(start * NS_PER_S),
                end=round(end * NS_PER_S),
                peak_force=float(rng.uniform(2.0, 8.0)),
                row=float(rng.uniform(1.5, 6.5)),
                col=float(rng.uniform(2.5, 13.5)),
            )
        )
    contacts.sort(key=lambda c: c.start)
    return contacts


def _contact_forces(t_ns: int, contacts: list[ContactEvent]) -> np.ndarray:
    forces = np.zeros(TAXEL_SHAPE, dtype=np.float64)
    rows = np.arange(8.0)[:, None]
    cols = np.arange(16.0)[None, :]
    for c in contacts:
        if not (c.start <= t_ns <= c.end):
            continue
        u = (t_ns - c.start) / (c.end - c.start)
        envelope = 0.5 - 0.5 * np.cos(2.0 * np.pi * u)  # raised cosine, peak 1 mid-press
        bump = np.exp(
            -((rows - c.row) ** 2 + (cols - c.col) ** 2) / (2.0 * _CONTACT_SIGMA**2)
        )
        forces[c.finger] += c.peak_force * envelope * bump
    return forces


def nearest_indices(anchors: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Index of the closest entry of ``times`` per anchor; earlier wins ties."""
    anchors = np.asarray(anchors, dtype=np.int64)
    times = np.asarray(times, dtype=np.int64)
    if times.size == 0:
        raise ValueError("cannot match against an empty stream")
    pos = np.searchsorted(times, anchors)
    lo = np.clip(pos - 1, 0, times.size - 1)
    hi = np.clip(pos, 0, times.size - 1)
    d_lo = np.abs(anchors - times[lo])
    d_hi = np.abs(times[hi] - anchors)
    return np.where(d_lo <= d_hi, lo, hi)


def generate_session(cfg: SimConfig) -> tuple[RawSession, GroundTruth]:
    """Produce one asynchronous multi-stream session plus its ground truth.

    Identical configurations (seed included) produce bit-identical output.
    """
    ss = np.random.SeedSequence(cfg.seed)
    rng_latent, rng_contacts, rng_timing, rng_drops, rng_ghost = [
        np.random.default_rng(child) for child in ss.spawn(5)
    ]

    latent = LatentTrajectory(
        amps=rng_latent.uniform(0.2, 0.6, size=(_LATENT_DIM, 3)),
        freqs=rng_latent.uniform(0.1, 0.6, size=(_LATENT_DIM, 3)),
        phases=rng_latent.uniform(0.0, 2.0 * np.pi, size=(_LATENT_DIM, 3)),
    )
    contacts = _place_contacts(cfg, rng_contacts) if cfg.n_contacts else []

    times: dict[str, np.ndarray] = {}
    dropped: dict[str, list[int]] = {}
    for name, spec in cfg.streams().items():
        nominal = _nominal_times(spec.rate_hz, cfg.duration_s)
        jittered = _jittered_times(nominal, spec, rng_timing)
        keep = _drop_mask(len(jittered), spec.drop_prob, rng_drops)
        times[name] = jittered[keep]
        dropped[name] = np.flatnonzero(~keep).tolist()

    # tactile: contact footprints, then optional zero-point noise
    clean = [
        TactileFrame(int(t), _contact_forces(int(t), contacts).astype(np.float32))
        for t in times["tactile"]
    ]
    ghost = cfg.ghost
    bias_field = None
    if ghost.bias_amp > 0 or ghost.drift > 0 or ghost.spike_prob > 0:
        ghost_seed = int(rng_ghost.integers(2**63))
        tactile = inject_ghost_noise(
            clean, ghost.bias_amp, ghost.drift, ghost.spike_prob, ghost_seed
        )
        bias_field = ghost_bias_field(ghost.bias_amp, ghost_seed)
    else:
        tactile = clean

    vision = [
        VisionFrame(int(t), frame_index=k, width=cfg.vision_width, height=cfg.vision_height)
        for t, k in zip(times["vision"], _kept_indices(dropped["vision"], len(times["vision"])))
    ]
    kin_vals = kinematics_from_latent_batch(latent, times["kinematics"])
    kinematics = [
        KinematicsFrame(int(t), v) for t, v in zip(times["kinematics"], kin_vals)
    ]
    pose = [_pose_sample(int(t), latent) for t in times["pose"]]

    session = RawSession(
        tactile=tactile,
        vision=vision,
        kinematics=kinematics,
        pose=pose,
        meta={
            "session_id": f"sim-{cfg.seed:016x}",
            "task": cfg.task,
            "seed": cfg.seed,
            "duration_s": cfg.duration_s,
            "nominal_rate_hz": {n: s.rate_hz for n, s in cfg.streams().items()},
            "jitter_std_us": {n: s.jitter_std_us for n, s in cfg.streams().items()},
            "drop_prob": {n: s.drop_prob for n, s in cfg.streams().items()},
        },
    )

    anchors = stream_times(tactile)
    alignment = TrueAlignment(
        kinematics=nearest_indices(anchors, stream_times(kinematics)),
        pose=nearest_indices(anchors, stream_times(pose)),
        vision=nearest_indices(anchors, stream_times(vision)),
    )
    truth = GroundTruth(
        contacts=contacts,
        alignment=alignment,
        latent=latent,
        dropped=dropped,
        clean_tactile=clean,
        bias_field=bias_field,
    )
    return session, truth


def _kept_indices(dropped: list[int], n_kept: int) -> np.ndarray:
    total = n_kept + len(dropped)
    keep = np.ones(total, dtype=bool)
    keep[dropped] = False
    return np.flatnonzero(keep)


def kinematics_from_latent_batch(latent: LatentTrajectory, t_ns: np.ndarray) -> np.ndarray:
    u = latent(np.asarray(t_ns, dtype=np.float64) / NS_PER_S)
    vals = _sigmoid(u @ _KIN_MAP.T)
    return np.clip(vals.astype(np.float32), 0.0, 1.0)


def _pose_sample(t_ns: int, latent: LatentTrajectory) -> PoseSample:
    u = latent(t_ns / NS_PER_S)
    position = (_POS_MAP @ u).astype(np.float32)
    quat = _quat_from_rotvec(_ROT_MAP @ u)
    quat32 = canonical_quat(canonical_quat(quat).astype(np.float32))
    return PoseSample(t_ns, position, quat32)


# --------------------------------------------------------------------------
# zero-point noise
# --------------------------------------------------------------------------


def _ghost_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, 0x6057]))


def ghost_bias_field(bias_amp: float, seed: int) -> np.ndarray:
    """The static per-taxel bias field that inject_ghost_noise(seed) applies."""
    return _ghost_rng(seed).uniform(0.0, bias_amp, size=TAXEL_SHAPE).astype(np.float32)


def inject_ghost_noise(
    frames: list[TactileFrame],
    bias_amp: float,
    drift: float,
    spike_prob: float,
    seed: int,
) -> list[TactileFrame]:
    """Overlay zero-point noise on a tactile stream.

    Adds a static per-taxel bias drawn uniformly from [0, bias_amp], a
    linear thermal drift of drift * t newtons with an independent random
    sign per taxel, and sparse positive spikes (0.5 to 2 N) occurring with
    probability spike_prob per taxel per frame. Deterministic in the seed;
    with all parameters zero the output equals the input exactly.
    """
    check_non_negative("bias_amp", bias_amp)
    check_non_negative("drift", drift)
    check_probability("spike_prob", spike_prob)
    for i in range(1, len(frames)):
        if frames[i].t <= frames[i - 1].t:
            raise ValueError("tactile frames must be time-sorted")

    rng = _ghost_rng(seed)
    bias = rng.uniform(0.0, bias_amp, size=TAXEL_SHAPE).astype(np.float32)
    signs = (rng.integers(0, 2, size=TAXEL_SHAPE) * 2 - 1).astype(np.float32)
    out = []
    for frame in frames:
        t_s = np.float32(frame.t / NS_PER_S)
        noisy = frame.forces + bias + signs * np.float32(drift) * t_s
        if spike_prob > 0.0:
            mask = rng.random(size=TAXEL_SHAPE) < spike_prob
            amps = rng.uniform(0.5, 2.0, size=TAXEL_SHAPE).astype(np.float32)
            noisy = noisy + np.where(mask, amps, np.float32(0.0))
        out.append(TactileFrame(frame.t, noisy.astype(np.float32)))
    return out


# --------------------------------------------------------------------------
# synthetic pretraining corpus
# --------------------------------------------------------------------------

_STEP_ANGLE = 0.12  # latent advance per anchor step, radians per plane


def _latent_step(u: np.ndarray) -> np.ndarray:
    """Deterministic smooth successor: small rotations in four fixed planes."""
    v = np.asarray(u, dtype=np.float64).copy()
    c, s = np.cos(_STEP_ANGLE), np.sin(_STEP_ANGLE)
    for a, b in ((0, 1), (2, 3), (4, 5), (6, 7)):
        va, vb = v[a], v[b]
        v[a] = c * va - s * vb
        v[b] = s * va + c * vb
    return v


def synth_pretrain_corpus(
    n_pairs: int,
    embed_dim: int,
    seed: int,
    noise_std: float = 0.01,
    decorrelate: bool = False,
) -> list[PretrainItem]:
    """Generate pretraining pairs whose anchor features, tactile frames and
    kinematics share a latent cause.

    Anchor features are a fixed linear map of the latent plus isotropic
    noise, unit-normalized. With decorrelate=True the anchor features are
    cyclically shifted across items, severing every pairing while keeping
    the marginals identical (so any encoder retrieves at chance level).
    """
    if n_pairs <= 0:
        raise ValueError("n_pairs must be > 0")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xC0595]))
    a_map = anchor_feature_map(embed_dim)

    latents = rng.normal(0.0, 1.0, size=(n_pairs, _LATENT_DIM))
    feats = latents @ a_map.T
    if noise_std > 0.0:
        feats = feats + rng.normal(0.0, noise_std, size=feats.shape)
    feats /= np.linalg.norm(feats, axis=1, keepdims=True)
    if decorrelate:
        feats = np.roll(feats, 1, axis=0)

    items = []
    for i in range(n_pairs):
        u = latents[i]
        u_next = _latent_step(u)
        items.append(
            PretrainItem(
                z_v=feats[i],
                tactile=tactile_from_latent(u),
                kin=kinematics_from_latent(u),
                tactile_next=tactile_from_latent(u_next),
                kin_next=kinematics_from_latent(u_next),
            )
        )
    return items


def anchor_features_for(times, latent: LatentTrajectory, embed_dim: int):
    """Deterministic stub anchor features for the given anchor timestamps:
    the fixed linear map applied to the session latent, unit-normalized."""
    from .pretrain import AnchorFeatures

    times = np.asarray(times, dtype=np.int64)
    a_map = anchor_feature_map(embed_dim)
    u = latent(times.astype(np.float64) / NS_PER_S)
    feats = u @ a_map.T
    feats /= np.linalg.norm(feats, axis=1, keepdims=True)
    return AnchorFeatures(times, feats)
