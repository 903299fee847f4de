"""Pipeline configuration file: strict YAML with every default documented.

Unknown keys are rejected at every nesting level, so typos fail loudly
instead of silently running with defaults. All randomness flows from the
single seed here (the CLI --seed flag overrides it).

Full schema with defaults::

    seed: 0
    task: sim
    sim:
      duration_s: 5.0
      no_load_s: 1.0           # contact-free lead-in, used for bias fitting
      n_contacts: 3
      streams:                 # per modality
        tactile:    {rate_hz: 60.0,  jitter_std_us: 0.0, drop_prob: 0.0}
        vision:     {rate_hz: 60.0,  jitter_std_us: 0.0, drop_prob: 0.0}
        kinematics: {rate_hz: 120.0, jitter_std_us: 0.0, drop_prob: 0.0}
        pose:       {rate_hz: 200.0, jitter_std_us: 0.0, drop_prob: 0.0}
      ghost:
        bias_amp: 0.2          # N; per-taxel static bias upper bound
        drift: 0.0             # N/s thermal drift magnitude
        spike_prob: 0.0        # per taxel per frame
    capture:
      capacity_s: 4.0          # buffered seconds per channel
      high_watermark: 0.75
    sync:
      min_overlap_s: 0.5
      slack_ns: 1500000        # match cutoff slack on top of half a period
    denoise:
      epsilon: 0.05            # N noise-floor tolerance
      no_load_frames: 60       # leading frames assumed contact-free
    hand:                      # affine coupling to the target hand
      name: identity19
      joint_limits: [[0.0, 1.0], ...]   # (robot_dofs, 2) radians
      mapping: [[...], ...]             # (robot_dofs, 19)
      offset: [0.0, ...]                # (robot_dofs,)
    calibration:
      rotation_wxyz: [1.0, 0.0, 0.0, 0.0]   # tracker-to-base rotation
      initial_position: [0.0, 0.0, 0.0]
      initial_orientation_wxyz: [1.0, 0.0, 0.0, 0.0]
    pretrain:
      embed_dim: 64
      temperature: 0.07
      temporal_weight: 0.5
      lr: 0.001
      steps: 2000
      batch_size: 32
      n_pairs: 2048            # synthetic training corpus size
      eval_pairs: 256
      noise_std: 0.01          # anchor feature noise in the corpus
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError
from .geometry import Rotation
from .pretrain import PretrainConfig
from .retarget import EePose, HandDescription, default_hand
from .simulate import GhostSpec, SimConfig, StreamSpec


@dataclass(frozen=True)
class CaptureSettings:
    capacity_s: float = 4.0
    high_watermark: float = 0.75


@dataclass(frozen=True)
class SyncSettings:
    min_overlap_s: float = 0.5
    slack_ns: int = 1_500_000


@dataclass(frozen=True)
class DenoiseSettings:
    epsilon: float = 0.05
    no_load_frames: int = 60


@dataclass(frozen=True)
class CalibrationSettings:
    rotation: Rotation = field(default_factory=Rotation.identity)
    initial_pose: EePose = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.initial_pose is None:
            object.__setattr__(
                self,
                "initial_pose",
                EePose(position=np.zeros(3), orientation=Rotation.identity()),
            )


@dataclass(frozen=True)
class PretrainSettings:
    config: PretrainConfig = PretrainConfig()
    n_pairs: int = 2048
    eval_pairs: int = 256
    noise_std: float = 0.01


@dataclass
class PipelineConfig:
    seed: int = 0
    task: str = "sim"
    sim: SimConfig = None  # type: ignore[assignment]
    capture: CaptureSettings = CaptureSettings()
    sync: SyncSettings = SyncSettings()
    denoise: DenoiseSettings = DenoiseSettings()
    hand: HandDescription = None  # type: ignore[assignment]
    calibration: CalibrationSettings = CalibrationSettings()
    pretrain: PretrainSettings = PretrainSettings()

    def __post_init__(self):
        if self.sim is None:
            self.sim = SimConfig(seed=self.seed, task=self.task)
        if self.hand is None:
            self.hand = default_hand()

    def with_seed(self, seed: int) -> "PipelineConfig":
        """Copy of this config with every seeded component re-seeded."""
        cfg = PipelineConfig(
            seed=seed,
            task=self.task,
            sim=_replace_sim_seed(self.sim, seed, self.task),
            capture=self.capture,
            sync=self.sync,
            denoise=self.denoise,
            hand=self.hand,
            calibration=self.calibration,
            pretrain=PretrainSettings(
                config=PretrainConfig(
                    embed_dim=self.pretrain.config.embed_dim,
                    temperature=self.pretrain.config.temperature,
                    temporal_weight=self.pretrain.config.temporal_weight,
                    lr=self.pretrain.config.lr,
                    steps=self.pretrain.config.steps,
                    batch_size=self.pretrain.config.batch_size,
                    seed=seed,
                ),
                n_pairs=self.pretrain.n_pairs,
                eval_pairs=self.pretrain.eval_pairs,
                noise_std=self.pretrain.noise_std,
            ),
        )
        return cfg


def _replace_sim_seed(sim: SimConfig, seed: int, task: str) -> SimConfig:
    return SimConfig(
        seed=seed,
        duration_s=sim.duration_s,
        no_load_s=sim.no_load_s,
        n_contacts=sim.n_contacts,
        tactile=sim.tactile,
        vision=sim.vision,
        kinematics=sim.kinematics,
        pose=sim.pose,
        ghost=sim.ghost,
        vision_width=sim.vision_width,
        vision_height=sim.vision_height,
        task=task,
    )


def _require_mapping(doc, where: str) -> dict:
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(doc).__name__}")
    return doc


def _take(doc: dict, where: str, known: dict):
    unknown = set(doc) - set(known)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    return {k: doc.get(k, default) for k, default in known.items()}


def _stream_spec(doc, where: str, default: StreamSpec) -> StreamSpec:
    doc = _require_mapping(doc, where)
    vals = _take(
        doc, where,
        {"rate_hz": default.rate_hz, "jitter_std_us": default.jitter_std_us,
         "drop_prob": default.drop_prob},
    )
    try:
        return StreamSpec(**{k: float(v) for k, v in vals.items()})
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def load_config(path) -> PipelineConfig:
    """Parse and validate a pipeline configuration file."""
    text = Path(path).read_text()
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(_require_mapping(doc, str(path)), where=str(path))


def config_from_dict(doc: dict, where: str = "config") -> PipelineConfig:
    top = _take(
        doc, where,
        {"seed": 0, "task": "sim", "sim": None, "capture": None, "sync": None,
         "denoise": None, "hand": None, "calibration": None, "pretrain": None},
    )
    seed = int(top["seed"])
    task = str(top["task"])

    sim_doc = _require_mapping(top["sim"], f"{where}.sim")
    sim_vals = _take(
        sim_doc, f"{where}.sim",
        {"duration_s": 5.0, "no_load_s": 1.0, "n_contacts": 3, "streams": None, "ghost": None},
    )
    streams_doc = _require_mapping(sim_vals["streams"], f"{where}.sim.streams")
    defaults = {
        "tactile": StreamSpec(60.0), "vision": StreamSpec(60.0),
        "kinematics": StreamSpec(120.0), "pose": StreamSpec(200.0),
    }
    unknown = set(streams_doc) - set(defaults)
    if unknown:
        raise ConfigError(f"{where}.sim.streams: unknown modalities {sorted(unknown)}")
    streams = {
        name: _stream_spec(streams_doc.get(name), f"{where}.sim.streams.{name}", default)
        for name, default in defaults.items()
    }
    ghost_doc = _require_mapping(sim_vals["ghost"], f"{where}.sim.ghost")
    ghost_vals = _take(
        ghost_doc, f"{where}.sim.ghost", {"bias_amp": 0.2, "drift": 0.0, "spike_prob": 0.0}
    )
    try:
        sim = SimConfig(
            seed=seed,
            duration_s=float(sim_vals["duration_s"]),
            no_load_s=float(sim_vals["no_load_s"]),
            n_contacts=int(sim_vals["n_contacts"]),
            tactile=streams["tactile"],
            vision=streams["vision"],
            kinematics=streams["kinematics"],
            pose=streams["pose"],
            ghost=GhostSpec(**{k: float(v) for k, v in ghost_vals.items()}),
            task=task,
        )
    except ValueError as exc:
        raise ConfigError(f"{where}.sim: {exc}") from exc

    cap_vals = _take(
        _require_mapping(top["capture"], f"{where}.capture"),
        f"{where}.capture", {"capacity_s": 4.0, "high_watermark": 0.75},
    )
    sync_vals = _take(
        _require_mapping(top["sync"], f"{where}.sync"),
        f"{where}.sync", {"min_overlap_s": 0.5, "slack_ns": 1_500_000},
    )
    den_vals = _take(
        _require_mapping(top["denoise"], f"{where}.denoise"),
        f"{where}.denoise", {"epsilon": 0.05, "no_load_frames": 60},
    )

    hand_doc = _require_mapping(top["hand"], f"{where}.hand")
    if hand_doc:
        hand_vals = _take(
            hand_doc, f"{where}.hand",
            {"name": "hand", "joint_limits": None, "mapping": None, "offset": None},
        )
        if hand_vals["joint_limits"] is None or hand_vals["mapping"] is None:
            raise ConfigError(f"{where}.hand: joint_limits and mapping are required")
        limits = np.asarray(hand_vals["joint_limits"], dtype=np.float64)
        offset = hand_vals["offset"]
        if offset is None:
            offset = np.zeros(limits.shape[0])
        try:
            hand = HandDescription(
                name=str(hand_vals["name"]),
                joint_limits=limits,
                mapping=np.asarray(hand_vals["mapping"], dtype=np.float64),
                offset=np.asarray(offset, dtype=np.float64),
            )
        except ValueError as exc:
            raise ConfigError(f"{where}.hand: {exc}") from exc
    else:
        hand = default_hand()

    calib_doc = _require_mapping(top["calibration"], f"{where}.calibration")
    calib_vals = _take(
        calib_doc, f"{where}.calibration",
        {"rotation_wxyz": [1.0, 0.0, 0.0, 0.0],
         "initial_position": [0.0, 0.0, 0.0],
         "initial_orientation_wxyz": [1.0, 0.0, 0.0, 0.0]},
    )
    try:
        calibration = CalibrationSettings(
            rotation=Rotation.from_quat(calib_vals["rotation_wxyz"]),
            initial_pose=EePose(
                position=np.asarray(calib_vals["initial_position"], dtype=np.float64),
                orientation=Rotation.from_quat(calib_vals["initial_orientation_wxyz"]),
            ),
        )
    except ValueError as exc:
        raise ConfigError(f"{where}.calibration: {exc}") from exc

    pre_doc = _require_mapping(top["pretrain"], f"{where}.pretrain")
    pre_vals = _take(
        pre_doc, f"{where}.pretrain",
        {"embed_dim": 64, "temperature": 0.07, "temporal_weight": 0.5, "lr": 1e-3,
         "steps": 2000, "batch_size": 32, "n_pairs": 2048, "eval_pairs": 256,
         "noise_std": 0.01},
    )
    try:
        pretrain = PretrainSettings(
            config=PretrainConfig(
                embed_dim=int(pre_vals["embed_dim"]),
                temperature=float(pre_vals["temperature"]),
                temporal_weight=float(pre_vals["temporal_weight"]),
                lr=float(pre_vals["lr"]),
                steps=int(pre_vals["steps"]),
                batch_size=int(pre_vals["batch_size"]),
                seed=seed,
            ),
            n_pairs=int(pre_vals["n_pairs"]),
            eval_pairs=int(pre_vals["eval_pairs"]),
            noise_std=float(pre_vals["noise_std"]),
        )
    except ValueError as exc:
        raise ConfigError(f"{where}.pretrain: {exc}") from exc

    return PipelineConfig(
        seed=seed,
        task=task,
        sim=sim,
        capture=CaptureSettings(
            capacity_s=float(cap_vals["capacity_s"]),
            high_watermark=float(cap_vals["high_watermark"]),
        ),
        sync=SyncSettings(
            min_overlap_s=float(sync_vals["min_overlap_s"]),
            slack_ns=int(sync_vals["slack_ns"]),
        ),
        denoise=DenoiseSettings(
            epsilon=float(den_vals["epsilon"]),
            no_load_frames=int(den_vals["no_load_frames"]),
        ),
        hand=hand,
        calibration=calibration,
        pretrain=pretrain,
    )
