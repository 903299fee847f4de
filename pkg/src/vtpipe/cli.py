"""Command-line surface tying the pipeline stages together.

Commands: simulate, record, sync, denoise, calibrate, retarget, pretrain,
eval, stats. Exit status 0 on success, 1 on a domain error (message on
stderr), 2 on a usage error. All randomness is seeded: the same invocation
on the same inputs produces byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from . import capture, formats, pretrain, simulate
from .config import PipelineConfig, load_config
from .denoise import TactileDenoiser
from .errors import PipelineError
from .frames import Modality, stream_times
from .retarget import CalibrationRecord, calibrate_cam_to_base, retarget_trajectory
from .sync import SyncedDemo, SyncedSample, synchronize_session


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vtpipe",
        description="Multimodal demonstration pipeline: simulate, capture, "
        "synchronize, preprocess, pretrain.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def common(p, out_required=True):
        p.add_argument("--config", type=Path, help="pipeline config file (YAML)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", type=Path, required=out_required, help="output path")

    p = sub.add_parser("simulate", help="generate a synthetic raw session")
    common(p)

    p = sub.add_parser("record", help="replay a raw session through the recorder")
    common(p)
    p.add_argument("--in", dest="input", type=Path, required=True, help="raw session directory")

    p = sub.add_parser("sync", help="tactile-anchored alignment of a raw session")
    common(p)
    p.add_argument("--in", dest="input", type=Path, required=True, help="raw session directory")

    p = sub.add_parser("denoise", help="soft-threshold tactile frames of a synced demo")
    common(p)
    p.add_argument("--in", dest="input", type=Path, required=True, help="synced demo file")

    p = sub.add_parser("calibrate", help="solve the tracker-to-base rotation")
    common(p)
    p.add_argument(
        "--in", dest="input", type=Path, required=True,
        help="YAML with per-axis displacement lists (keys x, y, z)",
    )

    p = sub.add_parser("retarget", help="retarget a synced demo to a robot hand/arm")
    common(p)
    p.add_argument("--in", dest="input", type=Path, required=True, help="synced demo file")
    p.add_argument("--calib", type=Path, help="rotation JSON from the calibrate command")

    p = sub.add_parser("pretrain", help="train the tactile-kinematics encoder")
    common(p)
    p.add_argument("--demo", type=Path, help="synced demo to train on (else synthetic corpus)")
    p.add_argument("--features", type=Path, help="anchor features file for --demo")

    p = sub.add_parser("eval", help="retrieval evaluation of a checkpoint")
    common(p)
    p.add_argument("--ckpt", type=Path, required=True, help="encoder checkpoint")

    p = sub.add_parser("stats", help="collection throughput over demo files")
    common(p, out_required=False)
    p.add_argument("demos", nargs="+", type=Path, help="synced demo files")

    return parser


def _load_config(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    session, truth = simulate.generate_session(cfg.sim)
    out = Path(args.out)
    formats.write_raw(out, session)

    anchors = stream_times(session.tactile)
    features = simulate.anchor_features_for(
        anchors, truth.latent, cfg.pretrain.config.embed_dim
    )
    formats.write_features(out / "features.vtraw", features, cfg.sim.tactile.rate_hz)
    formats.write_stream(
        out / "clean_tactile.vtraw", "tactile", cfg.sim.tactile.rate_hz, (5, 8, 16),
        [f.t for f in truth.clean_tactile],
        np.array([f.forces for f in truth.clean_tactile], dtype="<f4").reshape(
            len(truth.clean_tactile), -1
        ),
    )
    truth_doc = {
        "contacts": [
            {"finger": c.finger, "start": c.start, "end": c.end,
             "peak_force": c.peak_force, "row": c.row, "col": c.col}
            for c in truth.contacts
        ],
        "dropped": truth.dropped,
        "alignment": {
            "kinematics": truth.alignment.kinematics.tolist(),
            "pose": truth.alignment.pose.tolist(),
            "vision": truth.alignment.vision.tolist(),
        },
        "bias_field": None if truth.bias_field is None else truth.bias_field.tolist(),
    }
    (out / "groundtruth.json").write_text(
        json.dumps(truth_doc, indent=2, sort_keys=True) + "\n"
    )
    return 0


def cmd_record(args) -> int:
    cfg = _load_config(args)
    session = formats.read_raw(args.input)
    rates = session.meta.get("nominal_rate_hz") or {}
    channels = []
    for m in Modality:
        frames = session.stream(m)
        if not frames and m not in capture.MANDATORY_MODALITIES:
            continue
        rate = float(rates.get(m.value, 60.0))
        cap = max(int(cfg.capture.capacity_s * rate), len(frames) + 1, int(2 * rate) + 1)
        channels.append(
            capture.ModalityChannel(
                m, rate, capacity=cap, high_watermark=cfg.capture.high_watermark
            )
        )
    replayed, report = capture.replay_session(session, channels)
    out = Path(args.out)
    formats.write_raw(out, replayed)
    formats.save_loss_report(out / "loss_report.json", report)
    return 0


def cmd_sync(args) -> int:
    cfg = _load_config(args)
    session = formats.read_raw(args.input)
    loss_path = Path(args.input) / "loss_report.json"
    loss_report = json.loads(loss_path.read_text()) if loss_path.exists() else None
    demo = synchronize_session(
        session,
        min_overlap_s=cfg.sync.min_overlap_s,
        slack_ns=cfg.sync.slack_ns,
        loss_report=loss_report,
    )
    formats.write_synced(args.out, demo)
    return 0


def cmd_denoise(args) -> int:
    cfg = _load_config(args)
    demo = formats.read_synced(args.input)
    tactile = [s.tactile for s in demo.samples]
    denoiser = TactileDenoiser(
        epsilon=cfg.denoise.epsilon, window=cfg.denoise.no_load_frames
    ).fit(tactile)
    clean = denoiser.transform(tactile)
    samples = [
        SyncedSample(
            anchor_t=s.anchor_t,
            tactile=c,
            vision_index=s.vision_index,
            kinematics=s.kinematics,
            pose=s.pose,
            vision_offset_ns=s.vision_offset_ns,
            kinematics_offset_ns=s.kinematics_offset_ns,
            pose_offset_ns=s.pose_offset_ns,
        )
        for s, c in zip(demo.samples, clean)
    ]
    provenance = dict(demo.provenance)
    provenance["denoise"] = {
        "epsilon": cfg.denoise.epsilon,
        "no_load_frames": denoiser.bias_.source_frames,
    }
    formats.write_synced(args.out, SyncedDemo(samples=samples, provenance=provenance))
    return 0


def cmd_calibrate(args) -> int:
    doc = yaml.safe_load(Path(args.input).read_text())
    if not isinstance(doc, dict):
        raise PipelineError(f"{args.input}: expected a mapping with keys x, y, z")
    record = CalibrationRecord(axis_motions={k: doc.get(k, []) for k in ("x", "y", "z")})
    rotation = calibrate_cam_to_base(record)
    formats.save_rotation_json(args.out, rotation, record.residual)
    return 0


def cmd_retarget(args) -> int:
    cfg = _load_config(args)
    demo = formats.read_synced(args.input)
    rotation = cfg.calibration.rotation
    if args.calib:
        rotation = formats.load_rotation_json(args.calib)
    retargeted = retarget_trajectory(demo, cfg.hand, rotation, cfg.calibration.initial_pose)
    formats.write_retargeted_csv(args.out, retargeted)
    return 0


def cmd_pretrain(args) -> int:
    cfg = _load_config(args)
    settings = cfg.pretrain
    if args.demo:
        if not args.features:
            raise PipelineError("--demo requires --features with anchor vectors")
        demo = formats.read_synced(args.demo)
        features = formats.read_features(args.features)
        corpus = pretrain.corpus_from_demo(demo, features)
    else:
        corpus = simulate.synth_pretrain_corpus(
            settings.n_pairs, settings.config.embed_dim, cfg.seed,
            noise_std=settings.noise_std,
        )
    result = pretrain.train(corpus, settings.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    formats.save_checkpoint(out / "encoder.vtckpt", result.params)
    formats.save_loss_curve(out / "loss_curve.csv", result.losses)
    return 0


def cmd_eval(args) -> int:
    cfg = _load_config(args)
    settings = cfg.pretrain
    params = formats.load_checkpoint(args.ckpt)
    # the eval corpus seed is offset from the training seed so the sets
    # are disjoint by construction
    eval_set = simulate.synth_pretrain_corpus(
        settings.eval_pairs, params.embed_dim, cfg.seed + 1,
        noise_std=settings.noise_std,
    )
    accuracy = pretrain.retrieval_eval(params, eval_set)
    doc = {"top1_accuracy": accuracy, "pool_size": len(eval_set)}
    Path(args.out).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print(f"top-1 retrieval accuracy: {accuracy:.4f} over {len(eval_set)} pairs")
    return 0


def cmd_stats(args) -> int:
    report = formats.stats(args.demos)
    csv_text = report.to_csv()
    if args.out:
        Path(args.out).write_text(csv_text)
    print(
        f"{report.demos} demos, mean {report.mean_duration_s:.2f} s/demo, "
        f"{report.demos_per_hour:.1f} demos/hour"
    )
    return 0


_COMMANDS = {
    "simulate": cmd_simulate,
    "record": cmd_record,
    "sync": cmd_sync,
    "denoise": cmd_denoise,
    "calibrate": cmd_calibrate,
    "retarget": cmd_retarget,
    "pretrain": cmd_pretrain,
    "eval": cmd_eval,
    "stats": cmd_stats,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except PipelineError as exc:
        print(f"vtpipe {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"vtpipe {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
