"""Command-line entry point.

Subcommands: make-synthetic, train-ae, encode, train-clf, loso,
dump-attention, latent-analysis. Every subcommand is driven by a JSON config
file (see README for the schema) plus ``--set key.path=value`` overrides, and
writes its artifacts under the run's output directory together with a
manifest listing paths and SHA-256 hashes.

Exit codes: 0 success, 2 invalid configuration (field diagnostics on
stderr), 3 missing data files, 1 any other failure. ``EEGATTN_LOG`` selects
the log level.
"""

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import analysis
from .autodiff import Tensor
from .backend import BACKEND_NAME
from .classifier import (
    ClassifierConfig, load_classifier, save_classifier, train_classifier,
)
from .config import (
    config_snapshot, load_config, parse_override_value,
)
from .dataio import (
    EEGRecording, apply_zscore, channel_stats, read_container, write_container,
)
from .datasets import load_windows, window_summary
from .encoder import (
    AutoencoderConfig, encode, load_autoencoder, pca_fit, pca_transform,
    save_autoencoder, train_autoencoder,
)
from .errors import ConfigError, DataFormatError, ValidationError
from .loso import (
    run_loso, PipelineConfig, seed_session_average, write_fold_csv,
    write_summary_json,
)
from .synthetic import make_synthetic

log = logging.getLogger(__name__)


# -- manifest -------------------------------------------------------------------------


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir, artifacts, cfg=None, overrides=None):
    out_dir = Path(out_dir)
    doc = {
        "metadata": {"written_unix_time": time.time(), "backend": BACKEND_NAME},
        "config": config_snapshot(cfg) if cfg else None,
        "overrides": overrides or {},
        "artifacts": [
            {
                "path": str(Path(p).relative_to(out_dir)),
                "sha256": _sha256(p),
                "bytes": Path(p).stat().st_size,
            }
            for p in sorted(map(str, artifacts))
        ],
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(doc, indent=2), encoding="utf-8")
    return path


def _out_dir(cfg):
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _pipeline_config(cfg):
    return PipelineConfig(
        latent_dims=cfg.latent_dims,
        normalize=cfg.normalize,
        autoencoder=cfg.autoencoder,
        classifier_arch=cfg.classifier_arch,
        classifier_train=cfg.classifier,
    )


# -- subcommands ----------------------------------------------------------------------


def cmd_make_synthetic(cfg, overrides):
    out = _out_dir(cfg)
    paths, truth = make_synthetic(cfg.synthetic, cfg.seed, out)
    artifacts = list(paths) + [out / "ground_truth.json"]
    write_manifest(out, artifacts, cfg, overrides)
    print(json.dumps({"containers": len(paths),
                      "subjects": sorted(truth),
                      "out_dir": str(out)}, indent=2))
    return 0


def cmd_train_ae(cfg, overrides):
    windows = load_windows(cfg)
    out = _out_dir(cfg)
    all_windows = [w for ws in windows.values() for w in ws]
    arrays = [w.samples for w in all_windows]
    if cfg.normalize:
        mean, std = channel_stats(arrays)
        arrays = [apply_zscore(a, mean, std) for a in arrays]
        np.savez(out / "norm_stats.npz", mean=mean, std=std)
    channels = arrays[0].shape[1]
    model, losses = train_autoencoder(
        arrays, AutoencoderConfig(channels=channels, latent_dims=cfg.latent_dims),
        cfg.autoencoder, seed=cfg.seed)
    ckpt = out / "autoencoder.eawt"
    save_autoencoder(model, ckpt)
    losses_path = out / "ae_losses.json"
    losses_path.write_text(json.dumps({"epoch_losses": losses}), encoding="utf-8")
    artifacts = [ckpt, losses_path]
    if cfg.normalize:
        artifacts.append(out / "norm_stats.npz")
    write_manifest(out, artifacts, cfg, overrides)
    print(json.dumps({"checkpoint": str(ckpt), "epochs": len(losses) - 1,
                      "initial_loss": losses[0], "final_loss": losses[-1]},
                     indent=2))
    return 0


def cmd_encode(cfg, overrides, args):
    model = load_autoencoder(args.checkpoint)
    rec = read_container(args.input)
    samples = rec.samples
    if args.stats:
        stats = np.load(args.stats)
        samples = apply_zscore(samples, stats["mean"], stats["std"])
    latent = encode(model, Tensor(samples)).data
    out_rec = EEGRecording(
        subject_id=rec.subject_id,
        sample_rate_hz=rec.sample_rate_hz,
        channel_names=[f"latent{i:02d}" for i in range(latent.shape[1])],
        samples=latent,
        annotations=rec.annotations,
        trial_meta={**rec.trial_meta, "encoded_from": str(args.input)},
    )
    write_container(out_rec, args.output)
    print(json.dumps({"output": str(args.output),
                      "n_samples": int(latent.shape[0]),
                      "latent_dims": int(latent.shape[1])}, indent=2))
    return 0


def cmd_train_clf(cfg, overrides, args):
    windows = load_windows(cfg)
    out = _out_dir(cfg)
    ae_model = load_autoencoder(args.checkpoint)
    all_windows = [w for ws in windows.values() for w in ws]
    arrays = [w.samples for w in all_windows]
    if cfg.normalize:
        if args.stats:
            stats = np.load(args.stats)
            mean, std = stats["mean"], stats["std"]
        else:
            mean, std = channel_stats(arrays)
        arrays = [apply_zscore(a, mean, std) for a in arrays]
    latents = [encode(ae_model, Tensor(a)).data for a in arrays]
    labels = [w.label for w in all_windows]
    clf_config = ClassifierConfig(
        timesteps=arrays[0].shape[0], features=cfg.latent_dims,
        classes=max(2, max(labels) + 1), **cfg.classifier_arch)
    model, losses = train_classifier(latents, labels, clf_config,
                                     cfg.classifier, seed=cfg.seed)
    ckpt = out / "classifier.eawt"
    save_classifier(model, ckpt)
    losses_path = out / "clf_losses.json"
    losses_path.write_text(json.dumps({"epoch_losses": losses}), encoding="utf-8")
    write_manifest(out, [ckpt, losses_path], cfg, overrides)
    print(json.dumps({"checkpoint": str(ckpt), "epochs_run": len(losses),
                      "final_loss": losses[-1]}, indent=2))
    return 0


def cmd_loso(cfg, overrides):
    out = _out_dir(cfg)
    pipeline = _pipeline_config(cfg)
    artifacts = []
    if cfg.dataset == "seed":
        summaries = []
        for session in cfg.seed_sessions:
            windows = load_windows(cfg, session=session)
            summary = run_loso(windows, pipeline, seed=cfg.seed,
                               task=f"{cfg.task}/session{session}",
                               out_dir=out / f"session{session}",
                               parallel=cfg.parallel_folds)
            path = out / f"summary_session{session}.json"
            write_summary_json(summary, path)
            artifacts.append(path)
            summaries.append(summary)
        combined = seed_session_average(summaries)
        report = {
            "task": combined.task,
            "sessions": combined.sessions,
            "per_subject_accuracy": combined.per_subject_accuracy,
            "mean_accuracy": combined.mean_accuracy,
            "std_accuracy": combined.std_accuracy,
        }
        combined_path = out / "summary.json"
        combined_path.write_text(json.dumps(report, indent=2), encoding="utf-8")
        artifacts.append(combined_path)
        result = report
    else:
        windows = load_windows(cfg)
        log.info("windows by subject: %s", window_summary(windows))
        summary = run_loso(windows, pipeline, seed=cfg.seed, task=cfg.task,
                           out_dir=out / "folds", parallel=cfg.parallel_folds)
        summary_path = out / "summary.json"
        write_summary_json(summary, summary_path,
                           extra_meta={"overrides": overrides or {}})
        csv_path = out / "folds.csv"
        write_fold_csv(summary, csv_path)
        artifacts += [summary_path, csv_path]
        artifacts += sorted((out / "folds").glob("*.eawt"))
        result = {
            "task": summary.task,
            "mean_accuracy": summary.mean_accuracy,
            "std_accuracy": summary.std_accuracy,
            "folds": len(summary.fold_results),
        }
    write_manifest(out, artifacts, cfg, overrides)
    print(json.dumps(result, indent=2))
    return 0


def cmd_dump_attention(cfg, overrides, args):
    out = _out_dir(cfg)
    clf = load_classifier(args.classifier)
    rec = read_container(args.input)
    samples = rec.samples
    if args.autoencoder:
        ae = load_autoencoder(args.autoencoder)
        if args.stats:
            stats = np.load(args.stats)
            samples = apply_zscore(samples, stats["mean"], stats["std"])
        samples = encode(ae, Tensor(samples)).data
    duration = samples.shape[0] / rec.sample_rate_hz
    base = out / (Path(args.input).stem + ".trace")
    trace = analysis.dump_attention(
        clf, samples, base, sample_id=Path(args.input).stem,
        subject_id=rec.subject_id, window_duration_s=duration)
    artifacts = [f"{base}.pre.eegc", f"{base}.post.eegc", f"{base}.json"]
    write_manifest(out, artifacts, cfg, overrides)
    print(json.dumps({"predicted_label": trace.predicted_label,
                      "pre_shape": list(trace.pre_attention.shape),
                      "post_shape": list(trace.post_attention.shape),
                      "seconds_per_step": trace.seconds_per_step}, indent=2))
    return 0


def cmd_latent_analysis(cfg, overrides, args):
    out = _out_dir(cfg)
    windows = load_windows(cfg)
    ae = load_autoencoder(args.checkpoint)

    arrays = {sid: [w.samples for w in ws] for sid, ws in windows.items()}
    if cfg.normalize:
        mean, std = channel_stats([a for arrs in arrays.values() for a in arrs])
        arrays = {sid: [apply_zscore(a, mean, std) for a in arrs]
                  for sid, arrs in arrays.items()}

    ae_latents = {sid: [encode(ae, Tensor(a)).data for a in arrs]
                  for sid, arrs in arrays.items()}
    pooled_raw = [a for arrs in arrays.values() for a in arrs]
    pca_model = pca_fit(np.concatenate(pooled_raw, axis=0), cfg.latent_dims)
    pca_latents = {sid: [pca_transform(a, pca_model) for a in arrs]
                   for sid, arrs in arrays.items()}

    artifacts = []
    dispersion = {}
    for name, latents in (("autoencoder", ae_latents), ("pca", pca_latents)):
        points, tags = analysis.project_latents_2d(latents)
        path = out / f"projection_{name}.csv"
        analysis.projection_to_csv(points, tags, path)
        dispersion[name] = analysis.dispersion_diagnostic(points, tags)
        artifacts.append(path)

    # latent vs raw-channel cosine similarity, per subject over pooled windows
    sim_path = out / "latent_channel_similarity.csv"
    with open(sim_path, "w", encoding="utf-8") as fh:
        fh.write("subject,latent,rank,channel,cosine\n")
        for sid in sorted(arrays):
            raw = np.concatenate(arrays[sid], axis=0)
            lat = np.concatenate(ae_latents[sid], axis=0)
            scores, rankings, _ = analysis.latent_channel_similarity(lat, raw)
            for l, ranking in enumerate(rankings):
                for rank, c in enumerate(ranking):
                    fh.write(f"{sid},{l},{rank},{c},{scores[l, c]:.6f}\n")
    artifacts.append(sim_path)

    disp_path = out / "dispersion.json"
    disp_path.write_text(json.dumps(dispersion, indent=2), encoding="utf-8")
    artifacts.append(disp_path)
    write_manifest(out, artifacts, cfg, overrides)
    print(json.dumps({"dispersion": dispersion,
                      "artifacts": [str(a) for a in artifacts]}, indent=2))
    return 0


# -- argument parsing --------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="eegattn",
        description="Two-stage EEG pipeline: denoising recurrent autoencoder "
                    "with channel attention + CNN-attention classifier.")
    parser.add_argument("--version", action="version", version="eegattn 0.1.0")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text, extra=None):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config value (dotted path, JSON value)")
        for flag, kwargs in (extra or {}).items():
            p.add_argument(flag, **kwargs)
        return p

    add("make-synthetic", "generate the synthetic container corpus")
    add("train-ae", "train the denoising autoencoder on all subjects")
    add("encode", "encode one container into latent space", {
        "--checkpoint": dict(required=True, help="autoencoder checkpoint"),
        "--input": dict(required=True, help="input container"),
        "--output": dict(required=True, help="latent container to write"),
        "--stats": dict(default=None, help="norm_stats.npz to apply"),
    })
    add("train-clf", "train the classifier on encoded latents", {
        "--checkpoint": dict(required=True, help="autoencoder checkpoint"),
        "--stats": dict(default=None, help="norm_stats.npz to apply"),
    })
    add("loso", "run the full leave-one-subject-out evaluation")
    add("dump-attention", "export pre/post attention activations", {
        "--classifier": dict(required=True, help="classifier checkpoint"),
        "--input": dict(required=True, help="container holding one window"),
        "--autoencoder": dict(default=None,
                              help="encode the input with this checkpoint first"),
        "--stats": dict(default=None, help="norm_stats.npz to apply"),
    })
    add("latent-analysis", "cosine similarity + 2-D latent projection", {
        "--checkpoint": dict(required=True, help="autoencoder checkpoint"),
    })
    return parser


def main(argv=None):
    logging.basicConfig(
        level=os.environ.get("EEGATTN_LOG", "warning").upper(),
        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)

    overrides = {}
    for item in args.set:
        if "=" not in item:
            print(json.dumps({"error": "invalid-override",
                              "message": f"expected KEY=VALUE, got {item!r}"}),
                  file=sys.stderr)
            return 2
        key, _, value = item.partition("=")
        overrides[key.strip()] = parse_override_value(value)

    try:
        cfg = load_config(args.config, overrides)
        if args.command == "make-synthetic":
            return cmd_make_synthetic(cfg, overrides)
        if args.command == "train-ae":
            return cmd_train_ae(cfg, overrides)
        if args.command == "encode":
            return cmd_encode(cfg, overrides, args)
        if args.command == "train-clf":
            return cmd_train_clf(cfg, overrides, args)
        if args.command == "loso":
            return cmd_loso(cfg, overrides)
        if args.command == "dump-attention":
            return cmd_dump_attention(cfg, overrides, args)
        if args.command == "latent-analysis":
            return cmd_latent_analysis(cfg, overrides, args)
        raise ConfigError(f"unknown command {args.command!r}")
    except ValidationError as exc:
        print(json.dumps({"error": "invalid-config", "message": str(exc),
                          "fields": [{"field": f, "problem": m}
                                     for f, m in exc.errors]}, indent=2),
              file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(json.dumps({"error": "invalid-config", "message": str(exc)}),
              file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(json.dumps({"error": "missing-data", "message": str(exc)}),
              file=sys.stderr)
        return 3
    except DataFormatError as exc:
        print(json.dumps({"error": "bad-data-format",
                          "message": str(exc),
                          "kind": type(exc).__name__}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
