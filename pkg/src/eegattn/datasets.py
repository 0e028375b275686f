"""Directory-level dataset loaders producing labeled windows grouped by subject.

The on-disk unit is the interchange container (one trial per file for DEAP
and SEED, one annotated recording per file for CHB-MIT, one multi-window
recording per subject for the synthetic corpus). CHB-MIT recordings may also
arrive as raw EDF with a ``<name>.annotations.json`` sidecar listing seizure
intervals.
"""

import json
import logging
from pathlib import Path

import numpy as np

from .dataio import (
    Annotation, CONTAINER_SUFFIX, LabeledWindow, label_deap, read_container,
    read_edf, seed_central_crop, segment_chb,
)
from .errors import ConfigError, ValidationError
from .synthetic import load_synthetic

log = logging.getLogger(__name__)

SEED_LABELS = {"negative": 0, "positive": 1}


def load_windows(cfg, session=None):
    """Dispatch to the dataset-specific loader named by ``cfg.dataset``."""
    data_dir = Path(cfg.data_dir)
    if not data_dir.exists():
        raise FileNotFoundError(f"data directory {data_dir} does not exist")
    if cfg.dataset == "synthetic":
        return load_synthetic(data_dir, task=cfg.task)
    if cfg.dataset == "deap":
        return load_deap_dir(data_dir, cfg.task)
    if cfg.dataset == "seed":
        return load_seed_dir(data_dir, session=session)
    if cfg.dataset == "chbmit":
        return load_chb_dir(data_dir, cfg.task, channels=cfg.chbmit_channels,
                            preictal_horizon_s=cfg.chbmit_preictal_horizon_s,
                            interictal_gap_s=cfg.chbmit_interictal_gap_s)
    raise ConfigError(f"unknown dataset {cfg.dataset!r}")


def load_deap_dir(data_dir, task):
    """One container per trial; the whole trial is one labeled window."""
    if task not in ("valence", "arousal"):
        raise ConfigError(f"DEAP task must be valence or arousal, got {task!r}")
    windows = {}
    for path in sorted(Path(data_dir).glob(f"*{CONTAINER_SUFFIX}")):
        rec = read_container(path)
        ratings = rec.trial_meta.get("ratings")
        if not ratings or task not in ratings:
            raise ValidationError(
                f"{path}: trial metadata missing the {task!r} rating")
        label = label_deap(float(ratings[task]))
        windows.setdefault(rec.subject_id, []).append(LabeledWindow(
            subject_id=rec.subject_id,
            samples=rec.samples,
            label=label,
            task=task,
            source_start=0,
            source_end=rec.n_samples,
        ))
    if not windows:
        raise FileNotFoundError(f"no {CONTAINER_SUFFIX} trials under {data_dir}")
    return windows


def load_seed_dir(data_dir, session=None):
    """One container per trial; neutral trials dropped, central 150 s kept."""
    windows = {}
    for path in sorted(Path(data_dir).glob(f"*{CONTAINER_SUFFIX}")):
        rec = read_container(path)
        label_name = str(rec.trial_meta.get("label", "")).lower()
        if label_name == "neutral":
            continue
        if label_name not in SEED_LABELS:
            raise ValidationError(
                f"{path}: unknown label {label_name!r} in trial metadata")
        if session is not None and int(rec.trial_meta.get("session", 0)) != session:
            continue
        cropped = seed_central_crop(rec)
        windows.setdefault(rec.subject_id, []).append(LabeledWindow(
            subject_id=rec.subject_id,
            samples=cropped.samples,
            label=SEED_LABELS[label_name],
            task="pos-neg",
            source_start=(rec.n_samples - cropped.n_samples) // 2,
            source_end=(rec.n_samples - cropped.n_samples) // 2
                       + cropped.n_samples,
        ))
    if not windows:
        raise FileNotFoundError(
            f"no matching {CONTAINER_SUFFIX} trials under {data_dir}"
            + (f" for session {session}" if session is not None else ""))
    return windows


def _read_chb_recording(path):
    path = Path(path)
    if path.suffix == CONTAINER_SUFFIX:
        return read_container(path)
    rec = read_edf(path)
    rec.subject_id = path.stem.split("_")[0]
    sidecar = path.with_name(path.name + ".annotations.json")
    if sidecar.exists():
        doc = json.loads(sidecar.read_text(encoding="utf-8"))
        rec.annotations = [
            Annotation(a["label"], float(a["start_s"]), float(a["end_s"]))
            for a in doc
        ]
        rec.validate()
    return rec


def load_chb_dir(data_dir, task, channels=None, preictal_horizon_s=1800.0,
                 interictal_gap_s=3600.0):
    """Segment every annotated recording into 20 s labeled windows."""
    windows = {}
    paths = sorted(Path(data_dir).glob(f"*{CONTAINER_SUFFIX}"))
    paths += sorted(p for p in Path(data_dir).glob("*.edf"))
    if not paths:
        raise FileNotFoundError(f"no recordings under {data_dir}")
    for path in paths:
        rec = _read_chb_recording(path)
        segments = segment_chb(
            rec, task, channels=channels,
            preictal_horizon_s=preictal_horizon_s,
            interictal_gap_s=interictal_gap_s)
        if segments:
            windows.setdefault(rec.subject_id, []).extend(segments)
        else:
            log.warning("%s yielded no %s windows", path, task)
    if not windows:
        raise ConfigError(f"no {task} windows found under {data_dir}")
    return windows


def window_summary(windows_by_subject):
    out = {}
    for sid, ws in sorted(windows_by_subject.items()):
        values, counts = np.unique([w.label for w in ws], return_counts=True)
        out[sid] = {
            "windows": len(ws),
            "labels": {int(v): int(c) for v, c in zip(values, counts)},
        }
    return out
