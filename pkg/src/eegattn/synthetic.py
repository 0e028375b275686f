"""Synthetic multichannel corpus with known ground truth.

Each subject gets a random mixing of a shared pool of band-limited latent
sources, so the recordings are low-rank by construction. The class signal is
an oscillation injected into the first latent source:

* ``spectral`` mode — the oscillation (class-dependent frequency) spans the
  whole window, giving a linearly separable spectral signature;
* ``burst`` mode — the oscillation occupies a contiguous span covering
  ``burst_fraction`` of the window at a random position, recorded as ground
  truth for the attention time-localization checks.

One container per subject; windows are concatenated along time and marked by
annotations ("class-0"/"class-1", plus "burst" spans). Ground truth is also
written to ``ground_truth.json`` next to the containers.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataio import (
    Annotation, CONTAINER_SUFFIX, EEGRecording, LabeledWindow, read_container,
    write_container,
)
from .errors import ConfigError

GROUND_TRUTH_FILE = "ground_truth.json"


@dataclass
class SyntheticConfig:
    subjects: int = 4
    channels: int = 32
    sources: int = 8
    window_len: int = 512
    windows_per_subject: int = 1
    mode: str = "spectral"  # or "burst"
    sample_rate_hz: float = 128.0
    class_freqs: tuple = (8.0, 24.0)
    source_band: tuple = (1.0, 6.0)
    burst_fraction: float = 0.1
    signal_gain: float = 3.0
    noise_std: float = 0.05

    def validate(self):
        if self.subjects < 2:
            raise ConfigError("need at least 2 synthetic subjects")
        if self.mode not in ("spectral", "burst"):
            raise ConfigError(f"unknown synthetic mode {self.mode!r}")
        if self.sources > self.channels:
            raise ConfigError("more latent sources than channels")
        if not 0.0 < self.burst_fraction <= 1.0:
            raise ConfigError("burst_fraction must be in (0, 1]")
        if len(self.class_freqs) != 2:
            raise ConfigError("class_freqs must give one frequency per class")


def _balanced_labels(n, rng):
    labels = np.zeros(n, dtype=int)
    labels[n // 2:] = 1
    rng.shuffle(labels)
    return labels


def make_synthetic(config, seed, out_dir):
    """Write one container per subject plus the ground-truth sidecar.

    Returns (paths, ground_truth) where ground_truth maps subject id to a
    list of per-window records: label, window sample span, class frequency,
    and (burst mode) the burst sample span.
    """
    config.validate()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    T = config.window_len
    fs = config.sample_rate_hz
    t = np.arange(T) / fs
    # shared latent structure: three fixed in-band frequencies per source
    source_freqs = rng.uniform(*config.source_band, size=(config.sources, 3))

    paths = []
    truth = {}
    for s in range(config.subjects):
        subject = f"synth{s:02d}"
        mixing = rng.normal(size=(config.channels, config.sources))
        mixing /= np.sqrt(config.sources)
        # class-carrier projection: per-subject magnitudes bounded away from
        # zero and sign-coherent, so every channel carries the signature and
        # channel-averaging features transfer across subjects
        carrier = rng.uniform(0.5, 1.5, size=config.channels)
        labels = _balanced_labels(config.windows_per_subject, rng)

        chunks = []
        annotations = []
        records = []
        for w, label in enumerate(labels):
            sources = np.zeros((T, config.sources))
            for l in range(config.sources):
                for f in source_freqs[l]:
                    sources[:, l] += np.sin(
                        2 * np.pi * f * t + rng.uniform(0, 2 * np.pi))
            sources /= np.sqrt(3.0)  # unit-ish power per source

            freq = config.class_freqs[label]
            osc = config.signal_gain * np.sin(
                2 * np.pi * freq * t + rng.uniform(0, 2 * np.pi))
            record = {
                "window_index": w,
                "label": int(label),
                "class_freq_hz": float(freq),
                "window_span": [w * T, (w + 1) * T],
            }
            if config.mode == "burst":
                burst_len = max(1, int(round(config.burst_fraction * T)))
                start = int(rng.integers(0, T - burst_len + 1))
                mask = np.zeros(T)
                mask[start:start + burst_len] = 1.0
                osc = osc * mask
                record["burst_span"] = [w * T + start, w * T + start + burst_len]
                annotations.append(Annotation(
                    "burst", (w * T + start) / fs,
                    (w * T + start + burst_len) / fs))

            x = sources @ mixing.T + np.outer(osc, carrier)
            x += config.noise_std * rng.standard_normal(x.shape)
            chunks.append(x.astype(np.float32))
            annotations.append(Annotation(
                f"class-{label}", w * T / fs, (w + 1) * T / fs))
            records.append(record)

        rec = EEGRecording(
            subject_id=subject,
            sample_rate_hz=fs,
            channel_names=[f"ch{c:02d}" for c in range(config.channels)],
            samples=np.concatenate(chunks, axis=0),
            annotations=annotations,
            trial_meta={
                "synthetic_mode": config.mode,
                "window_len": T,
                "windows": len(labels),
            },
        )
        path = out_dir / f"{subject}{CONTAINER_SUFFIX}"
        write_container(rec, path)
        paths.append(path)
        truth[subject] = records

    with open(out_dir / GROUND_TRUTH_FILE, "w", encoding="utf-8") as fh:
        json.dump({"mode": config.mode, "window_len": T,
                   "sample_rate_hz": fs, "subjects": truth}, fh, indent=2)
    return paths, truth


def load_synthetic(data_dir, task="synthetic"):
    """Read a synthetic corpus back as windows grouped by subject."""
    data_dir = Path(data_dir)
    windows_by_subject = {}
    for path in sorted(data_dir.glob(f"*{CONTAINER_SUFFIX}")):
        rec = read_container(path)
        T = int(rec.trial_meta["window_len"])
        windows = []
        for ann in rec.annotations:
            if not ann.label.startswith("class-"):
                continue
            label = int(ann.label.split("-", 1)[1])
            start = int(round(ann.start_s * rec.sample_rate_hz))
            windows.append(LabeledWindow(
                subject_id=rec.subject_id,
                samples=np.ascontiguousarray(rec.samples[start:start + T]),
                label=label,
                task=task,
                source_start=start,
                source_end=start + T,
            ))
        windows_by_subject[rec.subject_id] = windows
    if not windows_by_subject:
        raise ConfigError(f"no {CONTAINER_SUFFIX} containers under {data_dir}")
    return windows_by_subject


def load_ground_truth(data_dir):
    with open(Path(data_dir) / GROUND_TRUTH_FILE, encoding="utf-8") as fh:
        return json.load(fh)
