"""Post-hoc interpretation tools.

* attention-activation export around the classifier's attention layer, for
  localising which time segments drive a decision;
* cosine similarity between latent dimensions and raw channels;
* 2-D projection of latent sequences for subject-invariance inspection,
  with a dispersion diagnostic (inter-subject centroid distance over
  intra-subject spread).
"""

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .classifier import classifier_forward
from .dataio import EEGRecording, read_container, write_container
from .encoder import pca_fit, pca_transform
from .errors import ConfigError, ShapeError


@dataclass
class ActivationTrace:
    sample_id: str
    subject_id: str
    pre_attention: np.ndarray   # (T', F)
    post_attention: np.ndarray  # (T', F/2)
    predicted_label: int
    seconds_per_step: float


def dump_attention(model, latent, out_base, sample_id="sample",
                   subject_id="", window_duration_s=None):
    """Run the classifier with capture and write the trace to disk.

    Writes ``<out_base>.pre.eegc`` and ``<out_base>.post.eegc`` (activation
    matrices in the container format, one "channel" per filter) plus a
    ``<out_base>.json`` sidecar. Returns the ActivationTrace.
    """
    latent = np.asarray(latent, dtype=np.float32)
    logits, capture = classifier_forward(latent, model, training=False,
                                         capture=True)
    t_out = capture.pre_attention.shape[0]
    if window_duration_s is None:
        window_duration_s = float(model.config.timesteps)  # 1 step = 1 "second"
    seconds_per_step = window_duration_s / t_out
    trace = ActivationTrace(
        sample_id=sample_id,
        subject_id=subject_id,
        pre_attention=capture.pre_attention,
        post_attention=capture.post_attention,
        predicted_label=int(np.argmax(logits.data)),
        seconds_per_step=seconds_per_step,
    )

    out_base = Path(out_base)
    out_base.parent.mkdir(parents=True, exist_ok=True)
    for kind, mat in (("pre", trace.pre_attention), ("post", trace.post_attention)):
        rec = EEGRecording(
            subject_id=subject_id,
            sample_rate_hz=1.0 / seconds_per_step,
            channel_names=[f"f{i:03d}" for i in range(mat.shape[1])],
            samples=np.ascontiguousarray(mat),
            trial_meta={"kind": f"{kind}_attention", "sample_id": sample_id},
        )
        write_container(rec, f"{out_base}.{kind}.eegc")
    with open(f"{out_base}.json", "w", encoding="utf-8") as fh:
        json.dump({
            "sample_id": sample_id,
            "subject_id": subject_id,
            "predicted_label": trace.predicted_label,
            "seconds_per_step": seconds_per_step,
            "time_compression": capture.time_compression,
            "pre_shape": list(trace.pre_attention.shape),
            "post_shape": list(trace.post_attention.shape),
        }, fh, indent=2)
    return trace


def load_attention_trace(out_base):
    out_base = Path(out_base)
    with open(f"{out_base}.json", encoding="utf-8") as fh:
        meta = json.load(fh)
    pre = read_container(f"{out_base}.pre.eegc")
    post = read_container(f"{out_base}.post.eegc")
    return ActivationTrace(
        sample_id=meta["sample_id"],
        subject_id=meta["subject_id"],
        pre_attention=pre.samples,
        post_attention=post.samples,
        predicted_label=meta["predicted_label"],
        seconds_per_step=meta["seconds_per_step"],
    )


def activation_mass_fraction(activations, span_start, span_end, compression):
    """Fraction of total |activation| mass inside an input-sample span.

    ``span_start``/``span_end`` are in input samples; rows of ``activations``
    cover ``compression`` input samples each.
    """
    mass = np.abs(activations).sum(axis=1)
    total = mass.sum()
    if total == 0:
        return 0.0
    lo = int(span_start // compression)
    hi = int(np.ceil(span_end / compression))
    return float(mass[lo:hi].sum() / total)


# -- latent vs channel cosine similarity ----------------------------------------------


def latent_channel_similarity(latent, raw):
    """Cosine similarity between every latent column and every raw channel.

    Returns (scores, rankings, flagged): scores is (L, C); rankings[l] lists
    channel indices by descending score; flagged collects (latent, channel)
    pairs where a zero-norm column forced the score to 0.
    """
    latent = np.asarray(latent, dtype=np.float64)
    raw = np.asarray(raw, dtype=np.float64)
    if latent.shape[0] != raw.shape[0]:
        raise ShapeError(f"time lengths disagree: {latent.shape} vs {raw.shape}")
    L = latent.shape[1]
    C = raw.shape[1]
    lat_norms = np.linalg.norm(latent, axis=0)
    raw_norms = np.linalg.norm(raw, axis=0)
    scores = np.zeros((L, C))
    flagged = []
    for l in range(L):
        for c in range(C):
            denom = lat_norms[l] * raw_norms[c]
            if denom == 0.0:
                flagged.append((l, c))
                continue
            scores[l, c] = float(latent[:, l] @ raw[:, c] / denom)
    rankings = [list(np.argsort(-scores[l])) for l in range(L)]
    return scores, rankings, flagged


def similarity_to_csv(scores, rankings, path, channel_names=None):
    L, C = scores.shape
    if channel_names is None:
        channel_names = [f"ch{c:02d}" for c in range(C)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["latent", "rank", "channel", "cosine"])
        for l in range(L):
            for rank, c in enumerate(rankings[l]):
                writer.writerow([l, rank, channel_names[c],
                                 f"{scores[l, c]:.6f}"])


# -- 2-D latent projection -------------------------------------------------------------


def project_latents_2d(latents_by_subject):
    """Project pooled latent timesteps to 2-D for subject comparison.

    Fits PCA on all subjects' latent rows pooled together, projects every
    timestep, and tags each 2-D point with its subject. Returns
    (points (N, 2), subject_tags list of length N).
    """
    total_windows = sum(len(v) for v in latents_by_subject.values())
    if total_windows < 2:
        raise ConfigError("need at least 2 latent windows to project")
    rows = []
    tags = []
    for subject in sorted(latents_by_subject):
        for latent in latents_by_subject[subject]:
            latent = np.asarray(latent, dtype=np.float64)
            rows.append(latent)
            tags.extend([subject] * latent.shape[0])
    pooled = np.concatenate(rows, axis=0)
    model = pca_fit(pooled, latent_dims=2)
    points = pca_transform(pooled, model)
    return points, tags


def dispersion_diagnostic(points, tags):
    """Mean inter-subject centroid distance over mean intra-subject spread.

    Lower values mean the subjects' clouds overlap more (more
    subject-invariant latents).
    """
    points = np.asarray(points, dtype=np.float64)
    subjects = sorted(set(tags))
    tags = np.asarray(tags)
    centroids = {s: points[tags == s].mean(axis=0) for s in subjects}
    spreads = [np.linalg.norm(points[tags == s] - centroids[s], axis=1).mean()
               for s in subjects]
    dists = [np.linalg.norm(centroids[a] - centroids[b])
             for i, a in enumerate(subjects) for b in subjects[i + 1:]]
    if not dists:
        raise ConfigError("dispersion diagnostic needs >= 2 subjects")
    return float(np.mean(dists) / np.mean(spreads))


def projection_to_csv(points, tags, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "subject"])
        for (x, y), subject in zip(points, tags):
            writer.writerow([f"{x:.6f}", f"{y:.6f}", subject])
