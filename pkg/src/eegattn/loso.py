"""Leave-one-subject-out evaluation: fold construction, per-fold training of
the autoencoder + classifier pipeline, and mean ± std aggregation.

Guarantees: nothing derived from the held-out subject (samples, statistics,
rng draws) influences any trained parameter in that subject's fold. Fold
seeds derive from (run seed, fold index) only, and normalization statistics
come from the training subjects alone.
"""

import csv
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .autodiff import Tensor
from .classifier import (
    ClassifierConfig, ClassifierTrainConfig, predict, save_classifier,
    train_classifier,
)
from .dataio import apply_zscore, channel_stats
from .encoder import (
    AutoencoderConfig, AutoencoderTrainConfig, encode, save_autoencoder,
    train_autoencoder,
)
from .errors import ConfigError


@dataclass
class FoldResult:
    test_subject: str
    predictions: list
    truths: list
    accuracy: float
    ae_losses: list = field(default_factory=list)
    clf_losses: list = field(default_factory=list)
    skipped_reason: str = None

    @property
    def skipped(self):
        return self.skipped_reason is not None


@dataclass
class RunSummary:
    task: str
    seed: int
    fold_results: list
    mean_accuracy: float
    std_accuracy: float  # population std over folds
    config: dict

    @property
    def fold_accuracies(self):
        return [f.accuracy for f in self.fold_results if not f.skipped]


@dataclass
class PipelineConfig:
    """Everything one LOSO fold needs to train the two-stage pipeline."""
    latent_dims: int = 8
    normalize: bool = True
    autoencoder: AutoencoderTrainConfig = field(
        default_factory=AutoencoderTrainConfig)
    classifier_arch: dict = field(default_factory=dict)  # ClassifierConfig overrides
    classifier_train: ClassifierTrainConfig = field(
        default_factory=ClassifierTrainConfig)

    def snapshot(self):
        return {
            "latent_dims": self.latent_dims,
            "normalize": self.normalize,
            "autoencoder": vars(self.autoencoder).copy(),
            "classifier_arch": dict(self.classifier_arch),
            "classifier_train": vars(self.classifier_train).copy(),
        }


def loso_split(subject_ids):
    """One fold per subject; each subject is held out exactly once."""
    subjects = sorted(subject_ids)
    if len(subjects) < 2:
        raise ConfigError(f"leave-one-subject-out needs >= 2 subjects, "
                          f"got {len(subjects)}")
    return [([s for s in subjects if s != test], test) for test in subjects]


def oracle_stub(train_windows, test_windows, rng):
    """Predicts the true label; the harness should report exactly 100%."""
    return lambda window: window.label


def random_stub(classes=2):
    def factory(train_windows, test_windows, rng):
        return lambda window: int(rng.integers(classes))
    return factory


def constant_stub(label):
    def factory(train_windows, test_windows, rng):
        return lambda window: label
    return factory


def _mean_std(values):
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.mean()), float(arr.std())  # population std


def run_loso(windows_by_subject, config, seed=0, task="", predictor_stub=None,
             out_dir=None, parallel=False, max_workers=None):
    """Run every fold and aggregate accuracies as mean ± population std.

    ``predictor_stub`` replaces the whole trained pipeline for harness
    tests: a factory (train_windows, test_windows, rng) -> predict(window).
    When ``out_dir`` is given, each fold's trained checkpoints are written
    as ae_fold_<subject>.eawt / clf_fold_<subject>.eawt.
    """
    folds = loso_split(windows_by_subject.keys())
    seed_children = np.random.SeedSequence(seed).spawn(len(folds))
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)

    def run_fold(i):
        train_ids, test_id = folds[i]
        return _run_single_fold(
            windows_by_subject, train_ids, test_id, config,
            seed_children[i], predictor_stub, out_dir)

    if parallel:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(run_fold, range(len(folds))))
    else:
        results = [run_fold(i) for i in range(len(folds))]

    accuracies = [r.accuracy for r in results if not r.skipped]
    if accuracies:
        mean, std = _mean_std(accuracies)
    else:
        mean, std = float("nan"), float("nan")
    return RunSummary(
        task=task, seed=seed, fold_results=results,
        mean_accuracy=mean, std_accuracy=std, config=config.snapshot())


def _run_single_fold(windows_by_subject, train_ids, test_id, config,
                     seed_seq, predictor_stub, out_dir):
    train_windows = [w for sid in train_ids for w in windows_by_subject[sid]]
    test_windows = list(windows_by_subject[test_id])
    truths = [w.label for w in test_windows]
    rng = np.random.default_rng(seed_seq)

    if predictor_stub is not None:
        predict_fn = predictor_stub(train_windows, test_windows, rng)
        preds = [int(predict_fn(w)) for w in test_windows]
        acc = float(np.mean([p == t for p, t in zip(preds, truths)]))
        return FoldResult(test_id, preds, truths, acc)

    train_labels = [w.label for w in train_windows]
    if len(set(train_labels)) < 2:
        return FoldResult(test_id, [], truths, float("nan"),
                          skipped_reason=f"single class {set(train_labels)} "
                                         f"in training data")

    # normalization statistics from training subjects only
    if config.normalize:
        mean, std = channel_stats([w.samples for w in train_windows])
        def norm(x):
            return apply_zscore(x, mean, std)
    else:
        def norm(x):
            return np.asarray(x, dtype=np.float32)

    return _train_and_eval(train_windows, test_windows, truths, test_id,
                           config, seed_seq, norm, out_dir)


def _train_and_eval(train_windows, test_windows, truths, test_id, config,
                    seed_seq, norm, out_dir):
    train_arrays = [norm(w.samples) for w in train_windows]
    channels = train_arrays[0].shape[1]
    ae_seed, clf_seed = [int(s.generate_state(1)[0])
                         for s in seed_seq.spawn(2)]

    ae_config = AutoencoderConfig(channels=channels,
                                  latent_dims=config.latent_dims)
    ae_model, ae_losses = train_autoencoder(
        train_arrays, ae_config, config.autoencoder, seed=ae_seed)

    latents = [encode(ae_model, Tensor(x)).data for x in train_arrays]
    n_classes = max(max(w.label for w in train_windows), max(truths)) + 1
    arch = dict(config.classifier_arch)
    clf_config = ClassifierConfig(
        timesteps=train_arrays[0].shape[0], features=config.latent_dims,
        classes=max(2, n_classes), **arch)
    labels = [w.label for w in train_windows]
    clf_model, clf_losses = train_classifier(
        latents, labels, clf_config, config.classifier_train, seed=clf_seed)

    if out_dir is not None:
        save_autoencoder(ae_model, out_dir / f"ae_fold_{test_id}.eawt")
        save_classifier(clf_model, out_dir / f"clf_fold_{test_id}.eawt")

    preds = []
    for w in test_windows:
        latent = encode(ae_model, Tensor(norm(w.samples))).data
        preds.append(predict(clf_model, latent))
    acc = float(np.mean([p == t for p, t in zip(preds, truths)]))
    return FoldResult(test_id, preds, truths, acc,
                      ae_losses=ae_losses, clf_losses=clf_losses)


# -- session averaging ---------------------------------------------------------------


@dataclass
class CombinedSummary:
    task: str
    sessions: int
    per_subject_accuracy: dict
    mean_accuracy: float
    std_accuracy: float


def seed_session_average(summaries):
    """Average each subject's accuracy across sessions, then mean ± std."""
    if not summaries:
        raise ConfigError("no session summaries to combine")
    per_session = []
    subject_sets = []
    for s in summaries:
        accs = {f.test_subject: f.accuracy for f in s.fold_results if not f.skipped}
        per_session.append(accs)
        subject_sets.append(frozenset(accs))
    if len(set(subject_sets)) != 1:
        raise ConfigError(f"session summaries cover different subject sets: "
                          f"{[sorted(s) for s in subject_sets]}")
    subjects = sorted(subject_sets[0])
    combined = {
        sid: float(np.mean([accs[sid] for accs in per_session]))
        for sid in subjects
    }
    mean, std = _mean_std([combined[sid] for sid in subjects])
    return CombinedSummary(
        task=summaries[0].task, sessions=len(summaries),
        per_subject_accuracy=combined, mean_accuracy=mean, std_accuracy=std)


# -- reports -------------------------------------------------------------------------


def summary_to_dict(summary):
    return {
        "task": summary.task,
        "seed": summary.seed,
        "mean_accuracy": summary.mean_accuracy,
        "std_accuracy": summary.std_accuracy,
        "config": summary.config,
        "folds": [
            {
                "test_subject": f.test_subject,
                "accuracy": f.accuracy,
                "n_windows": len(f.truths),
                "skipped_reason": f.skipped_reason,
                "predictions": list(map(int, f.predictions)),
                "truths": list(map(int, f.truths)),
                "ae_losses": f.ae_losses,
                "clf_losses": f.clf_losses,
            }
            for f in summary.fold_results
        ],
    }


def write_summary_json(summary, path, extra_meta=None):
    doc = summary_to_dict(summary)
    meta = {"written_unix_time": time.time()}
    if extra_meta:
        meta.update(extra_meta)
    doc["metadata"] = meta  # timestamps live only in this block
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)


def write_fold_csv(summary, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["test_subject", "accuracy", "n_windows", "skipped_reason"])
        for f in summary.fold_results:
            writer.writerow([f.test_subject, f.accuracy, len(f.truths),
                             f.skipped_reason or ""])
