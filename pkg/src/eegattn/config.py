"""Run configuration: JSON file + flag overrides, strictly validated.

Unknown keys are rejected with their dotted path; architecture overrides are
checked against the model's shape constraints (named in the diagnostic) at
load time, before any training starts.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

from .classifier import ClassifierConfig, ClassifierTrainConfig
from .dataio import CHB_TASKS
from .encoder import AutoencoderTrainConfig
from .errors import ConfigError, ValidationError
from .synthetic import SyntheticConfig

DATASETS = ("deap", "seed", "chbmit", "synthetic")

TASKS_BY_DATASET = {
    "deap": ("valence", "arousal"),
    "seed": ("pos-neg",),
    "chbmit": tuple(sorted(CHB_TASKS)),
    "synthetic": ("spectral", "burst"),
}

DEFAULT_LATENT_DIMS = {"deap": 8, "chbmit": 8, "synthetic": 8, "seed": 16}

# fixed window length per dataset (samples): full DEAP trial, SEED central
# crop at 200 Hz, CHB-MIT 20 s at 256 Hz
DATASET_WINDOW_LEN = {"deap": 8064, "seed": 30000, "chbmit": 5120}


@dataclass
class RunConfig:
    dataset: str
    task: str
    data_dir: str = ""
    out_dir: str = "run"
    seed: int = 0
    latent_dims: int = None  # defaulted per dataset
    normalize: bool = True
    parallel_folds: bool = False
    autoencoder: AutoencoderTrainConfig = field(
        default_factory=AutoencoderTrainConfig)
    classifier: ClassifierTrainConfig = field(
        default_factory=ClassifierTrainConfig)
    classifier_arch: dict = field(default_factory=dict)
    synthetic: SyntheticConfig = field(default_factory=SyntheticConfig)
    chbmit_channels: list = None
    chbmit_preictal_horizon_s: float = 1800.0
    chbmit_interictal_gap_s: float = 3600.0
    seed_sessions: tuple = (1, 2, 3)

    def window_len(self):
        if self.dataset == "synthetic":
            return self.synthetic.window_len
        return DATASET_WINDOW_LEN[self.dataset]


_CLASSIFIER_ARCH_KEYS = ("block1_filters", "block1_kernel", "block2_filters",
                         "block2_kernel", "dense_width", "dropout", "pool")
_CLASSIFIER_TRAIN_KEYS = ("epochs", "batch_size", "learning_rate", "patience")
_AE_TRAIN_KEYS = ("epochs", "batch_size", "learning_rate")
_SYNTHETIC_KEYS = ("subjects", "channels", "sources", "window_len",
                   "windows_per_subject", "mode", "sample_rate_hz",
                   "class_freqs", "source_band", "burst_fraction",
                   "signal_gain", "noise_std")
_TOP_KEYS = ("dataset", "task", "data_dir", "out_dir", "seed", "latent_dims",
             "normalize", "parallel_folds", "autoencoder", "classifier",
             "chbmit", "synthetic", "seed_sessions")
_CHB_KEYS = ("channels", "preictal_horizon_s", "interictal_gap_s")


def _reject_unknown(section, allowed, prefix, problems):
    for key in section:
        if key not in allowed:
            problems.append((f"{prefix}{key}", "unknown key"))


def config_from_dict(doc, overrides=None):
    """Build and validate a RunConfig; raises ValidationError with
    per-field diagnostics on any problem."""
    doc = dict(doc)
    for path, value in (overrides or {}).items():
        _apply_override(doc, path, value)

    problems = []
    _reject_unknown(doc, _TOP_KEYS, "", problems)

    dataset = doc.get("dataset")
    if dataset not in DATASETS:
        problems.append(("dataset", f"must be one of {DATASETS}, got {dataset!r}"))
        raise ValidationError("invalid configuration", problems)

    task = doc.get("task", TASKS_BY_DATASET[dataset][0])
    if task not in TASKS_BY_DATASET[dataset]:
        problems.append(
            ("task", f"dataset {dataset!r} supports {TASKS_BY_DATASET[dataset]}, "
                     f"got {task!r}"))

    cfg = RunConfig(dataset=dataset, task=task)
    cfg.data_dir = str(doc.get("data_dir", cfg.data_dir))
    cfg.out_dir = str(doc.get("out_dir", cfg.out_dir))
    for name, cast in (("seed", int), ("normalize", bool),
                       ("parallel_folds", bool)):
        if name in doc:
            try:
                setattr(cfg, name, cast(doc[name]))
            except (TypeError, ValueError):
                problems.append((name, f"expected {cast.__name__}"))
    cfg.latent_dims = int(doc.get("latent_dims",
                                  DEFAULT_LATENT_DIMS[dataset]))
    if cfg.latent_dims < 1:
        problems.append(("latent_dims", "must be positive"))

    ae = dict(doc.get("autoencoder", {}))
    _reject_unknown(ae, _AE_TRAIN_KEYS, "autoencoder.", problems)
    for key in _AE_TRAIN_KEYS:
        if key in ae:
            setattr(cfg.autoencoder, key, ae[key])

    clf = dict(doc.get("classifier", {}))
    _reject_unknown(clf, _CLASSIFIER_ARCH_KEYS + _CLASSIFIER_TRAIN_KEYS,
                    "classifier.", problems)
    for key in _CLASSIFIER_TRAIN_KEYS:
        if key in clf:
            setattr(cfg.classifier, key, clf[key])
    cfg.classifier_arch = {k: tuple(v) if isinstance(v, list) else v
                           for k, v in clf.items()
                           if k in _CLASSIFIER_ARCH_KEYS}

    chb = dict(doc.get("chbmit", {}))
    _reject_unknown(chb, _CHB_KEYS, "chbmit.", problems)
    if "channels" in chb:
        cfg.chbmit_channels = list(chb["channels"])
    cfg.chbmit_preictal_horizon_s = float(
        chb.get("preictal_horizon_s", cfg.chbmit_preictal_horizon_s))
    cfg.chbmit_interictal_gap_s = float(
        chb.get("interictal_gap_s", cfg.chbmit_interictal_gap_s))

    syn = dict(doc.get("synthetic", {}))
    _reject_unknown(syn, _SYNTHETIC_KEYS, "synthetic.", problems)
    for key in _SYNTHETIC_KEYS:
        if key in syn:
            value = syn[key]
            if isinstance(value, list):
                value = tuple(value)
            setattr(cfg.synthetic, key, value)
    if dataset == "synthetic":
        cfg.synthetic.mode = {"spectral": "spectral", "burst": "burst"}[task]

    if "seed_sessions" in doc:
        cfg.seed_sessions = tuple(int(s) for s in doc["seed_sessions"])

    if problems:
        raise ValidationError("invalid configuration", problems)

    # architecture overrides must respect the model shape constraints
    try:
        cfg.synthetic.validate()
    except ConfigError as exc:
        raise ValidationError("invalid configuration", [("synthetic", str(exc))])
    try:
        ClassifierConfig(timesteps=cfg.window_len(), features=cfg.latent_dims,
                         **cfg.classifier_arch).validate()
    except ConfigError as exc:
        raise ValidationError("invalid configuration", [("classifier", str(exc))])
    except TypeError as exc:
        raise ValidationError("invalid configuration", [("classifier", str(exc))])
    if cfg.dataset == "chbmit" and cfg.chbmit_channels is not None:
        expected = CHB_TASKS[cfg.task][1]
        if len(cfg.chbmit_channels) != expected:
            raise ValidationError("invalid configuration", [(
                "chbmit.channels",
                f"task {cfg.task!r} selects {expected} channels, "
                f"got {len(cfg.chbmit_channels)}")])
    return cfg


def load_config(path, overrides=None):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file {path} does not exist")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError("config is not valid JSON", [("<file>", str(exc))])
    if not isinstance(doc, dict):
        raise ValidationError("config root must be a JSON object",
                              [("<file>", f"got {type(doc).__name__}")])
    return config_from_dict(doc, overrides)


def _apply_override(doc, dotted, value):
    """Set doc[a][b]... = value for an 'a.b.c' path, creating sections."""
    parts = dotted.split(".")
    node = doc
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ValidationError("invalid override",
                                  [(dotted, f"{part} is not a section")])
    node[parts[-1]] = value


def parse_override_value(text):
    """Interpret an override string as JSON when possible, else raw string."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def config_snapshot(cfg):
    return {
        "dataset": cfg.dataset,
        "task": cfg.task,
        "data_dir": cfg.data_dir,
        "out_dir": cfg.out_dir,
        "seed": cfg.seed,
        "latent_dims": cfg.latent_dims,
        "normalize": cfg.normalize,
        "parallel_folds": cfg.parallel_folds,
        "autoencoder": vars(cfg.autoencoder).copy(),
        "classifier_train": vars(cfg.classifier).copy(),
        "classifier_arch": dict(cfg.classifier_arch),
        "synthetic": {k: (list(v) if isinstance(v, tuple) else v)
                      for k, v in vars(cfg.synthetic).items()},
        "chbmit": {
            "channels": cfg.chbmit_channels,
            "preictal_horizon_s": cfg.chbmit_preictal_horizon_s,
            "interictal_gap_s": cfg.chbmit_interictal_gap_s,
        },
        "seed_sessions": list(cfg.seed_sessions),
    }
