"""EEG data plane: interchange container codec, strict EDF parser, and the
dataset-specific labeling and segmentation rules.

Container layout (all integers little-endian):

    magic      4 bytes  b"EEGC"
    version    u32      currently 1
    header_len u32      byte length of the JSON header
    header     UTF-8 JSON: subject, sample_rate_hz, n_channels, n_samples,
               channel_names, annotations, trial_meta
    payload    channel-major f32: n_channels x n_samples values

EDF layout: 256-byte ASCII fixed header, 256 bytes of per-signal header
fields, then data records of 16-bit little-endian integers mapped to
physical units through the per-signal (physical, digital) ranges.
"""

import json
import logging
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadMagicError, EdfHeaderError, EdfRecordError, EdfScalingError,
    HeaderSizeMismatchError, TruncatedPayloadError, ValidationError,
)

log = logging.getLogger(__name__)

CONTAINER_MAGIC = b"EEGC"
CONTAINER_VERSION = 1
CONTAINER_SUFFIX = ".eegc"


@dataclass
class Annotation:
    label: str
    start_s: float
    end_s: float


@dataclass
class EEGRecording:
    subject_id: str
    sample_rate_hz: float
    channel_names: list
    samples: np.ndarray  # (T, C) float32
    annotations: list = field(default_factory=list)
    trial_meta: dict = field(default_factory=dict)

    @property
    def n_channels(self):
        return self.samples.shape[1]

    @property
    def n_samples(self):
        return self.samples.shape[0]

    @property
    def duration_s(self):
        return self.n_samples / self.sample_rate_hz

    def validate(self):
        if len(self.channel_names) != self.n_channels:
            raise ValidationError(
                f"{len(self.channel_names)} channel names for "
                f"{self.n_channels} channels")
        if self.sample_rate_hz <= 0:
            raise ValidationError(f"sample rate must be positive, "
                                  f"got {self.sample_rate_hz}")
        for ann in self.annotations:
            if not 0.0 <= ann.start_s <= ann.end_s <= self.duration_s + 1e-9:
                raise ValidationError(
                    f"annotation {ann.label!r} interval [{ann.start_s}, "
                    f"{ann.end_s}] outside recording of {self.duration_s:.3f}s")


@dataclass
class LabeledWindow:
    subject_id: str
    samples: np.ndarray  # (T_w, C) float32
    label: int
    task: str
    # index bookkeeping: the window is source.samples[source_start:source_end]
    source_start: int = 0
    source_end: int = 0


# -- container codec ---------------------------------------------------------------


def write_container(rec, path):
    rec.validate()
    header = {
        "subject": rec.subject_id,
        "sample_rate_hz": rec.sample_rate_hz,
        "n_channels": rec.n_channels,
        "n_samples": rec.n_samples,
        "channel_names": list(rec.channel_names),
        "annotations": [
            {"label": a.label, "start_s": a.start_s, "end_s": a.end_s}
            for a in rec.annotations
        ],
        "trial_meta": rec.trial_meta,
    }
    blob = json.dumps(header, ensure_ascii=False).encode("utf-8")
    payload = np.ascontiguousarray(rec.samples.T, dtype="<f4")  # channel-major
    with open(path, "wb") as fh:
        fh.write(CONTAINER_MAGIC)
        fh.write(struct.pack("<II", CONTAINER_VERSION, len(blob)))
        fh.write(blob)
        fh.write(payload.tobytes())


def read_container(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != CONTAINER_MAGIC:
        raise BadMagicError(
            f"{path}: expected magic {CONTAINER_MAGIC!r}, got {blob[:4]!r}")
    if len(blob) < 12:
        raise TruncatedPayloadError(f"{path}: file ends inside the fixed header")
    version, header_len = struct.unpack_from("<II", blob, 4)
    if version != CONTAINER_VERSION:
        raise HeaderSizeMismatchError(f"{path}: unsupported version {version}")
    if len(blob) < 12 + header_len:
        raise TruncatedPayloadError(f"{path}: file ends inside the JSON header")
    try:
        header = json.loads(blob[12:12 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise HeaderSizeMismatchError(f"{path}: header is not valid JSON: {exc}")
    n_channels = int(header["n_channels"])
    n_samples = int(header["n_samples"])
    payload = blob[12 + header_len:]
    expected = 4 * n_channels * n_samples
    if len(payload) != expected:
        raise HeaderSizeMismatchError(
            f"{path}: header promises {expected} payload bytes "
            f"({n_channels}x{n_samples} f32), found {len(payload)}")
    data = np.frombuffer(payload, dtype="<f4").reshape(n_channels, n_samples)
    rec = EEGRecording(
        subject_id=header["subject"],
        sample_rate_hz=float(header["sample_rate_hz"]),
        channel_names=list(header["channel_names"]),
        samples=data.T.copy(),  # frombuffer memory is read-only
        annotations=[Annotation(a["label"], float(a["start_s"]), float(a["end_s"]))
                     for a in header.get("annotations", [])],
        trial_meta=header.get("trial_meta", {}),
    )
    rec.validate()
    return rec


# -- EDF parser ----------------------------------------------------------------------


def _edf_field(blob, offset, width, path, what):
    raw = blob[offset:offset + width]
    if len(raw) < width:
        raise TruncatedPayloadError(f"{path}: EDF header ends inside {what}")
    try:
        return raw.decode("ascii")
    except UnicodeDecodeError:
        raise EdfHeaderError(f"{path}: non-ASCII bytes in EDF header field {what}")


def _edf_number(blob, offset, width, path, what, cast):
    text = _edf_field(blob, offset, width, path, what).strip()
    try:
        return cast(text)
    except ValueError:
        raise EdfHeaderError(f"{path}: EDF header field {what} is not numeric: {text!r}")


def read_edf(path):
    """Parse an EDF file into an EEGRecording.

    Signals sharing the most common samples-per-record value are assembled
    into the (T, C) matrix (ties resolved towards the higher rate);
    annotation channels and odd-rate auxiliaries are dropped.
    """
    with open(path, "rb") as fh:
        blob = fh.read()

    off = 0
    _edf_field(blob, off, 8, path, "version")
    off = 8 + 80 + 80 + 8 + 8  # skip patient/recording ids and start date/time
    header_bytes = _edf_number(blob, off, 8, path, "header bytes", int)
    off += 8 + 44
    n_records = _edf_number(blob, off, 8, path, "record count", int)
    off += 8
    record_dur = _edf_number(blob, off, 8, path, "record duration", float)
    off += 8
    ns = _edf_number(blob, off, 4, path, "signal count", int)
    off += 4
    if ns < 1:
        raise EdfHeaderError(f"{path}: EDF declares {ns} signals")
    if n_records < 0:
        raise EdfRecordError(f"{path}: EDF declares unknown record count {n_records}")
    if header_bytes != 256 + 256 * ns:
        raise EdfHeaderError(
            f"{path}: EDF header size {header_bytes} != 256 + 256*{ns}")

    def column(width, what, cast=None):
        nonlocal off
        values = []
        for i in range(ns):
            if cast is None:
                values.append(_edf_field(blob, off, width, path,
                                         f"{what}[{i}]").strip())
            else:
                values.append(_edf_number(blob, off, width, path,
                                          f"{what}[{i}]", cast))
            off += width
        return values

    labels = column(16, "label")
    column(80, "transducer")
    column(8, "dimension")
    phys_min = column(8, "physical min", float)
    phys_max = column(8, "physical max", float)
    dig_min = column(8, "digital min", int)
    dig_max = column(8, "digital max", int)
    column(80, "prefilter")
    samples_per_rec = column(8, "samples per record", int)
    column(32, "reserved")

    for i in range(ns):
        if dig_max[i] == dig_min[i]:
            raise EdfScalingError(
                f"{path}: signal {i} ({labels[i]!r}) has zero digital range")

    # pick the signal group to assemble: most common samples-per-record,
    # ties towards the higher rate; annotation channels never participate
    candidates = [i for i in range(ns) if labels[i] != "EDF Annotations"]
    if not candidates:
        raise EdfHeaderError(f"{path}: no data signals (annotations only)")
    counts = {}
    for i in candidates:
        counts.setdefault(samples_per_rec[i], []).append(i)
    chosen_rate = max(counts, key=lambda r: (len(counts[r]), r))
    chosen = counts[chosen_rate]

    record_bytes = 2 * sum(samples_per_rec)
    body = blob[header_bytes:]
    signals = np.empty((n_records * chosen_rate, len(chosen)), dtype=np.float32)
    offsets = np.cumsum([0] + [2 * s for s in samples_per_rec])

    scale = np.array([(phys_max[i] - phys_min[i]) / (dig_max[i] - dig_min[i])
                      for i in chosen])
    base = np.array([phys_min[i] - dig_min[i] * s for i, s in zip(chosen, scale)])

    for r in range(n_records):
        start = r * record_bytes
        if start + record_bytes > len(body):
            raise EdfRecordError(
                f"{path}: data record {r} truncated "
                f"(need {record_bytes} bytes, have {len(body) - start})")
        for c, i in enumerate(chosen):
            lo = start + offsets[i]
            raw = np.frombuffer(body, dtype="<i2", count=samples_per_rec[i],
                                offset=lo)
            signals[r * chosen_rate:(r + 1) * chosen_rate, c] = (
                raw * scale[c] + base[c])
    if len(body) > n_records * record_bytes:
        raise EdfRecordError(
            f"{path}: {len(body) - n_records * record_bytes} trailing bytes "
            f"after record {n_records - 1}")

    if record_dur <= 0:
        raise EdfHeaderError(f"{path}: non-positive record duration {record_dur}")
    rec = EEGRecording(
        subject_id="",
        sample_rate_hz=chosen_rate / record_dur,
        channel_names=[labels[i] for i in chosen],
        samples=signals,
        annotations=[],
        trial_meta={},
    )
    rec.validate()
    return rec


# -- labeling and segmentation rules -------------------------------------------------


def label_deap(rating):
    """Binarize a 1-9 rating at 5: below -> 0, at or above -> 1."""
    if not 1.0 <= rating <= 9.0:
        raise ValidationError(f"rating {rating} outside the 1-9 scale")
    return 0 if rating < 5.0 else 1


def seed_central_crop(rec, crop_s=150.0):
    """Keep exactly the central ``crop_s`` seconds of a recording."""
    n = int(round(crop_s * rec.sample_rate_hz))
    if rec.n_samples < n:
        raise ValidationError(
            f"recording of {rec.duration_s:.1f}s is shorter than {crop_s}s")
    start = (rec.n_samples - n) // 2
    return EEGRecording(
        subject_id=rec.subject_id,
        sample_rate_hz=rec.sample_rate_hz,
        channel_names=list(rec.channel_names),
        samples=np.ascontiguousarray(rec.samples[start:start + n]),
        annotations=[],
        trial_meta=dict(rec.trial_meta),
    )


CHB_TASKS = {
    # task -> ((state for label 0, state for label 1), expected channel count)
    "ictal-vs-preictal": (("ictal", "preictal"), 22),
    "ictal-vs-interictal": (("ictal", "interictal"), 18),
    "preictal-vs-interictal": (("preictal", "interictal"), 18),
}

SEIZURE_LABEL = "seizure"


def _window_state(a, b, seizures, horizon_s, gap_s):
    """Classify window [a, b) seconds; None when it straddles a boundary."""
    for s, e in seizures:
        if s <= a and b <= e:
            return "ictal"
    for s, e in seizures:
        if a < e and s < b:  # partial overlap with a seizure
            return None
    for s, _ in seizures:
        if s - horizon_s <= a and b <= s:
            return "preictal"
    # interictal needs clearance from every seizure
    if all(b <= s - gap_s or a >= e + gap_s for s, e in seizures):
        return "interictal"
    return None


def segment_chb(rec, task, channels=None, window_s=20.0,
                preictal_horizon_s=1800.0, interictal_gap_s=3600.0):
    """Cut a seizure-annotated recording into non-overlapping labeled windows.

    Ictal windows lie fully inside a seizure; pre-ictal windows fall in the
    ``preictal_horizon_s`` before an onset; inter-ictal windows keep
    ``interictal_gap_s`` of clearance from every seizure. Windows straddling
    a state boundary are discarded. Only the two states named by ``task``
    are emitted, labeled 0/1 in task order.
    """
    if task not in CHB_TASKS:
        raise ValidationError(
            f"unknown task {task!r}; expected one of {sorted(CHB_TASKS)}")
    (state0, state1), _ = CHB_TASKS[task]

    samples = rec.samples
    names = list(rec.channel_names)
    if channels is not None:
        missing = [c for c in channels if c not in names]
        if missing:
            raise ValidationError(f"channels not in recording: {missing}")
        idx = [names.index(c) for c in channels]
        samples = np.ascontiguousarray(samples[:, idx])

    seizures = sorted(
        (a.start_s, a.end_s) for a in rec.annotations
        if a.label.lower() == SEIZURE_LABEL)
    if not seizures:
        log.warning("recording %s has no seizure annotations; no windows emitted",
                    rec.subject_id)
        return []

    w = int(round(window_s * rec.sample_rate_hz))
    windows = []
    for start in range(0, rec.n_samples - w + 1, w):
        a = start / rec.sample_rate_hz
        b = (start + w) / rec.sample_rate_hz
        state = _window_state(a, b, seizures, preictal_horizon_s, interictal_gap_s)
        if state == state0:
            label = 0
        elif state == state1:
            label = 1
        else:
            continue
        windows.append(LabeledWindow(
            subject_id=rec.subject_id,
            samples=np.ascontiguousarray(samples[start:start + w]),
            label=label,
            task=task,
            source_start=start,
            source_end=start + w,
        ))
    if not windows:
        log.warning("recording %s produced no %s windows", rec.subject_id, task)
    return windows


# -- per-channel normalization --------------------------------------------------------


def channel_stats(windows):
    """Mean and std per channel pooled over a list of (T, C) windows."""
    stacked = np.concatenate([np.asarray(w, dtype=np.float64) for w in windows],
                             axis=0)
    mean = stacked.mean(axis=0)
    std = stacked.std(axis=0)
    std[std == 0.0] = 1.0
    return mean.astype(np.float32), std.astype(np.float32)


def apply_zscore(samples, mean, std):
    return ((np.asarray(samples) - mean) / std).astype(np.float32)
