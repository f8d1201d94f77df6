"""ECG dataset handling: manifest ingestion, preprocessing (orientation
flip, class consolidation), deterministic splits, crop sampling with
resampling augmentation and AF oversampling, and a synthetic generator.

Manifest format: CSV with header ``record_id,path,label,fs``; label is one
of A, N, O, ~ and paths are relative to the manifest's directory. Signal
files are either raw little-endian float32 (``.f32``) or one sample per
line (``.csv``).
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .nn.tensor import Tensor

LABELS = ("A", "N", "O", "~")
AF_LABEL = "A"
DEFAULT_FS = 300.0
DEFAULT_CROP_LEN = 3000  # ~10 s at 300 Hz
DEFAULT_OVERSAMPLE_AF = 3
RESAMPLE_RANGE = 0.1  # augmentation draws new_fs from [0.9, 1.1] * fs


class DataError(ValueError):
    """Unreadable manifest, missing signal file, or malformed record."""


@dataclass
class Record:
    id: str
    signal: np.ndarray  # 1D float64
    fs: float
    label: str


@dataclass
class Dataset:
    records: list[Record]
    labels: np.ndarray  # binary: A=1, NO=0, aligned with records
    split: str = "all"

    def __len__(self):
        return len(self.records)

    @property
    def n_af(self) -> int:
        return int(self.labels.sum())


def load_dataset(manifest_path) -> list[Record]:
    """Load all records referenced by a manifest, in declared order."""
    manifest_path = Path(manifest_path)
    if not manifest_path.is_file():
        raise DataError(f"manifest not found: {manifest_path}")
    base = manifest_path.parent
    records = []
    with open(manifest_path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"record_id", "path", "label", "fs"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise DataError(
                f"manifest must have columns {sorted(required)}, "
                f"got {reader.fieldnames}"
            )
        for row in reader:
            rid = row["record_id"]
            label = row["label"].strip()
            if label not in LABELS:
                raise DataError(f"record {rid!r}: bad label token {label!r}")
            try:
                fs = float(row["fs"])
            except ValueError:
                raise DataError(f"record {rid!r}: bad sampling rate {row['fs']!r}")
            if fs <= 0:
                raise DataError(f"record {rid!r}: sampling rate must be > 0")
            path = base / row["path"]
            if not path.is_file():
                raise DataError(f"record {rid!r}: signal file not found: {path}")
            signal = _read_signal(path, rid)
            records.append(Record(rid, signal, fs, label))
    return records


def class_counts(records: list[Record]) -> dict[str, int]:
    """Records per label, over the full 4-symbol alphabet."""
    counts = {label: 0 for label in LABELS}
    for rec in records:
        counts[rec.label] += 1
    return counts


def _read_signal(path: Path, rid: str) -> np.ndarray:
    if path.suffix == ".f32":
        signal = np.fromfile(path, dtype="<f4").astype(np.float64)
    elif path.suffix == ".csv":
        signal = np.loadtxt(path, dtype=np.float64, ndmin=1)
    else:
        raise DataError(f"record {rid!r}: unsupported signal format {path.suffix!r}")
    if signal.size == 0:
        raise DataError(f"record {rid!r}: signal has length 0")
    return signal


def write_manifest(records: list[Record], out_dir, signal_dir: str = "signals"):
    """Write records as .f32 files plus a manifest.csv under ``out_dir``."""
    out_dir = Path(out_dir)
    (out_dir / signal_dir).mkdir(parents=True, exist_ok=True)
    manifest = out_dir / "manifest.csv"
    with open(manifest, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["record_id", "path", "label", "fs"])
        for rec in records:
            rel = f"{signal_dir}/{rec.id}.f32"
            rec.signal.astype("<f4").tofile(out_dir / rel)
            writer.writerow([rec.id, rel, rec.label, f"{rec.fs:g}"])
    return manifest


def orientation_statistic(signal: np.ndarray) -> float:
    """Third central moment of the signal; R-peaks dominate the heavy tail,
    so a negative value means the QRS complexes point downward."""
    centered = signal - signal.mean()
    return float(np.mean(centered**3))


def flip_if_inverted(signal: np.ndarray) -> np.ndarray:
    """Negate the signal when the orientation statistic is negative; a
    statistic of exactly 0 is treated as upright."""
    if signal.size == 0:
        raise DataError("cannot orient an empty signal")
    if orientation_statistic(signal) < 0:
        return -signal
    return signal


def preprocess(records: list[Record], flip: bool = True) -> Dataset:
    """Drop noisy (~) records, consolidate N and O into the non-AF class,
    and (by default) correct inverted signals. Idempotent."""
    kept = []
    labels = []
    for rec in records:
        if rec.label == "~":
            continue
        signal = flip_if_inverted(rec.signal) if flip else rec.signal
        kept.append(Record(rec.id, signal, rec.fs, rec.label))
        labels.append(1 if rec.label == AF_LABEL else 0)
    if not kept:
        warnings.warn("preprocessing removed every record (all noisy?)")
    return Dataset(kept, np.asarray(labels, dtype=np.int64))


def split(dataset: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Disjoint, exhaustive shuffle split; train gets floor(fraction * n)."""
    if not 0 < train_fraction < 1:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    n = len(dataset)
    order = np.random.default_rng(seed).permutation(n)
    n_train = int(math.floor(train_fraction * n))
    tr, va = order[:n_train], order[n_train:]
    return (
        Dataset([dataset.records[i] for i in tr], dataset.labels[tr], "train"),
        Dataset([dataset.records[i] for i in va], dataset.labels[va], "valid"),
    )


def tile_to_length(signal: np.ndarray, crop_len: int) -> np.ndarray:
    """Repeat the signal end-to-end until it covers ``crop_len`` samples."""
    reps = -(-crop_len // signal.size)
    return np.tile(signal, reps)[:crop_len]


def sample_crop(signal: np.ndarray, crop_len: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform random fixed-length crop; shorter signals are tiled."""
    if crop_len < 1:
        raise ValueError("crop_len must be >= 1")
    if signal.size < crop_len:
        return tile_to_length(signal, crop_len)
    start = int(rng.integers(0, signal.size - crop_len + 1))
    return signal[start : start + crop_len]


def resample(signal: np.ndarray, fs: float, new_fs: float) -> np.ndarray:
    """Linear interpolation onto a uniform grid of round(len * new_fs / fs)
    points; endpoints are preserved."""
    if new_fs <= 0:
        raise ValueError("new_fs must be > 0")
    if new_fs == fs:
        return signal
    n_new = max(1, int(round(signal.size * new_fs / fs)))
    old_x = np.arange(signal.size, dtype=np.float64)
    new_x = np.linspace(0.0, signal.size - 1, n_new)
    return np.interp(new_x, old_x, signal)


def epoch_crop_plan(labels: np.ndarray, oversample_af: int) -> np.ndarray:
    """Record index per crop for one epoch: every non-AF record once, every
    AF record ``oversample_af`` times."""
    counts = np.where(labels == 1, oversample_af, 1)
    return np.repeat(np.arange(labels.size), counts)


def make_batches(
    dataset: Dataset,
    batch_size: int,
    crop_len: int,
    oversample_af: int = DEFAULT_OVERSAMPLE_AF,
    augment: bool = True,
    rng: np.random.Generator | None = None,
):
    """Yield one epoch of shuffled (Tensor[B, 1, crop_len], labels) batches.

    With augmentation, each crop first resamples its source signal to a
    rate drawn uniformly from [0.9, 1.1] * fs. The last batch may be short.
    """
    if len(dataset) == 0:
        raise DataError("cannot batch an empty dataset")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    rng = rng or np.random.default_rng()
    plan = epoch_crop_plan(dataset.labels, oversample_af)
    rng.shuffle(plan)
    for index in range(0, plan.size, batch_size):
        chunk = plan[index : index + batch_size]
        crops = np.empty((chunk.size, 1, crop_len))
        labels = np.empty(chunk.size, dtype=np.int64)
        for row, rec_idx in enumerate(chunk):
            rec = dataset.records[rec_idx]
            signal = rec.signal
            if augment:
                new_fs = rng.uniform((1 - RESAMPLE_RANGE) * rec.fs,
                                     (1 + RESAMPLE_RANGE) * rec.fs)
                signal = resample(signal, rec.fs, new_fs)
            crops[row, 0] = sample_crop(signal, crop_len, rng)
            labels[row] = dataset.labels[rec_idx]
        yield Tensor(crops), labels


# --- synthetic generator -----------------------------------------------------

_QRS_STD = 0.02     # seconds
_P_STD = 0.04
_P_OFFSET = 0.16    # P-wave peak precedes the R-peak by this much
_P_AMPLITUDE = 0.15
_NOISE_STD = 0.05
_NO_RR_MEAN = 0.8
_NO_RR_JITTER = 0.02
_AF_RR_RANGE = (0.4, 1.2)
_INVERTED_FRACTION = 0.3
_DURATION_RANGE = (9.0, 61.0)


def _gaussian_bumps(t: np.ndarray, centers: np.ndarray, amplitude: float,
                    std: float) -> np.ndarray:
    out = np.zeros_like(t)
    for c in centers:
        lo = np.searchsorted(t, c - 4 * std)
        hi = np.searchsorted(t, c + 4 * std)
        out[lo:hi] += amplitude * np.exp(-0.5 * ((t[lo:hi] - c) / std) ** 2)
    return out


def generate_synthetic(n_records: int, af_fraction: float, seed: int) -> list[Record]:
    """Desk-scale pseudo-ECG corpus at 300 Hz, 9-61 s per record.

    Non-AF rhythm: regular RR intervals (mean 0.8 s, jitter std 0.02 s)
    with a P-wave bump before each QRS. AF rhythm: per-beat RR drawn
    uniformly from 0.4-1.2 s and no P-wave. Gaussian noise std 0.05; a
    random 30% of records are emitted upside-down to exercise the
    orientation fix. Non-AF labels alternate between N and O.
    """
    if n_records < 1:
        raise ValueError("n_records must be >= 1")
    rng = np.random.default_rng(seed)
    n_af = int(round(n_records * af_fraction))
    is_af = np.zeros(n_records, dtype=bool)
    is_af[:n_af] = True
    rng.shuffle(is_af)

    records = []
    n_other = 0
    for i in range(n_records):
        duration = rng.uniform(*_DURATION_RANGE)
        t = np.arange(int(round(duration * DEFAULT_FS))) / DEFAULT_FS
        beats = []
        pos = rng.uniform(0.2, 1.0)
        while pos < duration:
            beats.append(pos)
            if is_af[i]:
                pos += rng.uniform(*_AF_RR_RANGE)
            else:
                pos += _NO_RR_MEAN + rng.normal(0.0, _NO_RR_JITTER)
        beats = np.asarray(beats)
        signal = _gaussian_bumps(t, beats, 1.0, _QRS_STD)
        if not is_af[i]:
            signal += _gaussian_bumps(t, beats - _P_OFFSET, _P_AMPLITUDE, _P_STD)
        signal += rng.normal(0.0, _NOISE_STD, t.size)
        if rng.uniform() < _INVERTED_FRACTION:
            signal = -signal
        if is_af[i]:
            label = "A"
        else:
            label = "N" if n_other % 2 == 0 else "O"
            n_other += 1
        records.append(Record(f"synth_{i:05d}", signal, DEFAULT_FS, label))
    return records
