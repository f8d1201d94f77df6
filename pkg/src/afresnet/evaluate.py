"""Whole-record inference, F1 scoring, cross-run aggregation, and report
emission (result table plus per-figure data files)."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import parse_config
from .data import DataError, Dataset, tile_to_length
from .model import Network, forward
from .nn.ops import stable_softmax
from .nn.tensor import Tensor

DEFAULT_THRESHOLD = 0.5

# grammar-equivalent fields of the presets, for figure grouping
_PRESET_FIELDS = {
    "ResNet18": (64, "cnacna", (64, 128, 256, 512), (2, 2, 2, 2)),
    "ResNet34": (64, "cnacna", (64, 128, 256, 512), (3, 4, 6, 3)),
}


def partition_crops(signal: np.ndarray, crop_len: int) -> np.ndarray:
    """Consecutive non-overlapping windows [n, crop_len]; a final partial
    window (or a signal shorter than crop_len) is tiled to full length."""
    if signal.size == 0:
        raise DataError("cannot predict on an empty signal")
    n_full = signal.size // crop_len
    crops = [signal[i * crop_len : (i + 1) * crop_len] for i in range(n_full)]
    remainder = signal[n_full * crop_len :]
    if remainder.size or n_full == 0:
        crops.append(tile_to_length(remainder, crop_len))
    return np.stack(crops)


def predict_record(net: Network, record, crop_len: int) -> float:
    """Mean AF probability over the record's non-overlapping crops."""
    signal = record.signal if hasattr(record, "signal") else np.asarray(record)
    crops = partition_crops(signal, crop_len)
    logits = forward(net, Tensor(crops[:, None, :]), mode="eval")
    probs = stable_softmax(logits.data)
    return float(probs[:, 1].mean())


def classify(probability: float, threshold: float = DEFAULT_THRESHOLD) -> int:
    """1 (AF) iff probability strictly exceeds the threshold."""
    return 1 if probability > threshold else 0


def f1_score(predictions, labels, positive: int = 1) -> float:
    """F1 = 2TP / (2TP + FP + FN); 0 when the denominator is 0."""
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if predictions.shape != labels.shape or predictions.size == 0:
        raise ValueError("predictions and labels must be equal-length, non-empty")
    tp = int(np.sum((predictions == positive) & (labels == positive)))
    fp = int(np.sum((predictions == positive) & (labels != positive)))
    fn = int(np.sum((predictions != positive) & (labels == positive)))
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def evaluate_dataset(net: Network, dataset: Dataset, crop_len: int,
                     threshold: float = DEFAULT_THRESHOLD):
    """Per-record AF probabilities and hard labels for a dataset."""
    probs = np.array([predict_record(net, rec, crop_len) for rec in dataset.records])
    preds = np.array([classify(p, threshold) for p in probs])
    return probs, preds


@dataclass
class AggregateResult:
    config_id: int
    config_string: str
    n_params: int
    f1_median: float
    f1_std: float
    repeats: int


def aggregate(rows: list[dict]) -> list[AggregateResult]:
    """Group result rows by config id; median and population std of F1."""
    by_config: dict[int, list[dict]] = {}
    order = []
    for row in rows:
        cid = int(row["config_id"])
        if cid not in by_config:
            by_config[cid] = []
            order.append(cid)
        by_config[cid].append(row)
    out = []
    for cid in order:
        group = by_config[cid]
        scores = np.array([float(r["f1"]) for r in group])
        out.append(
            AggregateResult(
                config_id=cid,
                config_string=group[0]["config_string"],
                n_params=int(group[0]["n_params"]),
                f1_median=float(np.median(scores)),
                f1_std=float(np.std(scores)),
                repeats=len(group),
            )
        )
    return out


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def _config_fields(config_string: str):
    text = config_string.strip()
    if text in _PRESET_FIELDS:
        return _PRESET_FIELDS[text]
    cfg = parse_config(text)
    return cfg.input_filters, cfg.layout, cfg.filters, cfg.blocks


def emit_report(aggregates: list[AggregateResult], out_dir,
                crop_len: int = 3000, threshold: float = DEFAULT_THRESHOLD):
    """Write the result table, the params-vs-F1 file, one grouped file per
    configuration field, and a metadata file. Returns the written paths."""
    if not aggregates:
        raise ValueError("nothing to report")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ranked = sorted(aggregates, key=lambda a: a.n_params)
    indexed = [(i + 1, agg) for i, agg in enumerate(ranked)]

    paths = {}

    table = out_dir / "table_a1.csv"
    with open(table, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "config", "n_params", "f1_median", "f1_std"])
        for idx, agg in indexed:
            writer.writerow([idx, agg.config_string, agg.n_params,
                             _fmt(agg.f1_median), _fmt(agg.f1_std)])
    paths["table"] = table

    fig1 = out_dir / "fig_params_vs_f1.csv"
    with open(fig1, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n_params", "f1_median", "f1_std", "config_index"])
        for idx, agg in indexed:
            writer.writerow([agg.n_params, _fmt(agg.f1_median),
                             _fmt(agg.f1_std), idx])
    paths["fig_params_vs_f1"] = fig1

    field_of = {idx: _config_fields(agg.config_string) for idx, agg in indexed}
    for pos, column in enumerate(["input_filters", "layout", "filters", "blocks"]):
        path = out_dir / f"fig_{column}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow([column, "config_index", "n_params",
                             "f1_median", "f1_std"])
            keyed = sorted(indexed, key=lambda ia: (str(field_of[ia[0]][pos]),
                                                    ia[1].n_params))
            for idx, agg in keyed:
                value = field_of[idx][pos]
                if isinstance(value, tuple):
                    value = "[" + ", ".join(map(str, value)) + "]"
                writer.writerow([value, idx, agg.n_params,
                                 _fmt(agg.f1_median), _fmt(agg.f1_std)])
        paths[f"fig_{column}"] = path

    meta = out_dir / "report_meta.json"
    with open(meta, "w", encoding="utf-8") as fh:
        json.dump(
            {
                "crop_len": crop_len,
                "threshold": threshold,
                "std_convention": "population",
                "f1_positive_class": "A",
                "version": __version__,
            },
            fh,
            indent=2,
        )
        fh.write("\n")
    paths["meta"] = meta
    return paths


def read_table(path) -> list[dict]:
    """Re-parse an emitted table_a1.csv."""
    with open(path, newline="", encoding="utf-8") as fh:
        return [dict(row) for row in csv.DictReader(fh)]
