"""Seeded training of one configuration and the repeated benchmark grid.

One epoch is one pass over the oversampled crop multiset produced by
:func:`afresnet.data.make_batches`. No learning-rate schedule and no early
stopping: the final-epoch weights are what gets evaluated and saved.

Results file: CSV ``config_id,config_string,seed,n_params,f1,wall_seconds,
checkpoint``. The checkpoint column is relative to the results file so two
runs of the same grid produce identical rows (apart from wall_seconds,
which is a measurement). A grid run appends one row per finished run and
skips (config, seed) pairs already present, which makes it resumable.
"""

from __future__ import annotations

import concurrent.futures
import csv
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import DEFAULT_CROP_LEN, DEFAULT_OVERSAMPLE_AF, Dataset, make_batches
from .evaluate import evaluate_dataset, f1_score
from .model import count_parameters, forward, resolve_model, save_checkpoint
from .nn import AdamState, NumericError, adam_step, backward, ops

RESULTS_HEADER = ["config_id", "config_string", "seed", "n_params", "f1",
                  "wall_seconds", "checkpoint"]


class TrainingDiverged(ArithmeticError):
    """Loss or gradients went non-finite."""

    def __init__(self, epoch: int, step: int, detail: str):
        super().__init__(f"diverged at epoch {epoch}, step {step}: {detail}")
        self.epoch = epoch
        self.step = step


@dataclass
class TrainSpec:
    config: str  # grammar string or preset name
    epochs: int = 300
    batch_size: int = 32
    crop_len: int = DEFAULT_CROP_LEN
    oversample_af: int = DEFAULT_OVERSAMPLE_AF
    augment: bool = True
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass
class RunResult:
    config_id: int
    config_string: str
    seed: int
    n_params: int
    epoch_losses: list[float] = field(default_factory=list)
    f1: float = float("nan")
    wall_seconds: float = 0.0
    checkpoint: str = ""


def train(spec: TrainSpec, train_set: Dataset, valid_set: Dataset,
          checkpoint_path=None, config_id: int = 1) -> RunResult:
    """Train one configuration; deterministic given (spec, data)."""
    started = time.perf_counter()
    net = resolve_model(spec.config, seed=spec.seed)
    state = AdamState(lr=spec.lr, beta1=spec.beta1, beta2=spec.beta2,
                      epsilon=spec.epsilon)
    losses = []
    for epoch in range(spec.epochs):
        rng = np.random.default_rng([spec.seed, epoch])
        batch_losses = []
        for step, (batch, labels) in enumerate(
            make_batches(train_set, spec.batch_size, spec.crop_len,
                         spec.oversample_af, spec.augment, rng)
        ):
            net.zero_grad()
            try:
                logits = forward(net, batch, mode="train")
                loss, _ = ops.softmax_cross_entropy(logits, labels)
                value = float(loss.data)
                if not np.isfinite(value):
                    raise NumericError("non-finite loss")
                backward(loss)
                adam_step(net.params, net.gradients(), state)
            except NumericError as exc:
                raise TrainingDiverged(epoch, step, str(exc)) from exc
            batch_losses.append(value)
        losses.append(float(np.mean(batch_losses)))

    net.eval()
    _, predictions = evaluate_dataset(net, valid_set, spec.crop_len)
    score = f1_score(predictions, valid_set.labels)

    checkpoint = ""
    if checkpoint_path is not None:
        checkpoint_path = Path(checkpoint_path)
        checkpoint_path.parent.mkdir(parents=True, exist_ok=True)
        save_checkpoint(net, checkpoint_path)
        checkpoint = str(checkpoint_path)

    return RunResult(
        config_id=config_id,
        config_string=spec.config,
        seed=spec.seed,
        n_params=count_parameters(net),
        epoch_losses=losses,
        f1=score,
        wall_seconds=time.perf_counter() - started,
        checkpoint=checkpoint,
    )


def _result_row(result: RunResult) -> list[str]:
    return [
        str(result.config_id),
        result.config_string,
        str(result.seed),
        str(result.n_params),
        repr(result.f1),
        repr(result.wall_seconds),
        result.checkpoint,
    ]


def read_results(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [dict(row) for row in csv.DictReader(fh)]


def _run_one(args):
    spec, train_set, valid_set, checkpoint_path, config_id = args
    return train(spec, train_set, valid_set, checkpoint_path, config_id)


def run_experiment(
    configs: list[str],
    repeats: int,
    base_seed: int,
    train_set: Dataset,
    valid_set: Dataset,
    out_dir,
    epochs: int = 300,
    batch_size: int = 32,
    crop_len: int = DEFAULT_CROP_LEN,
    workers: int = 1,
) -> list[RunResult]:
    """Run repeats x configs trainings with seeds base_seed..base_seed+k-1,
    streaming rows to <out_dir>/results.csv. Per-run failures are recorded
    (f1 = nan) and the grid continues."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results_path = out_dir / "results.csv"

    done = set()
    if results_path.is_file():
        for row in read_results(results_path):
            done.add((int(row["config_id"]), int(row["seed"])))
    else:
        with open(results_path, "w", newline="", encoding="utf-8") as fh:
            csv.writer(fh).writerow(RESULTS_HEADER)

    jobs = []
    for idx, config in enumerate(configs, start=1):
        for k in range(repeats):
            seed = base_seed + k
            if (idx, seed) in done:
                continue
            spec = TrainSpec(config=config, epochs=epochs, batch_size=batch_size,
                             crop_len=crop_len, seed=seed)
            ckpt = out_dir / "checkpoints" / f"config{idx:02d}_seed{seed}.ckpt"
            jobs.append((spec, train_set, valid_set, ckpt, idx))

    results = []

    def finish(outcome):
        if isinstance(outcome, RunResult):
            # store the checkpoint path relative to the results file
            if outcome.checkpoint:
                outcome.checkpoint = str(
                    Path(outcome.checkpoint).relative_to(out_dir)
                )
            results.append(outcome)
            with open(results_path, "a", newline="", encoding="utf-8") as fh:
                csv.writer(fh).writerow(_result_row(outcome))

    if workers <= 1:
        for job in jobs:
            try:
                finish(_run_one(job))
            except TrainingDiverged as exc:
                spec, _, _, _, idx = job
                print(f"run config={idx} seed={spec.seed} failed: {exc}",
                      file=sys.stderr)
                finish(RunResult(idx, spec.config, spec.seed, 0))
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_one, job) for job in jobs]
            for job, future in zip(jobs, futures):  # submission order keeps
                try:                                # the results file stable
                    finish(future.result())
                except TrainingDiverged as exc:
                    spec, _, _, _, idx = job
                    print(f"run config={idx} seed={spec.seed} failed: {exc}",
                          file=sys.stderr)
                    finish(RunResult(idx, spec.config, spec.seed, 0))
    return results
