"""Training loop: phased schedule, per-epoch validation with best-checkpoint
retention, CSV logging, and export to the runtime weight-bundle JSON."""

from __future__ import annotations

import copy
import json
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np
import torch

from .data import DataError, Dataset, iter_batches
from .model import SurrogateNet, loss_terms

BUNDLE_FORMAT_VERSION = 1


class ConfigError(ValueError):
    """Inconsistent training configuration."""


@dataclass(frozen=True)
class Phase:
    """One schedule phase: epoch count plus dataset mix ratios (by index
    into the dataset list; ratios must sum to 1)."""

    epochs: int
    mix: dict[int, float]

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError("phase epochs must be >= 1")
        if abs(sum(self.mix.values()) - 1.0) > 1e-9:
            raise ConfigError("phase mix ratios must sum to 1")
        if any(r < 0 for r in self.mix.values()):
            raise ConfigError("phase mix ratios must be non-negative")


@dataclass(frozen=True)
class TrainConfig:
    phases: tuple[Phase, ...]
    batch_size: int = 128
    learning_rate: float = 1e-3
    lam: float = 1e-4
    val_fraction: float = 0.04
    seed: int = 0

    def __post_init__(self):
        if self.lam < 0:
            raise ConfigError("lambda must be >= 0")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if not self.phases:
            raise ConfigError("at least one phase is required")


@dataclass
class EpochRecord:
    phase: int
    epoch: int
    train_loss: float
    val_loss: float
    val_mse: float
    val_penalty: float


@dataclass
class TrainResult:
    model: SurrogateNet
    label_mean: float
    label_std: float
    best_val_loss: float
    best_val_mse: float
    log: list[EpochRecord] = field(default_factory=list)


def val_split_indices(count: int, fraction: float,
                      seed: int) -> tuple[np.ndarray, np.ndarray]:
    """(validation, training) index arrays for one dataset; deterministic in
    the config seed so the split can be reconstructed after the fact."""
    order = np.random.default_rng(seed + 1).permutation(count)
    n_val = max(int(fraction * count), 1) if fraction > 0 else 0
    return order[:n_val], order[n_val:]


def load_bundle_model(path: str) -> tuple[SurrogateNet, float, float]:
    """Rebuild a torch model (float64) from a runtime weight-bundle JSON;
    returns (model, label_mean, label_std)."""
    with open(path) as fh:
        obj = json.load(fh)
    meta = obj["meta"]
    if meta["format_version"] != BUNDLE_FORMAT_VERSION:
        raise DataError(f"unknown format_version {meta['format_version']}")
    model = SurrogateNet(hidden_dim=int(meta["hidden_dim"]),
                         filter_hidden=int(meta["filter_hidden"]),
                         message_steps=int(meta["message_steps"]),
                         set2set_steps=int(meta["set2set_steps"]))
    model.double()
    state = {name: torch.tensor(np.asarray(spec["data"], dtype=np.float64)
                                .reshape(spec["shape"]))
             for name, spec in obj["tensors"].items()}
    model.load_state_dict(state)
    model.eval()
    return model, float(meta["label_mean"]), float(meta["label_std"])


def _evaluate(model, samples, labels, batch_size, lam):
    losses, mses, pens, weights = [], [], [], []
    for batch in iter_batches(samples, labels, batch_size):
        total, mse, pen = loss_terms(model, batch, lam)
        k = batch.labels.shape[0]
        losses.append(total.detach().item() * k)
        mses.append(mse.detach().item() * k)
        pens.append(pen.detach().item())
        weights.append(k)
    n = sum(weights)
    return sum(losses) / n, sum(mses) / n, sum(pens) / n


def _phase_pool(datasets, phase, labels_by_ds, rng):
    """Samples (with labels) for one phase honouring the mix ratios; the
    largest-ratio dataset is used in full and the others subsampled to
    match."""
    sizes = {i: len(datasets[i]) for i in phase.mix}
    anchor = max(phase.mix, key=lambda i: phase.mix[i])
    pool_total = int(round(sizes[anchor] / phase.mix[anchor]))
    samples, labels = [], []
    for i, ratio in phase.mix.items():
        want = min(int(round(ratio * pool_total)), sizes[i])
        take = rng.permutation(sizes[i])[:want]
        samples.extend(datasets[i][j] for j in take)
        labels.extend(labels_by_ds[i][j] for j in take)
    return samples, np.array(labels)


def train(datasets: list[Dataset], config: TrainConfig,
          log_path: str | None = None) -> TrainResult:
    """Train per the phased schedule.  Label normalization statistics come
    from the first dataset and are applied to every phase; each phase gets a
    fresh optimizer.  The parameters with the lowest validation loss across
    all epochs are retained."""
    for i, phase in enumerate(config.phases):
        for idx in phase.mix:
            if not 0 <= idx < len(datasets):
                raise ConfigError(f"phase {i} references dataset {idx}, "
                                  f"but only {len(datasets)} were given")
    mean, std = datasets[0].label_mean, datasets[0].label_std
    labels_by_ds = [(np.array([s.mocu for s in ds.samples]) - mean) / std
                    for ds in datasets]

    torch.manual_seed(config.seed)
    model = SurrogateNet()
    val_samples, val_labels = [], []
    train_sets = []
    rng = np.random.default_rng(config.seed)
    for ds, labels in zip(datasets, labels_by_ds):
        val_idx, train_idx = val_split_indices(len(ds), config.val_fraction,
                                               config.seed)
        val_samples.extend(ds.samples[j] for j in val_idx)
        val_labels.extend(labels[j] for j in val_idx)
        train_sets.append(([ds.samples[j] for j in train_idx],
                           labels[train_idx]))
    val_labels = np.array(val_labels)
    if not val_samples:
        raise ConfigError("validation split is empty")

    best_state = copy.deepcopy(model.state_dict())
    best_val = float("inf")
    best_mse = float("inf")
    log: list[EpochRecord] = []
    for p, phase in enumerate(config.phases):
        pool, pool_labels = _phase_pool(
            [ts[0] for ts in train_sets], phase,
            [ts[1] for ts in train_sets], rng)
        optimizer = torch.optim.Adam(model.parameters(),
                                     lr=config.learning_rate)
        for epoch in range(phase.epochs):
            model.train()
            seen, accum = 0, 0.0
            for batch in iter_batches(pool, pool_labels, config.batch_size,
                                      rng):
                optimizer.zero_grad()
                total, _, _ = loss_terms(model, batch, config.lam,
                                         with_penalty=config.lam > 0)
                total.backward()
                optimizer.step()
                k = batch.labels.shape[0]
                accum += total.detach().item() * k
                seen += k
            model.eval()
            val_loss, val_mse, val_pen = _evaluate(
                model, val_samples, val_labels, config.batch_size, config.lam)
            log.append(EpochRecord(p, epoch, accum / seen, val_loss, val_mse,
                                   val_pen))
            if val_loss < best_val:
                best_val = val_loss
                best_mse = val_mse
                best_state = copy.deepcopy(model.state_dict())

    model.load_state_dict(best_state)
    model.eval()
    result = TrainResult(model=model, label_mean=mean, label_std=std,
                         best_val_loss=best_val, best_val_mse=best_mse,
                         log=log)
    if log_path is not None:
        write_log(log_path, log)
    return result


def write_log(path: str, log: list[EpochRecord]) -> None:
    import csv
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["phase", "epoch", "train_loss", "val_loss", "val_mse",
                    "val_penalty"])
        for r in log:
            w.writerow([r.phase, r.epoch, f"{r.train_loss:.8e}",
                        f"{r.val_loss:.8e}", f"{r.val_mse:.8e}",
                        f"{r.val_penalty:.8e}"])


def export_bundle(result: TrainResult, path: str) -> None:
    """Write the trained weights in the runtime bundle format (named
    tensors, row-major doubles) together with the label statistics."""
    model = result.model
    tensors = {}
    for name, t in model.state_dict().items():
        arr = t.detach().cpu().double().numpy()
        tensors[name] = {"shape": list(arr.shape),
                         "data": [float(x) for x in arr.ravel()]}
    obj = {"meta": {"format_version": BUNDLE_FORMAT_VERSION,
                    "hidden_dim": model.hidden_dim,
                    "message_steps": model.message_steps,
                    "set2set_steps": model.set2set_steps,
                    "filter_hidden": model.filter_hidden,
                    "label_mean": result.label_mean,
                    "label_std": result.label_std},
           "tensors": tensors}
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(obj, fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
