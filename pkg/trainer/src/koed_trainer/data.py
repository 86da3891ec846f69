"""Dataset JSONL parsing and dense graph batching.

The file format is the labeled-dataset interchange format: the first line is
``{"header": {...}}`` with the generation profile and label normalization
statistics, each following line one labeled class with node frequencies and
per-pair coupling bounds.  This module parses that format independently of
the generator.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import torch


class DataError(ValueError):
    """Malformed dataset file or inconsistent normalization statistics."""


@dataclass(frozen=True)
class Sample:
    n: int
    omegas: np.ndarray       # (N,)
    lower: np.ndarray        # (P,) pair-ordered: (1,2), (1,3), ..., (N-1,N)
    upper: np.ndarray        # (P,)
    mocu: float              # raw-scale label


@dataclass
class Dataset:
    samples: list[Sample]
    label_mean: float
    label_std: float
    label_k: int
    header: dict

    def __len__(self) -> int:
        return len(self.samples)

    def normalized_labels(self) -> np.ndarray:
        raw = np.array([s.mocu for s in self.samples])
        return (raw - self.label_mean) / self.label_std


def pair_index(n: int) -> np.ndarray:
    """(P, 2) array of 0-based endpoint indices in pair order."""
    idx = [(i, j) for i in range(n - 1) for j in range(i + 1, n)]
    return np.array(idx, dtype=np.int64)


def read_dataset(path: str) -> Dataset:
    with open(path) as fh:
        first = fh.readline()
        try:
            header = json.loads(first)["header"]
            mean = float(header["label_mean"])
            std = float(header["label_std"])
            label_k = int(header["label_k"])
        except (KeyError, TypeError, ValueError,
                json.JSONDecodeError) as exc:
            raise DataError(f"bad dataset header in {path}: {exc}") from exc
        if not std > 0:
            raise DataError(f"non-positive label std in {path}")
        samples = []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                c = obj["class"]
                n = int(c["n"])
                s = Sample(n=n,
                           omegas=np.asarray(c["omegas"], dtype=np.float64),
                           lower=np.asarray(c["lower"], dtype=np.float64),
                           upper=np.asarray(c["upper"], dtype=np.float64),
                           mocu=float(obj["mocu"]))
            except (KeyError, TypeError, ValueError,
                    json.JSONDecodeError) as exc:
                raise DataError(
                    f"bad dataset line {lineno} in {path}: {exc}") from exc
            p = n * (n - 1) // 2
            if s.omegas.shape != (n,) or s.lower.shape != (p,) \
                    or s.upper.shape != (p,):
                raise DataError(f"inconsistent vector lengths at line "
                                f"{lineno} in {path}")
            samples.append(s)
    if not samples:
        raise DataError(f"empty dataset {path}")
    return Dataset(samples, mean, std, label_k, header)


@dataclass
class GraphBatch:
    """Dense batch of same-size complete graphs."""

    n: int
    nodes: torch.Tensor      # (B, N, 1) float64
    edges: torch.Tensor      # (B, P, 2) float64
    labels: torch.Tensor     # (B,) float64, normalized scale
    pairs: torch.Tensor      # (P, 2) int64


def make_batch(samples: list[Sample], labels: np.ndarray) -> GraphBatch:
    n = samples[0].n
    if any(s.n != n for s in samples):
        raise DataError("a dense batch requires a single graph size")
    nodes = torch.tensor(np.stack([s.omegas[:, None] for s in samples]))
    edges = torch.tensor(
        np.stack([np.stack([s.lower, s.upper], axis=1) for s in samples]))
    return GraphBatch(n=n, nodes=nodes, edges=edges,
                      labels=torch.tensor(np.asarray(labels, dtype=np.float64)),
                      pairs=torch.from_numpy(pair_index(n)))


def iter_batches(samples: list[Sample], labels: np.ndarray, batch_size: int,
                 rng: np.random.Generator | None = None):
    """Yield dense batches, grouping by graph size; shuffles when rng given."""
    order = np.arange(len(samples))
    if rng is not None:
        rng.shuffle(order)
    by_n: dict[int, list[int]] = {}
    for i in order:
        by_n.setdefault(samples[i].n, []).append(i)
    for idxs in by_n.values():
        for start in range(0, len(idxs), batch_size):
            chunk = idxs[start:start + batch_size]
            yield make_batch([samples[i] for i in chunk], labels[chunk])

