"""Generation of labeled uncertainty-class datasets for surrogate training.

Per-pair bounds follow the published generation recipe: the interval midpoint
is a strong/weak factor times the pair's synchronization threshold
F_ij = |w_i - w_j| / 2 and the interval width is 2 * d_uncertain * F_ij.
Datasets are JSON-lines with a machine-readable header carrying the label
normalization statistics shared with the trainer and runtime.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict, replace

import numpy as np

from .core import FormatError, UncertaintyClass, all_pairs, n_pairs
from .dynamics import SimConfig
from .mocu import estimate_mocu

__all__ = [
    "GenProfile",
    "LabeledSample",
    "DatasetHeader",
    "generate_class",
    "generate_class_with_flags",
    "generate_dataset",
    "split_dataset",
    "write_dataset",
    "read_dataset",
]


@dataclass(frozen=True)
class GenProfile:
    """Sampling profile: frequency half-range and the strong / weak /
    uncertainty factor caps, plus labeling parameters."""

    n: int
    freq_range: float          # C: omegas uniform on [-C, C]
    strong_cap: float          # D1
    weak_cap: float            # D2
    uncertain_cap: float       # D3
    partitioned_fraction: float = 0.67
    count: int = 1000
    label_k: int = 2048
    seed: int = 0

    def __post_init__(self):
        if min(self.freq_range, self.strong_cap, self.weak_cap,
               self.uncertain_cap) <= 0:
            raise ValueError("C, D1, D2, D3 must be > 0")
        if not (0.0 <= self.partitioned_fraction <= 1.0):
            raise ValueError("partitioned_fraction must be in [0, 1]")


@dataclass(frozen=True)
class LabeledSample:
    uclass: UncertaintyClass
    mocu_label: float
    normalized_label: float


@dataclass(frozen=True)
class DatasetHeader:
    profile: dict
    seed: int
    label_k: int
    label_mean: float
    label_std: float
    count: int
    failures: int = 0
    degenerate_std: bool = False


def generate_class(profile: GenProfile, rng: np.random.Generator) -> UncertaintyClass:
    """Draw one uncertainty class from the profile's distribution."""
    return generate_class_with_flags(profile, rng)[0]


def generate_class_with_flags(profile: GenProfile, rng: np.random.Generator
                              ) -> tuple[UncertaintyClass, np.ndarray, bool]:
    """As generate_class, also returning the strong/weak edge flags and
    whether the partition constraint was applied."""
    n = profile.n
    p = n_pairs(n)
    omegas = rng.uniform(-profile.freq_range, profile.freq_range, size=n)
    d_strong = rng.uniform(0.0, profile.strong_cap, size=p)
    d_weak = rng.uniform(0.0, profile.weak_cap, size=p)
    d_unc = rng.uniform(0.0, profile.uncertain_cap, size=p)
    partitioned = rng.random() < profile.partitioned_fraction
    if partitioned:
        # One strong/weak flag per oscillator, constant along each row i of
        # the pair ordering: b_{i,j} = s_i for all j > i.
        s = rng.random(n) < 0.5
        b = np.array([s[i - 1] for i, _ in all_pairs(n)])
    else:
        b = rng.random(p) < 0.5
    f = np.array([0.5 * abs(omegas[i - 1] - omegas[j - 1])
                  for i, j in all_pairs(n)])
    mid = np.where(b, d_strong, d_weak) * f
    half = d_unc * f
    lower = np.maximum(0.0, mid - half)
    upper = mid + half
    cls = UncertaintyClass(n, omegas, lower, np.maximum(upper, lower))
    return cls, b, partitioned


def generate_dataset(profile: GenProfile, config: SimConfig = SimConfig(),
                     progress=None) -> tuple[list[LabeledSample], DatasetHeader]:
    """Generate and label `profile.count` classes.  Per-sample seeds are
    fixed by index, so results do not depend on evaluation order.  Labeling
    failures are excluded and counted in the header."""
    classes = []
    for idx in range(profile.count):
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=profile.seed, spawn_key=(idx,)))
        classes.append(generate_class(profile, rng))
    labels = []
    kept = []
    failures = 0
    for idx, cls in enumerate(classes):
        try:
            est = estimate_mocu(cls, profile.label_k, config=config,
                                seed=profile.seed * 1000003 + idx)
        except RuntimeError:
            failures += 1
            continue
        labels.append(est.value)
        kept.append(cls)
        if progress is not None:
            progress(idx + 1, profile.count)
    raw = np.asarray(labels)
    mean = float(raw.mean()) if raw.size else 0.0
    degenerate = raw.size < 2 or float(raw.std()) == 0.0
    std = 1.0 if degenerate else float(raw.std())
    samples = [LabeledSample(c, float(y), float((y - mean) / std))
               for c, y in zip(kept, raw)]
    header = DatasetHeader(profile=asdict(profile), seed=profile.seed,
                           label_k=profile.label_k, label_mean=mean,
                           label_std=std, count=len(samples),
                           failures=failures, degenerate_std=degenerate)
    return samples, header


def split_dataset(samples: list[LabeledSample], train_fraction: float = 0.96
                  ) -> tuple[list[LabeledSample], list[LabeledSample]]:
    cut = math.floor(train_fraction * len(samples))
    return samples[:cut], samples[cut:]


def write_dataset(path: str, samples: list[LabeledSample],
                  header: DatasetHeader) -> None:
    with open(path, "w") as fh:
        fh.write(json.dumps({"header": asdict(header)}) + "\n")
        for s in samples:
            fh.write(json.dumps({
                "class": json.loads(s.uclass.to_json()),
                "mocu": s.mocu_label,
                "normalized": s.normalized_label,
            }) + "\n")


def read_dataset(path: str) -> tuple[list[LabeledSample], DatasetHeader]:
    with open(path) as fh:
        first = fh.readline()
        try:
            header = DatasetHeader(**json.loads(first)["header"])
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise FormatError(f"bad dataset header in {path}: {exc}") from exc
        samples = []
        for line in fh:
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                samples.append(LabeledSample(
                    UncertaintyClass.from_dict(obj["class"]),
                    float(obj["mocu"]), float(obj["normalized"])))
            except (KeyError, TypeError, json.JSONDecodeError) as exc:
                raise FormatError(f"bad dataset line in {path}: {exc}") from exc
    return samples, header
