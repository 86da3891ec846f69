"""Domain types, pair ordering, and serialization shared by all modules.

Oscillator pairs are stored as flat vectors in lexicographic order
(1,2),(1,3),...,(N-1,N).  Oscillator indices are 1-based in all public
interfaces.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "UncertaintyClass",
    "KuramotoInstance",
    "ExperimentId",
    "ExperimentOutcome",
    "OEDStep",
    "OEDTrace",
    "FormatError",
    "pair_index",
    "pair_from_index",
    "all_pairs",
    "n_pairs",
    "sync_threshold",
]


class FormatError(ValueError):
    """Raised when a serialized artifact fails schema or shape validation."""


def n_pairs(n: int) -> int:
    return n * (n - 1) // 2


def pair_index(i: int, j: int, n: int) -> int:
    """Flat index of pair (i, j), 1-based, i < j, lexicographic order."""
    if not (1 <= i < j <= n):
        raise ValueError(f"invalid pair ({i},{j}) for n={n}")
    return (i - 1) * (2 * n - i) // 2 + (j - i - 1)


def pair_from_index(k: int, n: int) -> tuple[int, int]:
    """Inverse of pair_index."""
    if not (0 <= k < n_pairs(n)):
        raise ValueError(f"invalid pair index {k} for n={n}")
    i = 1
    offset = k
    while offset >= n - i:
        offset -= n - i
        i += 1
    return i, i + 1 + offset


def all_pairs(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(1, n) for j in range(i + 1, n + 1)]


def _as_vector(x: Sequence[float], name: str, length: int | None = None) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"{name} must be a 1-d vector")
    if length is not None and v.shape[0] != length:
        raise ValueError(f"{name} must have length {length}, got {v.shape[0]}")
    v.setflags(write=False)
    return v


def _fmt(x: float) -> str:
    # 17 significant digits round-trips IEEE-754 doubles exactly.
    return format(float(x), ".17g")


def _fmt_vec(v: np.ndarray) -> str:
    return "[" + ", ".join(_fmt(x) for x in v) + "]"


@dataclass(frozen=True)
class UncertaintyClass:
    """Interval-bounded Kuramoto model family: frequencies plus per-pair
    lower/upper coupling bounds under a uniform prior."""

    n: int
    omegas: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be >= 2")
        p = n_pairs(self.n)
        object.__setattr__(self, "omegas", _as_vector(self.omegas, "omegas", self.n))
        object.__setattr__(self, "lower", _as_vector(self.lower, "lower", p))
        object.__setattr__(self, "upper", _as_vector(self.upper, "upper", p))
        if np.any(self.lower < 0):
            raise ValueError("lower bounds must be >= 0")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bounds must not exceed upper bounds")

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return all_pairs(self.n)

    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    def with_bounds(self, k: int, lower: float | None = None,
                    upper: float | None = None) -> "UncertaintyClass":
        lo = self.lower.copy()
        up = self.upper.copy()
        if lower is not None:
            lo[k] = lower
        if upper is not None:
            up[k] = upper
        return UncertaintyClass(self.n, self.omegas, lo, up)

    def to_json(self) -> str:
        return (
            "{"
            f'"n": {self.n}, '
            f'"omegas": {_fmt_vec(self.omegas)}, '
            f'"lower": {_fmt_vec(self.lower)}, '
            f'"upper": {_fmt_vec(self.upper)}'
            "}"
        )

    @classmethod
    def from_json(cls, text: str) -> "UncertaintyClass":
        return cls.from_dict(_load_object(text))

    @classmethod
    def from_dict(cls, obj: dict) -> "UncertaintyClass":
        try:
            return cls(int(obj["n"]), obj["omegas"], obj["lower"], obj["upper"])
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"bad UncertaintyClass object: {exc}") from exc


@dataclass(frozen=True)
class KuramotoInstance:
    """One concrete Kuramoto model: a point in an uncertainty class."""

    n: int
    omegas: np.ndarray
    couplings: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "omegas", _as_vector(self.omegas, "omegas", self.n))
        object.__setattr__(
            self, "couplings", _as_vector(self.couplings, "couplings", n_pairs(self.n))
        )
        if np.any(self.couplings < 0):
            raise ValueError("couplings must be >= 0")

    def coupling_matrix(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for k, (i, j) in enumerate(all_pairs(self.n)):
            a[i - 1, j - 1] = a[j - 1, i - 1] = self.couplings[k]
        return a

    def to_json(self) -> str:
        return (
            "{"
            f'"n": {self.n}, '
            f'"omegas": {_fmt_vec(self.omegas)}, '
            f'"couplings": {_fmt_vec(self.couplings)}'
            "}"
        )

    @classmethod
    def from_json(cls, text: str) -> "KuramotoInstance":
        obj = _load_object(text)
        try:
            return cls(int(obj["n"]), obj["omegas"], obj["couplings"])
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"bad KuramotoInstance object: {exc}") from exc


@dataclass(frozen=True, order=True)
class ExperimentId:
    """A pairwise synchronization experiment: isolate oscillators (i, j)."""

    i: int
    j: int

    def __post_init__(self):
        if not (1 <= self.i < self.j):
            raise ValueError(f"need 1 <= i < j, got ({self.i},{self.j})")

    def index(self, n: int) -> int:
        return pair_index(self.i, self.j, n)


@dataclass(frozen=True)
class ExperimentOutcome:
    synchronized: bool


@dataclass(frozen=True)
class OEDStep:
    experiment: ExperimentId
    outcome: ExperimentOutcome
    mocu_mean: float
    mocu_std: float
    select_seconds: float


@dataclass
class OEDTrace:
    """Per-step record of one OED trial."""

    trial: int
    policy: str
    steps: list[OEDStep] = field(default_factory=list)

    def append(self, step: OEDStep) -> None:
        if any(s.experiment == step.experiment for s in self.steps):
            raise ValueError(f"experiment {step.experiment} repeated in trace")
        self.steps.append(step)


def _load_object(text: str) -> dict:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise FormatError("expected a JSON object")
    return obj


def sync_threshold(uclass: UncertaintyClass, i: int, j: int) -> float:
    """Synchronization threshold of pair (i, j), clamped into its bounds:
    min(max(|omega_i - omega_j| / 2, lower), upper)."""
    k = pair_index(i, j, uclass.n)
    half_gap = 0.5 * abs(uclass.omegas[i - 1] - uclass.omegas[j - 1])
    return float(min(max(half_gap, uclass.lower[k]), uclass.upper[k]))
