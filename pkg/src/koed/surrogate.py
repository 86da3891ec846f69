"""MPNN surrogate inference: encode an uncertainty class as a complete graph,
run T edge-conditioned message-passing steps with a GRU state update, apply a
set2set readout, and map through a two-layer dense head.

Weight bundles are language-neutral JSON (named tensors, row-major flat data,
IEEE-754 doubles) and carry the label normalization statistics, so any
trained bundle is self-describing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import (ExperimentId, FormatError, UncertaintyClass, all_pairs)
from .mocu import conditioned_classes, outcome_probabilities

__all__ = [
    "GraphEncoding",
    "WeightBundle",
    "tensor_shapes",
    "random_bundle",
    "load_weights",
    "save_weights",
    "encode",
    "predict",
    "predict_batch",
    "predict_expected_remaining",
]

FORMAT_VERSION = 1


@dataclass(frozen=True)
class GraphEncoding:
    """Complete-graph encoding: node features are the natural frequencies,
    edge features the (lower, upper) coupling bounds, symmetric per pair."""

    n: int
    node_features: np.ndarray   # (N, 1)
    edge_features: np.ndarray   # (P, 2), pair-ordered
    pairs: tuple[tuple[int, int], ...]


def encode(uclass: UncertaintyClass) -> GraphEncoding:
    return GraphEncoding(
        n=uclass.n,
        node_features=uclass.omegas[:, None].copy(),
        edge_features=np.stack([uclass.lower, uclass.upper], axis=1),
        pairs=tuple(all_pairs(uclass.n)),
    )


def tensor_shapes(hidden_dim: int, filter_hidden: int) -> dict[str, tuple]:
    d, f = hidden_dim, filter_hidden
    return {
        "node_embed.weight": (d, 1),
        "node_embed.bias": (d,),
        "ecc.fc1.weight": (f, 2),
        "ecc.fc1.bias": (f,),
        "ecc.fc2.weight": (d * d, f),
        "ecc.fc2.bias": (d * d,),
        "gru.weight_ih": (3 * d, d),
        "gru.weight_hh": (3 * d, d),
        "gru.bias_ih": (3 * d,),
        "gru.bias_hh": (3 * d,),
        "set2set.weight_ih": (4 * d, 2 * d),
        "set2set.weight_hh": (4 * d, d),
        "set2set.bias_ih": (4 * d,),
        "set2set.bias_hh": (4 * d,),
        "head.fc1.weight": (d, 2 * d),
        "head.fc1.bias": (d,),
        "head.fc2.weight": (1, d),
        "head.fc2.bias": (1,),
    }


@dataclass(frozen=True)
class WeightBundle:
    hidden_dim: int
    message_steps: int
    set2set_steps: int
    filter_hidden: int
    label_mean: float
    label_std: float
    tensors: dict

    def __post_init__(self):
        if self.hidden_dim <= 0:
            raise FormatError("hidden_dim must be > 0")
        if self.message_steps < 1:
            raise FormatError("message_steps must be >= 1")
        if self.set2set_steps < 1:
            raise FormatError("set2set_steps must be >= 1")
        if not self.label_std > 0:
            raise FormatError("label_std must be > 0")
        expected = tensor_shapes(self.hidden_dim, self.filter_hidden)
        for name, shape in expected.items():
            if name not in self.tensors:
                raise FormatError(f"missing tensor {name!r}")
            got = self.tensors[name].shape
            if got != shape:
                raise FormatError(
                    f"tensor {name!r} has shape {got}, expected {shape}")
        extra = set(self.tensors) - set(expected)
        if extra:
            raise FormatError(f"unexpected tensors: {sorted(extra)}")

    def meta(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "hidden_dim": self.hidden_dim,
            "message_steps": self.message_steps,
            "set2set_steps": self.set2set_steps,
            "filter_hidden": self.filter_hidden,
            "label_mean": self.label_mean,
            "label_std": self.label_std,
        }


def random_bundle(seed: int = 0, hidden_dim: int = 64, filter_hidden: int = 32,
                  message_steps: int = 3, set2set_steps: int = 3,
                  label_mean: float = 0.0, label_std: float = 1.0,
                  scale: float = 0.2) -> WeightBundle:
    """Seeded random-weight bundle (test fixtures and untrained baselines)."""
    rng = np.random.default_rng(seed)
    tensors = {name: rng.normal(0.0, scale, size=shape)
               for name, shape in
               tensor_shapes(hidden_dim, filter_hidden).items()}
    return WeightBundle(hidden_dim, message_steps, set2set_steps,
                        filter_hidden, label_mean, label_std, tensors)


def save_weights(bundle: WeightBundle, path: str) -> None:
    obj = {"meta": bundle.meta(),
           "tensors": {name: {"shape": list(t.shape),
                              "data": [float(x) for x in t.ravel()]}
                       for name, t in bundle.tensors.items()}}
    with open(path, "w") as fh:
        json.dump(obj, fh)


def load_weights(path: str) -> WeightBundle:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid weight bundle JSON: {exc}") from exc
    try:
        meta = obj["meta"]
        version = meta["format_version"]
        if version != FORMAT_VERSION:
            raise FormatError(f"unknown format_version {version}")
        tensors = {}
        for name, spec in obj["tensors"].items():
            t = np.asarray(spec["data"], dtype=np.float64)
            shape = tuple(spec["shape"])
            if t.size != int(np.prod(shape)):
                raise FormatError(
                    f"tensor {name!r} data length {t.size} does not match "
                    f"shape {shape}")
            tensors[name] = t.reshape(shape)
        return WeightBundle(
            hidden_dim=int(meta["hidden_dim"]),
            message_steps=int(meta["message_steps"]),
            set2set_steps=int(meta["set2set_steps"]),
            filter_hidden=int(meta["filter_hidden"]),
            label_mean=float(meta["label_mean"]),
            label_std=float(meta["label_std"]),
            tensors=tensors,
        )
    except (KeyError, TypeError) as exc:
        raise FormatError(f"bad weight bundle structure: {exc}") from exc


def _relu(x):
    return np.maximum(x, 0.0)


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _gru_cell(t, m, h):
    """GRU update with input m and state h (gate layout: reset, update,
    candidate)."""
    d = h.shape[-1]
    gi = m @ t["gru.weight_ih"].T + t["gru.bias_ih"]
    gh = h @ t["gru.weight_hh"].T + t["gru.bias_hh"]
    r = _sigmoid(gi[..., :d] + gh[..., :d])
    z = _sigmoid(gi[..., d:2 * d] + gh[..., d:2 * d])
    n = np.tanh(gi[..., 2 * d:] + r * gh[..., 2 * d:])
    return (1.0 - z) * n + z * h


def _lstm_cell(t, x, h, c):
    """LSTM cell (gate layout: input, forget, cell, output)."""
    d = h.shape[-1]
    g = x @ t["set2set.weight_ih"].T + t["set2set.bias_ih"] \
        + h @ t["set2set.weight_hh"].T + t["set2set.bias_hh"]
    i = _sigmoid(g[..., :d])
    f = _sigmoid(g[..., d:2 * d])
    gc = np.tanh(g[..., 2 * d:3 * d])
    o = _sigmoid(g[..., 3 * d:])
    c_new = f * c + i * gc
    return o * np.tanh(c_new), c_new


def _forward(bundle: WeightBundle, enc: GraphEncoding) -> float:
    t = bundle.tensors
    d = bundle.hidden_dim
    n = enc.n
    h = _relu(enc.node_features @ t["node_embed.weight"].T
              + t["node_embed.bias"])                      # (N, d)
    # edge-conditioned filters, one (d, d) matrix per unordered pair
    hid = _relu(enc.edge_features @ t["ecc.fc1.weight"].T + t["ecc.fc1.bias"])
    theta = (hid @ t["ecc.fc2.weight"].T + t["ecc.fc2.bias"]).reshape(-1, d, d)
    for _ in range(bundle.message_steps):
        m = np.zeros_like(h)
        for k, (i, j) in enumerate(enc.pairs):
            m[i - 1] += theta[k] @ h[j - 1]
            m[j - 1] += theta[k] @ h[i - 1]
        h = _gru_cell(t, m, h)
    # set2set readout over final node states
    q_star = np.zeros(2 * d)
    hs = np.zeros(d)
    cs = np.zeros(d)
    for _ in range(bundle.set2set_steps):
        hs, cs = _lstm_cell(t, q_star, hs, cs)
        energy = h @ hs
        alpha = np.exp(energy - energy.max())
        alpha /= alpha.sum()
        read = alpha @ h
        q_star = np.concatenate([hs, read])
    g = _relu(q_star @ t["head.fc1.weight"].T + t["head.fc1.bias"])
    return float((g @ t["head.fc2.weight"].T + t["head.fc2.bias"])[0])


def predict(bundle: WeightBundle, uclass: UncertaintyClass) -> float:
    """MOCU prediction on the raw (denormalized) scale."""
    y = _forward(bundle, encode(uclass))
    return y * bundle.label_std + bundle.label_mean


def predict_batch(bundle: WeightBundle, classes) -> np.ndarray:
    return np.array([predict(bundle, c) for c in classes])


def predict_expected_remaining(bundle: WeightBundle, uclass: UncertaintyClass,
                               experiment: ExperimentId) -> float:
    """Expected remaining MOCU with the surrogate in place of the sampling
    estimator; zero-probability branches are skipped."""
    p1, p0 = outcome_probabilities(uclass, experiment)
    sync_class, nosync_class = conditioned_classes(uclass, experiment)
    total = 0.0
    if p1 > 0.0:
        total += p1 * predict(bundle, sync_class)
    if p0 > 0.0:
        total += p0 * predict(bundle, nosync_class)
    return total
