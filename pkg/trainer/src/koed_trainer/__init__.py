"""Training side of the koed surrogate: consumes dataset JSONL files, trains
the message-passing regressor with an optional monotonicity-constraint
penalty, and exports weight bundles in the runtime's JSON format."""

from .data import Dataset, GraphBatch, read_dataset
from .model import SurrogateNet, constraint_penalty, loss_terms
from .train import (TrainConfig, Phase, TrainResult, train, export_bundle,
                    load_bundle_model, val_split_indices)

__all__ = [
    "Dataset",
    "GraphBatch",
    "read_dataset",
    "SurrogateNet",
    "constraint_penalty",
    "loss_terms",
    "TrainConfig",
    "Phase",
    "TrainResult",
    "train",
    "export_bundle",
    "load_bundle_model",
    "val_split_indices",
]
