"""Objective-based uncertainty quantification (MOCU) and optimal experimental
design for uncertain Kuramoto oscillator models, with an MPNN surrogate
runtime for fast MOCU inference."""

from .core import (ExperimentId, ExperimentOutcome, FormatError,
                   KuramotoInstance, OEDStep, OEDTrace, UncertaintyClass,
                   pair_index, sync_threshold)
from .dynamics import (NoSynchronizationError, NumericalBlowupError, SimConfig,
                       integrate, is_synchronized, min_control_cost)
from .mocu import (MocuEstimate, estimate_mocu, expected_remaining_mocu,
                   sample_instance)
from .oed import (GroundTruth, OEDPolicy, apply_outcome, conduct_experiment,
                  run_oed, select_experiment)
from .surrogate import (WeightBundle, encode, load_weights, predict,
                        predict_expected_remaining, random_bundle,
                        save_weights)

__version__ = "0.1.0"
