"""Sequential experimental design: rank pairwise synchronization experiments
by expected remaining MOCU (sampling- or surrogate-based), conduct them
against a hidden ground truth, update bounds, and record traces.

Entropy (largest uncertain range first) and uniform-random policies are the
baselines.  Experiment outcomes use the exact two-oscillator threshold
predicate; a simulation-backed mode exists for validation.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field

import numpy as np

from .core import (ExperimentId, ExperimentOutcome, KuramotoInstance, OEDStep,
                   OEDTrace, UncertaintyClass, all_pairs, pair_index,
                   sync_threshold)
from .dynamics import SimConfig, is_synchronized
from .mocu import (default_control_omega, estimate_mocu,
                   expected_remaining_mocu, sample_instance)

__all__ = [
    "OEDPolicy",
    "GroundTruth",
    "conduct_experiment",
    "apply_outcome",
    "select_experiment",
    "run_oed",
    "traces_to_csv",
    "curve_summary",
    "write_curve_csv",
]

POLICY_KINDS = ("sampling", "surrogate", "surrogate-iterative", "entropy",
                "random")


@dataclass(frozen=True)
class OEDPolicy:
    kind: str
    k: int = 2048
    seed: int = 0
    bundle: object = None  # WeightBundle for surrogate kinds
    common_random_numbers: bool = True

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if self.kind.startswith("surrogate") and self.bundle is None:
            raise ValueError(f"policy {self.kind!r} requires a weight bundle")

    @property
    def iterative(self) -> bool:
        return self.kind in ("surrogate-iterative",)


@dataclass(frozen=True)
class GroundTruth:
    """Hidden true model; its couplings stay inside the initial bounds."""

    instance: KuramotoInstance


def conduct_experiment(truth: GroundTruth, experiment: ExperimentId,
                       simulate: bool = False,
                       config: SimConfig = SimConfig()) -> ExperimentOutcome:
    """Outcome of isolating pair (i, j) of the true model: synchronized iff
    |w_i - w_j| / 2 <= a*_{i,j} (exact predicate; `simulate` integrates the
    isolated pair instead)."""
    inst = truth.instance
    i, j = experiment.i, experiment.j
    a_true = inst.couplings[pair_index(i, j, inst.n)]
    if simulate:
        pair = KuramotoInstance(2, [inst.omegas[i - 1], inst.omegas[j - 1]],
                                [a_true])
        return ExperimentOutcome(is_synchronized(pair, 0.0,
                                                 float(np.mean(pair.omegas)),
                                                 config))
    thr = 0.5 * abs(inst.omegas[i - 1] - inst.omegas[j - 1])
    return ExperimentOutcome(bool(thr <= a_true))


def apply_outcome(uclass: UncertaintyClass, experiment: ExperimentId,
                  outcome: ExperimentOutcome) -> UncertaintyClass:
    """Tighten the pair's interval at the clamped threshold: synchronized
    raises the lower bound, otherwise the upper bound drops."""
    k = experiment.index(uclass.n)
    a_tilde = sync_threshold(uclass, experiment.i, experiment.j)
    if outcome.synchronized:
        return uclass.with_bounds(k, lower=a_tilde)
    return uclass.with_bounds(k, upper=a_tilde)


def _score_experiments(uclass: UncertaintyClass, remaining, policy: OEDPolicy,
                       config: SimConfig, control_omega: float,
                       seed: int) -> dict[ExperimentId, float]:
    if policy.kind in ("sampling",):
        return {e: expected_remaining_mocu(
                    uclass, e, policy.k, control_omega, config, seed=seed,
                    common_random_numbers=policy.common_random_numbers)
                for e in remaining}
    # surrogate kinds
    from .surrogate import predict_expected_remaining
    return {e: predict_expected_remaining(policy.bundle, uclass, e)
            for e in remaining}


def select_experiment(uclass: UncertaintyClass, remaining: set[ExperimentId],
                      policy: OEDPolicy, config: SimConfig = SimConfig(),
                      control_omega: float | None = None, seed: int = 0,
                      rng: np.random.Generator | None = None) -> ExperimentId:
    """Pick the next experiment.  MOCU-driven kinds minimize expected
    remaining MOCU; entropy maximizes the uncertain range; random draws
    uniformly.  Ties break toward the lowest pair index."""
    if not remaining:
        raise ValueError("remaining experiment set is empty")
    ordered = sorted(remaining, key=lambda e: e.index(uclass.n))
    if len(ordered) == 1:
        return ordered[0]
    if policy.kind == "random":
        rng = rng or np.random.default_rng(seed)
        return ordered[rng.integers(len(ordered))]
    if policy.kind == "entropy":
        widths = uclass.widths()
        return max(ordered, key=lambda e: (widths[e.index(uclass.n)],
                                           -e.index(uclass.n)))
    if control_omega is None:
        control_omega = default_control_omega(uclass)
    scores = _score_experiments(uclass, ordered, policy, config,
                                control_omega, seed)
    return min(ordered, key=lambda e: (scores[e], e.index(uclass.n)))


def _eval_seed(base: int, rep: int) -> int:
    return (base * 1000003 + rep) & 0x7FFFFFFF


_EVAL_CACHE: dict = {}


def evaluate_mocu(uclass: UncertaintyClass, eval_k: int, eval_reps: int,
                  config: SimConfig, control_omega: float,
                  seed: int) -> tuple[float, float]:
    """Sampling-based evaluation MOCU: mean and std over eval_reps
    independent estimates.  Memoized on (class, parameters)."""
    key = (uclass.omegas.tobytes(), uclass.lower.tobytes(),
           uclass.upper.tobytes(), eval_k, eval_reps, config, control_omega,
           seed)
    hit = _EVAL_CACHE.get(key)
    if hit is not None:
        return hit
    vals = np.array([estimate_mocu(uclass, eval_k, control_omega, config,
                                   seed=_eval_seed(seed, r)).value
                     for r in range(eval_reps)])
    out = (float(vals.mean()), float(vals.std()))
    _EVAL_CACHE[key] = out
    return out


def run_oed(uclass: UncertaintyClass, policy: OEDPolicy,
            config: SimConfig = SimConfig(),
            control_omega: float | None = None, truth_seed: int = 0,
            eval_k: int = 2048, eval_reps: int = 10, eval_seed: int = 7,
            trials: int = 1, simulate_experiments: bool = False,
            progress=None) -> list[OEDTrace]:
    """Full OED runs: per trial, draw a hidden truth and loop
    select / conduct / apply until the experiment set is exhausted.

    Non-iterative MOCU policies rank every experiment once on the initial
    class and replay that order; the iterative surrogate re-ranks after each
    update.  After every update the trace records a sampling-based MOCU
    evaluation of the current class (mean and std of eval_reps estimates)."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if control_omega is None:
        control_omega = default_control_omega(uclass)
    pairs = [ExperimentId(i, j) for i, j in all_pairs(uclass.n)]
    traces: list[OEDTrace] = []

    static_order: list[ExperimentId] | None = None
    if policy.kind in ("sampling", "surrogate"):
        # ranking depends only on the initial class and the policy seed
        t0 = time.perf_counter()
        scores = _score_experiments(uclass, pairs, policy, config,
                                    control_omega, policy.seed)
        rank_seconds = time.perf_counter() - t0
        static_order = sorted(pairs, key=lambda e: (scores[e],
                                                    e.index(uclass.n)))
    elif policy.kind == "entropy":
        widths = uclass.widths()
        static_order = sorted(pairs, key=lambda e: (-widths[e.index(uclass.n)],
                                                    e.index(uclass.n)))
        rank_seconds = 0.0

    for trial in range(trials):
        truth_rng = np.random.default_rng(
            np.random.SeedSequence(entropy=truth_seed, spawn_key=(trial,)))
        truth = GroundTruth(sample_instance(uclass, truth_rng))
        random_rng = np.random.default_rng(
            np.random.SeedSequence(entropy=policy.seed, spawn_key=(trial, 1)))
        current = uclass
        remaining = set(pairs)
        trace = OEDTrace(trial=trial, policy=policy.kind)
        step_no = 0
        while remaining:
            t0 = time.perf_counter()
            if static_order is not None:
                exp = static_order[step_no]
                # one-shot ranking cost is attributed to the first step
                select_s = rank_seconds if step_no == 0 else 0.0
            else:
                exp = select_experiment(current, remaining, policy, config,
                                        control_omega,
                                        seed=_eval_seed(policy.seed, step_no),
                                        rng=random_rng)
                select_s = time.perf_counter() - t0
            outcome = conduct_experiment(truth, exp,
                                         simulate=simulate_experiments,
                                         config=config)
            current = apply_outcome(current, exp, outcome)
            remaining.discard(exp)
            mean, std = evaluate_mocu(current, eval_k, eval_reps, config,
                                      control_omega, eval_seed)
            trace.append(OEDStep(exp, outcome, mean, std, select_s))
            step_no += 1
            if progress is not None:
                progress(trial, step_no, len(pairs))
        traces.append(trace)
    return traces


def traces_to_csv(traces: list[OEDTrace], path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["trial", "step", "i", "j", "outcome", "mocu_mean",
                    "mocu_std", "select_seconds"])
        for tr in traces:
            for s_no, st in enumerate(tr.steps):
                w.writerow([tr.trial, s_no + 1, st.experiment.i,
                            st.experiment.j, int(st.outcome.synchronized),
                            repr(st.mocu_mean), repr(st.mocu_std),
                            repr(st.select_seconds)])


def curve_summary(traces: list[OEDTrace]) -> np.ndarray:
    """Mean evaluation MOCU per step across trials, shape (n_steps,)."""
    mat = np.array([[st.mocu_mean for st in tr.steps] for tr in traces])
    return mat.mean(axis=0)


def write_curve_csv(curves: dict[str, np.ndarray], path: str) -> None:
    names = sorted(curves)
    steps = len(next(iter(curves.values())))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step"] + names)
        for s in range(steps):
            w.writerow([s + 1] + [repr(float(curves[n][s])) for n in names])
