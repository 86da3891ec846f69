import numpy as np
import pytest

from koed.core import ExperimentId, ExperimentOutcome, UncertaintyClass
from koed.dynamics import SimConfig
from koed.oed import (GroundTruth, OEDPolicy, apply_outcome, conduct_experiment,
                      curve_summary, run_oed, select_experiment, traces_to_csv)
from koed.core import KuramotoInstance
from koed.surrogate import random_bundle
from util import random_class

FAST = SimConfig()


def three_osc_truth():
    # pair (1,2): |Δω|/2 = 0.5 <= 0.7 -> sync; (1,3): 1.5 > 1.0 -> no;
    # (2,3): 1.0 <= 1.0 -> sync (boundary inclusive)
    inst = KuramotoInstance(3, [0.0, 1.0, 3.0], [0.7, 1.0, 1.0])
    return GroundTruth(inst)


class TestConductExperiment:
    def test_exact_predicate(self):
        t = three_osc_truth()
        assert conduct_experiment(t, ExperimentId(1, 2)).synchronized
        assert not conduct_experiment(t, ExperimentId(1, 3)).synchronized
        assert conduct_experiment(t, ExperimentId(2, 3)).synchronized

    def test_simulated_matches_predicate_off_boundary(self):
        t = three_osc_truth()
        cfg = SimConfig(duration=40.0)
        for e in (ExperimentId(1, 2), ExperimentId(1, 3)):
            assert (conduct_experiment(t, e, simulate=True, config=cfg)
                    .synchronized == conduct_experiment(t, e).synchronized)


class TestApplyOutcome:
    def test_sync_raises_lower(self):
        c = UncertaintyClass(2, [0.0, 1.2], [0.5], [1.0])  # threshold 0.6
        out = apply_outcome(c, ExperimentId(1, 2), ExperimentOutcome(True))
        assert out.lower[0] == pytest.approx(0.6)
        assert out.upper[0] == 1.0

    def test_nosync_drops_upper(self):
        c = UncertaintyClass(2, [0.0, 1.2], [0.5], [1.0])
        out = apply_outcome(c, ExperimentId(1, 2), ExperimentOutcome(False))
        assert out.lower[0] == 0.5
        assert out.upper[0] == pytest.approx(0.6)

    def test_clamped_threshold_is_noop_width(self):
        c = UncertaintyClass(2, [0.0, 0.4], [0.5], [1.0])  # threshold 0.2 -> 0.5
        out = apply_outcome(c, ExperimentId(1, 2), ExperimentOutcome(True))
        assert out.lower[0] == 0.5 and out.upper[0] == 1.0


class TestSelectExperiment:
    def test_entropy_picks_widest(self):
        c = UncertaintyClass(3, [0.0, 1.0, 2.0], [0.1, 0.2, 0.3],
                             [0.3, 0.9, 0.4])
        pol = OEDPolicy("entropy")
        e = select_experiment(c, {ExperimentId(1, 2), ExperimentId(1, 3),
                                  ExperimentId(2, 3)}, pol)
        assert (e.i, e.j) == (1, 3)

    def test_entropy_tie_breaks_low_index(self):
        c = UncertaintyClass(3, [0.0, 1.0, 2.0], [0.1, 0.1, 0.1],
                             [0.5, 0.5, 0.5])
        e = select_experiment(c, {ExperimentId(1, 2), ExperimentId(1, 3),
                                  ExperimentId(2, 3)}, OEDPolicy("entropy"))
        assert (e.i, e.j) == (1, 2)

    def test_random_deterministic_per_rng(self):
        c = random_class(3, np.random.default_rng(0))
        rem = {ExperimentId(1, 2), ExperimentId(1, 3), ExperimentId(2, 3)}
        a = select_experiment(c, rem, OEDPolicy("random"),
                              rng=np.random.default_rng(4))
        b = select_experiment(c, rem, OEDPolicy("random"),
                              rng=np.random.default_rng(4))
        assert a == b

    def test_sampling_prefers_informative_pair(self):
        # pair (1,2) has zero width (uninformative); (1,3) covers its
        # threshold with a wide interval, so resolving it must shrink MOCU
        c = UncertaintyClass(3, [0.0, 0.6, 3.0], [0.4, 0.2, 0.31],
                             [0.4, 2.8, 0.35])
        pol = OEDPolicy("sampling", k=128, seed=11)
        e = select_experiment(c, {ExperimentId(1, 2), ExperimentId(1, 3)},
                              pol, config=FAST)
        assert (e.i, e.j) == (1, 3)

    def test_surrogate_requires_bundle(self):
        with pytest.raises(ValueError):
            OEDPolicy("surrogate")

    def test_empty_remaining(self):
        c = random_class(3, np.random.default_rng(1))
        with pytest.raises(ValueError):
            select_experiment(c, set(), OEDPolicy("entropy"))


class TestRunOED:
    def test_trace_shape_and_order(self):
        c = random_class(3, np.random.default_rng(2))
        traces = run_oed(c, OEDPolicy("entropy"), config=FAST, eval_k=32,
                         eval_reps=2, trials=2)
        assert len(traces) == 2
        for tr in traces:
            assert len(tr.steps) == 3
            seen = {(s.experiment.i, s.experiment.j) for s in tr.steps}
            assert len(seen) == 3

    def test_deterministic(self):
        c = random_class(3, np.random.default_rng(3))
        kw = dict(config=FAST, eval_k=32, eval_reps=2, trials=2, truth_seed=5)
        a = run_oed(c, OEDPolicy("random", seed=8), **kw)
        b = run_oed(c, OEDPolicy("random", seed=8), **kw)
        assert all(s1.experiment == s2.experiment
                   and s1.mocu_mean == s2.mocu_mean
                   for t1, t2 in zip(a, b)
                   for s1, s2 in zip(t1.steps, t2.steps))

    def test_outcomes_consistent_with_truth(self):
        # truth couplings lie inside the initial bounds, so applying every
        # outcome must keep the class consistent (lower <= true <= upper
        # never violated by an update at the clamped threshold)
        c = random_class(4, np.random.default_rng(4))
        traces = run_oed(c, OEDPolicy("entropy"), config=FAST, eval_k=16,
                         eval_reps=1, trials=1, truth_seed=2)
        assert len(traces[0].steps) == 6

    def test_surrogate_policy_runs(self):
        c = random_class(3, np.random.default_rng(5))
        bundle = random_bundle(seed=0, hidden_dim=8, filter_hidden=4)
        for kind in ("surrogate", "surrogate-iterative"):
            traces = run_oed(c, OEDPolicy(kind, bundle=bundle), config=FAST,
                             eval_k=16, eval_reps=1, trials=1)
            assert len(traces[0].steps) == 3

    def test_csv_and_curve(self, tmp_path):
        c = random_class(3, np.random.default_rng(6))
        traces = run_oed(c, OEDPolicy("random", seed=1), config=FAST,
                         eval_k=16, eval_reps=1, trials=2)
        path = tmp_path / "trace.csv"
        traces_to_csv(traces, str(path))
        lines = path.read_text().strip().splitlines()
        assert lines[0].startswith("trial,step,i,j,outcome")
        assert len(lines) == 1 + 2 * 3
        curve = curve_summary(traces)
        assert curve.shape == (3,)
