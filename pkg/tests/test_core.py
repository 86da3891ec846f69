import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from koed.core import (ExperimentId, ExperimentOutcome, KuramotoInstance,
                       OEDStep, OEDTrace, UncertaintyClass, all_pairs,
                       n_pairs, pair_from_index, pair_index, sync_threshold)
from koed.fixtures import N5_CLASS, N7_CLASS


class TestPairIndex:
    def test_first_pair(self):
        assert pair_index(1, 2, 5) == 0

    def test_last_pair(self):
        assert pair_index(4, 5, 5) == 9

    def test_second_pair(self):
        assert pair_index(1, 3, 5) == 1

    def test_lexicographic_enumeration(self):
        for n in range(2, 8):
            indices = [pair_index(i, j, n) for i, j in all_pairs(n)]
            assert indices == list(range(n_pairs(n)))

    @given(st.integers(min_value=2, max_value=12))
    def test_round_trip(self, n):
        for k in range(n_pairs(n)):
            i, j = pair_from_index(k, n)
            assert pair_index(i, j, n) == k

    @pytest.mark.parametrize("i,j,n", [(2, 2, 5), (3, 2, 5), (0, 1, 5),
                                       (1, 6, 5)])
    def test_out_of_range(self, i, j, n):
        with pytest.raises(ValueError):
            pair_index(i, j, n)


class TestSyncThreshold:
    def make(self, lo, up):
        return UncertaintyClass(2, [0.0, 1.2], [lo], [up])

    def test_interior(self):
        assert sync_threshold(self.make(0.5, 1.0), 1, 2) == pytest.approx(0.6)

    def test_clamp_lower(self):
        c = UncertaintyClass(2, [0.0, 0.4], [0.5], [1.0])
        assert sync_threshold(c, 1, 2) == 0.5

    def test_clamp_upper(self):
        c = UncertaintyClass(2, [0.0, 3.0], [0.5], [1.0])
        assert sync_threshold(c, 1, 2) == 1.0

    @given(st.floats(min_value=-5, max_value=5),
           st.floats(min_value=0, max_value=2),
           st.floats(min_value=0, max_value=2))
    def test_always_in_bounds(self, gap, lo, width):
        c = UncertaintyClass(2, [0.0, gap], [lo], [lo + width])
        t = sync_threshold(c, 1, 2)
        assert lo <= t <= lo + width


class TestUncertaintyClass:
    def test_invariant_lower_le_upper(self):
        with pytest.raises(ValueError):
            UncertaintyClass(2, [0, 1], [1.0], [0.5])

    def test_invariant_nonneg(self):
        with pytest.raises(ValueError):
            UncertaintyClass(2, [0, 1], [-0.1], [0.5])

    def test_vector_lengths(self):
        with pytest.raises(ValueError):
            UncertaintyClass(3, [0, 1, 2], [0.1], [0.2])

    @pytest.mark.parametrize("cls", [N5_CLASS, N7_CLASS])
    def test_json_round_trip_bit_exact(self, cls):
        rt = UncertaintyClass.from_json(cls.to_json())
        assert rt.n == cls.n
        assert rt.omegas.tobytes() == cls.omegas.tobytes()
        assert rt.lower.tobytes() == cls.lower.tobytes()
        assert rt.upper.tobytes() == cls.upper.tobytes()
        # and a second round trip is textually stable
        assert rt.to_json() == cls.to_json()

    def test_json_round_trip_awkward_floats(self):
        c = UncertaintyClass(2, [1 / 3, np.nextafter(2.0, 3.0)], [0.1], [0.7])
        rt = UncertaintyClass.from_json(c.to_json())
        assert rt.omegas.tobytes() == c.omegas.tobytes()

    def test_with_bounds(self):
        c2 = N5_CLASS.with_bounds(3, lower=1.2)
        assert c2.lower[3] == 1.2
        assert c2.upper[3] == N5_CLASS.upper[3]
        assert np.array_equal(np.delete(c2.lower, 3),
                              np.delete(N5_CLASS.lower, 3))


class TestKuramotoInstance:
    def test_negative_coupling_rejected(self):
        with pytest.raises(ValueError):
            KuramotoInstance(2, [0, 1], [-0.2])

    def test_json_round_trip(self):
        inst = KuramotoInstance(3, [0.1, 0.2, 0.3], [1.0, 2.0, 3.0])
        rt = KuramotoInstance.from_json(inst.to_json())
        assert rt.couplings.tobytes() == inst.couplings.tobytes()

    def test_coupling_matrix_symmetric(self):
        inst = KuramotoInstance(3, [0, 0, 0], [1.0, 2.0, 3.0])
        a = inst.coupling_matrix()
        assert np.array_equal(a, a.T)
        assert a[0, 1] == 1.0 and a[0, 2] == 2.0 and a[1, 2] == 3.0


class TestExperimentTypes:
    def test_experiment_id_validation(self):
        with pytest.raises(ValueError):
            ExperimentId(3, 2)
        with pytest.raises(ValueError):
            ExperimentId(0, 1)

    def test_trace_rejects_duplicate_experiments(self):
        tr = OEDTrace(trial=0, policy="random")
        step = OEDStep(ExperimentId(1, 2), ExperimentOutcome(True), 0.1, 0.0,
                       0.0)
        tr.append(step)
        with pytest.raises(ValueError):
            tr.append(step)


def test_published_class_values_match_json():
    obj = json.loads(N5_CLASS.to_json())
    assert obj["omegas"][0] == -2.50
    assert obj["upper"][8] == 2.6833
    assert obj["lower"][6] == 1.2431
