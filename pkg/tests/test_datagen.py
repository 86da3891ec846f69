import json

import numpy as np
import pytest

from koed.core import FormatError, all_pairs, n_pairs
from koed.datagen import (GenProfile, generate_class, generate_class_with_flags,
                          generate_dataset, read_dataset, split_dataset,
                          write_dataset)
from koed.dynamics import SimConfig
from koed.fixtures import PROFILE_N5, PROFILE_N7

FAST = SimConfig()
SMALL = GenProfile(n=3, freq_range=2.0, strong_cap=1.1, weak_cap=0.6,
                   uncertain_cap=0.3, count=12, label_k=16, seed=3)


class TestGenProfile:
    def test_published_profiles(self):
        assert (PROFILE_N5.n, PROFILE_N5.freq_range) == (5, 6.0)
        assert (PROFILE_N5.strong_cap, PROFILE_N5.weak_cap,
                PROFILE_N5.uncertain_cap) == (1.1, 0.6, 0.3)
        assert (PROFILE_N7.n, PROFILE_N7.freq_range) == (7, 10.0)
        assert (PROFILE_N7.strong_cap, PROFILE_N7.weak_cap,
                PROFILE_N7.uncertain_cap) == (1.2, 0.25, 0.6)

    def test_validation(self):
        with pytest.raises(ValueError):
            GenProfile(n=3, freq_range=0.0, strong_cap=1.0, weak_cap=0.5,
                       uncertain_cap=0.3)
        with pytest.raises(ValueError):
            GenProfile(n=3, freq_range=1.0, strong_cap=1.0, weak_cap=0.5,
                       uncertain_cap=0.3, partitioned_fraction=1.5)


class TestGenerateClass:
    def test_bounds_recipe(self):
        # reconstruct midpoint/width from the drawn class: with caps D1 > 1
        # and D3 < 1 the lower clamp at 0 rarely binds, but when it does the
        # midpoint shifts, so check the envelope constraints instead
        rng = np.random.default_rng(0)
        for _ in range(50):
            cls = generate_class(SMALL, rng)
            f = np.array([0.5 * abs(cls.omegas[i - 1] - cls.omegas[j - 1])
                          for i, j in all_pairs(cls.n)])
            assert np.all(cls.lower >= 0.0)
            assert np.all(cls.upper >= cls.lower)
            # width <= 2 * D3 * F, midpoint before clamping <= D1 * F
            assert np.all(cls.upper - cls.lower
                          <= 2 * SMALL.uncertain_cap * f + 1e-12)
            assert np.all(cls.upper <= (SMALL.strong_cap
                                        + SMALL.uncertain_cap) * f + 1e-12)

    def test_omega_range(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            cls = generate_class(SMALL, rng)
            assert np.all(np.abs(cls.omegas) <= SMALL.freq_range)

    def test_partition_row_constant(self):
        rng = np.random.default_rng(2)
        saw_partitioned = False
        for _ in range(100):
            cls, b, partitioned = generate_class_with_flags(SMALL, rng)
            if not partitioned:
                continue
            saw_partitioned = True
            rows = {}
            for k, (i, j) in enumerate(all_pairs(cls.n)):
                rows.setdefault(i, set()).add(bool(b[k]))
            assert all(len(v) == 1 for v in rows.values())
        assert saw_partitioned

    def test_partitioned_fraction(self):
        rng = np.random.default_rng(3)
        flags = [generate_class_with_flags(SMALL, rng)[2] for _ in range(2000)]
        assert abs(np.mean(flags) - SMALL.partitioned_fraction) < 0.05


class TestGenerateDataset:
    def test_labels_and_normalization(self):
        samples, header = generate_dataset(SMALL, config=FAST)
        assert header.count == len(samples) == SMALL.count - header.failures
        raw = np.array([s.mocu_label for s in samples])
        norm = np.array([s.normalized_label for s in samples])
        assert np.all(raw >= 0.0)
        assert header.label_mean == pytest.approx(raw.mean())
        if not header.degenerate_std:
            assert header.label_std == pytest.approx(raw.std())
            assert norm.mean() == pytest.approx(0.0, abs=1e-12)
            assert norm.std() == pytest.approx(1.0)

    def test_deterministic(self):
        a, ha = generate_dataset(SMALL, config=FAST)
        b, hb = generate_dataset(SMALL, config=FAST)
        assert ha == hb
        assert all(x.mocu_label == y.mocu_label for x, y in zip(a, b))


class TestSplitAndIO:
    def test_split_sizes(self):
        samples, _ = generate_dataset(SMALL, config=FAST)
        train, val = split_dataset(samples, 0.75)
        assert len(train) == int(np.floor(0.75 * len(samples)))
        assert len(train) + len(val) == len(samples)

    def test_round_trip(self, tmp_path):
        samples, header = generate_dataset(SMALL, config=FAST)
        path = tmp_path / "data.jsonl"
        write_dataset(str(path), samples, header)
        back, back_header = read_dataset(str(path))
        assert back_header == header
        for s, t in zip(samples, back):
            assert s.mocu_label == t.mocu_label
            assert s.normalized_label == t.normalized_label
            assert np.array_equal(s.uclass.lower, t.uclass.lower)
            assert np.array_equal(s.uclass.upper, t.uclass.upper)
            assert np.array_equal(s.uclass.omegas, t.uclass.omegas)

    def test_bad_header_raises(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"not_header": 1}\n')
        with pytest.raises(FormatError):
            read_dataset(str(path))

    def test_bad_line_raises(self, tmp_path):
        samples, header = generate_dataset(SMALL, config=FAST)
        path = tmp_path / "bad2.jsonl"
        write_dataset(str(path), samples, header)
        with open(path, "a") as fh:
            fh.write("not json\n")
        with pytest.raises(FormatError):
            read_dataset(str(path))
