import csv
import json

import numpy as np
import pytest
import torch

from koed.surrogate import load_weights, predict
from koed.core import UncertaintyClass

from koed_trainer.cli import main
from koed_trainer.data import read_dataset
from koed_trainer.train import (ConfigError, Phase, TrainConfig, export_bundle,
                                load_bundle_model, train, val_split_indices)
from synth_data import write_synth_dataset


@pytest.fixture(scope="module")
def small_data(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "train.jsonl"
    write_synth_dataset(path, n=3, count=80, seed=21)
    return str(path)


def tiny_config(**kw):
    base = dict(phases=(Phase(epochs=3, mix={0: 1.0}),), batch_size=16,
                learning_rate=1e-3, lam=1e-4, val_fraction=0.1, seed=5)
    base.update(kw)
    return TrainConfig(**base)


class TestConfig:
    def test_mix_must_sum_to_one(self):
        with pytest.raises(ConfigError, match="sum to 1"):
            Phase(epochs=1, mix={0: 0.6, 1: 0.6})

    def test_negative_lambda_rejected(self):
        with pytest.raises(ConfigError, match="lambda"):
            tiny_config(lam=-1.0)

    def test_phase_dataset_index_checked(self, small_data):
        ds = read_dataset(small_data)
        config = tiny_config(phases=(Phase(epochs=1, mix={3: 1.0}),))
        with pytest.raises(ConfigError, match="references dataset"):
            train([ds], config)

    def test_val_split_is_deterministic(self):
        v1, t1 = val_split_indices(50, 0.1, seed=9)
        v2, t2 = val_split_indices(50, 0.1, seed=9)
        assert np.array_equal(v1, v2) and np.array_equal(t1, t2)
        assert len(v1) == 5 and len(t1) == 45
        assert not set(v1) & set(t1)


class TestTrain:
    def test_learns_and_logs(self, small_data, tmp_path):
        ds = read_dataset(small_data)
        log_path = tmp_path / "log.csv"
        result = train([ds], tiny_config(phases=(Phase(8, {0: 1.0}),)),
                       log_path=str(log_path))
        assert len(result.log) == 8
        assert result.best_val_loss == min(r.val_loss for r in result.log)
        assert result.log[-1].val_mse < result.log[0].val_mse
        with open(log_path) as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 8
        assert float(rows[-1]["val_loss"]) == pytest.approx(
            result.log[-1].val_loss)

    def test_reproducible_given_seed(self, small_data):
        ds = read_dataset(small_data)
        r1 = train([ds], tiny_config())
        r2 = train([ds], tiny_config())
        assert r1.best_val_loss == pytest.approx(r2.best_val_loss, rel=1e-10)

    def test_two_phase_schedule(self, small_data, tmp_path):
        extra = tmp_path / "extra.jsonl"
        write_synth_dataset(extra, n=4, count=40, seed=22)
        datasets = [read_dataset(small_data), read_dataset(str(extra))]
        config = tiny_config(phases=(Phase(2, {0: 1.0}),
                                     Phase(2, {0: 0.5, 1: 0.5})))
        result = train(datasets, config)
        assert [r.phase for r in result.log] == [0, 0, 1, 1]
        # normalization comes from the first dataset
        assert result.label_mean == datasets[0].label_mean

    def test_export_reload_round_trip(self, small_data, tmp_path):
        ds = read_dataset(small_data)
        result = train([ds], tiny_config())
        path = tmp_path / "bundle.json"
        export_bundle(result, str(path))
        bundle = load_weights(str(path))
        assert bundle.label_mean == result.label_mean

        model, mean, std = load_bundle_model(str(path))
        s = ds.samples[0]
        uclass = UncertaintyClass(s.n, s.omegas, s.lower, s.upper)
        from koed_trainer.data import make_batch
        with torch.no_grad():
            mine = float(model.forward_batch(
                make_batch([s], np.zeros(1)))[0]) * std + mean
        assert predict(bundle, uclass) == pytest.approx(mine, rel=1e-12)


class TestCli:
    def run(self, *args):
        try:
            main(list(args))
        except SystemExit as exc:
            return exc.code
        return 0

    def test_trains_and_writes_bundle(self, small_data, tmp_path):
        out = tmp_path / "bundle.json"
        log = tmp_path / "log.csv"
        code = self.run("--train", small_data, "--epochs", "2",
                        "--batch-size", "16", "--val-fraction", "0.1",
                        "--out", str(out), "--log", str(log))
        assert code == 0
        bundle = load_weights(str(out))
        assert bundle.hidden_dim == 64
        assert log.exists()

    def test_missing_dataset_is_usage_error(self, tmp_path):
        code = self.run("--train", str(tmp_path / "nope.jsonl"),
                        "--out", str(tmp_path / "b.json"))
        assert code == 1

    def test_corrupt_dataset_is_format_error(self, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text("not json\n")
        code = self.run("--train", str(bad), "--out",
                        str(tmp_path / "b.json"))
        assert code == 3
