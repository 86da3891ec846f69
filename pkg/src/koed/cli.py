"""Command-line entry points.

Every command that writes an output file also writes a run manifest
alongside it (resolved config, seeds, elapsed time, artifact hashes).
Exit codes: 0 success, 1 usage, 2 numerical failure, 3 format error.
"""

from __future__ import annotations

import hashlib
import json
import os
import sys
import tempfile
import time

import click
import numpy as np

from .core import ExperimentId, FormatError, KuramotoInstance, UncertaintyClass
from .datagen import GenProfile, generate_dataset, read_dataset, write_dataset
from .dynamics import (NoSynchronizationError, NumericalBlowupError, SimConfig,
                       min_control_cost)
from .fixtures import CLASSES, PROFILES
from .mocu import default_control_omega, estimate_mocu
from .oed import OEDPolicy, curve_summary, run_oed, traces_to_csv
from .surrogate import (load_weights, predict, predict_batch, random_bundle,
                        save_weights)

_CONFIG_FLAGS = ["step", "duration", "window_fraction", "sync_tol",
                 "max_control", "bisect_tol"]


def _config_options(fn):
    for name in reversed(_CONFIG_FLAGS):
        fn = click.option(f"--{name.replace('_', '-')}", type=float,
                          default=None, help=f"override SimConfig.{name}")(fn)
    fn = click.option("--config", "config_path", type=click.Path(exists=True),
                      default=None, help="SimConfig JSON file")(fn)
    return fn


def _resolve_config(config_path, **flags) -> SimConfig:
    base = SimConfig.from_json_file(config_path) if config_path else SimConfig()
    overrides = {k: v for k, v in flags.items() if v is not None}
    merged = {**base.to_dict(), **overrides}
    return SimConfig.from_dict(merged)


def _atomic_write(path: str, write_fn) -> None:
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    os.close(fd)
    try:
        write_fn(tmp)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(command: str, params: dict, outputs: list[str],
                    elapsed: float) -> None:
    if not outputs:
        return
    manifest = {
        "command": command,
        "params": {k: v for k, v in params.items()
                   if isinstance(v, (int, float, str, bool, type(None)))},
        "elapsed_seconds": elapsed,
        "outputs": {p: _sha256(p) for p in outputs if os.path.exists(p)},
    }
    path = outputs[0] + ".manifest.json"
    _atomic_write(path, lambda tmp: json.dump(manifest, open(tmp, "w"),
                                              indent=2))


def _load_class(path: str) -> UncertaintyClass:
    if path in CLASSES:
        return CLASSES[path]
    with open(path) as fh:
        return UncertaintyClass.from_json(fh.read())


@click.group()
def cli():
    """Objective-UQ and experimental design for uncertain Kuramoto models."""


@cli.command("xi")
@click.argument("model_path", type=click.Path(exists=True))
@click.option("--control-omega", type=float, default=None,
              help="control oscillator frequency (default: mean of omegas)")
@_config_options
def cmd_xi(model_path, control_omega, config_path, **flags):
    """Minimal synchronizing control strength for a concrete model."""
    config = _resolve_config(config_path, **flags)
    with open(model_path) as fh:
        inst = KuramotoInstance.from_json(fh.read())
    if control_omega is None:
        control_omega = float(np.mean(inst.omegas))
    xi = min_control_cost(inst, control_omega, config)
    click.echo(f"{xi:.6f}")


@cli.command("mocu")
@click.argument("class_path")
@click.option("--k", type=int, default=2048, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--control-omega", type=float, default=None)
@_config_options
def cmd_mocu(class_path, k, seed, control_omega, config_path, **flags):
    """Sampling-based MOCU estimate of an uncertainty class (JSON output)."""
    config = _resolve_config(config_path, **flags)
    uclass = _load_class(class_path)
    est = estimate_mocu(uclass, k, control_omega, config, seed=seed)
    click.echo(json.dumps(est.to_dict()))


@cli.command("gen-data")
@click.option("--profile", "profile_name", default="n5", show_default=True,
              help="n5, n7, or a GenProfile JSON file")
@click.option("--count", type=int, default=1000, show_default=True)
@click.option("--k", "label_k", type=int, default=2048, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", required=True, type=click.Path())
@_config_options
def cmd_gen_data(profile_name, count, label_k, seed, out, config_path, **flags):
    """Generate a labeled training dataset (JSONL with stats header)."""
    config = _resolve_config(config_path, **flags)
    t0 = time.time()
    if profile_name in PROFILES:
        base = PROFILES[profile_name]
        profile = GenProfile(**{**base.__dict__, "count": count,
                                "label_k": label_k, "seed": seed})
    else:
        with open(profile_name) as fh:
            profile = GenProfile(**{**json.load(fh), "count": count,
                                    "label_k": label_k, "seed": seed})
    samples, header = generate_dataset(profile, config)
    _atomic_write(out, lambda tmp: write_dataset(tmp, samples, header))
    if header.failures:
        click.echo(f"warning: {header.failures} samples failed labeling and "
                   "were excluded", err=True)
    _write_manifest("gen-data", {"profile": profile_name, "count": count,
                                 "k": label_k, "seed": seed}, [out],
                    time.time() - t0)
    click.echo(f"wrote {header.count} samples to {out} "
               f"(mean={header.label_mean:.4f}, std={header.label_std:.4f})")


@cli.command("oed")
@click.option("--class", "class_path", required=True,
              help="class JSON path or builtin name (n5, n7)")
@click.option("--method", type=click.Choice(
    ["sampling", "surrogate", "surrogate-iterative", "entropy", "random"]),
    default="sampling", show_default=True)
@click.option("--k", type=int, default=2048, show_default=True)
@click.option("--eval-k", type=int, default=2048, show_default=True)
@click.option("--eval-reps", type=int, default=10, show_default=True)
@click.option("--weights", type=click.Path(exists=True), default=None)
@click.option("--trials", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", required=True, type=click.Path())
@_config_options
def cmd_oed(class_path, method, k, eval_k, eval_reps, weights, trials, seed,
            out, config_path, **flags):
    """Run OED trials and write the per-step trace CSV."""
    config = _resolve_config(config_path, **flags)
    t0 = time.time()
    uclass = _load_class(class_path)
    bundle = load_weights(weights) if weights else None
    policy = OEDPolicy(kind=method, k=k, seed=seed, bundle=bundle)
    traces = run_oed(uclass, policy, config, truth_seed=seed, eval_k=eval_k,
                     eval_reps=eval_reps, trials=trials)
    _atomic_write(out, lambda tmp: traces_to_csv(traces, tmp))
    _write_manifest("oed", {"class": class_path, "method": method, "k": k,
                            "eval_k": eval_k, "trials": trials, "seed": seed},
                    [out], time.time() - t0)
    curve = curve_summary(traces)
    click.echo("mean MOCU per step: "
               + " ".join(f"{v:.4f}" for v in curve))


@cli.command("rank-check")
@click.option("--weights", required=True, type=click.Path(exists=True))
@click.option("--data", required=True, type=click.Path(exists=True))
@click.option("--mode", type=click.Choice(["lower", "upper"]),
              default="lower", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--strict", is_flag=True,
              help="require a strict decrease instead of non-increase")
def cmd_rank_check(weights, data, mode, seed, strict):
    """Monotonicity rate of a model under single-bound tightenings.

    For each dataset class, one random pair's interval is tightened to its
    midpoint (lower raise or upper drop); reports the fraction of classes
    whose predicted MOCU does not increase (or strictly decreases)."""
    bundle = load_weights(weights)
    samples, _ = read_dataset(data)
    rng = np.random.default_rng(seed)
    ok = 0
    total = 0
    for s in samples:
        uclass = s.uclass
        kidx = int(rng.integers(uclass.lower.shape[0]))
        mid = 0.5 * (uclass.lower[kidx] + uclass.upper[kidx])
        if mode == "lower":
            tightened = uclass.with_bounds(kidx, lower=mid)
        else:
            tightened = uclass.with_bounds(kidx, upper=mid)
        before = predict(bundle, uclass)
        after = predict(bundle, tightened)
        good = after < before if strict else after <= before
        ok += int(good)
        total += 1
    rate = ok / total if total else 0.0
    click.echo(json.dumps({"mode": mode, "strict": strict, "count": total,
                           "rate": rate}))


@cli.command("eval-surrogate")
@click.option("--weights", required=True, type=click.Path(exists=True))
@click.option("--data", required=True, type=click.Path(exists=True))
@click.option("--predictions", "pred_out", type=click.Path(), default=None,
              help="optional JSONL dump of per-sample predictions")
def cmd_eval_surrogate(weights, data, pred_out):
    """MSE of a weight bundle on a labeled dataset (raw and normalized)."""
    bundle = load_weights(weights)
    samples, header = read_dataset(data)
    classes = [s.uclass for s in samples]
    t0 = time.perf_counter()
    preds = predict_batch(bundle, classes)
    elapsed = time.perf_counter() - t0
    raw = np.array([s.mocu_label for s in samples])
    mse_raw = float(np.mean((preds - raw) ** 2))
    norm_pred = (preds - header.label_mean) / header.label_std
    norm_true = np.array([s.normalized_label for s in samples])
    mse_norm = float(np.mean((norm_pred - norm_true) ** 2))
    if pred_out:
        def dump(tmp):
            with open(tmp, "w") as fh:
                for s, p in zip(samples, preds):
                    fh.write(json.dumps({"prediction": float(p),
                                         "mocu": s.mocu_label}) + "\n")
        _atomic_write(pred_out, dump)
        _write_manifest("eval-surrogate", {"weights": weights, "data": data},
                        [pred_out], elapsed)
    per_1000 = 1000.0 * elapsed / max(1, len(samples))
    click.echo(json.dumps({"mse_raw": mse_raw, "mse_normalized": mse_norm,
                           "count": len(samples),
                           "seconds_per_1000_predictions": per_1000}))


@cli.command("init-weights")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--hidden-dim", type=int, default=64, show_default=True)
@click.option("--out", required=True, type=click.Path())
def cmd_init_weights(seed, hidden_dim, out):
    """Write a seeded random weight bundle (fixtures, untrained baseline)."""
    bundle = random_bundle(seed=seed, hidden_dim=hidden_dim)
    _atomic_write(out, lambda tmp: save_weights(bundle, tmp))
    _write_manifest("init-weights", {"seed": seed, "hidden_dim": hidden_dim},
                    [out], 0.0)
    click.echo(f"wrote {out}")


def main(argv=None):
    try:
        return cli.main(args=argv, standalone_mode=False)
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        sys.exit(1)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except click.Abort:
        sys.exit(1)
    except (NoSynchronizationError, NumericalBlowupError) as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        sys.exit(2)
    except FormatError as exc:
        click.echo(f"format error: {exc}", err=True)
        sys.exit(3)
    except OSError as exc:
        click.echo(f"usage error: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
