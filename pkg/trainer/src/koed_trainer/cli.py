"""koed-train: train the surrogate on labeled dataset files and export a
runtime weight bundle."""

from __future__ import annotations

import sys

import click

from .data import DataError, read_dataset
from .train import (ConfigError, Phase, TrainConfig, export_bundle, train)


@click.command("koed-train")
@click.option("--train", "train_path", required=True,
              type=click.Path(exists=True),
              help="Primary (phase-1) dataset JSONL; supplies the label "
                   "normalization statistics.")
@click.option("--mix-data", type=click.Path(exists=True), default=None,
              help="Optional second dataset for a follow-up phase.")
@click.option("--epochs", type=int, default=100, show_default=True,
              help="Phase-1 epochs.")
@click.option("--mix-epochs", type=int, default=0, show_default=True,
              help="Follow-up phase epochs (0 disables the phase).")
@click.option("--mix-ratio", type=float, default=0.5, show_default=True,
              help="Fraction of the follow-up phase drawn from --mix-data.")
@click.option("--batch-size", type=int, default=128, show_default=True)
@click.option("--lr", type=float, default=1e-3, show_default=True)
@click.option("--lam", type=float, default=1e-4, show_default=True,
              help="Weight of the monotonicity-constraint penalty.")
@click.option("--val-fraction", type=float, default=0.04, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(),
              help="Output weight-bundle JSON path.")
@click.option("--log", "log_path", type=click.Path(), default=None,
              help="Optional per-epoch CSV log path.")
def cli(train_path, mix_data, epochs, mix_epochs, mix_ratio, batch_size, lr,
        lam, val_fraction, seed, out, log_path):
    datasets = [read_dataset(train_path)]
    phases = [Phase(epochs=epochs, mix={0: 1.0})]
    if mix_data is not None and mix_epochs > 0:
        datasets.append(read_dataset(mix_data))
        phases.append(Phase(epochs=mix_epochs,
                            mix={0: 1.0 - mix_ratio, 1: mix_ratio}))
    config = TrainConfig(phases=tuple(phases), batch_size=batch_size,
                         learning_rate=lr, lam=lam,
                         val_fraction=val_fraction, seed=seed)
    result = train(datasets, config, log_path=log_path)
    export_bundle(result, out)
    click.echo(f"best validation loss {result.best_val_loss:.6e} "
               f"(mse {result.best_val_mse:.6e}); bundle written to {out}")


def main(argv=None):
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Abort:
        sys.exit(1)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except (ConfigError, OSError) as exc:
        click.echo(f"usage error: {exc}", err=True)
        sys.exit(1)
    except DataError as exc:
        click.echo(f"format error: {exc}", err=True)
        sys.exit(3)
    except RuntimeError as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        sys.exit(2)
    sys.exit(0)


if __name__ == "__main__":
    main()
