"""Command-line entry points: net-train and net-infer.

Exit codes: 0 success, 2 validation error, 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import sys

import click

from .errors import CodecError, NumericalError, ValidationError
from .losses import LossConfig
from .stacks import read_norms, read_stack, write_stack
from .train import TrainConfig, infer_stack, load_checkpoint, train

EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


@click.command("net-train")
@click.option("--data", "data_dir", required=True, type=click.Path(),
              help="Dataset directory holding inputs/targets stacks.")
@click.option("--norms", "norms_path", default=None, type=click.Path(),
              help="Operator column-norms JSON; omit for all-ones norms.")
@click.option("--lambda", "lam", default=100.0, show_default=True,
              help="CEL0 sparsity weight in the loss.")
@click.option("--loss", type=click.Choice(["deepcel0", "deepstorm"]),
              default="deepcel0", show_default=True)
@click.option("--epochs", default=100, show_default=True)
@click.option("--batch", default=16, show_default=True)
@click.option("--lr", default=0.001, show_default=True)
@click.option("--seed", default=1, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="Checkpoint file to write.")
def train_cmd(data_dir, norms_path, lam, loss, epochs, batch, lr, seed,
              out_path):
    """Train the localization network on a simulated patch dataset."""
    norms = read_norms(norms_path) if norms_path else None
    lc = LossConfig(lambda_cel0=lam, column_norms=norms)
    tc = TrainConfig(epochs=epochs, batch=batch, lr=lr, seed=seed, loss=loss)
    curve = train(data_dir, out_path, tc, lc)
    click.echo(f"epoch losses: first {curve[0]:.6g}, last {curve[-1]:.6g}")
    click.echo(f"wrote {out_path}")


@click.command("net-infer")
@click.option("--ckpt", "ckpt_path", required=True, type=click.Path())
@click.option("--in", "in_path", required=True, type=click.Path())
@click.option("--magnification", "-L", "mag", default=4, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def infer_cmd(ckpt_path, in_path, mag, out_path):
    """Run the network over a LR stack, writing the HR stack."""
    model, _ = load_checkpoint(ckpt_path)
    frames, pixel_size = read_stack(in_path)
    out = infer_stack(model, frames, mag)
    write_stack(out_path, out, pixel_size / mag)
    click.echo(f"wrote {out_path}")


def _run(cmd, argv) -> int:
    try:
        cmd.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Abort:
        return 2
    except click.ClickException as exc:
        exc.show()
        return 2
    except ValidationError as exc:
        click.echo(f"validation error: {exc}", err=True)
        return EXIT_VALIDATION
    except NumericalError as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        return EXIT_NUMERICAL
    except (CodecError, OSError) as exc:
        click.echo(f"I/O error: {exc}", err=True)
        return EXIT_IO


def train_main(argv=None) -> int:
    return _run(train_cmd, argv)


def infer_main(argv=None) -> int:
    return _run(infer_cmd, argv)


if __name__ == "__main__":
    sys.exit(train_main())
