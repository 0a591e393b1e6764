"""Command-line entry point.

Exit codes: 0 success, 2 validation error, 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click
import numpy as np

from .codecs import (read_emitter_csv, read_stack, write_emitter_csv,
                     write_json, write_stack)
from .errors import CodecError, NumericalError, ValidationError
from .evaluate import evaluate_stack
from .forward import ForwardOperator
from .grids import Image, ImageGrid
from .noise import snr_db
from .pipeline import (DEFAULT_LAMBDA_GRID, PipelineConfig, extract_stack,
                       parse_lambda_grid, run_pipeline, solve_stack,
                       sweep_lambda)
from .psf import PsfModel
from .simulate import TrainingSetConfig, gen_training_set, make_scenario, \
    simulate_frame
from .solver import SolverConfig

EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


@click.group()
def cli():
    """CEL0 sparse-deconvolution toolkit for SMLM localization."""


@cli.command()
@click.option("--scenario", required=True,
              type=click.Choice(["Test1a", "Test2a", "Test3a"]))
@click.option("--snr-db", default=15.0, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out-prefix", required=True, type=click.Path())
def simulate(scenario, snr_db, seed, out_prefix):
    """Simulate one built-in scenario: LR frame, HR truth, emitter CSV."""
    spec = make_scenario(scenario, snr_db=snr_db)
    lr, hr_truth = simulate_frame(spec, seed)
    write_stack(f"{out_prefix}_lr", [lr])
    write_stack(f"{out_prefix}_hr", [hr_truth])
    write_emitter_csv(f"{out_prefix}_gt.csv", [spec.emitters])
    click.echo(f"wrote {out_prefix}_lr.raw, {out_prefix}_hr.raw, "
               f"{out_prefix}_gt.csv")


@cli.command("train-data")
@click.option("--k", default=10000, show_default=True)
@click.option("--density", default=6.0, show_default=True)
@click.option("--n-images", default=20, show_default=True)
@click.option("--patch", default=26, show_default=True)
@click.option("--magnification", "-L", "mag", default=4, show_default=True)
@click.option("--sigma-nm", default=109.65, show_default=True)
@click.option("--snr-db", default=15.0, show_default=True)
@click.option("--snr-jitter", default=3.0, show_default=True,
              help="Per-patch SNR drawn uniformly in snr-db +/- jitter.")
@click.option("--seed", default=1, show_default=True)
@click.option("--out", required=True, type=click.Path())
def train_data(k, density, n_images, patch, mag, sigma_nm, snr_db, snr_jitter,
               seed, out):
    """Generate the synthetic training set as inputs/targets stacks."""
    cfg = TrainingSetConfig(
        density=density, n_images=n_images, patch=patch, magnification=mag,
        k_patches=k,
        psf=PsfModel.from_sigma(sigma_nm, 100.0 / mag),
        snr_db_range=(snr_db - snr_jitter, snr_db + snr_jitter), seed=seed)
    pairs = gen_training_set(cfg)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_stack(out_dir / "inputs", [p.input for p in pairs])
    write_stack(out_dir / "targets", [p.target for p in pairs])
    write_json(out_dir / "meta.json", {
        "k": k, "density": density, "n_images": n_images, "patch": patch,
        "magnification": mag, "sigma_nm": sigma_nm, "snr_db": snr_db,
        "snr_jitter": snr_jitter, "seed": seed})
    click.echo(f"wrote {len(pairs)} pairs to {out_dir}")


def _operator_for_stack(frames, mag, sigma_nm, downsample="decimate"):
    hr_grid = frames[0].grid.refine(mag)
    psf = PsfModel.from_sigma(sigma_nm, hr_grid.pixel_size)
    return ForwardOperator(hr_grid, mag, psf, downsample=downsample)


@cli.command("solve-cel0")
@click.option("--in", "in_path", required=True, type=click.Path())
@click.option("--lambda", "lam", type=float, default=None,
              help="Fixed sparsity weight; omit to use --lambda-grid.")
@click.option("--magnification", "-L", "mag", default=4, show_default=True)
@click.option("--sigma-nm", default=109.65, show_default=True)
@click.option("--outer", default=40, show_default=True)
@click.option("--inner", default=200, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--lambda-grid", default=None,
              help=f"lo:hi:count log grid, e.g. {DEFAULT_LAMBDA_GRID}.")
@click.option("--gt", "gt_path", default=None, type=click.Path(),
              help="Ground-truth CSV (required for --lambda-grid).")
@click.option("--jobs", default=1, show_default=True)
def solve_cel0_cmd(in_path, lam, mag, sigma_nm, outer, inner, out_path,
                   lambda_grid, gt_path, jobs):
    """Solve a LR stack to sparse HR localization maps.

    Grid mode sweeps lambda, writes a Jaccard-vs-lambda JSON report next to
    the output, and solves with the argmax at delta=2.
    """
    frames = read_stack(in_path)
    op = _operator_for_stack(frames, mag, sigma_nm)
    config = SolverConfig(outer_iters=outer, inner_iters=inner)
    if lambda_grid is not None:
        if gt_path is None:
            raise ValidationError("--lambda-grid requires --gt")
        gt_frames = read_emitter_csv(gt_path)
        sweep = sweep_lambda(frames, op, parse_lambda_grid(lambda_grid),
                             config, gt_frames, jobs=jobs)
        lam = sweep["best_lambda"]
        report_path = Path(out_path).with_suffix("").with_name(
            Path(out_path).with_suffix("").name + "_lambda_sweep.json")
        write_json(report_path, sweep)
        click.echo(f"best lambda {lam:.6g} "
                   f"(Jaccard {sweep['best_jaccard']:.2f}%), "
                   f"sweep report at {report_path}")
    elif lam is None:
        raise ValidationError("either --lambda or --lambda-grid is required")
    solutions = solve_stack(frames, op, lam, config, jobs=jobs)
    write_stack(out_path, solutions)
    est = extract_stack(solutions)
    csv_path = Path(out_path).with_suffix(".csv")
    write_emitter_csv(csv_path, est)
    click.echo(f"wrote {out_path} and {csv_path}")


@cli.command("eval")
@click.option("--gt", "gt_path", required=True, type=click.Path())
@click.option("--est", "est_path", required=True, type=click.Path(),
              help="Emitter CSV, or a solution stack to extract from.")
@click.option("--pixel-nm", default=25.0, show_default=True,
              help="HR pixel size used to convert deltas to nm.")
@click.option("--delta", default="2,4,6", show_default=True)
@click.option("--hr-size", default=None, type=int,
              help="HR pixels per side for TN counting; inferred from a "
                   "stack estimate, required for CSV estimates.")
@click.option("--threshold-rel", default=0.1, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def eval_cmd(gt_path, est_path, pixel_nm, delta, hr_size, threshold_rel,
             out_path):
    """Score estimated localizations against ground truth."""
    gt_frames = read_emitter_csv(gt_path)
    if est_path.endswith(".csv"):
        est_frames = read_emitter_csv(est_path)
        if hr_size is None:
            raise ValidationError("--hr-size is required with a CSV estimate")
        hr_pixels = hr_size * hr_size
    else:
        solutions = read_stack(est_path)
        est_frames = extract_stack(solutions, threshold_rel)
        grid = solutions[0].grid
        hr_pixels = grid.width * grid.height
        pixel_nm = grid.pixel_size
    tolerances = tuple(float(d) for d in delta.split(","))
    report = evaluate_stack(gt_frames, est_frames, tolerances, pixel_nm,
                            hr_pixels)
    write_json(out_path, report.to_dict())
    at2 = min(tolerances)
    m = report.per_tolerance[at2]["metrics"]
    click.echo(f"delta={at2}: Jaccard {m['jaccard']:.2f}% "
               f"sensitivity {m['sensitivity']:.2f}% "
               f"specificity {m['specificity']:.2f}%")


@cli.command()
@click.option("--in", "in_path", required=True, type=click.Path())
@click.option("--mode", type=click.Choice(["sum", "binary"]), default="sum",
              show_default=True)
@click.option("--threshold-rel", default=0.0, show_default=True,
              help="Binary mode: pixels above this fraction of the max "
                   "become 1.")
@click.option("--out", "out_path", required=True, type=click.Path())
def render(in_path, mode, threshold_rel, out_path):
    """Collapse a stack to one frame: sum of frames, or its binarization."""
    frames = read_stack(in_path)
    total = np.sum([f.values for f in frames], axis=0)
    if mode == "binary":
        total = (total > threshold_rel * total.max(initial=0.0)).astype(float)
    write_stack(out_path, [Image(frames[0].grid, total)])
    click.echo(f"wrote {out_path}")


@cli.command("psf-norms")
@click.option("--size", required=True, type=int, help="HR pixels per side.")
@click.option("--magnification", "-L", "mag", default=4, show_default=True)
@click.option("--sigma-nm", default=109.65, show_default=True)
@click.option("--pixel-nm", default=25.0, show_default=True,
              help="HR pixel size.")
@click.option("--downsample", type=click.Choice(["decimate", "average"]),
              default="decimate", show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def psf_norms(size, mag, sigma_nm, pixel_nm, downsample, out_path):
    """Dump the operator column norms ||c_i|| as JSON (row-major)."""
    grid = ImageGrid(size, size, pixel_nm)
    psf = PsfModel.from_sigma(sigma_nm, pixel_nm)
    op = ForwardOperator(grid, mag, psf, downsample=downsample)
    norms = op.column_norms()
    write_json(out_path, {
        "width": size, "height": size, "magnification": mag,
        "sigma_nm": sigma_nm, "pixel_size_nm": pixel_nm,
        "downsample": downsample,
        "norms": [float(v) for v in norms.ravel()]})
    click.echo(f"wrote {out_path}")


@cli.command()
@click.option("--clean", "clean_path", required=True, type=click.Path())
@click.option("--noisy", "noisy_path", required=True, type=click.Path())
def snr(clean_path, noisy_path):
    """Print per-frame SNR (dB) between two stacks."""
    clean = read_stack(clean_path)
    noisy = read_stack(noisy_path)
    if len(clean) != len(noisy):
        raise ValidationError("stacks have different frame counts")
    for i, (c, n) in enumerate(zip(clean, noisy), start=1):
        click.echo(f"frame {i}: {snr_db(c, n):.4f} dB")


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path())
def pipeline(config_path):
    """Run the end-to-end pipeline from a JSON config."""
    from .codecs import read_json
    config = PipelineConfig.from_dict(read_json(config_path))
    result = run_pipeline(config)
    if result["report"] is not None:
        deltas = sorted(result["report"]["per_tolerance"])
        m = result["report"]["per_tolerance"][deltas[0]]["metrics"]
        click.echo(f"Jaccard at delta={deltas[0]}: {m['jaccard']:.2f}%")
    click.echo(f"artifacts in {config.out_dir}")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
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


if __name__ == "__main__":
    sys.exit(main())
