"""Stack-level solving, lambda grid search, and the end-to-end pipeline."""

from __future__ import annotations

import shutil
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .codecs import (read_stack, sha256_file, write_emitter_csv, write_json,
                     write_stack)
from .errors import ValidationError
from .evaluate import evaluate_stack, extract_emitters
from .forward import ForwardOperator
from .grids import Image, ImageGrid
from .psf import PsfModel
from .simulate import EmitterList, make_scenario, simulate_frame
from .solver import Cel0Params, SolverConfig, lipschitz_estimate, solve_cel0

DEFAULT_LAMBDA_GRID = "1e-3:1:30"


def parse_lambda_grid(text: str) -> np.ndarray:
    """Parse 'lo:hi:count' into count log-spaced values over [lo, hi]."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValidationError(
            f"lambda grid must look like 'lo:hi:count', got {text!r}")
    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ValidationError(f"bad lambda grid {text!r}: {exc}") from exc
    if not (0 < lo < hi) or count < 1:
        raise ValidationError(f"bad lambda grid bounds in {text!r}")
    return np.geomspace(lo, hi, count)


def solve_stack(frames: list[Image], op: ForwardOperator, lam: float,
                config: SolverConfig, jobs: int = 1) -> list[Image]:
    """Solve every frame of a stack at one lambda; frames are independent,
    so they run on a thread pool sharing the read-only operator."""
    params = Cel0Params(lam)
    if config.lipschitz is None:
        config = SolverConfig(config.outer_iters, config.inner_iters,
                              config.outer_tol, config.inner_tol,
                              lipschitz_estimate(op))

    def solve_one(frame: Image) -> Image:
        return solve_cel0(frame, op, params, config).solution

    if jobs <= 1 or len(frames) == 1:
        return [solve_one(f) for f in frames]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(solve_one, frames))


def extract_stack(solutions: list[Image], threshold_rel: float = 0.1,
                  min_distance: float = 1.0) -> list[EmitterList]:
    out = []
    for i, sol in enumerate(solutions, start=1):
        ems = extract_emitters(sol, threshold_rel, min_distance)
        out.append(EmitterList(i, ems.emitters))
    return out


def sweep_lambda(frames: list[Image], op: ForwardOperator,
                 lambdas: np.ndarray, config: SolverConfig,
                 gt_frames: list[EmitterList], delta: float = 2.0,
                 jobs: int = 1) -> dict:
    """Solve the stack at every lambda and score it against ground truth.

    Returns {"grid": [{"lambda", "jaccard"}...], "best_lambda",
    "best_jaccard"}; the winner maximizes the Jaccard index at the given
    tolerance (first maximum wins ties, so results are deterministic).
    """
    hr_pixels = op.hr_grid.width * op.hr_grid.height
    entries = []
    best = None
    for lam in lambdas:
        solutions = solve_stack(frames, op, float(lam), config, jobs=jobs)
        est = extract_stack(solutions)
        report = evaluate_stack(gt_frames, est, (delta,),
                                op.hr_grid.pixel_size, hr_pixels)
        jac = report.per_tolerance[delta]["metrics"]["jaccard"]
        entries.append({"lambda": float(lam), "jaccard": jac})
        if best is None or jac > best["jaccard"]:
            best = entries[-1]
    return {"grid": entries, "delta": delta,
            "best_lambda": best["lambda"], "best_jaccard": best["jaccard"]}


@dataclass(frozen=True)
class PipelineConfig:
    """End-to-end run: simulate a scenario (or read a stack), solve, score,
    render. Loaded from a JSON object with the same field names."""

    out_dir: str
    scenario: str | None = None
    input_stack: str | None = None
    gt_csv: str | None = None
    snr_db: float = 15.0
    seed: int = 0
    magnification: int = 4
    sigma_nm: float = 109.65
    lam: float | None = None
    lambda_grid: str | None = None
    outer_iters: int = 40
    inner_iters: int = 200
    tolerances: tuple[float, ...] = (2.0, 4.0, 6.0)
    threshold_rel: float = 0.1
    jobs: int = 1

    def __post_init__(self):
        if (self.scenario is None) == (self.input_stack is None):
            raise ValidationError(
                "exactly one of 'scenario' and 'input_stack' is required")
        if self.input_stack is not None and not Path(self.input_stack).exists():
            raise ValidationError(f"input stack {self.input_stack} not found")
        if self.gt_csv is not None and not Path(self.gt_csv).exists():
            raise ValidationError(f"ground-truth CSV {self.gt_csv} not found")
        if self.lam is None and self.lambda_grid is None:
            raise ValidationError("one of 'lam' and 'lambda_grid' is required")
        if self.lambda_grid is not None and self.gt_csv is None \
                and self.scenario is None:
            raise ValidationError("lambda_grid mode needs ground truth")
        if self.magnification < 1 or not self.sigma_nm > 0:
            raise ValidationError("bad magnification or sigma")

    @classmethod
    def from_dict(cls, obj: dict) -> "PipelineConfig":
        if "tolerances" in obj:
            obj = dict(obj, tolerances=tuple(obj["tolerances"]))
        try:
            return cls(**obj)
        except TypeError as exc:
            raise ValidationError(f"bad pipeline config: {exc}") from exc


def run_pipeline(config: PipelineConfig) -> dict:
    """Run simulate -> solve -> eval -> render, writing all artifacts and a
    manifest (with content hashes) under config.out_dir. Partial outputs are
    removed if any stage fails."""
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def track(*paths: Path):
        written.extend(paths)

    try:
        # --- acquire input -------------------------------------------------
        if config.scenario is not None:
            spec = make_scenario(config.scenario, snr_db=config.snr_db)
            lr, hr_truth = simulate_frame(spec, config.seed)
            frames = [lr]
            gt_frames = [spec.emitters]
            op = ForwardOperator(spec.fov, spec.magnification, spec.psf)
            track(*write_stack(out_dir / "lr", frames))
            track(*write_stack(out_dir / "hr_truth", [hr_truth]))
            gt_path = out_dir / "gt.csv"
            write_emitter_csv(gt_path, gt_frames)
            track(gt_path)
        else:
            frames = read_stack(config.input_stack)
            lr_grid = frames[0].grid
            hr_grid = lr_grid.refine(config.magnification)
            psf = PsfModel.from_sigma(config.sigma_nm, hr_grid.pixel_size)
            op = ForwardOperator(hr_grid, config.magnification, psf)
            gt_frames = None
            if config.gt_csv is not None:
                from .codecs import read_emitter_csv
                gt_frames = read_emitter_csv(config.gt_csv)

        solver_config = SolverConfig(config.outer_iters, config.inner_iters)
        hr_pixels = op.hr_grid.width * op.hr_grid.height

        # --- choose lambda and solve --------------------------------------
        sweep_report = None
        lam = config.lam
        if config.lambda_grid is not None:
            lambdas = parse_lambda_grid(config.lambda_grid)
            sweep_report = sweep_lambda(frames, op, lambdas, solver_config,
                                        gt_frames, jobs=config.jobs)
            lam = sweep_report["best_lambda"]
            sweep_path = out_dir / "lambda_sweep.json"
            write_json(sweep_path, sweep_report)
            track(sweep_path)

        solutions = solve_stack(frames, op, lam, solver_config,
                                jobs=config.jobs)
        track(*write_stack(out_dir / "solution", solutions))
        est_frames = extract_stack(solutions, config.threshold_rel)
        est_path = out_dir / "estimates.csv"
        write_emitter_csv(est_path, est_frames)
        track(est_path)

        # --- score and render ---------------------------------------------
        report_dict = None
        if gt_frames is not None:
            report = evaluate_stack(gt_frames, est_frames, config.tolerances,
                                    op.hr_grid.pixel_size, hr_pixels)
            report_dict = report.to_dict()
            report_path = out_dir / "report.json"
            write_json(report_path, report_dict)
            track(report_path)

        total = np.sum([s.values for s in solutions], axis=0)
        track(*write_stack(out_dir / "render_sum",
                           [Image(op.hr_grid, total)]))

        manifest = {
            "version": __version__,
            "seed": config.seed,
            "lambda": lam,
            "parameters": {
                "scenario": config.scenario,
                "input_stack": config.input_stack,
                "snr_db": config.snr_db,
                "magnification": config.magnification,
                "sigma_nm": config.sigma_nm,
                "outer_iters": config.outer_iters,
                "inner_iters": config.inner_iters,
                "tolerances": list(config.tolerances),
                "threshold_rel": config.threshold_rel,
            },
            "artifacts": {p.name: sha256_file(p) for p in sorted(written)},
        }
        manifest_path = out_dir / "manifest.json"
        write_json(manifest_path, manifest)
        return {"report": report_dict, "sweep": sweep_report,
                "manifest": manifest}
    except BaseException:
        for p in written:
            p.unlink(missing_ok=True)
        raise
