"""Acceptance gate for the learned-localization package.

The smoke test drives the full interop loop: dataset and ground truth come
from the `cel0loc` CLI, training and inference run here, and the result is
scored by `cel0loc eval` — all communication is through files.
"""

import json
import subprocess
import sys

import numpy as np
import pytest
import torch

from deepnet import (LossConfig, TrainConfig, build_network, cel0_phi,
                     infer_stack, load_checkpoint, loss_deepcel0,
                     loss_deepstorm, read_norms, read_stack, train,
                     write_stack)
from test_losses import GOLDEN, batch, scalar_loss


def report(name: str, ok: bool, detail: str = ""):
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {status}: {name}" + (f" ({detail})" if detail else ""))
    assert ok, f"{name}: {detail}"


def run_cel0loc(*args) -> None:
    subprocess.run([sys.executable, "-m", "cel0loc.cli", *args], check=True,
                   capture_output=True, text=True)


def test_loss_oracles():
    rng = np.random.default_rng(0)
    out = rng.uniform(0, 3, (1, 8, 8))
    tgt = rng.uniform(0, 3, (1, 8, 8))
    norms = rng.uniform(0.2, 1.5, (8, 8))
    lam = 2.0
    cel0_err = abs(
        float(loss_deepcel0(batch(out), batch(tgt),
                            LossConfig(lambda_cel0=lam, column_norms=norms)))
        - scalar_loss(out, tgt, lam, norms))
    storm_err = abs(
        float(loss_deepstorm(batch(out), batch(tgt), LossConfig()))
        - scalar_loss(out, tgt, 0.0, np.ones((8, 8)), l1=True))

    golden_err = 0.0
    for case in json.loads(GOLDEN.read_text())["cases"]:
        phi = float(cel0_phi(torch.tensor(case["x"], dtype=torch.float64),
                             torch.tensor(case["norms"], dtype=torch.float64),
                             case["lam"]))
        golden_err = max(golden_err, abs(phi - case["phi"]))
    report("loss scalar oracles and golden vectors",
           cel0_err < 1e-5 and storm_err < 1e-5 and golden_err < 1e-6,
           f"cel0 {cel0_err:.2e}, deepstorm {storm_err:.2e}, "
           f"golden {golden_err:.2e}")


def test_gradient_check():
    rng = np.random.default_rng(1)
    lam = 0.5
    norms = rng.uniform(0.5, 1.5, (6, 6))
    thresh = np.sqrt(2 * lam) / norms
    x = rng.uniform(0.01, 3.0, (1, 6, 6))
    x = np.where(np.abs(x - thresh) < 5e-3, x + 1e-2, x)
    tgt = rng.uniform(0, 1, (1, 6, 6))
    lc = LossConfig(lambda_cel0=lam, column_norms=norms)

    xt = batch(x).requires_grad_(True)
    loss_deepcel0(xt, batch(tgt), lc).backward()
    grad = xt.grad.squeeze().numpy()
    h = 1e-6
    worst = 0.0
    for i in range(6):
        for j in range(6):
            xp, xm = x.copy(), x.copy()
            xp[0, i, j] += h
            xm[0, i, j] -= h
            fd = (float(loss_deepcel0(batch(xp), batch(tgt), lc))
                  - float(loss_deepcel0(batch(xm), batch(tgt), lc))) / (2 * h)
            denom = max(abs(fd), abs(grad[i, j]), 1e-8)
            worst = max(worst, abs(fd - grad[i, j]) / denom)
    report("finite-difference gradient check", worst < 1e-4,
           f"worst relative error {worst:.2e}")


def test_positivity_and_shape():
    torch.manual_seed(2)
    model = build_network()
    model.eval()
    rng = np.random.default_rng(3)
    ok = True
    for _ in range(100):
        b = int(rng.integers(1, 4))
        side = int(rng.choice([16, 32, 64]))
        x = torch.tensor(rng.standard_normal((b, 1, side, side)),
                         dtype=torch.float32)
        out = model(x)
        if out.shape != x.shape or not torch.all(out >= 0):
            ok = False
            break
    report("network positivity and shape on 100 batches", ok)


@pytest.mark.slow
def test_smoke_training_and_interop(tmp_path):
    data_dir = tmp_path / "data"
    # Dense patches give the short 5-epoch budget enough supervision;
    # lambda is matched to the [0, 1] scale of the normalized targets.
    run_cel0loc("train-data", "--k", "500", "--patch", "13",
                "--n-images", "10", "--density", "30", "--out", str(data_dir))
    run_cel0loc("psf-norms", "--size", "52", "-L", "4",
                "--out", str(tmp_path / "norms.json"))
    norms = read_norms(tmp_path / "norms.json")

    curve = train(data_dir, tmp_path / "ckpt.pt",
                  TrainConfig(epochs=5, batch=16, lr=0.001, seed=1),
                  LossConfig(lambda_cel0=0.01, column_norms=None))
    halved = curve[-1] <= 0.5 * curve[0]
    assert norms.shape == (52, 52)

    run_cel0loc("simulate", "--scenario", "Test2a", "--seed", "7",
                "--out-prefix", str(tmp_path / "t2a"))
    model, _ = load_checkpoint(tmp_path / "ckpt.pt")
    lr_frames, pixel_size = read_stack(tmp_path / "t2a_lr")
    hr = infer_stack(model, lr_frames, 4)
    write_stack(tmp_path / "net_out", hr, pixel_size / 4)

    run_cel0loc("eval", "--gt", str(tmp_path / "t2a_gt.csv"),
                "--est", str(tmp_path / "net_out"), "--delta", "4",
                "--out", str(tmp_path / "report.json"))
    rep = json.loads((tmp_path / "report.json").read_text())
    tp = rep["per_tolerance"]["4.0"]["counts"]["tp"]
    report("smoke training and cross-package scoring",
           halved and tp >= 1,
           f"loss {curve[0]:.4g} -> {curve[-1]:.4g} "
           f"(ratio {curve[-1] / curve[0]:.2f}), TP at delta=4: {tp}")
