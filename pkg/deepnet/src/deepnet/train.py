"""Training: Adam on the CEL0-regularized (or baseline l1) loss over the
synthetic patch dataset, with checkpointing and a per-epoch loss log."""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch

from .errors import NumericalError, ValidationError
from .losses import LossConfig, loss_deepcel0, loss_deepstorm
from .model import NetConfig, build_network
from .stacks import read_stack


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch: int = 16
    lr: float = 0.001
    seed: int = 1
    loss: str = "deepcel0"  # or "deepstorm"

    def __post_init__(self):
        if self.epochs < 1 or self.batch < 1:
            raise ValidationError("epochs and batch must be positive")
        if not self.lr > 0:
            raise ValidationError(f"learning rate must be > 0, got {self.lr}")
        if self.loss not in ("deepcel0", "deepstorm"):
            raise ValidationError(f"unknown loss {self.loss!r}")


def load_dataset(data_dir: str | Path) -> tuple[torch.Tensor, torch.Tensor]:
    """Load the inputs/targets stacks written by the simulator's train-data
    command. Inputs and targets are min-max normalized per patch (inference
    applies the same input normalization), so the simulator's arbitrary
    intensity units never reach the network."""
    data_dir = Path(data_dir)
    inputs, _ = read_stack(data_dir / "inputs")
    targets, _ = read_stack(data_dir / "targets")
    if inputs.shape != targets.shape:
        raise ValidationError(
            f"inputs {inputs.shape} and targets {targets.shape} disagree")
    if inputs.shape[0] == 0:
        raise ValidationError(f"empty dataset in {data_dir}")
    x = torch.from_numpy(minmax_normalize(inputs)).unsqueeze(1).float()
    y = torch.from_numpy(minmax_normalize(targets)).unsqueeze(1).float()
    return x, y


def minmax_normalize(frames: np.ndarray) -> np.ndarray:
    """Per-frame min-max to [0, 1]; constant frames map to zeros."""
    frames = np.asarray(frames, dtype=np.float64)
    lo = frames.min(axis=(-2, -1), keepdims=True)
    hi = frames.max(axis=(-2, -1), keepdims=True)
    span = np.where(hi > lo, hi - lo, 1.0)
    return (frames - lo) / span


def save_checkpoint(path: str | Path, model, net_cfg: NetConfig,
                    train_cfg: TrainConfig, lc: LossConfig,
                    loss_curve: list[float]) -> None:
    """Atomic write: serialize to a sibling temp file, then rename."""
    path = Path(path)
    payload = {
        "state_dict": model.state_dict(),
        "net_config": asdict(net_cfg),
        "train_config": asdict(train_cfg),
        "loss_config": {
            "lambda_cel0": lc.lambda_cel0,
            "g_sigma": lc.g_sigma,
            "column_norms": None if lc.column_norms is None
            else np.asarray(lc.column_norms).tolist(),
        },
        "normalization": "minmax",
        "loss_curve": loss_curve,
    }
    tmp = path.with_name(path.name + ".tmp")
    torch.save(payload, tmp)
    os.replace(tmp, path)


def load_checkpoint(path: str | Path):
    payload = torch.load(Path(path), map_location="cpu", weights_only=False)
    net_cfg = NetConfig(
        encoder_depths=tuple(payload["net_config"]["encoder_depths"]),
        bottleneck_depth=payload["net_config"]["bottleneck_depth"],
        decoder_depths=tuple(payload["net_config"]["decoder_depths"]),
        kernel_size=payload["net_config"]["kernel_size"],
        pool=payload["net_config"]["pool"])
    model = build_network(net_cfg)
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model, payload


def train(data_dir: str | Path, out_path: str | Path,
          train_cfg: TrainConfig = TrainConfig(),
          lc: LossConfig = LossConfig(),
          net_cfg: NetConfig = NetConfig()) -> list[float]:
    """Train and checkpoint; returns the per-epoch mean training loss."""
    torch.manual_seed(train_cfg.seed)
    x, y = load_dataset(data_dir)
    model = build_network(net_cfg)
    model.train()
    optimizer = torch.optim.Adam(model.parameters(), lr=train_cfg.lr)
    loss_fn = loss_deepcel0 if train_cfg.loss == "deepcel0" else loss_deepstorm

    n = x.shape[0]
    order_rng = torch.Generator().manual_seed(train_cfg.seed)
    curve: list[float] = []
    for epoch in range(train_cfg.epochs):
        perm = torch.randperm(n, generator=order_rng)
        epoch_losses = []
        for start in range(0, n, train_cfg.batch):
            idx = perm[start:start + train_cfg.batch]
            optimizer.zero_grad()
            out = model(x[idx])
            loss = loss_fn(out, y[idx], lc)
            if not torch.isfinite(loss):
                raise NumericalError(
                    f"non-finite loss at epoch {epoch + 1}, "
                    f"batch {start // train_cfg.batch + 1}")
            loss.backward()
            optimizer.step()
            epoch_losses.append(float(loss.detach()))
        curve.append(float(np.mean(epoch_losses)))
    save_checkpoint(out_path, model, net_cfg, train_cfg, lc, curve)
    return curve


def infer_stack(model, frames: np.ndarray, magnification: int) -> np.ndarray:
    """Per frame: min-max normalize, nearest-neighbour upsample by L, run the
    network. Returns (n, h*L, w*L) nonnegative maps."""
    if magnification < 1:
        raise ValidationError(
            f"magnification must be >= 1, got {magnification}")
    normalized = minmax_normalize(frames)
    up = np.repeat(np.repeat(normalized, magnification, axis=-2),
                   magnification, axis=-1)
    model.eval()
    with torch.no_grad():
        out = model(torch.from_numpy(up).unsqueeze(1).float())
    return out.squeeze(1).double().numpy()
