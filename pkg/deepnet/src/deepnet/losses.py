"""Training losses: smoothed-MSE with a CEL0 sparsity penalty, and the
l1-regularized baseline.

Both losses smooth the residual with a fixed unit-sum Gaussian kernel g
(sigma 1 pixel by default) before the squared-error term, so a localization
that is off by a pixel is penalized gently rather than twice at full
strength. The CEL0 variant adds the exact-relaxation penalty

    Phi(x) = sum_i [lam - (||c_i||^2 / 2) (|x_i| - sqrt(2 lam)/||c_i||)^2]

over indices with |x_i| < sqrt(2 lam)/||c_i||, plus lam per nonzero
elsewhere; ||c_i|| are the physical operator's column norms (all ones when
no norms file is supplied).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F

from .errors import ValidationError


@dataclass(frozen=True)
class LossConfig:
    lambda_cel0: float = 100.0
    g_sigma: float = 1.0          # pixels
    column_norms: np.ndarray | None = None  # HR-shaped; None -> all ones

    def __post_init__(self):
        if not self.lambda_cel0 >= 0:
            raise ValidationError(
                f"lambda_cel0 must be >= 0, got {self.lambda_cel0}")
        if not self.g_sigma > 0:
            raise ValidationError(f"g_sigma must be > 0, got {self.g_sigma}")


def gaussian_kernel_2d(sigma: float) -> torch.Tensor:
    """Unit-sum 2D Gaussian, truncated at ceil(4 sigma) pixels."""
    r = max(1, math.ceil(4.0 * sigma))
    offsets = torch.arange(-r, r + 1, dtype=torch.float64)
    g1 = torch.exp(-(offsets**2) / (2.0 * sigma**2))
    k = torch.outer(g1, g1)
    return k / k.sum()


def _check_batch(output: torch.Tensor, target: torch.Tensor) -> None:
    if output.shape != target.shape:
        raise ValidationError(
            f"output shape {tuple(output.shape)} does not match "
            f"target shape {tuple(target.shape)}")
    if output.ndim != 4 or output.shape[1] != 1:
        raise ValidationError(
            f"expected (batch, 1, h, w) tensors, got {tuple(output.shape)}")


def _smooth(x: torch.Tensor, sigma: float) -> torch.Tensor:
    k = gaussian_kernel_2d(sigma).to(x.dtype).to(x.device)
    weight = k.view(1, 1, *k.shape)
    return F.conv2d(x, weight, padding=k.shape[0] // 2)


def _norms_tensor(lc: LossConfig, like: torch.Tensor) -> torch.Tensor:
    if lc.column_norms is None:
        return torch.ones(like.shape[-2:], dtype=like.dtype,
                          device=like.device)
    norms = torch.as_tensor(lc.column_norms, dtype=like.dtype,
                            device=like.device)
    if norms.shape != like.shape[-2:]:
        raise ValidationError(
            f"column norms shape {tuple(norms.shape)} does not match "
            f"output spatial shape {tuple(like.shape[-2:])}")
    return norms


def cel0_phi(x: torch.Tensor, norms: torch.Tensor,
             lam: float) -> torch.Tensor:
    """Phi summed over all entries of x (norms broadcast over the batch).
    Zero-norm columns contribute lam per nonzero entry."""
    ax = x.abs()
    pos = norms > 0
    safe = torch.where(pos, norms, torch.ones_like(norms))
    thresh = math.sqrt(2.0 * lam) / safe
    inside = lam - 0.5 * (safe * (ax - thresh)).square()
    capped = torch.where(ax < thresh, inside, torch.full_like(ax, lam))
    # exact zero at x = 0 (not lam - lam up to rounding)
    capped = torch.where(ax == 0, torch.zeros_like(ax), capped)
    degenerate = torch.where(ax > 0, torch.full_like(ax, lam),
                             torch.zeros_like(ax))
    return torch.where(pos, capped, degenerate).sum()


def loss_deepcel0(output: torch.Tensor, target: torch.Tensor,
                  lc: LossConfig) -> torch.Tensor:
    """(1/K) sum_k [ ||g * out_k - g * tgt_k||^2 + Phi(vec(out_k)) ]."""
    _check_batch(output, target)
    batch = output.shape[0]
    residual = _smooth(output, lc.g_sigma) - _smooth(target, lc.g_sigma)
    data = residual.square().sum()
    norms = _norms_tensor(lc, output)
    penalty = cel0_phi(output, norms, lc.lambda_cel0) \
        if lc.lambda_cel0 > 0 else output.new_zeros(())
    return (data + penalty) / batch


def loss_deepstorm(output: torch.Tensor, target: torch.Tensor,
                   lc: LossConfig) -> torch.Tensor:
    """(1/K) sum_k [ ||g * out_k - g * tgt_k||^2 + ||vec(out_k)||_1 ]."""
    _check_batch(output, target)
    batch = output.shape[0]
    residual = _smooth(output, lc.g_sigma) - _smooth(target, lc.g_sigma)
    return (residual.square().sum() + output.abs().sum()) / batch


def feasibility_report(output: torch.Tensor) -> dict:
    """Evaluation-only check of the positivity constraint: reports how far a
    batch strays below zero (never used as a training objective)."""
    negatives = output < 0
    return {
        "violations": int(negatives.sum()),
        "min_value": float(output.min()) if output.numel() else 0.0,
        "feasible": bool(not negatives.any()),
    }
