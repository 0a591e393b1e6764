"""Learned single-molecule localization: an encoder-decoder network trained
with a CEL0-regularized loss, interoperating with the physics-based
localization toolkit purely through its on-disk formats."""

__version__ = "0.1.0"

from .errors import CodecError, DeepnetError, NumericalError, ValidationError
from .losses import (LossConfig, cel0_phi, feasibility_report,
                     gaussian_kernel_2d, loss_deepcel0, loss_deepstorm)
from .model import LocalizationNet, NetConfig, build_network
from .stacks import read_norms, read_stack, write_stack
from .train import (TrainConfig, infer_stack, load_checkpoint, load_dataset,
                    minmax_normalize, save_checkpoint, train)

__all__ = [
    "CodecError", "DeepnetError", "NumericalError", "ValidationError",
    "LossConfig", "cel0_phi", "feasibility_report", "gaussian_kernel_2d",
    "loss_deepcel0", "loss_deepstorm",
    "LocalizationNet", "NetConfig", "build_network",
    "read_norms", "read_stack", "write_stack",
    "TrainConfig", "infer_stack", "load_checkpoint", "load_dataset",
    "minmax_normalize", "save_checkpoint", "train",
]
