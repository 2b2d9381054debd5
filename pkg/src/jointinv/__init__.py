"""Joint learning of two impedance-inversion networks coupled by a weight
mismatch penalty.

The heavy lifting (2-D dilated convolution) runs in a compiled extension when
it is available and falls back to numpy otherwise; see :mod:`jointinv.kernels`.
"""

__version__ = "0.1.0"

from .autograd import ShapeError, Tensor, backward, no_grad
from .data import (DataError, Dataset, GridFormatError, SectionGrid, SyntheticSpec,
                   build_dataset, make_scenario, read_grid, sample_wells, write_grid)
from .evaluation import ConstantTargetError, evaluate, predict_section, r2
from .kernels import BACKEND
from .model import ConfigError, ModelConfig, Network, build_network, forward
from .trainer import (ArchitectureMismatch, TrainConfig, TrainHistory, train_joint,
                      weight_mismatch_loss)

__all__ = [
    "ArchitectureMismatch", "BACKEND", "ConfigError", "ConstantTargetError", "DataError",
    "Dataset", "GridFormatError", "ModelConfig", "Network", "SectionGrid", "ShapeError",
    "SyntheticSpec", "Tensor", "TrainConfig", "TrainHistory", "backward", "build_dataset",
    "build_network", "evaluate", "forward", "make_scenario", "no_grad", "predict_section",
    "r2", "read_grid", "sample_wells", "train_joint", "weight_mismatch_loss", "write_grid",
]
