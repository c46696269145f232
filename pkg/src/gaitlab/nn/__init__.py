from . import tensor
from .checkpoint import CheckpointError, checkpoint_hash, load_checkpoint, save_checkpoint
from .layers import GRUCell, Linear, conv1d, gaussian_logprob, mlp_forward
from .optim import Adam, ParamTree
from .tensor import ShapeMismatch, Tensor, concat, grad, no_grad

__all__ = [
    "tensor",
    "Tensor",
    "ShapeMismatch",
    "concat",
    "grad",
    "no_grad",
    "GRUCell",
    "Linear",
    "conv1d",
    "gaussian_logprob",
    "mlp_forward",
    "Adam",
    "ParamTree",
    "CheckpointError",
    "checkpoint_hash",
    "load_checkpoint",
    "save_checkpoint",
]
