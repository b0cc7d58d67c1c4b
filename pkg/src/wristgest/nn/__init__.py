from .tensor import (
    Tensor,
    add,
    as_tensor,
    backward,
    concat,
    conv1d,
    cross_entropy,
    dense,
    dropout,
    gelu,
    global_mean_pool,
    layernorm,
    matmul,
    mul,
    relu,
    reshape,
    scale,
    scaled_dot_product_attention,
    softmax,
    sub,
    take,
    tmean,
    transpose,
    tsum,
)
from .gradcheck import grad_check
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "Tensor",
    "add",
    "as_tensor",
    "backward",
    "concat",
    "conv1d",
    "cross_entropy",
    "dense",
    "dropout",
    "gelu",
    "global_mean_pool",
    "grad_check",
    "layernorm",
    "load_checkpoint",
    "matmul",
    "mul",
    "relu",
    "reshape",
    "save_checkpoint",
    "scale",
    "scaled_dot_product_attention",
    "softmax",
    "sub",
    "take",
    "tmean",
    "transpose",
    "tsum",
]
