from .tensor import (
    Tensor,
    add,
    conv2d,
    cross_entropy,
    dropout,
    embedding,
    gelu,
    layer_norm,
    masked_softmax,
    matmul,
    mul,
    no_grad,
    precision,
    reshape,
    scaled_dot_product_attention,
    tmean,
    transpose,
    tsum,
)
from .module import Embedding, LayerNorm, Linear, Module, Parameter
from .optim import ScheduleConfig, adam_step, clear_grads, lr_at
