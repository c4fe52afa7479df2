"""Parameter registration and the basic trainable layers."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor, add, embedding, layer_norm, matmul

INIT_STD = 0.02


class Parameter:
    """A named trainable tensor plus its Adam moment buffers."""

    __slots__ = ("tensor", "name", "adam_m", "adam_v", "step_count")

    def __init__(self, data, name=""):
        self.tensor = Tensor(data, requires_grad=True)
        self.name = name
        self.adam_m = np.zeros_like(self.tensor.data)
        self.adam_v = np.zeros_like(self.tensor.data)
        self.step_count = 0

    @property
    def data(self):
        return self.tensor.data

    @data.setter
    def data(self, value):
        self.tensor.data = value

    @property
    def grad(self):
        return self.tensor.grad

    def clear_grad(self):
        self.tensor.grad = None

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.tensor.shape})"


def _walk(value, path):
    if isinstance(value, Parameter):
        value.name = path
        yield path, value
    elif isinstance(value, Module):
        yield from value.named_parameters(path)
    elif isinstance(value, (list, tuple)):
        for i, item in enumerate(value):
            yield from _walk(item, f"{path}.{i}")


class Module:
    """Minimal container: child modules and parameters are plain attributes;
    lists nest arbitrarily."""

    def named_parameters(self, prefix=""):
        for attr, value in vars(self).items():
            path = f"{prefix}.{attr}" if prefix else attr
            yield from _walk(value, path)

    def parameters(self):
        return [p for _, p in self.named_parameters()]

    def parameter_count(self):
        return sum(p.tensor.size for p in self.parameters())

    def state_arrays(self):
        """name -> float array view, in registration order (checkpoint payload)."""
        return {name: p.tensor.data for name, p in self.named_parameters()}

    def load_state_arrays(self, arrays):
        own = dict(self.named_parameters())
        missing = set(own) - set(arrays)
        extra = set(arrays) - set(own)
        if missing or extra:
            raise ValueError(f"state mismatch: missing={sorted(missing)} extra={sorted(extra)}")
        for name, p in own.items():
            arr = np.asarray(arrays[name], dtype=p.tensor.data.dtype)
            if arr.shape != p.tensor.shape:
                raise ValueError(f"shape mismatch for {name}: {arr.shape} vs {p.tensor.shape}")
            p.tensor.data = arr.copy()


class Linear(Module):
    def __init__(self, n_in, n_out, rng, bias=True):
        self.weight = Parameter(rng.normal(0.0, INIT_STD, size=(n_in, n_out)))
        self.bias = Parameter(np.zeros(n_out)) if bias else None

    def __call__(self, x):
        out = matmul(x, self.weight.tensor)
        if self.bias is not None:
            out = add(out, self.bias.tensor)
        return out


class Embedding(Module):
    def __init__(self, n_rows, dim, rng):
        self.weight = Parameter(rng.normal(0.0, INIT_STD, size=(n_rows, dim)))

    def __call__(self, ids):
        return embedding(self.weight.tensor, ids)


class LayerNorm(Module):
    def __init__(self, dim, eps=1e-5):
        self.gain = Parameter(np.ones(dim))
        self.bias = Parameter(np.zeros(dim))
        self.eps = eps

    def __call__(self, x):
        return layer_norm(x, self.gain.tensor, self.bias.tensor, self.eps)
