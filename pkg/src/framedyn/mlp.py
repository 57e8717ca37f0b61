"""Multilayer perceptron with analytic backpropagation and Adam.

Self-contained on purpose: training runs must be reproducible bit-for-bit
from integer seeds (see :mod:`framedyn.rng`), and the gradient path is
checked against central finite differences in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import Rng

ACTIVATIONS = ("relu", "tanh")


@dataclass(frozen=True)
class MlpSpec:
    """Architecture description: dims, hidden widths, activation, init seed."""

    input_dim: int
    output_dim: int
    hidden_layers: tuple[int, ...] = (64,)
    activation: str = "relu"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hidden_layers", tuple(int(w) for w in self.hidden_layers))
        if self.input_dim <= 0 or self.output_dim <= 0:
            raise ValueError("input_dim and output_dim must be positive")
        if any(w <= 0 for w in self.hidden_layers):
            raise ValueError("hidden layer widths must be positive")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}")

    @property
    def layer_dims(self) -> list[tuple[int, int]]:
        dims = (self.input_dim,) + self.hidden_layers + (self.output_dim,)
        return list(zip(dims[:-1], dims[1:]))


def _act(name, z):
    if name == "relu":
        return np.maximum(z, 0.0)
    return np.tanh(z)


def _act_grad(name, z):
    if name == "relu":
        return (z > 0.0).astype(np.float64)
    t = np.tanh(z)
    return 1.0 - t * t


class Mlp:
    """Feed-forward network: affine layers with activations between them,
    affine output.  Inputs may be single vectors or (batch, dim) arrays.
    """

    def __init__(self, spec: MlpSpec, weights, biases):
        self.spec = spec
        self.weights = weights  # each (fan_in, fan_out)
        self.biases = biases  # each (fan_out,)

    @classmethod
    def from_spec(cls, spec: MlpSpec) -> "Mlp":
        """Initialize weights uniform in +-sqrt(6 / (fan_in + fan_out)),
        biases zero.  Entries are drawn layer by layer, row-major, from an
        :class:`Rng` seeded with ``spec.seed``.
        """
        rng = Rng(spec.seed)
        weights, biases = [], []
        for fan_in, fan_out in spec.layer_dims:
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        return cls(spec, weights, biases)

    @property
    def input_dim(self) -> int:
        return self.spec.input_dim

    @property
    def output_dim(self) -> int:
        return self.spec.output_dim

    def _check_input(self, x) -> tuple[np.ndarray, bool]:
        arr = np.asarray(x, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr[None, :]
            single = True
        elif arr.ndim == 2:
            single = False
        else:
            raise ValueError(f"expected 1-D or 2-D input, got shape {arr.shape}")
        if arr.shape[1] != self.spec.input_dim:
            raise ValueError(
                f"input length {arr.shape[1]} does not match input_dim {self.spec.input_dim}"
            )
        return arr, single

    def forward(self, x) -> np.ndarray:
        arr, single = self._check_input(x)
        h = arr
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if i != last:
                h = _act(self.spec.activation, h)
        return h[0] if single else h

    __call__ = forward

    def forward_cached(self, x):
        """Forward pass keeping layer inputs and pre-activations for backward."""
        arr, _ = self._check_input(x)
        inputs, pres = [], []
        h = arr
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            inputs.append(h)
            z = h @ w + b
            pres.append(z)
            h = z if i == last else _act(self.spec.activation, z)
        return h, (inputs, pres)

    def backward(self, cache, grad_out) -> list[np.ndarray]:
        """Gradients of a scalar loss w.r.t. every parameter.

        ``grad_out`` is the loss gradient w.r.t. the network output,
        shape (batch, output_dim).  Returns arrays aligned with
        :meth:`parameters`.
        """
        inputs, pres = cache
        grad = np.asarray(grad_out, dtype=np.float64)
        if grad.ndim == 1:
            grad = grad[None, :]
        grads: list[np.ndarray] = [np.empty(0)] * (2 * len(self.weights))
        last = len(self.weights) - 1
        for i in range(last, -1, -1):
            if i != last:
                grad = grad * _act_grad(self.spec.activation, pres[i])
            grads[2 * i] = inputs[i].T @ grad
            grads[2 * i + 1] = grad.sum(axis=0)
            if i != 0:
                grad = grad @ self.weights[i].T
        return grads

    def parameters(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    @property
    def param_count(self) -> int:
        return sum(p.size for p in self.parameters())

    def flatten_params(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.parameters()])

    def load_flat_params(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=np.float64)
        if flat.size != self.param_count:
            raise ValueError(
                f"parameter vector has {flat.size} entries, expected {self.param_count}"
            )
        offset = 0
        for p in self.parameters():
            p[...] = flat[offset : offset + p.size].reshape(p.shape)
            offset += p.size


class Adam:
    """Adaptive moment estimation with bias correction."""

    def __init__(self, params, lr=1e-3, betas=(0.9, 0.999), eps=1e-8):
        self.lr = float(lr)
        self.beta1, self.beta2 = betas
        self.eps = float(eps)
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bias1 = 1.0 - b1**self.t
        bias2 = 1.0 - b2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= self.lr * (m / bias1) / (np.sqrt(v / bias2) + self.eps)
