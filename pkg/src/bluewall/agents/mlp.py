"""Value network: a small MLP with explicit backprop and an Adam optimizer.

Two rectified-linear hidden layers of 64 units and a linear head.  The
heavy math routes through the kernels package (compiled core when built,
numpy otherwise); both backends share float64 semantics with the ReLU
derivative defined as 0 at 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import kernels

HIDDEN_UNITS = 64

PARAM_NAMES = ("w1", "b1", "w2", "b2", "w3", "b3")


class ValueNetwork:
    """Q-value MLP; parameters are plain float64 arrays."""

    def __init__(self, input_dim: int, output_dim: int,
                 hidden: int = HIDDEN_UNITS,
                 rng: np.random.Generator | None = None):
        rng = rng or np.random.default_rng(0)
        self.input_dim = input_dim
        self.output_dim = output_dim
        self.hidden = hidden

        def he(fan_in: int, shape) -> np.ndarray:
            return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)

        self.w1 = he(input_dim, (input_dim, hidden))
        self.b1 = np.zeros(hidden)
        self.w2 = he(hidden, (hidden, hidden))
        self.b2 = np.zeros(hidden)
        self.w3 = he(hidden, (hidden, output_dim))
        self.b3 = np.zeros(output_dim)

    def params(self) -> list[np.ndarray]:
        return [getattr(self, name) for name in PARAM_NAMES]

    def set_params(self, values) -> None:
        for name, value in zip(PARAM_NAMES, values):
            setattr(self, name, np.array(value, dtype=np.float64))

    def copy_from(self, other: "ValueNetwork") -> None:
        self.set_params(p.copy() for p in other.params())

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.ascontiguousarray(np.atleast_2d(x), dtype=np.float64)
        _, _, q = kernels.mlp_forward(x, self.w1, self.b1, self.w2, self.b2,
                                      self.w3, self.b3)
        return q

    def forward_cached(self, x: np.ndarray):
        x = np.ascontiguousarray(np.atleast_2d(x), dtype=np.float64)
        h1, h2, q = kernels.mlp_forward(x, self.w1, self.b1, self.w2, self.b2,
                                        self.w3, self.b3)
        return x, h1, h2, q

    def gradients(self, x, h1, h2, dout) -> list[np.ndarray]:
        dout = np.ascontiguousarray(dout, dtype=np.float64)
        dw1, db1, dw2, db2, dw3, db3 = kernels.mlp_backward(
            x, h1, h2, self.w2, self.w3, dout)
        return [dw1, db1, dw2, db2, dw3, db3]


@dataclass
class Adam:
    """Adaptive-moment gradient steps over a ValueNetwork's parameters.

    ``weight_decay`` applies decoupled decay to the weight matrices after
    each moment update; biases are exempt so they can absorb offsets.
    Adam gives near-constant step sizes even to inputs that carry no
    signal, so without decay the weights on irrelevant input dimensions
    random-walk away from zero and drown the informative ones.
    """

    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    t: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    def step(self, net: ValueNetwork, grads) -> None:
        params = net.params()
        if not self.m:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.t += 1
        for i, (p, g) in enumerate(zip(params, grads)):
            self.m[i] = self.beta1 * self.m[i] + (1 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1 - self.beta2) * g * g
            m_hat = self.m[i] / (1 - self.beta1 ** self.t)
            v_hat = self.v[i] / (1 - self.beta2 ** self.t)
            p -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
        if self.weight_decay > 0.0:
            decay = self.lr * self.weight_decay
            for name in ("w1", "w2", "w3"):
                weight = getattr(net, name)
                weight -= decay * weight


def numerical_gradients(net: ValueNetwork, x: np.ndarray,
                        loss_fn, eps: float = 1e-5) -> list[np.ndarray]:
    """Central-difference gradients of loss_fn(q) w.r.t. every parameter."""
    grads = []
    for param in net.params():
        grad = np.zeros_like(param)
        flat = param.ravel()
        gflat = grad.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            hi = loss_fn(net.forward(x))
            flat[i] = orig - eps
            lo = loss_fn(net.forward(x))
            flat[i] = orig
            gflat[i] = (hi - lo) / (2 * eps)
        grads.append(grad)
    return grads
