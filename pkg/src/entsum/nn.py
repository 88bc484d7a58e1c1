"""Minimal dense-network machinery in 64-bit numpy.

Implements exactly what the scorer needs: fully connected layers with ReLU
or linear activations, reverse-mode gradients, numerically stable softmax,
cosine similarity with a zero-norm guard, mean squared error, Adam, and a
central-difference gradient checker.  No batching, no graphs, no GPU.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .errors import ShapeMismatch

ZERO_NORM_EPS = 1e-12


class Activation(Enum):
    RELU = "relu"
    LINEAR = "linear"


@dataclass
class DenseLayer:
    W: np.ndarray  # [out, in]
    b: np.ndarray  # [out]
    activation: Activation

    def __post_init__(self):
        if self.W.ndim != 2 or self.b.ndim != 1 or self.W.shape[0] != self.b.shape[0]:
            raise ShapeMismatch(
                f"inconsistent layer shapes W{self.W.shape} b{self.b.shape}"
            )

    @property
    def in_dim(self) -> int:
        return self.W.shape[1]

    @property
    def out_dim(self) -> int:
        return self.W.shape[0]


def glorot_uniform(rng: np.random.Generator, out_dim: int, in_dim: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (in_dim + out_dim))
    return rng.uniform(-limit, limit, size=(out_dim, in_dim))


@dataclass
class Mlp:
    layers: list[DenseLayer]

    def __post_init__(self):
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if prev.out_dim != nxt.in_dim:
                raise ShapeMismatch(
                    f"layer dims do not chain: {prev.out_dim} -> {nxt.in_dim}"
                )

    @classmethod
    def create(
        cls,
        dims: Sequence[int],
        final_activation: Activation,
        rng: np.random.Generator,
    ) -> "Mlp":
        """Build ``len(dims) - 1`` layers; hidden layers ReLU, last as given.

        Weights are Glorot-uniform from the supplied generator, biases zero.
        """
        if len(dims) < 2:
            raise ShapeMismatch("an MLP needs at least one layer")
        layers = []
        for i, (d_in, d_out) in enumerate(zip(dims, dims[1:])):
            last = i == len(dims) - 2
            layers.append(
                DenseLayer(
                    W=glorot_uniform(rng, d_out, d_in),
                    b=np.zeros(d_out, dtype=np.float64),
                    activation=final_activation if last else Activation.RELU,
                )
            )
        return cls(layers)

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    def parameters(self) -> list[np.ndarray]:
        params = []
        for layer in self.layers:
            params.append(layer.W)
            params.append(layer.b)
        return params

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, list]:
        """Run the stack on one vector; the cache feeds ``backward``."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1 or x.shape[0] != self.in_dim:
            raise ShapeMismatch(
                f"input of length {x.shape} does not match first layer "
                f"input dim {self.in_dim}"
            )
        cache = []
        for layer in self.layers:
            z = layer.W @ x + layer.b
            cache.append((x, z))
            if layer.activation is Activation.RELU:
                x = np.maximum(z, 0.0)
            else:
                x = z
        return x, cache

    def backward(self, cache: list, dy: np.ndarray, tape: "GradientTape") -> np.ndarray:
        """Accumulate parameter gradients onto the tape; return dL/dx."""
        dy = np.asarray(dy, dtype=np.float64)
        if dy.shape != (self.out_dim,):
            raise ShapeMismatch(
                f"upstream gradient shape {dy.shape} does not match output "
                f"dim {self.out_dim}"
            )
        grad = dy
        for idx in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[idx]
            x_in, z = cache[idx]
            if layer.activation is Activation.RELU:
                dz = grad * (z > 0.0)
            else:
                dz = grad
            tape.grads[2 * idx] += np.outer(dz, x_in)
            tape.grads[2 * idx + 1] += dz
            grad = layer.W.T @ dz
        return grad


@dataclass
class GradientTape:
    """Per-parameter gradient accumulators mirroring an Mlp's parameters."""

    grads: list[np.ndarray]

    @classmethod
    def for_mlp(cls, mlp: Mlp) -> "GradientTape":
        return cls([np.zeros_like(p) for p in mlp.parameters()])

    def zero(self) -> None:
        for g in self.grads:
            g[...] = 0.0


def softmax(z: np.ndarray) -> np.ndarray:
    """Stable softmax over a vector; outputs are positive and sum to one."""
    z = np.asarray(z, dtype=np.float64)
    shifted = z - np.max(z)
    e = np.exp(shifted)
    return e / np.sum(e)


def softmax_backward(out: np.ndarray, dout: np.ndarray) -> np.ndarray:
    """Gradient of a loss wrt the softmax inputs, given output and its grad."""
    inner = float(np.dot(out, dout))
    return out * (dout - inner)


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity; returns 0 when either norm is (near) zero so that
    all-unknown-token embeddings stay well defined."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ShapeMismatch(f"cosine over shapes {u.shape} and {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu < ZERO_NORM_EPS or nv < ZERO_NORM_EPS:
        return 0.0
    # rounding can push the quotient an ulp past +-1 for (anti)parallel inputs
    return min(1.0, max(-1.0, float(np.dot(u, v) / (nu * nv))))


def cosine_backward(
    u: np.ndarray, v: np.ndarray, dcos: float
) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of ``dcos * cosine(u, v)`` wrt u and v; zero at the guard."""
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu < ZERO_NORM_EPS or nv < ZERO_NORM_EPS:
        return np.zeros_like(u), np.zeros_like(v)
    c = min(1.0, max(-1.0, float(np.dot(u, v) / (nu * nv))))
    du = dcos * (v / (nu * nv) - c * u / (nu * nu))
    dv = dcos * (u / (nu * nv) - c * v / (nv * nv))
    return du, dv


def mse_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error and its gradient wrt the predictions."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape or pred.ndim != 1 or pred.shape[0] < 1:
        raise ShapeMismatch(f"mse over shapes {pred.shape} and {target.shape}")
    diff = pred - target
    n = pred.shape[0]
    loss = float(np.dot(diff, diff) / n)
    return loss, (2.0 / n) * diff


@dataclass
class AdamState:
    """Adam accumulators for a fixed parameter list.

    Only the learning rate comes from configuration; the decay rates and
    epsilon are the optimizer's canonical defaults.
    """

    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def create(cls, params: Sequence[np.ndarray], lr: float = 0.01) -> "AdamState":
        return cls(
            lr=lr,
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
        )


def adam_step(
    params: Sequence[np.ndarray], grads: Sequence[np.ndarray], state: AdamState
) -> None:
    """One in-place Adam update with bias correction."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ShapeMismatch("parameter, gradient and state lists differ in length")
    for p, g, m in zip(params, grads, state.m):
        if p.shape != g.shape or p.shape != m.shape:
            raise ShapeMismatch(f"misaligned shapes {p.shape} vs {g.shape}")
    state.step_count += 1
    t = state.step_count
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        m_hat = m / bc1
        v_hat = v / bc2
        p -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)


def grad_check(
    loss_fn: Callable[[], float],
    params: Sequence[np.ndarray],
    analytic: Sequence[np.ndarray],
    h: float = 1e-5,
) -> float:
    """Max relative error between analytic gradients and central differences.

    ``loss_fn`` must read the live ``params`` arrays; each component is
    perturbed in place and restored exactly.  The relative error for one
    component is |a - n| / max(1e-8, |a| + |n|).
    """
    worst = 0.0
    for p, a in zip(params, analytic):
        flat_p = p.reshape(-1)
        flat_a = a.reshape(-1)
        for i in range(flat_p.shape[0]):
            orig = flat_p[i]
            flat_p[i] = orig + h
            plus = loss_fn()
            flat_p[i] = orig - h
            minus = loss_fn()
            flat_p[i] = orig
            numeric = (plus - minus) / (2.0 * h)
            denom = max(1e-8, abs(flat_a[i]) + abs(numeric))
            worst = max(worst, abs(flat_a[i] - numeric) / denom)
    return worst
