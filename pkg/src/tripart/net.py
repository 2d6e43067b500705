"""Micro feed-forward softmax classifier with analytic backprop and SGD.

Everything runs in float64 so that central finite differences can be used
as a gradient oracle at tight tolerances.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

ACTIVATIONS = ("relu", "tanh")
PROB_FLOOR = 1e-12


@dataclass
class ClassifierState:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activation: str
    momentum_w: list[np.ndarray]
    momentum_b: list[np.ndarray]
    seed: int
    rng: np.random.Generator = field(repr=False)
    aug_rng: np.random.Generator = field(repr=False)

    @property
    def layer_sizes(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def n_classes(self) -> int:
        return self.weights[-1].shape[1]

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def params(self) -> list[np.ndarray]:
        """Parameter arrays in a fixed order: W0, b0, W1, b1, ..."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def copy(self) -> "ClassifierState":
        return ClassifierState(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            activation=self.activation,
            momentum_w=[m.copy() for m in self.momentum_w],
            momentum_b=[m.copy() for m in self.momentum_b],
            seed=self.seed,
            rng=_clone_rng(self.rng),
            aug_rng=_clone_rng(self.aug_rng),
        )


def _clone_rng(rng: np.random.Generator) -> np.random.Generator:
    out = np.random.Generator(type(rng.bit_generator)())
    out.bit_generator.state = rng.bit_generator.state
    return out


@dataclass
class Gradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def flat(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def scaled(self, factor: float) -> "Gradients":
        return Gradients([factor * w for w in self.weights], [factor * b for b in self.biases])


@dataclass
class OptimizerSpec:
    learning_rate: float = 0.02
    momentum: float = 0.9
    weight_decay: float = 5e-4
    lr_schedule: list[tuple[int, float]] = field(default_factory=list)

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must lie in [0, 1)")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be nonnegative")
        self.lr_schedule = [(int(e), float(m)) for e, m in self.lr_schedule]
        epochs = [e for e, _ in self.lr_schedule]
        if any(b <= a for a, b in zip(epochs, epochs[1:])):
            raise ValueError("lr_schedule epochs must be strictly increasing")
        if any(m <= 0 for _, m in self.lr_schedule):
            raise ValueError("lr_schedule multipliers must be positive")

    def lr_at(self, epoch: int) -> float:
        lr = self.learning_rate
        for trigger, mult in self.lr_schedule:
            if trigger <= epoch:
                lr *= mult
        return lr


def init_classifier(layer_sizes: Sequence[int], activation: str = "relu", seed: int = 0) -> ClassifierState:
    """Glorot-uniform weights, zero biases, zero momentum buffers."""
    sizes = [int(s) for s in layer_sizes]
    if len(sizes) < 2:
        raise ValueError("need at least an input and an output layer size")
    if any(s <= 0 for s in sizes):
        raise ValueError("layer sizes must be positive")
    if activation not in ACTIVATIONS:
        raise ValueError(f"unknown activation {activation!r}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return ClassifierState(
        weights=weights,
        biases=biases,
        activation=activation,
        momentum_w=[np.zeros_like(w) for w in weights],
        momentum_b=[np.zeros_like(b) for b in biases],
        seed=int(seed),
        # batch order and augmentation draw from separate streams, so switching
        # the noisy-subset strategy leaves the batch sequence unchanged
        rng=np.random.default_rng([int(seed), 1]),
        aug_rng=np.random.default_rng([int(seed), 2]),
    )


def _act(kind: str, z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0) if kind == "relu" else np.tanh(z)


def _act_grad(kind: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    return (z > 0).astype(np.float64) if kind == "relu" else 1.0 - a * a


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _check_batch(state: ClassifierState, batch) -> np.ndarray:
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != state.weights[0].shape[0]:
        raise ValueError(
            f"batch shape {x.shape} incompatible with input width {state.weights[0].shape[0]}"
        )
    return x


def forward_cache(state: ClassifierState, batch) -> tuple[np.ndarray, list]:
    """Forward pass that also returns the (pre, post) activations needed by backprop."""
    a = _check_batch(state, batch)
    cache = [(None, a)]
    last = len(state.weights) - 1
    for i, (w, b) in enumerate(zip(state.weights, state.biases)):
        z = a @ w + b
        a = z if i == last else _act(state.activation, z)
        cache.append((z, a))
    return softmax(a), cache


def forward(state: ClassifierState, batch) -> np.ndarray:
    return forward_cache(state, batch)[0]


def predict_labels(state: ClassifierState, batch) -> np.ndarray:
    # np.argmax returns the first maximum, i.e. the lowest class index on ties
    return np.argmax(forward(state, batch), axis=1)


def backward_from_cache(state: ClassifierState, probs: np.ndarray, cache: list, upstream: np.ndarray) -> Gradients:
    g = np.asarray(upstream, dtype=np.float64)
    if g.shape != probs.shape:
        raise ValueError(f"upstream gradient shape {g.shape} != output shape {probs.shape}")
    # softmax Jacobian-vector product
    delta = probs * (g - np.sum(probs * g, axis=1, keepdims=True))
    n_layers = len(state.weights)
    gw: list[np.ndarray] = [None] * n_layers  # type: ignore[list-item]
    gb: list[np.ndarray] = [None] * n_layers  # type: ignore[list-item]
    for i in range(n_layers - 1, -1, -1):
        a_prev = cache[i][1]
        gw[i] = a_prev.T @ delta
        gb[i] = delta.sum(axis=0)
        if i > 0:
            z_prev, a_prev_post = cache[i]
            delta = (delta @ state.weights[i].T) * _act_grad(state.activation, z_prev, a_prev_post)
    return Gradients(gw, gb)


def backward(state: ClassifierState, batch, upstream) -> Gradients:
    """Gradients of sum(upstream * probs) with respect to every parameter."""
    probs, cache = forward_cache(state, batch)
    return backward_from_cache(state, probs, cache, upstream)


def sgd_step(state: ClassifierState, grads: Gradients, spec: OptimizerSpec, epoch: int) -> ClassifierState:
    """Momentum SGD with coupled weight decay; updates ``state`` in place and returns it."""
    if len(grads.weights) != len(state.weights):
        raise ValueError("gradient layer count mismatch")
    lr = spec.lr_at(epoch)
    for params, moms, gs in (
        (state.weights, state.momentum_w, grads.weights),
        (state.biases, state.momentum_b, grads.biases),
    ):
        for p, m, g in zip(params, moms, gs):
            if g.shape != p.shape:
                raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape}")
            m *= spec.momentum
            m += g + spec.weight_decay * p
            p -= lr * m
    return state


def cross_entropy_objective(labels) -> Callable[[np.ndarray], tuple[float, np.ndarray]]:
    """Return ``probs -> (mean CE, dCE/dprobs)`` for fixed integer labels."""
    y = np.asarray(labels, dtype=np.int64)

    def objective(probs: np.ndarray) -> tuple[float, np.ndarray]:
        n = probs.shape[0]
        picked = probs[np.arange(n), y]
        clamped = np.maximum(picked, PROB_FLOOR)
        loss = float(-np.log(clamped).sum() / n)
        grad = np.zeros_like(probs)
        grad[np.arange(n), y] = np.where(picked > PROB_FLOOR, -1.0 / (n * clamped), 0.0)
        return loss, grad

    return objective


def finite_diff_check(
    state: ClassifierState,
    batch,
    labels,
    loss_kind: str = "ce",
    h: float = 1e-5,
    **loss_kwargs,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``loss_kind`` is one of ``ce``, ``hard``, ``consistency`` or ``total``;
    the objective itself is built by :func:`tripart.losses.make_objective`.
    """
    from .losses import make_objective

    x = _check_batch(state, batch)
    if state.n_params > 500:
        raise ValueError("finite_diff_check is limited to networks with <= 500 parameters")
    objective = make_objective(loss_kind, x, labels, state=state, **loss_kwargs)
    _, grads = objective(state)
    worst = 0.0
    for p, g in zip(state.params(), grads.flat()):
        flat_p = p.reshape(-1)
        flat_g = g.reshape(-1)
        for j in range(flat_p.size):
            orig = flat_p[j]
            flat_p[j] = orig + h
            up, _ = objective(state)
            flat_p[j] = orig - h
            down, _ = objective(state)
            flat_p[j] = orig
            numeric = (up - down) / (2 * h)
            err = abs(flat_g[j] - numeric) / max(1e-8, abs(numeric))
            worst = max(worst, err)
    return worst
