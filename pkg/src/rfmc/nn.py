"""Float feedforward classifier: forward pass, backprop, Adam training.

The production architecture is 1800-100-20-7 (ReLU hidden layers, softmax
output, cross-entropy loss), but every routine works for arbitrary layer
dims so small networks can be checked against independent oracles.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .seeding import rng_from_seed, split_seed

ARCH = (1800, 100, 20, 7)

# Probabilities are clamped here before log() so a confident miss stays finite.
LOSS_CLAMP = 1e-12


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    batch_size: int = 64
    epochs: int = 30
    # Decoupled L2 decay on weights (biases exempt), applied by train()
    # after each Adam step. Without it the over-parameterized first layer
    # memorizes raw I/Q training frames instead of learning statistics.
    weight_decay: float = 1.0
    seed: int = 0

    def validate(self) -> None:
        if not (np.isfinite(self.learning_rate) and self.learning_rate > 0):
            raise ValueError("learning_rate must be positive and finite")
        for name in ("adam_beta1", "adam_beta2"):
            b = getattr(self, name)
            if not 0.0 < b < 1.0:
                raise ValueError(f"{name} must be in (0, 1)")
        if not (np.isfinite(self.adam_epsilon) and self.adam_epsilon > 0):
            raise ValueError("adam_epsilon must be positive and finite")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if not (np.isfinite(self.weight_decay) and self.weight_decay >= 0):
            raise ValueError("weight_decay must be >= 0 and finite")


@dataclass
class NetworkParams:
    """Per-layer weight matrices (out x in) and bias vectors."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def layer_dims(self) -> tuple[int, ...]:
        return (self.weights[0].shape[1], *(w.shape[0] for w in self.weights))

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def copy(self) -> "NetworkParams":
        return NetworkParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def validate(self) -> None:
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ValueError("weights and biases must be non-empty and congruent")
        prev_out = None
        for w, b in zip(self.weights, self.biases):
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise ValueError("bias length must match weight rows")
            if prev_out is not None and w.shape[1] != prev_out:
                raise ValueError("layer input dim must match previous output dim")
            prev_out = w.shape[0]
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError("parameters must be finite")


@dataclass
class Gradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray]


@dataclass
class AdamState:
    m_weights: list[np.ndarray]
    m_biases: list[np.ndarray]
    v_weights: list[np.ndarray]
    v_biases: list[np.ndarray]
    step_count: int = 0

    @classmethod
    def zeros(cls, params: NetworkParams) -> "AdamState":
        return cls(
            m_weights=[np.zeros_like(w) for w in params.weights],
            m_biases=[np.zeros_like(b) for b in params.biases],
            v_weights=[np.zeros_like(w) for w in params.weights],
            v_biases=[np.zeros_like(b) for b in params.biases],
        )


def init_params(layer_dims: tuple[int, ...] = ARCH, seed: int = 0) -> NetworkParams:
    """He-style uniform init (+-sqrt(6/fan_in)), zero biases."""
    if len(layer_dims) < 2:
        raise ValueError("need at least input and output dims")
    rng = rng_from_seed(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
        limit = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return NetworkParams(weights, biases)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def softmax(z: np.ndarray) -> np.ndarray:
    """Max-shifted softmax along the last axis."""
    z = np.asarray(z, dtype=np.float64)
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _forward_batch(params: NetworkParams, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(logits, probs) for a (n, in_dim) batch."""
    h = x
    for w, b in zip(params.weights[:-1], params.biases[:-1]):
        h = relu(h @ w.T + b)
    logits = h @ params.weights[-1].T + params.biases[-1]
    return logits, softmax(logits)


def forward(params: NetworkParams, frame: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(logits, probs) for a single frame."""
    x = np.asarray(frame, dtype=np.float64)
    in_dim = params.weights[0].shape[1]
    if x.shape != (in_dim,):
        raise ValueError(f"frame must have shape ({in_dim},), got {x.shape}")
    logits, probs = _forward_batch(params, x[None, :])
    return logits[0], probs[0]


def classify(params: NetworkParams, frame: np.ndarray) -> int:
    """Argmax class, ties broken by lowest index."""
    logits, _ = forward(params, frame)
    return int(np.argmax(logits))


def cross_entropy(probs: np.ndarray, truth: int) -> float:
    """-log p[truth] with the probability clamped to >= LOSS_CLAMP."""
    return float(-np.log(max(float(probs[int(truth)]), LOSS_CLAMP)))


def _forward_backward(
    params: NetworkParams, x: np.ndarray, labels: np.ndarray
) -> tuple[Gradients, float]:
    """Mean cross-entropy gradients over a batch, plus the mean loss."""
    n = x.shape[0]
    # Forward, caching pre-activations.
    acts = [x]
    zs = []
    h = x
    for w, b in zip(params.weights[:-1], params.biases[:-1]):
        z = h @ w.T + b
        zs.append(z)
        h = relu(z)
        acts.append(h)
    logits = h @ params.weights[-1].T + params.biases[-1]
    probs = softmax(logits)

    picked = probs[np.arange(n), labels]
    loss = float(np.mean(-np.log(np.maximum(picked, LOSS_CLAMP))))

    # Fused softmax + cross-entropy gradient.
    dlogits = probs.copy()
    dlogits[np.arange(n), labels] -= 1.0
    dlogits /= n

    grad_w = [np.empty(0)] * params.n_layers
    grad_b = [np.empty(0)] * params.n_layers
    delta = dlogits
    for i in range(params.n_layers - 1, -1, -1):
        grad_w[i] = delta.T @ acts[i]
        grad_b[i] = delta.sum(axis=0)
        if i > 0:
            # ReLU subgradient: 0 at exactly 0.
            delta = (delta @ params.weights[i]) * (zs[i - 1] > 0)
    return Gradients(grad_w, grad_b), loss


def gradients(params: NetworkParams, frames: np.ndarray, labels: np.ndarray) -> Gradients:
    """Mean gradient of the cross-entropy loss over a batch of frames."""
    x = np.atleast_2d(np.asarray(frames, dtype=np.float64))
    y = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    if x.shape[0] == 0:
        raise ValueError("empty batch")
    if x.shape[0] != y.shape[0]:
        raise ValueError("frames and labels must have the same length")
    grads, _ = _forward_backward(params, x, y)
    return grads


def adam_step(
    params: NetworkParams,
    grads: Gradients,
    state: AdamState,
    config: TrainConfig,
) -> tuple[NetworkParams, AdamState]:
    """One bias-corrected Adam update; returns new params and state."""
    for gw, w in zip(grads.weights, params.weights):
        if gw.shape != w.shape:
            raise ValueError("gradient shape mismatch")
    for gb, b in zip(grads.biases, params.biases):
        if gb.shape != b.shape:
            raise ValueError("gradient shape mismatch")

    t = state.step_count + 1
    b1, b2, eps, lr = (
        config.adam_beta1,
        config.adam_beta2,
        config.adam_epsilon,
        config.learning_rate,
    )
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t

    def update(p, g, m, v):
        m_new = b1 * m + (1 - b1) * g
        v_new = b2 * v + (1 - b2) * g**2
        p_new = p - lr * (m_new / c1) / (np.sqrt(v_new / c2) + eps)
        return p_new, m_new, v_new

    new_w, new_b = [], []
    new_state = AdamState([], [], [], [], step_count=t)
    for i in range(params.n_layers):
        w, mw, vw = update(params.weights[i], grads.weights[i], state.m_weights[i], state.v_weights[i])
        b, mb, vb = update(params.biases[i], grads.biases[i], state.m_biases[i], state.v_biases[i])
        new_w.append(w)
        new_b.append(b)
        new_state.m_weights.append(mw)
        new_state.v_weights.append(vw)
        new_state.m_biases.append(mb)
        new_state.v_biases.append(vb)
    return NetworkParams(new_w, new_b), new_state


def train(
    frames: np.ndarray,
    labels: np.ndarray,
    config: TrainConfig | None = None,
    layer_dims: tuple[int, ...] = ARCH,
) -> tuple[NetworkParams, list[float]]:
    """Train from a fresh seeded init; returns (params, per-epoch mean loss).

    Requires every output class to be present in ``labels``. Batches are
    reshuffled each epoch from the config seed, so the whole run is a pure
    function of (frames, labels, config).
    """
    config = config or TrainConfig()
    config.validate()
    x = np.asarray(frames, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("frames must be a non-empty (n, dim) array")
    if x.shape[1] != layer_dims[0]:
        raise ValueError(f"frame dim {x.shape[1]} != input dim {layer_dims[0]}")
    present = set(np.unique(y).tolist())
    missing = [c for c in range(layer_dims[-1]) if c not in present]
    if missing:
        raise ValueError(f"dataset is missing classes: {missing}")

    init_seed, shuffle_seed = split_seed(config.seed, 2)
    params = init_params(layer_dims, seed=init_seed)
    state = AdamState.zeros(params)
    shuffle_rng = rng_from_seed(shuffle_seed)

    n = x.shape[0]
    decay = 1.0 - config.learning_rate * config.weight_decay
    history: list[float] = []
    for _ in range(config.epochs):
        order = shuffle_rng.permutation(n)
        epoch_loss = 0.0
        n_batches = 0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            grads, loss = _forward_backward(params, x[idx], y[idx])
            params, state = adam_step(params, grads, state, config)
            if config.weight_decay:
                for w in params.weights:
                    w *= decay
            epoch_loss += loss
            n_batches += 1
        history.append(epoch_loss / n_batches)
    return params, history


def accuracy(params: NetworkParams, frames: np.ndarray, labels: np.ndarray) -> float:
    """Fraction of frames whose argmax class matches the label."""
    x = np.asarray(frames, dtype=np.float64)
    logits, _ = _forward_batch(params, x)
    return float(np.mean(np.argmax(logits, axis=1) == np.asarray(labels)))
