"""Dense MLP, softmax helpers and Adam, written directly against numpy.

Everything here runs in float64. Inputs may be a single vector of shape
``(n_in,)`` or a batch of shape ``(batch, n_in)``; weights are stored as
``(n_in, n_out)`` so a batch forward pass is ``x @ W + b``.
"""

from __future__ import annotations

import base64
import json
import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np


class Mlp:
    """Fully connected network with ReLU hidden layers and a linear output."""

    def __init__(self, layer_sizes: Sequence[int], seed: int | None = None,
                 rng: np.random.Generator | None = None):
        sizes = tuple(int(s) for s in layer_sizes)
        if len(sizes) < 2 or any(s <= 0 for s in sizes):
            raise ValueError(f"invalid layer sizes {sizes}")
        if rng is None:
            rng = np.random.default_rng(seed)
        self.layer_sizes = sizes
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for n_in, n_out in zip(sizes[:-1], sizes[1:]):
            bound = 1.0 / np.sqrt(n_in)
            self.weights.append(rng.uniform(-bound, bound, size=(n_in, n_out)))
            self.biases.append(rng.uniform(-bound, bound, size=n_out))

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def params(self) -> list[np.ndarray]:
        """Parameter arrays in canonical order ``[W0, b0, W1, b1, ...]`` (live references)."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def _check_input(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim not in (1, 2) or x.shape[-1] != self.layer_sizes[0]:
            raise ValueError(
                f"input shape {x.shape} does not match input size {self.layer_sizes[0]}")
        return x

    def forward(self, x: np.ndarray) -> np.ndarray:
        h = self._check_input(x)
        last = self.n_layers - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if i < last:
                h = np.maximum(h, 0.0)
        return h

    __call__ = forward

    def forward_cached(self, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        """Forward pass that also returns the layer inputs needed by ``backward_cached``."""
        h = self._check_input(x)
        inputs = []
        last = self.n_layers - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            inputs.append(h)
            h = h @ w + b
            if i < last:
                h = np.maximum(h, 0.0)
        return h, inputs

    def backward_cached(self, inputs: list[np.ndarray], output_grad: np.ndarray) -> list[np.ndarray]:
        """Gradients of ``sum(output * output_grad)`` w.r.t. every parameter.

        ``inputs`` is the cache from ``forward_cached``. The post-ReLU layer
        input doubles as the ReLU mask since ``relu(z) > 0`` iff ``z > 0``.
        """
        delta = np.asarray(output_grad, dtype=np.float64)
        if delta.shape[-1] != self.layer_sizes[-1] or delta.ndim != inputs[0].ndim:
            raise ValueError(
                f"output gradient shape {delta.shape} does not match output size {self.layer_sizes[-1]}")
        grads: list[np.ndarray] = [None] * (2 * self.n_layers)  # type: ignore[list-item]
        for i in range(self.n_layers - 1, -1, -1):
            a = inputs[i]
            if a.ndim == 1:
                grads[2 * i] = np.outer(a, delta)
                grads[2 * i + 1] = delta.copy()
            else:
                grads[2 * i] = a.T @ delta
                grads[2 * i + 1] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ self.weights[i].T) * (a > 0.0)
        return grads

    def copy(self) -> "Mlp":
        clone = Mlp.__new__(Mlp)
        clone.layer_sizes = self.layer_sizes
        clone.weights = [w.copy() for w in self.weights]
        clone.biases = [b.copy() for b in self.biases]
        return clone


def forward(net: Mlp, x: np.ndarray) -> np.ndarray:
    return net.forward(x)


def backward(net: Mlp, x: np.ndarray, output_grad: np.ndarray) -> list[np.ndarray]:
    """Recompute the forward pass at ``x`` and backpropagate ``output_grad``."""
    _, cache = net.forward_cached(x)
    return net.backward_cached(cache, output_grad)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def softmax_logits(logits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Stable softmax and log-softmax along the last axis."""
    z = np.asarray(logits, dtype=np.float64)
    shifted = z - z.max(axis=-1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    log_probs = shifted - log_norm
    return np.exp(log_probs), log_probs


def mse_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error and its gradient w.r.t. ``pred``."""
    diff = np.asarray(pred, dtype=np.float64) - target
    return float(np.mean(diff * diff)), 2.0 * diff / diff.size


class AdamState:
    """Adam moments for a fixed list of parameter shapes."""

    def __init__(self, shapes: Sequence[tuple[int, ...]], learning_rate: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.learning_rate = float(learning_rate)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]
        self._scratch = [np.zeros(s) for s in shapes]

    @classmethod
    def for_params(cls, params: Sequence[np.ndarray], learning_rate: float, **kw) -> "AdamState":
        return cls([np.shape(p) for p in params], learning_rate, **kw)

    def step(self, params: Sequence[np.ndarray], grads: Sequence[np.ndarray]) -> Sequence[np.ndarray]:
        """Apply one bias-corrected Adam update to ``params`` in place."""
        if len(params) != len(self.m) or len(grads) != len(self.m):
            raise ValueError("parameter/gradient count does not match optimizer state")
        for p, g, m in zip(params, grads, self.m):
            if np.shape(p) != m.shape or np.shape(g) != m.shape:
                raise ValueError(f"shape mismatch: param {np.shape(p)}, grad {np.shape(g)}, state {m.shape}")
        self.step_count += 1
        t = self.step_count
        c1 = 1.0 - self.beta1 ** t
        c2 = 1.0 - self.beta2 ** t
        step = self.learning_rate / c1
        for p, g, m, v, buf in zip(params, grads, self.m, self.v, self._scratch):
            # in place with one scratch array per tensor; this dominates update cost
            m *= self.beta1
            np.multiply(g, 1.0 - self.beta1, out=buf)
            m += buf
            v *= self.beta2
            np.multiply(g, g, out=buf)
            buf *= 1.0 - self.beta2
            v += buf
            np.divide(v, c2, out=buf)
            np.sqrt(buf, out=buf)
            buf += self.eps
            np.divide(m, buf, out=buf)
            buf *= step
            p -= buf
        return params


def adam_step(state: AdamState, params: Sequence[np.ndarray], grads: Sequence[np.ndarray]):
    return state.step(params, grads)


_MAGIC = b"FGW1"


@dataclass(frozen=True, eq=False)
class ModelWeights:
    """Immutable snapshot of every parameter tensor of one network, in order."""

    arrays: tuple[np.ndarray, ...]

    def __post_init__(self):
        frozen = []
        for a in self.arrays:
            a = np.array(a, dtype=np.float64, copy=True)
            a.setflags(write=False)
            frozen.append(a)
        object.__setattr__(self, "arrays", tuple(frozen))

    @property
    def shapes(self) -> list[tuple[int, ...]]:
        return [a.shape for a in self.arrays]

    @property
    def size(self) -> int:
        return sum(a.size for a in self.arrays)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ModelWeights) or self.shapes != other.shapes:
            return False
        return all(np.array_equal(a, b) for a, b in zip(self.arrays, other.arrays))

    def __hash__(self):
        return hash(self.to_bytes())

    def to_dict(self) -> dict:
        return {"shapes": [list(s) for s in self.shapes],
                "values": [a.ravel().tolist() for a in self.arrays]}

    @classmethod
    def from_dict(cls, d: dict) -> "ModelWeights":
        arrays = []
        for shape, values in zip(d["shapes"], d["values"]):
            arrays.append(np.asarray(values, dtype=np.float64).reshape(shape))
        return cls(tuple(arrays))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ModelWeights":
        return cls.from_dict(json.loads(text))

    def to_bytes(self) -> bytes:
        """Binary blob: magic, tensor count, per-tensor rank and dims, then little-endian f64 values."""
        parts = [_MAGIC, struct.pack("<I", len(self.arrays))]
        for a in self.arrays:
            parts.append(struct.pack("<I", a.ndim))
            parts.append(struct.pack(f"<{a.ndim}Q", *a.shape))
        for a in self.arrays:
            parts.append(np.ascontiguousarray(a, dtype="<f8").tobytes())
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, blob: bytes) -> "ModelWeights":
        if blob[:4] != _MAGIC:
            raise ValueError("not a weight blob")
        pos = 4
        (count,) = struct.unpack_from("<I", blob, pos)
        pos += 4
        shapes = []
        for _ in range(count):
            (ndim,) = struct.unpack_from("<I", blob, pos)
            pos += 4
            shapes.append(struct.unpack_from(f"<{ndim}Q", blob, pos))
            pos += 8 * ndim
        arrays = []
        for shape in shapes:
            n = int(np.prod(shape)) if shape else 1
            arrays.append(np.frombuffer(blob, dtype="<f8", count=n, offset=pos).reshape(shape))
            pos += 8 * n
        if pos != len(blob):
            raise ValueError("trailing bytes in weight blob")
        return cls(tuple(arrays))

    def to_base64(self) -> str:
        return base64.b64encode(self.to_bytes()).decode("ascii")

    @classmethod
    def from_base64(cls, text: str) -> "ModelWeights":
        return cls.from_bytes(base64.b64decode(text))


def extract_weights(net: Mlp) -> ModelWeights:
    return ModelWeights(tuple(net.params))


def load_weights(net: Mlp, weights: ModelWeights) -> None:
    """Overwrite ``net``'s parameters in place with ``weights``."""
    params = net.params
    if [p.shape for p in params] != weights.shapes:
        raise ValueError(f"weight shapes {weights.shapes} do not match network {[p.shape for p in params]}")
    for p, w in zip(params, weights.arrays):
        p[...] = w


def all_finite(arrays) -> bool:
    return all(np.all(np.isfinite(a)) for a in arrays)
