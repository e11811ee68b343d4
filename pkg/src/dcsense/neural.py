"""Minimal dense-tensor neural network engine with manual backpropagation.

Layers are plain functions over float64 numpy arrays with an explicit batch
axis: feature maps are (batch, height, width, channels), vectors are
(batch, features). Exactly what the fusion CNN needs and nothing more:
3x3 same-convolution, ReLU, 2x2 max pooling, affine layers, a two-class
softmax head, cross-entropy, and Adam.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PROB_CLAMP = 1e-12


@dataclass
class ConvParams:
    weights: np.ndarray  # (3, 3, in_ch, out_ch)
    bias: np.ndarray  # (out_ch,)

    def __post_init__(self):
        if self.weights.shape[:2] != (3, 3):
            raise ValueError(f"conv kernel must be 3x3, got {self.weights.shape[:2]}")
        if self.bias.shape != (self.weights.shape[3],):
            raise ValueError("conv bias length must equal the output depth")


@dataclass
class FcParams:
    weights: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)

    def __post_init__(self):
        if self.bias.shape != (self.weights.shape[0],):
            raise ValueError("fc bias length must equal the output width")


@dataclass
class SoftmaxParams:
    weights: np.ndarray  # (2, in); the decision head has no bias

    def __post_init__(self):
        if self.weights.shape[0] != 2:
            raise ValueError("softmax head must have exactly 2 output classes")


def he_normal(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    """Scaled-Gaussian fan-in initialization (std = sqrt(2/fan_in))."""
    return rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)


def _im2col(x: np.ndarray) -> np.ndarray:
    """(n, h, w, c) -> (n*h*w, 9*c) patch matrix for a zero-padded 3x3 window."""
    n, h, w, c = x.shape
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
    win = np.lib.stride_tricks.sliding_window_view(xp, (3, 3), axis=(1, 2))
    # window axes last: (n, h, w, c, 3, 3) -> (n, h, w, 3, 3, c)
    return win.transpose(0, 1, 2, 4, 5, 3).reshape(n * h * w, 9 * c)


def conv3x3_forward(x: np.ndarray, p: ConvParams, _cols_out: list | None = None) -> np.ndarray:
    """Stride-1 zero-padded 3x3 convolution; output spatial size = input.

    `_cols_out`, when given, receives the im2col patch matrix so a following
    backward pass can reuse it instead of rebuilding it.
    """
    n, h, w, cin = x.shape
    if cin != p.weights.shape[2]:
        raise ValueError(
            f"input has {cin} channels but kernel expects {p.weights.shape[2]}"
        )
    cout = p.weights.shape[3]
    cols = _im2col(x)
    if _cols_out is not None:
        _cols_out.append(cols)
    y = cols @ p.weights.reshape(9 * cin, cout) + p.bias
    return y.reshape(n, h, w, cout)


def conv3x3_backward(x: np.ndarray, p: ConvParams, grad_out: np.ndarray, _cols: np.ndarray | None = None):
    """Adjoint of conv3x3_forward: gradients w.r.t. input, weights, bias."""
    n, h, w, cin = x.shape
    if grad_out.shape != (n, h, w, p.weights.shape[3]):
        raise ValueError(f"grad_out shape {grad_out.shape} inconsistent with input")
    cout = p.weights.shape[3]
    go_flat = grad_out.reshape(-1, cout)
    cols = _im2col(x) if _cols is None else _cols
    grad_w = (cols.T @ go_flat).reshape(3, 3, cin, cout)
    grad_b = go_flat.sum(axis=0)
    # Scatter patch gradients back onto the padded input (col2im).
    grad_cols = (go_flat @ p.weights.reshape(9 * cin, cout).T).reshape(n, h, w, 3, 3, cin)
    grad_xp = np.zeros((n, h + 2, w + 2, cin))
    for e1 in range(3):
        for e2 in range(3):
            grad_xp[:, e1 : e1 + h, e2 : e2 + w, :] += grad_cols[:, :, :, e1, e2, :]
    return grad_xp[:, 1:-1, 1:-1, :], grad_w, grad_b


def relu_forward(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_backward(x: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    # Subgradient 0 at exactly 0.
    return np.where(x > 0.0, grad_out, 0.0)


@dataclass
class PoolCache:
    argmax: np.ndarray  # (n, ho, wo, c) flat window index of each max
    input_shape: tuple


def maxpool2x2_forward(x: np.ndarray, want_argmax: bool = True):
    """2x2 window, stride 2; odd spatial dims are zero-padded on the high side.

    The argmax map is only needed for backprop; inference passes skip it.
    """
    n, h, w, c = x.shape
    ph, pw = h + h % 2, w + w % 2
    if (ph, pw) != (h, w):
        x = np.pad(x, ((0, 0), (0, ph - h), (0, pw - w), (0, 0)))
    windows = (
        x.reshape(n, ph // 2, 2, pw // 2, 2, c)
        .transpose(0, 1, 3, 2, 4, 5)
        .reshape(n, ph // 2, pw // 2, 4, c)
    )
    if not want_argmax:
        return windows.max(axis=3), None
    # argmax returns the first maximum, i.e. the lowest flat index in a tie.
    arg = windows.argmax(axis=3)
    out = np.take_along_axis(windows, arg[:, :, :, None, :], axis=3)[:, :, :, 0, :]
    return out, PoolCache(argmax=arg, input_shape=(n, h, w, c))


def maxpool2x2_backward(cache: PoolCache, grad_out: np.ndarray) -> np.ndarray:
    n, h, w, c = cache.input_shape
    ho, wo = grad_out.shape[1], grad_out.shape[2]
    grads = np.zeros((n, ho, wo, 4, c))
    np.put_along_axis(grads, cache.argmax[:, :, :, None, :], grad_out[:, :, :, None, :], axis=3)
    full = (
        grads.reshape(n, ho, wo, 2, 2, c)
        .transpose(0, 1, 3, 2, 4, 5)
        .reshape(n, 2 * ho, 2 * wo, c)
    )
    return full[:, :h, :w, :]


def fc_forward(x: np.ndarray, p: FcParams) -> np.ndarray:
    if x.shape[1] != p.weights.shape[1]:
        raise ValueError(
            f"fc input width {x.shape[1]} does not match weights {p.weights.shape}"
        )
    return x @ p.weights.T + p.bias


def fc_backward(x: np.ndarray, p: FcParams, grad_out: np.ndarray):
    if grad_out.shape != (x.shape[0], p.weights.shape[0]):
        raise ValueError("fc grad_out shape inconsistent with layer")
    grad_x = grad_out @ p.weights
    grad_w = grad_out.T @ x
    grad_b = grad_out.sum(axis=0)
    return grad_x, grad_w, grad_b


def softmax2(x: np.ndarray, p: SoftmaxParams) -> np.ndarray:
    """Class probabilities from the two-weight-vector softmax head."""
    logits = x @ p.weights.T
    return softmax_probs(logits)


def softmax_probs(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(probs: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy and its gradient w.r.t. the softmax logits."""
    labels = np.asarray(labels, dtype=int)
    n = probs.shape[0]
    picked = probs[np.arange(n), labels]
    loss = float(np.mean(-np.log(np.maximum(picked, PROB_CLAMP))))
    onehot = np.zeros_like(probs)
    onehot[np.arange(n), labels] = 1.0
    grad_logits = (probs - onehot) / n
    return loss, grad_logits


@dataclass
class AdamState:
    """Adaptive-moment optimizer state for a fixed list of parameter arrays."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)


def adam_step(params: list, grads: list, state: AdamState) -> None:
    """One in-place Adam update over matched lists of arrays."""
    if len(params) != len(grads):
        raise ValueError("params and grads must have the same length")
    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    for i, (p, g) in enumerate(zip(params, grads)):
        if p.shape != g.shape:
            raise ValueError(f"param/grad shape mismatch at index {i}: {p.shape} vs {g.shape}")
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g**2
        m_hat = state.m[i] / (1.0 - b1**state.t)
        v_hat = state.v[i] / (1.0 - b2**state.t)
        p -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)


def assert_finite(x: np.ndarray, where: str = "") -> np.ndarray:
    if not np.all(np.isfinite(x)):
        raise FloatingPointError(f"non-finite values in {where or 'tensor'}")
    return x
