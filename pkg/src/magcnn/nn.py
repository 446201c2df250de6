"""Dense float64 layers with hand-written backward rules.

Batched layouts used throughout:

* grid        ``(B, W, 3N, d)``     W = w1 + w2 + w3 motif rows
* conv1 out   ``(B, K1, N, W)``
* conv2 out   ``(B, N, K2, T)``     T = W / 3

conv1 kernels have shape ``(K1, 3, d)`` (one motif row, all channels);
conv2 kernels have shape ``(K2, 3, K1)`` (three consecutive rows, all maps).
Neither layer mixes column triples, so subgraphs stay independent.
"""

from __future__ import annotations

import numpy as np

from .errors import ArgumentError, ConfigurationError, ShapeError

LEAKY_SLOPE = 0.2
CE_EPS = 1e-12


def _check_conv1(grid, kernels, bias):
    if grid.ndim != 4 or grid.shape[2] % 3:
        raise ShapeError(f"grid shape {grid.shape} is not (B, W, 3N, d)")
    if kernels.ndim != 3 or kernels.shape[1] != 3 or kernels.shape[2] != grid.shape[3]:
        raise ShapeError(f"conv1 kernels {kernels.shape} do not fit grid {grid.shape}")
    if bias.shape != (kernels.shape[0],):
        raise ShapeError(f"conv1 bias {bias.shape} does not fit kernels {kernels.shape}")


def conv1_forward(grid: np.ndarray, kernels: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Pre-activation of the 3x1, stride (3, 1) convolution: ``(B, K1, N, W)``."""
    _check_conv1(grid, kernels, bias)
    B, W, cols, d = grid.shape
    x = grid.reshape(B, W, cols // 3, 3, d)
    out = np.einsum("brisc,ksc->bkir", x, kernels, optimize=True)
    return out + bias[None, :, None, None]


def conv1_backward(grid, kernels, dout):
    B, W, cols, d = grid.shape
    x = grid.reshape(B, W, cols // 3, 3, d)
    dk = np.einsum("bkir,brisc->ksc", dout, x, optimize=True)
    db = dout.sum(axis=(0, 2, 3))
    return dk, db


def conv2_forward(fmap: np.ndarray, kernels: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Pre-activation of the 1x3, stride (1, 3) convolution: ``(B, N, K2, T)``."""
    if fmap.ndim != 4:
        raise ShapeError(f"feature map shape {fmap.shape} is not (B, K1, N, W)")
    B, K1, N, W = fmap.shape
    if W % 3:
        raise ConfigurationError(f"row count {W} is not divisible by 3")
    if kernels.ndim != 3 or kernels.shape[1:] != (3, K1):
        raise ShapeError(f"conv2 kernels {kernels.shape} do not fit feature map {fmap.shape}")
    if bias.shape != (kernels.shape[0],):
        raise ShapeError(f"conv2 bias {bias.shape} does not fit kernels {kernels.shape}")
    x = fmap.reshape(B, K1, N, W // 3, 3)
    out = np.einsum("bcitj,kjc->bikt", x, kernels, optimize=True)
    return out + bias[None, None, :, None]


def conv2_backward(fmap, kernels, dout):
    B, K1, N, W = fmap.shape
    x = fmap.reshape(B, K1, N, W // 3, 3)
    dk = np.einsum("bikt,bcitj->kjc", dout, x, optimize=True)
    db = dout.sum(axis=(0, 1, 3))
    dx = np.einsum("bikt,kjc->bcitj", dout, kernels, optimize=True).reshape(B, K1, N, W)
    return dk, db, dx


def affine(x: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """``x @ weights.T + bias`` with weights stored as (out, in)."""
    if weights.ndim != 2 or x.shape[-1] != weights.shape[1] or bias.shape != weights.shape[:1]:
        raise ShapeError(f"affine: input {x.shape}, weights {weights.shape}, bias {bias.shape}")
    return x @ weights.T + bias


def affine_backward(x, weights, dout):
    return dout.T @ x, dout.sum(axis=0), dout @ weights


def relu(x):
    return np.maximum(x, 0.0)


def leaky_relu(x, slope=LEAKY_SLOPE):
    return np.where(x > 0, x, slope * x)


def sigmoid(x):
    # split by sign so exp never overflows
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(x, axis=-1):
    z = x - x.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


ACTIVATIONS = {
    "relu": relu,
    "leaky_relu": leaky_relu,
    "sigmoid": sigmoid,
    "softmax": softmax,
}


def apply_activation(kind: str, x: np.ndarray) -> np.ndarray:
    try:
        fn = ACTIVATIONS[kind.lower()]
    except KeyError:
        raise ArgumentError(f"unknown activation {kind!r}") from None
    return fn(np.asarray(x, dtype=np.float64))


def cross_entropy(probs: np.ndarray, label: int) -> float:
    probs = np.asarray(probs, dtype=np.float64)
    if not 0 <= label < probs.shape[-1]:
        raise ArgumentError(f"label {label} outside 0..{probs.shape[-1] - 1}")
    return float(-np.log(probs[label] + CE_EPS))


def dropout_mask(shape, keep: float, rng: np.random.Generator) -> np.ndarray:
    """Inverted-dropout mask: entries are ``1/keep`` with probability ``keep``, else 0."""
    if not 0.0 < keep <= 1.0:
        raise ConfigurationError(f"keep probability must be in (0, 1], got {keep}")
    return (rng.random(shape) < keep) / keep
