"""M-GCNN and MA-GCNN: shared subgraph-independent conv stack with two heads.

M-GCNN flattens the second conv map and classifies it with two hidden
fully-connected layers. MA-GCNN turns each subgraph's conv features into a
vector ``h_i`` and runs ``S`` self-attention heads over the ``N`` subgraphs;
each head projects to one score per class, the heads are averaged, squashed
by a sigmoid, summed over subgraphs, and the sum goes through a softmax.

Parameters live in a plain ``dict`` of float64 arrays keyed by name.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from . import nn
from .errors import ConfigurationError, NumericError, ShapeError

Params = Dict[str, np.ndarray]


@dataclass(frozen=True)
class ModelConfig:
    kind: str  # "mgcnn" or "magcnn"
    N: int
    rows: int  # w1 + w2 + w3
    d: int
    C: int
    K1: int = 16
    K2: int = 8
    F1: int = 128
    F2: int = 64
    S: int = 8
    dropout: float = 0.5
    leaky_slope: float = nn.LEAKY_SLOPE
    weight_decay: float = 0.01

    def __post_init__(self):
        if self.kind not in ("mgcnn", "magcnn"):
            raise ConfigurationError(f"unknown model kind {self.kind!r}")
        if self.N < 2:
            raise ConfigurationError(f"N must be >= 2, got {self.N}")
        if self.rows % 3:
            raise ConfigurationError(f"row count {self.rows} is not divisible by 3")
        if self.C < 2:
            raise ConfigurationError(f"need at least 2 classes, got {self.C}")
        if self.S < 1:
            raise ConfigurationError(f"S must be >= 1, got {self.S}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigurationError(f"dropout must be in [0, 1), got {self.dropout}")

    @property
    def T(self) -> int:
        return self.rows // 3

    @property
    def F(self) -> int:
        """Length of one subgraph's feature vector."""
        return self.K2 * self.T

    @property
    def keep(self) -> float:
        return 1.0 - self.dropout


def glorot(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def _finite(x: np.ndarray, layer: str) -> np.ndarray:
    if not np.all(np.isfinite(x)):
        raise NumericError(f"non-finite values after {layer}")
    return x


# -- single-graph attention, written directly from the formulas -------------

def subgraph_features(fmap: np.ndarray) -> np.ndarray:
    """``(N, K2, T)`` conv map -> ``(N, K2*T)``, flattened channel-major."""
    N = fmap.shape[0]
    return fmap.reshape(N, -1)


def attention_logits(H: np.ndarray, W: np.ndarray, a: np.ndarray,
                     slope: float = nn.LEAKY_SLOPE) -> np.ndarray:
    """``e[i, j] = LeakyReLU(a . [W h_i || W h_j])``."""
    P = H @ W.T
    Fp = W.shape[0]
    if a.shape != (2 * Fp,):
        raise ShapeError(f"attention vector {a.shape} does not match W {W.shape}")
    return nn.leaky_relu((P @ a[:Fp])[:, None] + (P @ a[Fp:])[None, :], slope)


def masked_row_softmax(e: np.ndarray) -> np.ndarray:
    """Softmax of each row over the off-diagonal entries; the diagonal is 0."""
    N = e.shape[-1]
    off = ~np.eye(N, dtype=bool)
    z = np.where(off, e, -np.inf)
    z = z - z.max(axis=-1, keepdims=True)
    ex = np.where(off, np.exp(z), 0.0)
    return ex / ex.sum(axis=-1, keepdims=True)


def attention_coefficients(H: np.ndarray, W: np.ndarray, a: np.ndarray,
                           slope: float = nn.LEAKY_SLOPE) -> np.ndarray:
    if H.shape[0] < 2:
        raise ConfigurationError("attention needs at least 2 subgraphs")
    return masked_row_softmax(attention_logits(H, W, a, slope))


def attention_output(H: np.ndarray, heads: Sequence[Tuple[np.ndarray, np.ndarray]],
                     slope: float = nn.LEAKY_SLOPE) -> np.ndarray:
    """``h'_i = sigmoid(mean_s sum_{t != i} alpha^s_it W^s h_t)``, shape ``(N, F')``."""
    total = 0.0
    for W, a in heads:
        alpha = attention_coefficients(H, W, a, slope)
        total = total + alpha @ (H @ W.T)
    return nn.sigmoid(total / len(heads))


# -- batched models with backward passes ------------------------------------

class _ConvModel:
    decayed = ("conv1.weight", "conv2.weight")

    def __init__(self, config: ModelConfig):
        self.config = config

    def param_shapes(self) -> Dict[str, tuple]:
        c = self.config
        return {
            "conv1.weight": (c.K1, 3, c.d),
            "conv1.bias": (c.K1,),
            "conv2.weight": (c.K2, 3, c.K1),
            "conv2.bias": (c.K2,),
        }

    def init_params(self, rng: np.random.Generator) -> Params:
        c = self.config
        p = {
            "conv1.weight": glorot(rng, (c.K1, 3, c.d), 3 * c.d, 3 * c.K1),
            "conv1.bias": np.zeros(c.K1),
            "conv2.weight": glorot(rng, (c.K2, 3, c.K1), 3 * c.K1, 3 * c.K2),
            "conv2.bias": np.zeros(c.K2),
        }
        p.update(self._init_head(rng))
        return p

    def check_params(self, params: Params) -> None:
        shapes = self.param_shapes()
        if set(params) != set(shapes):
            raise ShapeError(f"parameter names {sorted(params)} != {sorted(shapes)}")
        for name, shape in shapes.items():
            if params[name].shape != shape:
                raise ShapeError(f"{name}: expected {shape}, got {params[name].shape}")

    def _check_grids(self, grids: np.ndarray) -> np.ndarray:
        c = self.config
        grids = np.asarray(grids, dtype=np.float64)
        if grids.ndim == 3:
            grids = grids[None]
        if grids.shape[1:] != (c.rows, 3 * c.N, c.d):
            raise ShapeError(f"grid batch {grids.shape} does not match "
                             f"(B, {c.rows}, {3 * c.N}, {c.d})")
        return grids

    def _conv(self, params, grids):
        z1 = _finite(nn.conv1_forward(grids, params["conv1.weight"], params["conv1.bias"]), "conv1")
        a1 = nn.relu(z1)
        z2 = _finite(nn.conv2_forward(a1, params["conv2.weight"], params["conv2.bias"]), "conv2")
        return z1, a1, z2, nn.relu(z2)

    def _conv_backward(self, params, grids, cache, da2, grads):
        z1, a1, z2 = cache
        dz2 = da2 * (z2 > 0)
        dk2, db2, da1 = nn.conv2_backward(a1, params["conv2.weight"], dz2)
        dz1 = da1 * (z1 > 0)
        dk1, db1 = nn.conv1_backward(grids, params["conv1.weight"], dz1)
        grads["conv1.weight"], grads["conv1.bias"] = dk1, db1
        grads["conv2.weight"], grads["conv2.bias"] = dk2, db2

    def forward(self, params: Params, grids: np.ndarray,
                masks: Optional[Dict[str, np.ndarray]] = None) -> np.ndarray:
        """Class distributions ``(B, C)``; ``masks=None`` means evaluation mode."""
        grids = self._check_grids(grids)
        probs, _ = self._forward(params, grids, masks)
        return probs

    def predict(self, params: Params, grids: np.ndarray) -> np.ndarray:
        # argmax returns the first maximum: ties go to the smallest class index
        return np.argmax(self.forward(params, grids), axis=1)

    def l2_penalty(self, params: Params) -> float:
        wd = self.config.weight_decay
        return 0.5 * wd * sum(float(np.sum(params[k] ** 2)) for k in self.decayed)

    def loss_and_grads(self, params: Params, grids: np.ndarray, labels: Sequence[int],
                       masks: Optional[Dict[str, np.ndarray]] = None
                       ) -> Tuple[float, Params]:
        """Mean cross-entropy over the batch plus the L2 term, and its gradient."""
        grids = self._check_grids(grids)
        labels = np.asarray(labels, dtype=np.int64)
        B = grids.shape[0]
        if labels.shape != (B,):
            raise ShapeError(f"{labels.shape[0]} labels for a batch of {B}")
        if labels.min() < 0 or labels.max() >= self.config.C:
            raise ConfigurationError(f"labels outside 0..{self.config.C - 1}")
        probs, cache = self._forward(params, grids, masks)
        rows = np.arange(B)
        py = probs[rows, labels]
        loss = float(np.mean(-np.log(py + nn.CE_EPS))) + self.l2_penalty(params)
        if not np.isfinite(loss):
            raise NumericError("non-finite loss at cross_entropy")
        # d/dz of -log(p_y + eps) through the softmax
        dz = probs * (py / (py + nn.CE_EPS))[:, None]
        dz[rows, labels] -= py / (py + nn.CE_EPS)
        dz /= B
        grads = self._backward(params, grids, cache, dz, masks)
        wd = self.config.weight_decay
        for k in self.decayed:
            grads[k] = grads[k] + wd * params[k]
        return loss, {k: grads[k] for k in params}


class MGCNN(_ConvModel):
    decayed = _ConvModel.decayed + ("fc1.weight", "fc2.weight", "out.weight")

    def param_shapes(self):
        c = self.config
        shapes = super().param_shapes()
        shapes.update({
            "fc1.weight": (c.F1, c.N * c.F), "fc1.bias": (c.F1,),
            "fc2.weight": (c.F2, c.F1), "fc2.bias": (c.F2,),
            "out.weight": (c.C, c.F2), "out.bias": (c.C,),
        })
        return shapes

    def _init_head(self, rng):
        c = self.config
        fan = c.N * c.F
        return {
            "fc1.weight": glorot(rng, (c.F1, fan), fan, c.F1), "fc1.bias": np.zeros(c.F1),
            "fc2.weight": glorot(rng, (c.F2, c.F1), c.F1, c.F2), "fc2.bias": np.zeros(c.F2),
            "out.weight": glorot(rng, (c.C, c.F2), c.F2, c.C), "out.bias": np.zeros(c.C),
        }

    def sample_masks(self, batch: int, rng: np.random.Generator) -> Dict[str, np.ndarray]:
        c = self.config
        return {"fc1": nn.dropout_mask((batch, c.F1), c.keep, rng),
                "fc2": nn.dropout_mask((batch, c.F2), c.keep, rng)}

    def _forward(self, params, grids, masks):
        z1, a1, z2, a2 = self._conv(params, grids)
        x = a2.reshape(a2.shape[0], -1)
        u1 = _finite(nn.affine(x, params["fc1.weight"], params["fc1.bias"]), "fc1")
        h1 = nn.relu(u1)
        if masks is not None:
            h1 = h1 * masks["fc1"]
        u2 = _finite(nn.affine(h1, params["fc2.weight"], params["fc2.bias"]), "fc2")
        h2 = nn.relu(u2)
        if masks is not None:
            h2 = h2 * masks["fc2"]
        z = _finite(nn.affine(h2, params["out.weight"], params["out.bias"]), "out")
        probs = nn.softmax(z)
        return probs, (z1, a1, z2, x, u1, h1, u2, h2)

    def _backward(self, params, grids, cache, dz, masks):
        z1, a1, z2, x, u1, h1, u2, h2 = cache
        g = {}
        g["out.weight"], g["out.bias"], dh2 = nn.affine_backward(h2, params["out.weight"], dz)
        if masks is not None:
            dh2 = dh2 * masks["fc2"]
        du2 = dh2 * (u2 > 0)
        g["fc2.weight"], g["fc2.bias"], dh1 = nn.affine_backward(h1, params["fc2.weight"], du2)
        if masks is not None:
            dh1 = dh1 * masks["fc1"]
        du1 = dh1 * (u1 > 0)
        g["fc1.weight"], g["fc1.bias"], dx = nn.affine_backward(x, params["fc1.weight"], du1)
        self._conv_backward(params, grids, (z1, a1, z2), dx.reshape(z2.shape), g)
        return g


class MAGCNN(_ConvModel):
    decayed = _ConvModel.decayed + ("attn.weight", "attn.vector")

    def param_shapes(self):
        c = self.config
        shapes = super().param_shapes()
        shapes.update({"attn.weight": (c.S, c.C, c.F), "attn.vector": (c.S, 2 * c.C)})
        return shapes

    def _init_head(self, rng):
        c = self.config
        return {
            "attn.weight": glorot(rng, (c.S, c.C, c.F), c.F, c.C),
            "attn.vector": glorot(rng, (c.S, 2 * c.C), 2 * c.C, 1),
        }

    def sample_masks(self, batch: int, rng: np.random.Generator) -> Dict[str, np.ndarray]:
        c = self.config
        return {"h": nn.dropout_mask((batch, c.N, c.F), c.keep, rng)}

    def attention(self, params: Params, grids: np.ndarray) -> np.ndarray:
        """Attention matrices ``(B, S, N, N)`` in evaluation mode."""
        grids = self._check_grids(grids)
        return self._forward(params, grids, None)[1][6]

    def _forward(self, params, grids, masks):
        c = self.config
        z1, a1, z2, a2 = self._conv(params, grids)
        B = grids.shape[0]
        H = a2.reshape(B, c.N, c.F)
        if masks is not None:
            H = H * masks["h"]
        Wt, av = params["attn.weight"], params["attn.vector"]
        P = np.einsum("bnf,scf->bsnc", H, Wt, optimize=True)
        u = np.einsum("bsnc,sc->bsn", P, av[:, :c.C])
        v = np.einsum("bsnc,sc->bsn", P, av[:, c.C:])
        s = u[..., :, None] + v[..., None, :]
        alpha = masked_row_softmax(nn.leaky_relu(s, c.leaky_slope))
        O = alpha @ P
        M = _finite(O.mean(axis=1), "attention")
        hp = nn.sigmoid(M)
        z = hp.sum(axis=1)
        probs = nn.softmax(z)
        return probs, (z1, a1, z2, H, P, s, alpha, hp)

    def _backward(self, params, grids, cache, dz, masks):
        c = self.config
        z1, a1, z2, H, P, s, alpha, hp = cache
        Wt, av = params["attn.weight"], params["attn.vector"]
        dM = dz[:, None, :] * hp * (1.0 - hp)
        dO = np.broadcast_to(dM[:, None] / c.S, P.shape)
        dalpha = dO @ np.swapaxes(P, -1, -2)
        dP = np.swapaxes(alpha, -1, -2) @ dO
        de = alpha * (dalpha - np.sum(alpha * dalpha, axis=-1, keepdims=True))
        ds = de * np.where(s > 0, 1.0, c.leaky_slope)
        du = ds.sum(axis=-1)
        dv = ds.sum(axis=-2)
        g = {}
        dvec = np.empty_like(av)
        dvec[:, :c.C] = np.einsum("bsn,bsnc->sc", du, P)
        dvec[:, c.C:] = np.einsum("bsn,bsnc->sc", dv, P)
        g["attn.vector"] = dvec
        dP = dP + du[..., None] * av[None, :, None, :c.C] + dv[..., None] * av[None, :, None, c.C:]
        g["attn.weight"] = np.einsum("bsnc,bnf->scf", dP, H, optimize=True)
        dH = np.einsum("bsnc,scf->bnf", dP, Wt, optimize=True)
        if masks is not None:
            dH = dH * masks["h"]
        self._conv_backward(params, grids, (z1, a1, z2), dH.reshape(z2.shape), g)
        return g


def build_model(config: ModelConfig):
    return MAGCNN(config) if config.kind == "magcnn" else MGCNN(config)
