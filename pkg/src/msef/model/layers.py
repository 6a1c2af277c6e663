"""Building blocks of the toy network: LoRA, prefixes, attention, patches, gating."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import tensor as T
from ..errors import DimensionError
from ..tensor import Tensor


@dataclass
class LoraLayer:
    """Frozen base weight ``W0`` plus a trainable rank-``r`` update ``A @ B``."""

    W0: Tensor
    A: Tensor
    B: Tensor

    def __post_init__(self):
        d_in, d_out = self.W0.shape
        r = self.A.shape[1]
        if self.A.shape != (d_in, r) or self.B.shape != (r, d_out):
            raise DimensionError(f"LoRA shapes W0 {self.W0.shape}, A {self.A.shape}, B {self.B.shape} disagree")

    @property
    def rank(self) -> int:
        return self.A.shape[1]


def lora_apply(layer: LoraLayer, x: Tensor) -> Tensor:
    """``x @ W0 + (x @ A) @ B`` without ever materialising the merged weight."""
    return T.add(T.matmul(x, layer.W0), T.matmul(T.matmul(x, layer.A), layer.B))


def lora_merge(layer: LoraLayer) -> np.ndarray:
    return layer.W0.data + layer.A.data @ layer.B.data


@dataclass
class PrefixBank:
    P: Tensor

    @property
    def length(self) -> int:
        return self.P.shape[0]


def prefix_concat(bank: PrefixBank, tokens: Tensor) -> Tensor:
    """Prepend the ``m`` prefix rows to ``tokens`` ([n×d] -> [(m+n)×d])."""
    if bank.length == 0:
        if tokens.data.ndim != 2 or tokens.shape[1] != bank.P.shape[1]:
            raise DimensionError(f"prefix width {bank.P.shape[1]} != token width {tokens.shape}")
        return tokens
    if tokens.data.ndim != 2 or tokens.shape[1] != bank.P.shape[1]:
        raise DimensionError(f"prefix width {bank.P.shape[1]} != token width {tokens.shape}")
    return T.concat_rows([bank.P, tokens])


def attention(Q: Tensor, K: Tensor, V: Tensor, mask: np.ndarray | None = None) -> tuple[Tensor, Tensor]:
    """Scaled dot-product attention; returns ``(alpha @ V, alpha)``."""
    if Q.data.ndim != 2 or K.data.ndim != 2 or V.data.ndim != 2:
        raise DimensionError("attention expects 2-D Q, K, V")
    if Q.shape[1] != K.shape[1]:
        raise DimensionError(f"query width {Q.shape[1]} != key width {K.shape[1]}")
    if K.shape[0] != V.shape[0]:
        raise DimensionError(f"{K.shape[0]} keys but {V.shape[0]} values")
    scores = T.scale(T.matmul(Q, T.transpose(K)), 1.0 / math.sqrt(Q.shape[1]))
    alpha = T.softmax_rows(scores, mask)
    return T.matmul(alpha, V), alpha


def multi_head(Q: Tensor, K: Tensor, V: Tensor, num_heads: int,
               mask: np.ndarray | None = None) -> tuple[Tensor, np.ndarray]:
    """Split columns into heads, attend per head, re-join. Returns output and α [h×p×q]."""
    d = Q.shape[1]
    dk = d // num_heads
    outs, alphas = [], []
    for h in range(num_heads):
        sl = slice(h * dk, (h + 1) * dk)
        o, a = attention(T.slice_cols(Q, sl.start, sl.stop), T.slice_cols(K, sl.start, sl.stop),
                         T.slice_cols(V, sl.start, sl.stop), mask)
        outs.append(o)
        alphas.append(a.data)
    return T.concat_cols(outs), np.stack(alphas)


def sinusoidal_positions(n: int, d: int) -> np.ndarray:
    pos = np.arange(n, dtype=np.float64)[:, None]
    i = np.arange(d // 2, dtype=np.float64)[None, :]
    angle = pos / np.power(10000.0, 2.0 * i / d)
    pe = np.zeros((n, d))
    pe[:, 0:2 * (d // 2):2] = np.sin(angle)
    pe[:, 1:2 * (d // 2):2] = np.cos(angle)
    return pe


def image_to_patches(image: np.ndarray, patch: int) -> np.ndarray:
    """Cut an H×W grid into row-major flattened p×p patches: [(H/p·W/p) × p²]."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise DimensionError(f"expected a 2-D grayscale grid, got shape {img.shape}")
    H, W = img.shape
    if H == 0 or W == 0 or H % patch or W % patch:
        raise DimensionError(f"image {H}x{W} is not divisible into {patch}x{patch} patches")
    return (img.reshape(H // patch, patch, W // patch, patch)
            .transpose(0, 2, 1, 3)
            .reshape(-1, patch * patch))


def patch_embed(image: np.ndarray, weight: Tensor, bias: Tensor) -> Tensor:
    """Linear projection of each patch plus a fixed sinusoidal position code."""
    p2, d = weight.shape
    patch = int(round(math.sqrt(p2)))
    patches = Tensor(image_to_patches(image, patch))
    tokens = T.add(T.matmul(patches, weight), bias)
    return T.add(tokens, Tensor(sinusoidal_positions(patches.shape[0], d)))


@dataclass
class GatedFusion:
    """Per-coordinate gate ``g = sigmoid(w_v*visual + w_t*textual + b)``."""

    w_visual: Tensor
    w_textual: Tensor
    b: Tensor


def gated_fusion(gate: GatedFusion, visual: Tensor, textual: Tensor) -> tuple[Tensor, Tensor]:
    """Convex combination ``g*visual + (1-g)*textual``; returns (fused, g)."""
    if visual.shape != textual.shape or visual.data.ndim != 1:
        raise DimensionError(f"gated_fusion needs equal 1-D inputs, got {visual.shape}, {textual.shape}")
    g = T.sigmoid(T.add(T.add(T.mul(gate.w_visual, visual), T.mul(gate.w_textual, textual)), gate.b))
    fused = T.add(textual, T.mul(g, T.sub(visual, textual)))
    return fused, g
