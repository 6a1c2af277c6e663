"""The toy street-evaluation network and its training step.

Data flow for one (image, question) pair::

    pixels -> patch_embed -> frozen ViT block(s) -> Q-Former (LoRA q/k/v) -> latent [Q×d]
    [prefix ; latent ; question ; <bos> rationale...] -> decoder blocks (last one LoRA)
    mean(latent) ⊕ mean(question states) -> gated fusion -> bounded scalar heads
    decoder states at rationale positions -> frozen LM head -> next-token logits

The context part of the decoder sequence (prefix, latent, question) attends
bidirectionally; rationale positions attend to the context and to earlier
rationale tokens only.
"""

from __future__ import annotations

import hashlib
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .. import tensor as T
from ..errors import ContractError, DimensionError, NumericError
from ..tensor import Adam, Tensor, make_rng, no_grad
from . import vocab
from .config import AdapterConfig
from .layers import (
    GatedFusion,
    LoraLayer,
    PrefixBank,
    gated_fusion,
    lora_apply,
    multi_head,
    patch_embed,
    prefix_concat,
    sinusoidal_positions,
)

_VIT_CACHE_SIZE = 4096


@dataclass
class DualOutput:
    """Scores, greedy rationale and every attention map of one forward pass.

    ``attention_maps`` maps a layer name to an array of shape [heads × p × q].
    """

    scores: dict[str, float]
    rationale_tokens: list[int]
    attention_maps: dict[str, np.ndarray]
    gate: np.ndarray
    patch_grid: tuple[int, int]
    latent_span: tuple[int, int] = (0, 0)

    @property
    def layers(self) -> list[str]:
        return list(self.attention_maps)

    @property
    def rationale_text(self) -> str:
        return vocab.detokenize(self.rationale_tokens)


@dataclass
class Example:
    """One supervised sample: rendered image, question and targets."""

    pixels: np.ndarray
    question: str
    dimension: str
    score: float | None
    rationale: str

    @classmethod
    def from_triplet(cls, triplet, pixels: np.ndarray) -> "Example":
        return cls(pixels, triplet.question, triplet.dimension, triplet.answer_score, triplet.answer_text)


@dataclass
class _Pass:
    hidden: Tensor
    maps: dict[str, np.ndarray] = field(default_factory=dict)


class MSEFModel:
    """Parameter container plus forward/training logic for the toy network."""

    def __init__(self, cfg: AdapterConfig):
        self.cfg = cfg
        self.params: "OrderedDict[str, Tensor]" = OrderedDict()
        self.trainable: set[str] = set()
        self._vit_cache: "OrderedDict[bytes, Tensor]" = OrderedDict()
        self._init_params()

    # ------------------------------------------------------------------ params

    def _add(self, name: str, data: np.ndarray, trainable: bool = False) -> None:
        self.params[name] = Tensor(data, requires_grad=trainable)
        if trainable:
            self.trainable.add(name)

    def _init_params(self) -> None:
        cfg = self.cfg
        d, r, V = cfg.model_dim, cfg.lora_rank, cfg.vocab_size
        hidden = cfg.ffn_mult * d
        rng = make_rng(cfg.seed, 1)

        def dense(n_in, n_out, gain=1.0):
            return rng.normal(0.0, gain / np.sqrt(n_in), size=(n_in, n_out))

        def block(prefix: str, lora_targets: Sequence[str]) -> None:
            self._add(f"{prefix}.ln1.g", np.ones(d))
            self._add(f"{prefix}.ln1.b", np.zeros(d))
            for proj in ("q", "k", "v", "o"):
                self._add(f"{prefix}.W{proj}", dense(d, d))
                if proj in lora_targets:
                    self._add(f"{prefix}.W{proj}.A", dense(d, r), trainable=True)
                    self._add(f"{prefix}.W{proj}.B", np.zeros((r, d)), trainable=True)
            self._add(f"{prefix}.ln2.g", np.ones(d))
            self._add(f"{prefix}.ln2.b", np.zeros(d))
            self._add(f"{prefix}.ffn.W1", dense(d, hidden))
            self._add(f"{prefix}.ffn.b1", np.zeros(hidden))
            self._add(f"{prefix}.ffn.W2", dense(hidden, d))
            self._add(f"{prefix}.ffn.b2", np.zeros(d))

        p2 = cfg.patch_size ** 2
        self._add("patch.W", dense(p2, d, gain=2.0))
        self._add("patch.b", np.zeros(d))
        for i in range(cfg.vit_layers):
            block(f"vit.{i}", ())
        self._add("qformer.queries", rng.normal(0.0, 1.0, size=(cfg.num_queries, d)), trainable=True)
        block("qformer", ("q", "k", "v"))
        self._add("tok_emb", rng.normal(0.0, 1.0, size=(V, d)))
        self._add("prefix.P", rng.normal(0.0, 1.0, size=(cfg.prefix_len, d)), trainable=True)
        for i in range(cfg.decoder_layers):
            last = i == cfg.decoder_layers - 1
            block(f"dec.{i}", ("q", "k", "v", "o") if last else ())
        self._add("dec.ln_f.g", np.ones(d))
        self._add("dec.ln_f.b", np.zeros(d))
        self._add("lm_head", dense(d, V, gain=2.0))
        self._add("gate.w_visual", np.zeros(d), trainable=True)
        self._add("gate.w_textual", np.zeros(d), trainable=True)
        self._add("gate.b", np.zeros(d), trainable=True)
        k = len(cfg.score_dims)
        self._add("head.W", dense(d, k, gain=0.1), trainable=True)
        self._add("head.b", np.zeros(k), trainable=True)
        lo = np.array([cfg.range_of(s)[0] for s in cfg.score_dims])
        hi = np.array([cfg.range_of(s)[1] for s in cfg.score_dims])
        self._score_lo, self._score_span = lo, hi - lo

    def trainable_params(self) -> list[Tensor]:
        return [t for n, t in self.params.items() if n in self.trainable]

    def frozen_names(self) -> list[str]:
        return [n for n in self.params if n not in self.trainable]

    def parameter_counts(self) -> tuple[int, int]:
        """(trainable, total) scalar parameter counts."""
        total = sum(t.size for t in self.params.values())
        train = sum(self.params[n].size for n in self.trainable)
        return train, total

    def frozen_hash(self) -> str:
        h = hashlib.sha256()
        for name in sorted(self.frozen_names()):
            t = self.params[name]
            h.update(name.encode())
            h.update(repr(t.shape).encode())
            h.update(np.ascontiguousarray(t.data, dtype="<f8").tobytes())
        return h.hexdigest()

    def zero_grad(self) -> None:
        for t in self.params.values():
            t.grad = None

    def lora_layers(self) -> dict[str, LoraLayer]:
        out = {}
        for name in self.params:
            if name.endswith(".A"):
                base = name[:-2]
                out[base] = LoraLayer(self.params[base], self.params[base + ".A"], self.params[base + ".B"])
        return out

    @property
    def prefix(self) -> PrefixBank:
        return PrefixBank(self.params["prefix.P"])

    @property
    def gate(self) -> GatedFusion:
        p = self.params
        return GatedFusion(p["gate.w_visual"], p["gate.w_textual"], p["gate.b"])

    # ------------------------------------------------------------------ blocks

    def _proj(self, name: str, x: Tensor) -> Tensor:
        if name + ".A" in self.params:
            p = self.params
            return lora_apply(LoraLayer(p[name], p[name + ".A"], p[name + ".B"]), x)
        return T.matmul(x, self.params[name])

    def _ln(self, name: str, x: Tensor) -> Tensor:
        return T.layer_norm(x, self.params[name + ".g"], self.params[name + ".b"])

    def _ffn(self, prefix: str, x: Tensor) -> Tensor:
        p = self.params
        h = T.gelu(T.add(T.matmul(x, p[f"{prefix}.ffn.W1"]), p[f"{prefix}.ffn.b1"]))
        return T.add(T.matmul(h, p[f"{prefix}.ffn.W2"]), p[f"{prefix}.ffn.b2"])

    def _self_block(self, prefix: str, x: Tensor, mask: np.ndarray | None) -> tuple[Tensor, np.ndarray]:
        """Pre-LN transformer block; returns output and α [h×n×n]."""
        h = self._ln(f"{prefix}.ln1", x)
        att, alpha = multi_head(self._proj(f"{prefix}.Wq", h), self._proj(f"{prefix}.Wk", h),
                                self._proj(f"{prefix}.Wv", h), self.cfg.num_heads, mask)
        x = T.add(x, self._proj(f"{prefix}.Wo", att))
        x = T.add(x, self._ffn(prefix, self._ln(f"{prefix}.ln2", x)))
        return x, alpha

    def qformer_compress(self, image_tokens: Tensor) -> tuple[Tensor, np.ndarray]:
        """Cross-attend the learned queries over ``image_tokens`` -> [num_queries × d]."""
        if image_tokens.data.ndim != 2 or image_tokens.shape[0] < 1:
            raise DimensionError(f"qformer needs at least one image token, got {image_tokens.shape}")
        if image_tokens.shape[1] != self.cfg.model_dim:
            raise DimensionError(f"image token width {image_tokens.shape[1]} != {self.cfg.model_dim}")
        q = self.params["qformer.queries"]
        att, alpha = multi_head(self._proj("qformer.Wq", q), self._proj("qformer.Wk", image_tokens),
                                self._proj("qformer.Wv", image_tokens), self.cfg.num_heads)
        h = self._ln("qformer.ln1", T.add(q, self._proj("qformer.Wo", att)))
        out = self._ln("qformer.ln2", T.add(h, self._ffn("qformer", h)))
        return out, alpha

    def patch_tokens(self, image: np.ndarray) -> Tensor:
        return patch_embed(image, self.params["patch.W"], self.params["patch.b"])

    def _vit(self, image: np.ndarray) -> tuple[Tensor, dict[str, np.ndarray]]:
        img = np.ascontiguousarray(image, dtype=np.float64)
        if img.ndim != 2:
            raise DimensionError(f"expected a 2-D grayscale grid, got {img.shape}")
        key = hashlib.sha1(repr(img.shape).encode() + img.tobytes()).digest()
        hit = self._vit_cache.get(key)
        if hit is not None:
            return hit
        with no_grad():
            x = self.patch_tokens(img)
            maps = {}
            for i in range(self.cfg.vit_layers):
                x, maps[f"vit.{i}"] = self._self_block(f"vit.{i}", x, None)
        self._vit_cache[key] = (x, maps)
        if len(self._vit_cache) > _VIT_CACHE_SIZE:
            self._vit_cache.popitem(last=False)
        return x, maps

    def encode_image(self, image: np.ndarray) -> tuple[Tensor, dict[str, np.ndarray]]:
        img = np.asarray(image, dtype=np.float64)
        if img.size and (img.min() < 0.0 or img.max() > 1.0):
            raise DimensionError("pixel values must lie in [0, 1]")
        tokens, maps = self._vit(img)
        latent, alpha = self.qformer_compress(tokens)
        return latent, {**maps, "qformer": alpha}

    # ----------------------------------------------------------------- decoder

    def _embed_text(self, ids: Sequence[int], offset: int = 0) -> Tensor:
        ids = vocab.check_ids(ids, self.cfg.vocab_size)
        emb = T.gather(self.params["tok_emb"], ids)
        pe = sinusoidal_positions(offset + len(ids), self.cfg.model_dim)[offset:]
        return T.add(emb, Tensor(pe))

    def _decode_pass(self, latent: Tensor, question: Sequence[int], text: Sequence[int]) -> _Pass:
        m = self.cfg.prefix_len
        seq = T.concat_rows([latent, self._embed_text(list(question) + list(text))])
        x = prefix_concat(self.prefix, seq)
        n = x.shape[0]
        n_ctx = m + latent.shape[0] + len(question)
        mask = np.ones((n, n), dtype=bool)
        tail = np.arange(n_ctx, n)
        mask[:n_ctx, n_ctx:] = False
        mask[n_ctx:, n_ctx:] = tail[None, :] <= tail[:, None]
        maps = {}
        for i in range(self.cfg.decoder_layers):
            x, maps[f"dec.{i}"] = self._self_block(f"dec.{i}", x, mask)
        return _Pass(self._ln("dec.ln_f", x), maps)

    def _scores(self, latent: Tensor, hidden: Tensor, n_question: int) -> tuple[Tensor, Tensor]:
        m, q = self.cfg.prefix_len, latent.shape[0]
        visual = T.mean_rows(latent)
        textual = T.mean_rows(T.slice_rows(hidden, m + q, m + q + n_question))
        fused, g = gated_fusion(self.gate, visual, textual)
        s = T.sigmoid(T.add(T.matmul(fused, self.params["head.W"]), self.params["head.b"]))
        return T.add(T.mul(s, Tensor(self._score_span)), Tensor(self._score_lo)), g

    def _question_ids(self, question: str | Sequence[int]) -> list[int]:
        ids = vocab.tokenize(question) if isinstance(question, str) else list(question)
        if not ids:
            raise ContractError("question has no tokens")
        return vocab.check_ids(ids, self.cfg.vocab_size)

    # ----------------------------------------------------------------- public

    def forward(self, image: np.ndarray, question: str | Sequence[int],
                decode: bool = True) -> DualOutput:
        """Score an image for a question and greedily decode a rationale."""
        q_ids = self._question_ids(question)
        with no_grad():
            latent, maps = self.encode_image(image)
            first = self._decode_pass(latent, q_ids, [vocab.BOS])
            scores, g = self._scores(latent, first.hidden, len(q_ids))
            maps.update(first.maps)
            tokens: list[int] = []
            hidden = first.hidden
            if decode:
                lm = self.params["lm_head"]
                while len(tokens) < self.cfg.max_rationale:
                    logits = T.matmul(T.slice_rows(hidden, hidden.shape[0] - 1, hidden.shape[0]), lm)
                    nxt = int(np.argmax(logits.data[0]))
                    if nxt == vocab.EOS:
                        break
                    tokens.append(nxt)
                    hidden = self._decode_pass(latent, q_ids, [vocab.BOS] + tokens).hidden
        grid = tuple(s // self.cfg.patch_size for s in np.shape(image))
        return DualOutput(
            scores={name: float(v) for name, v in zip(self.cfg.score_dims, scores.data)},
            rationale_tokens=tokens,
            attention_maps=maps,
            gate=g.data.copy(),
            patch_grid=grid,
            latent_span=(self.cfg.prefix_len, self.cfg.prefix_len + latent.shape[0]),
        )

    def example_loss(self, ex: Example) -> Tensor:
        """Score MSE (when the dimension is scored) plus rationale cross-entropy."""
        cfg = self.cfg
        q_ids = self._question_ids(ex.question)
        target = vocab.tokenize(ex.rationale)[: cfg.max_rationale] + [vocab.EOS]
        text_in = [vocab.BOS] + target[:-1]
        latent, _ = self.encode_image(ex.pixels)
        out = self._decode_pass(latent, q_ids, text_in)
        n_ctx = cfg.prefix_len + latent.shape[0] + len(q_ids)
        states = T.slice_rows(out.hidden, n_ctx, out.hidden.shape[0])
        loss = T.scale(T.cross_entropy(T.matmul(states, self.params["lm_head"]), target), cfg.text_weight)
        if ex.score is not None and ex.dimension in cfg.score_dims:
            scores, _ = self._scores(latent, out.hidden, len(q_ids))
            k = cfg.score_dims.index(ex.dimension)
            picked = T.gather(scores, [k])
            loss = T.add(loss, T.scale(T.mse(picked, [float(ex.score)]), cfg.score_weight))
        return loss

    def batch_loss(self, batch: Sequence[Example]) -> Tensor:
        if not batch:
            raise ContractError("batch is empty")
        total = self.example_loss(batch[0])
        for ex in batch[1:]:
            total = T.add(total, self.example_loss(ex))
        return T.scale(total, 1.0 / len(batch))

    def make_optimizer(self, lr: float = 1e-2) -> Adam:
        return Adam(self.trainable_params(), lr=lr)


def train_step(batch: Sequence[Example], model: MSEFModel, optimizer: Adam) -> float:
    """One optimisation step on ``batch``; returns the pre-update loss."""
    model.zero_grad()
    try:
        loss = model.batch_loss(batch)
    except NumericError as exc:
        raise NumericError(f"training aborted: {exc}") from exc
    value = loss.item()
    if not np.isfinite(value):
        raise NumericError("training aborted: non-finite loss")
    T.backward(loss)
    optimizer.step()
    return value


def attention_heatmap(output: DualOutput, layer: int | str, head: int,
                      query: int | None = None) -> np.ndarray:
    """Project one head's attention back onto the image patch grid.

    Q-Former maps are used directly; ViT maps average their patch-query rows;
    decoder maps keep only the weight placed on latent tokens and route it
    through the head-averaged Q-Former map. With ``query`` given, only that
    attention row is used instead of the row mean.
    """
    names = output.layers
    name = names[layer] if isinstance(layer, int) else layer
    if isinstance(layer, int) and not 0 <= layer < len(names):
        raise IndexError(f"layer {layer} out of range (have {len(names)})")
    if name not in output.attention_maps:
        raise IndexError(f"unknown attention layer {name!r}")
    maps = output.attention_maps[name]
    if not 0 <= head < maps.shape[0]:
        raise IndexError(f"head {head} out of range (have {maps.shape[0]})")
    alpha = maps[head]
    rows = alpha if query is None else alpha[query:query + 1]
    weights = rows.mean(axis=0)
    if name.startswith("dec."):
        start, stop = output.latent_span
        weights = weights[start:stop] @ output.attention_maps["qformer"].mean(axis=0)
    weights = np.clip(weights, 0.0, None)
    total = weights.sum()
    if total > 0:
        weights = weights / total
    return weights.reshape(output.patch_grid)

