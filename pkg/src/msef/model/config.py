from __future__ import annotations

from dataclasses import asdict, dataclass, field

from ..errors import ContractError

DEFAULT_SCORE_DIMS = ("walkability", "enclosure", "greenery", "vibrancy")


@dataclass(frozen=True)
class AdapterConfig:
    """Every size and adaptation hyperparameter of the toy network.

    ``score_ranges`` maps a score dimension to its closed interval; dimensions
    not listed use ``default_range``.
    """

    model_dim: int = 32
    lora_rank: int = 8
    prefix_len: int = 16
    num_queries: int = 32
    num_heads: int = 4
    patch_size: int = 4
    vocab_size: int = 64
    seed: int = 0
    image_size: int = 32
    ffn_mult: int = 4
    vit_layers: int = 1
    decoder_layers: int = 2
    max_rationale: int = 16
    score_dims: tuple[str, ...] = DEFAULT_SCORE_DIMS
    score_ranges: dict[str, tuple[float, float]] = field(default_factory=dict)
    default_range: tuple[float, float] = (1.0, 5.0)
    score_weight: float = 1.0
    text_weight: float = 1.0

    def __post_init__(self):
        d, r = self.model_dim, self.lora_rank
        if d <= 0 or r <= 0 or self.num_heads <= 0 or self.num_queries <= 0 or self.patch_size <= 0:
            raise ContractError("model_dim, lora_rank, num_heads, num_queries and patch_size must be positive")
        if self.prefix_len < 0:
            raise ContractError("prefix_len must be non-negative")
        if r >= d:
            raise ContractError(f"lora_rank {r} must be smaller than model_dim {d}")
        if d % self.num_heads:
            raise ContractError(f"model_dim {d} is not divisible by num_heads {self.num_heads}")
        if self.decoder_layers < 1:
            raise ContractError("need at least one decoder layer")
        if not self.score_dims:
            raise ContractError("score_dims is empty")
        object.__setattr__(self, "score_dims", tuple(self.score_dims))
        ranges = {k: (float(v[0]), float(v[1])) for k, v in dict(self.score_ranges).items()}
        for name, (lo, hi) in ranges.items():
            if not lo < hi:
                raise ContractError(f"score range for {name!r} is empty")
        object.__setattr__(self, "score_ranges", ranges)
        object.__setattr__(self, "default_range", tuple(map(float, self.default_range)))

    @property
    def head_dim(self) -> int:
        return self.model_dim // self.num_heads

    def range_of(self, dim: str) -> tuple[float, float]:
        return self.score_ranges.get(dim, self.default_range)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["score_dims"] = list(self.score_dims)
        out["score_ranges"] = {k: list(v) for k, v in self.score_ranges.items()}
        out["default_range"] = list(self.default_range)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "AdapterConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ContractError(f"unknown adapter config keys: {sorted(unknown)}")
        kw = dict(data)
        if "score_dims" in kw:
            kw["score_dims"] = tuple(kw["score_dims"])
        if "score_ranges" in kw:
            kw["score_ranges"] = {k: tuple(v) for k, v in kw["score_ranges"].items()}
        if "default_range" in kw:
            kw["default_range"] = tuple(kw["default_range"])
        return cls(**kw)
