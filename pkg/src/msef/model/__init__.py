"""Toy vision-language scorer with LoRA, prefix tuning, Q-Former and gated fusion."""

from .checkpoint import load_checkpoint, save_checkpoint
from .config import DEFAULT_SCORE_DIMS, AdapterConfig
from .layers import (
    GatedFusion,
    LoraLayer,
    PrefixBank,
    attention,
    gated_fusion,
    image_to_patches,
    lora_apply,
    lora_merge,
    patch_embed,
    prefix_concat,
    sinusoidal_positions,
)
from .network import DualOutput, Example, MSEFModel, attention_heatmap, train_step

__all__ = [
    "AdapterConfig",
    "DEFAULT_SCORE_DIMS",
    "DualOutput",
    "Example",
    "GatedFusion",
    "LoraLayer",
    "MSEFModel",
    "PrefixBank",
    "attention",
    "attention_heatmap",
    "gated_fusion",
    "image_to_patches",
    "load_checkpoint",
    "lora_apply",
    "lora_merge",
    "patch_embed",
    "prefix_concat",
    "save_checkpoint",
    "sinusoidal_positions",
    "train_step",
]
