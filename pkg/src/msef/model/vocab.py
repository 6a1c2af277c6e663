"""The fixed 64-symbol vocabulary shared by questions and rationales."""

from __future__ import annotations

from typing import Iterable, Sequence

from ..errors import VocabularyError

PAD, BOS, EOS, UNK = 0, 1, 2, 3
SPECIALS = ("<pad>", "<bos>", "<eos>", "<unk>")

WORDS = (
    # question scaffolding
    "how", "is", "the", "of", "this", "street", "rate", "here",
    # dimension names
    "accessibility", "cleanliness", "perceived", "safety", "visual", "richness",
    "commercial", "convenience", "overall", "satisfaction", "sidewalk", "width",
    "roadway", "greening", "level", "motorization", "activity", "density", "sky",
    "openness", "public", "facilities", "walkability", "enclosure", "greenery", "vibrancy",
    # rationale words
    "low", "moderate", "high", "with", "trees", "traffic", "shops", "lighting",
    "space", "clutter", "benches", "cars", "open", "narrow", "wide", "clean",
    "busy", "quiet", "shows", "and", "feels", "safe", "poor", "good", "many", "few",
)

TOKENS = SPECIALS + WORDS
TOKEN_IDS = {tok: i for i, tok in enumerate(TOKENS)}
VOCAB_SIZE = len(TOKENS)

assert VOCAB_SIZE == 64, VOCAB_SIZE


def tokenize(text: str) -> list[int]:
    """Lowercase, split on whitespace, map unknown words to ``<unk>``."""
    return [TOKEN_IDS.get(w.strip(".,;:!?()\"'"), UNK) for w in text.lower().split()]


def detokenize(ids: Iterable[int]) -> str:
    words = []
    for i in ids:
        if i == EOS:
            break
        if i in (PAD, BOS):
            continue
        words.append(TOKENS[check_id(i)])
    return " ".join(words)


def check_id(i: int, vocab_size: int = VOCAB_SIZE) -> int:
    if not 0 <= int(i) < vocab_size:
        raise VocabularyError(f"token id {i} outside vocabulary of size {vocab_size}")
    return int(i)


def check_ids(ids: Sequence[int], vocab_size: int = VOCAB_SIZE) -> list[int]:
    return [check_id(i, vocab_size) for i in ids]
