"""Reserve-buffer curriculum: swap in alternate Q&A pairs when generations drift."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from ..tensor import make_rng
from .records import QATriplet

DEFAULT_TAU = 0.2
DEFAULT_FRACTION = 0.1


def _ngrams(text: str, n: int) -> set[tuple[str, ...]]:
    words = text.lower().split()
    return {tuple(words[i:i + n]) for i in range(len(words) - n + 1)}


def ngram_overlap(generated: str, references: Sequence[str], n: int = 2) -> float:
    """Best Jaccard similarity of word n-gram sets against any reference."""
    g = _ngrams(generated, n)
    best = 0.0
    for ref in references:
        r = _ngrams(ref, n)
        if not g and not r:
            return 1.0
        if not g or not r:
            continue
        best = max(best, len(g & r) / len(g | r))
    return best


@dataclass
class RefreshResult:
    active: list[QATriplet]
    reserve: list[QATriplet]
    log: list[dict] = field(default_factory=list)

    @property
    def promotions(self) -> int:
        return sum(1 for e in self.log if e["kind"] == "promote")

    @property
    def periodic(self) -> int:
        return sum(1 for e in self.log if e["kind"] == "periodic")


def curriculum_refresh(generations: Mapping[str, str], active: Sequence[QATriplet],
                       reserve: Sequence[QATriplet], tau: float = DEFAULT_TAU,
                       fraction: float = DEFAULT_FRACTION, seed: int = 0, epoch: int = 0,
                       n: int = 2) -> RefreshResult:
    """Build the next epoch's active set.

    ``active`` is kept in recency order, so the first triplet of an image is its
    least recently used one. ``reserve`` is a FIFO queue. Swaps always stay
    within one image, so each image's active+reserve total is conserved.

    Drift swaps: an image whose generation scores below ``tau`` against all its
    active references gets its oldest reserve pair promoted and its least
    recently used active pair demoted to the back of the queue.

    Periodic swaps: ``round(fraction × len(active))`` further active pairs,
    drawn with ``make_rng(seed, epoch)`` among images that still have a
    reserve, are exchanged the same way. Freshly promoted pairs are not drawn.
    """
    act = list(active)
    res = list(reserve)
    log: list[dict] = []

    def swap(image_id: str, kind: str, victim: int | None = None,
             overlap: float | None = None) -> QATriplet | None:
        q = next((k for k, t in enumerate(res) if t.image_id == image_id), None)
        if q is None:
            log.append({"epoch": epoch, "kind": "no_reserve", "image_id": image_id, "overlap": overlap})
            return None
        if victim is None:
            victim = next(k for k, t in enumerate(act) if t.image_id == image_id)
        promoted = res.pop(q).replace(split="train")
        demoted = act.pop(victim).replace(split="reserve")
        act.append(promoted)
        res.append(demoted)
        entry = {"epoch": epoch, "kind": kind, "image_id": image_id,
                 "promoted": promoted.answer_text, "demoted": demoted.answer_text}
        if overlap is not None:
            entry["overlap"] = round(overlap, 6)
        log.append(entry)
        return promoted

    fresh: set[int] = set()
    for image_id in sorted(generations):
        refs = [t.answer_text for t in act if t.image_id == image_id]
        if not refs:
            continue
        score = ngram_overlap(generations[image_id], refs, n)
        if score < tau:
            promoted = swap(image_id, "promote", overlap=score)
            if promoted is not None:
                fresh.add(id(promoted))

    k = int(round(fraction * len(act)))
    if k > 0:
        with_reserve = {t.image_id for t in res}
        cand = [i for i, t in enumerate(act) if id(t) not in fresh and t.image_id in with_reserve]
        rng = make_rng(seed, 29, epoch)
        picks = [cand[i] for i in sorted(rng.permutation(len(cand))[:k])]
        ids = [id(act[i]) for i in picks]
        for obj in ids:
            pos = next(i for i, t in enumerate(act) if id(t) == obj)
            image_id = act[pos].image_id
            swap(image_id, "periodic", victim=pos)
        if len(picks) < k:
            log.append({"epoch": epoch, "kind": "periodic_short", "wanted": k, "done": len(picks)})
    return RefreshResult(act, res, log)


def per_image_counts(active: Sequence[QATriplet], reserve: Sequence[QATriplet]) -> dict[str, int]:
    out: dict[str, int] = defaultdict(int)
    for t in list(active) + list(reserve):
        out[t.image_id] += 1
    return dict(out)
