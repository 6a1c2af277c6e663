"""Upsample under-represented dimensions by flagged duplication."""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Sequence

from ..tensor import make_rng
from .records import QATriplet
from .registry import SUBJECTIVE

POSITIVE_AT = 3.5
RATIO_BOUNDS = (0.35, 0.65)


@dataclass
class DimReport:
    count_before: int
    count_after: int
    ratio_before: float | None
    ratio_after: float | None
    added: int = 0
    status: str = "ok"   # ok | upsampled | deficient | empty

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class BalanceReport:
    dims: dict[str, DimReport] = field(default_factory=dict)
    target: int = 0

    @property
    def all_green(self) -> bool:
        return all(d.status == "ok" for d in self.dims.values())

    @property
    def flagged(self) -> list[str]:
        return [k for k, d in self.dims.items() if d.status in ("deficient", "empty")]


def _ratio(items: Sequence[QATriplet]) -> float | None:
    scored = [t.answer_score for t in items if t.answer_score is not None]
    if not scored:
        return None
    return sum(s >= POSITIVE_AT for s in scored) / len(scored)


def balance_dimensions(corpus: Sequence[QATriplet], dimensions: Sequence[str] = SUBJECTIVE,
                       seed: int = 0, target_share: float = 0.8,
                       max_rounds: int = 50) -> tuple[list[QATriplet], BalanceReport]:
    """Duplicate same-dimension originals until every listed dimension holds at
    least ``target_share`` of the largest count and a positive share inside
    ``RATIO_BOUNDS``. Copies carry ``augmented=True``; reserve triplets are
    neither counted nor used as donors.
    """
    active = [t for t in corpus if t.split != "reserve"]
    by_dim: dict[str, list[QATriplet]] = defaultdict(list)
    for t in active:
        if t.dimension in dimensions:
            by_dim[t.dimension].append(t)
    donors = {d: [t for t in by_dim[d] if not t.augmented] for d in dimensions}
    before = {d: (len(by_dim[d]), _ratio(by_dim[d])) for d in dimensions}
    added: Counter[str] = Counter()
    stuck: set[str] = set()
    rngs = {d: make_rng(seed, 23, i) for i, d in enumerate(dimensions)}
    lo, hi = RATIO_BOUNDS

    target = 0
    for _ in range(max_rounds):
        target = math.ceil(target_share * max(len(v) for v in by_dim.values())) if by_dim else 0
        changed = False
        for d in dimensions:
            pool = donors[d]
            pos = [t for t in pool if t.answer_score is not None and t.answer_score >= POSITIVE_AT]
            neg = [t for t in pool if t.answer_score is not None and t.answer_score < POSITIVE_AT]
            while True:
                r = _ratio(by_dim[d])
                if r is not None and r < lo:
                    src = pos
                elif r is not None and r > hi:
                    src = neg
                elif len(by_dim[d]) < target:
                    # keep the sentiment mix drifting towards one half
                    src = (pos if (r or 0.0) < 0.5 else neg) or pool
                else:
                    break
                if not src:
                    stuck.add(d)
                    break
                pick = src[int(rngs[d].integers(len(src)))]
                by_dim[d].append(pick.replace(augmented=True))
                added[d] += 1
                changed = True
        if not changed:
            break

    report = BalanceReport(target=target)
    for d in dimensions:
        n0, r0 = before[d]
        n1, r1 = len(by_dim[d]), _ratio(by_dim[d])
        if n1 == 0:
            status = "empty"
        elif d in stuck:
            status = "deficient"
        else:
            status = "upsampled" if added[d] else "ok"
        report.dims[d] = DimReport(n0, n1, r0, r1, added[d], status)

    extra = [t for d in dimensions for t in by_dim[d][before[d][0]:]]
    return list(corpus) + extra, report
