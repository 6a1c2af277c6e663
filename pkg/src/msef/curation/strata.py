"""Price-tier binning and community-level stratified holdout."""

from __future__ import annotations

import bisect
import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Mapping, Sequence

from ..errors import InputError
from ..tensor import make_rng

log = logging.getLogger(__name__)

N_TIERS = 5
FIXED_THRESHOLDS = (5000.0, 6800.0, 8200.0, 10000.0)


@dataclass(frozen=True)
class TierResult:
    tiers: list[int]          # aligned with the input order
    thresholds: list[float]   # lower edge of tiers 1..4
    sizes: list[int]


def quintile_bin(prices: Sequence[float], ids: Sequence[str] | None = None,
                 thresholds: Sequence[float] | None = None) -> TierResult:
    """Assign five price tiers.

    Default is equal-frequency: sort by (price, id), cut into five runs whose
    sizes differ by at most one, extra items going to the cheapest runs.
    With ``thresholds`` (four ascending edges) a price ``p`` lands in
    ``bisect_right(thresholds, p)`` instead.
    """
    n = len(prices)
    ids = [str(i) for i in range(n)] if ids is None else list(ids)
    if len(ids) != n:
        raise InputError("prices and ids differ in length")
    if thresholds is not None:
        th = [float(t) for t in thresholds]
        if len(th) != N_TIERS - 1 or th != sorted(th):
            raise InputError("need four ascending thresholds")
        tiers = [bisect.bisect_right(th, p) for p in prices]
        return TierResult(tiers, th, [tiers.count(k) for k in range(N_TIERS)])
    if n < N_TIERS:
        raise InputError(f"need at least {N_TIERS} communities, got {n}")
    order = sorted(range(n), key=lambda i: (prices[i], ids[i]))
    base, extra = divmod(n, N_TIERS)
    sizes = [base + (1 if k < extra else 0) for k in range(N_TIERS)]
    tiers = [0] * n
    starts, pos = [], 0
    for k, size in enumerate(sizes):
        starts.append(pos)
        for i in order[pos:pos + size]:
            tiers[i] = k
        pos += size
    edges = [float(prices[order[s]]) for s in starts[1:]]
    return TierResult(tiers, edges, sizes)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class Split:
    train: frozenset[str]
    val: frozenset[str]
    warnings: tuple[str, ...] = ()


def stratified_split(tiers: Mapping[str, int], val_fraction: float = 0.2, seed: int = 0) -> Split:
    """Hold out ``round(count × fraction)`` communities per tier (at least one).

    A tier whose only community would go to validation keeps it in training
    and records a warning instead.
    """
    if not 0.0 <= val_fraction < 1.0:
        raise InputError("val_fraction must lie in [0, 1)")
    by_tier: dict[int, list[str]] = defaultdict(list)
    for cid, t in tiers.items():
        by_tier[int(t)].append(cid)
    train, val, warnings = set(), set(), []
    for t in sorted(by_tier):
        members = sorted(by_tier[t])
        k = max(1, _round_half_up(len(members) * val_fraction)) if val_fraction > 0 else 0
        if k >= len(members):
            msg = f"tier {t}: {len(members)} communities, keeping all in train"
            log.warning(msg)
            warnings.append(msg)
            k = len(members) - 1
        perm = make_rng(seed, 17, t).permutation(len(members))
        chosen = {members[i] for i in perm[:k]}
        val |= chosen
        train |= set(members) - chosen
    return Split(frozenset(train), frozenset(val), tuple(warnings))
