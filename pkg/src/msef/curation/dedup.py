"""Average-hash and geotag based near-duplicate removal."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import InputError
from .records import ImageRecord

EARTH_RADIUS_M = 6_371_008.8


def phash(image: np.ndarray) -> int:
    """64-bit average hash.

    The grid is box-averaged down to 8×8 (cells may be uneven when the side is
    not a multiple of 8), thresholded at the cell mean with ties set to 1, and
    packed row-major, first cell in the most significant bit.
    """
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2 or img.size == 0:
        raise InputError("phash needs a non-empty 2-D grid")
    H, W = img.shape
    if H < 8 or W < 8:
        raise InputError(f"image {H}x{W} is smaller than the 8x8 hash grid")
    rows = np.linspace(0, H, 9).astype(int)
    cols = np.linspace(0, W, 9).astype(int)
    cells = np.add.reduceat(np.add.reduceat(img, rows[:-1], axis=0), cols[:-1], axis=1)
    cells /= np.outer(np.diff(rows), np.diff(cols))
    bits = (cells >= cells.mean()).reshape(-1)
    return int("".join("1" if b else "0" for b in bits), 2)


def hamming(a: int, b: int) -> int:
    return (a ^ b).bit_count()


def haversine_m(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp, dl = p2 - p1, math.radians(lon2 - lon1)
    h = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


@dataclass(frozen=True)
class DupPair:
    kept: str
    removed: str
    rule: str          # "hash" or "geo"
    hamming: int
    distance_m: float

    def to_dict(self) -> dict:
        return {"rule": self.rule, "kept": self.kept, "removed": self.removed,
                "hamming": self.hamming, "distance_m": round(self.distance_m, 3)}


def _links(records: Sequence[ImageRecord], hamming_max: int, geo_max_m: float,
           block: int = 512) -> list[tuple[int, int, int, float, str]]:
    """Every linked pair ``(i, j, hamming, metres, rule)`` with i < j, row-major.

    Works in row blocks so memory stays O(block × n).
    """
    hashes = [phash(r.pixels) for r in records]
    bits = np.array([[(h >> (63 - k)) & 1 for k in range(64)] for h in hashes], dtype=np.int32)
    lat = np.radians([r.lat for r in records])
    lon = np.radians([r.lon for r in records])
    n = len(records)
    out = []
    for lo in range(0, n, block):
        hi = min(n, lo + block)
        b = bits[lo:hi]
        ham = b @ (1 - bits).T + (1 - b) @ bits.T
        dp = lat[lo:hi, None] - lat[None, :]
        dl = lon[lo:hi, None] - lon[None, :]
        a = np.sin(dp / 2) ** 2 + np.cos(lat[lo:hi])[:, None] * np.cos(lat)[None, :] * np.sin(dl / 2) ** 2
        dist = 2 * EARTH_RADIUS_M * np.arcsin(np.minimum(1.0, np.sqrt(a)))
        hash_link = ham <= hamming_max
        linked = hash_link | (dist <= geo_max_m)
        rows = np.arange(lo, hi)[:, None]
        linked &= np.arange(n)[None, :] > rows
        for r, j in zip(*np.nonzero(linked)):
            out.append((lo + int(r), int(j), int(ham[r, j]), float(dist[r, j]),
                        "hash" if hash_link[r, j] else "geo"))
    return out


def dedup(records: Sequence[ImageRecord], hamming_max: int = 10,
          geo_max_m: float = 5.0) -> tuple[list[ImageRecord], list[DupPair]]:
    """Collapse duplicate clusters to one survivor each.

    Two records are linked when their hashes differ in at most ``hamming_max``
    bits or they lie within ``geo_max_m`` metres. Clusters are the transitive
    closure of links; the survivor is the earliest capture (then smallest id).
    The log has one entry per removed record, describing the link that joined
    it to its cluster.
    """
    n = len(records)
    if n == 0:
        return [], []
    links = _links(records, hamming_max, geo_max_m)

    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    edges: dict[int, tuple[int, float, str]] = {}
    for i, j, h, d, rule in links:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
        # remember one witnessing link per record for the log
        edges.setdefault(j, (h, d, rule))
        edges.setdefault(i, (h, d, rule))

    clusters: dict[int, list[int]] = {}
    for i in range(n):
        clusters.setdefault(find(i), []).append(i)

    key = lambda i: (records[i].capture_time, records[i].image_id)  # noqa: E731
    keep, log = [], []
    for members in clusters.values():
        winner = min(members, key=key)
        keep.append(winner)
        for m in sorted(members, key=key):
            if m == winner:
                continue
            h, d, rule = edges[m]
            log.append(DupPair(records[winner].image_id, records[m].image_id, rule, h, d))
    keep.sort()
    log.sort(key=lambda p: p.removed)
    return [records[i] for i in keep], log


def violations(records: Sequence[ImageRecord], hamming_max: int = 10,
               geo_max_m: float = 5.0) -> list[tuple[str, str]]:
    """Brute-force scan for surviving pairs that break either threshold."""
    hashes = [phash(r.pixels) for r in records]
    bad = []
    for i in range(len(records)):
        for j in range(i + 1, len(records)):
            a, b = records[i], records[j]
            if (hamming(hashes[i], hashes[j]) <= hamming_max
                    or haversine_m(a.lat, a.lon, b.lat, b.lon) <= geo_max_m):
                bad.append((a.image_id, b.image_id))
    return bad
