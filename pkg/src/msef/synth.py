"""Synthetic streetscape corpora with planted ground truth.

Each scene is a 32×32 grayscale raster. Two things are layered:

* a per-image signature: every 4×4 cell is lifted by 0 or ``SIG_AMP``
  according to 64 seeded bits, so the average hash of the image is exactly
  those bits and unrelated scenes never look like near-duplicates;
* the scene attributes: each attribute owns a 4×16 slot (four cells) and
  draws a fixed ±1 stipple pattern in it, with contrast proportional to the
  attribute. The stipple is zero-mean in every cell, so it leaves the cell
  means the hash sees alone, and the slot's mean absolute deviation from its
  cell means equals the contrast. Greenery, in the top-left slot, also lifts
  the slot's brightness.

Satisfaction on the 1-7 scale is linear in eight attributes, has an
inverted-U in connectivity, and an openness slope that depends on land use.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .curation.records import (
    ImageRecord,
    QATriplet,
    RatingRecord,
    encode_pixels,
    write_communities,
    write_images,
    write_jsonl,
    write_ratings,
)
from .curation.registry import OBJECTIVE, SUBJECTIVE
from .curation.strata import N_TIERS
from .errors import InputError
from .tensor import make_rng

FEATURES = (
    "pedestrian_width",
    "greenery",
    "public_amenities",
    "visual_richness",
    "perceived_safety",
    "motorization",
    "vehicle_lane_width",
    "commercial_intensity",
    "connectivity",
)
LINEAR = FEATURES[:8]
PLANTED_BETAS = {
    "pedestrian_width": 0.419,
    "greenery": 0.444,
    "public_amenities": 0.346,
    "visual_richness": 0.483,
    "perceived_safety": 0.486,
    "motorization": -0.437,
    "vehicle_lane_width": -0.506,
    "commercial_intensity": -0.392,
}
LAND_USES = ("residential", "commercial")

# objective registry dimension -> scene attribute
OBJECTIVE_SOURCE = {
    "sidewalk_width": "pedestrian_width",
    "roadway_width": "vehicle_lane_width",
    "greening_level": "greenery",
    "motorization": "motorization",
    "commercial_activity_density": "commercial_intensity",
    "sky_openness": "openness",
    "public_facilities": "public_amenities",
}

TIER_PRICES = ((3000.0, 5000.0), (5000.0, 6800.0), (6800.0, 8200.0), (8200.0, 10000.0), (10000.0, 15000.0))

SIZE = 32
CELL = 4
BASE = 0.3
SIG_AMP = 0.04
MAX_CONTRAST = 0.25
LAND_USE_CONTRAST = 0.12
GREEN_LIFT = 0.4
SLOTS = ("greenery",) + tuple(f for f in FEATURES if f != "greenery") + ("openness", "land_use")
MIN_SIG_DISTANCE = 11

LO, HI = 1.0, 7.0


# ---------------------------------------------------------------------------
# scenes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SceneSpec:
    objective_features: dict[str, float]
    community_id: str = "c000"
    tier: int = 0
    seed: int = 0
    openness: float = 4.0
    land_use: str = "residential"

    def __post_init__(self):
        missing = set(FEATURES) - set(self.objective_features)
        if missing:
            raise InputError(f"scene is missing features {sorted(missing)}")
        for k, v in {**self.objective_features, "openness": self.openness}.items():
            if not LO <= v <= HI:
                raise InputError(f"feature {k}={v} outside [{LO:g}, {HI:g}]")
        if self.land_use not in LAND_USES:
            raise InputError(f"unknown land use {self.land_use!r}")


def _slot_patterns() -> np.ndarray:
    """Fixed ±1 stipple per slot, four cells of 4×4, each cell balanced."""
    pats = np.empty((len(SLOTS), CELL, 4 * CELL))
    rng = make_rng(0x5EED, 1)
    for s in range(len(SLOTS)):
        for c in range(4):
            cell = np.array([1.0] * 8 + [-1.0] * 8)
            rng.shuffle(cell)
            pats[s, :, c * CELL:(c + 1) * CELL] = cell.reshape(CELL, CELL)
    return pats


_PATTERNS = _slot_patterns()


def slot_region(name: str) -> tuple[slice, slice]:
    k = SLOTS.index(name)
    r, half = divmod(k, 2)
    return slice(r * CELL, (r + 1) * CELL), slice(half * 16, half * 16 + 16)


def signature_bits(seed: int, salt: int = 0) -> np.ndarray:
    return make_rng(seed, 0x51, salt).integers(0, 2, size=64).astype(bool)


def _contrast(value: float) -> float:
    return MAX_CONTRAST * (value - LO) / (HI - LO)


def render_scene(sc: SceneSpec, signature: np.ndarray | None = None) -> np.ndarray:
    """Deterministic 32×32 raster in [0, 1], quantised to multiples of 1/255."""
    sig = signature_bits(sc.seed) if signature is None else np.asarray(signature, dtype=bool)
    img = BASE + SIG_AMP * np.kron(sig.reshape(8, 8).astype(float), np.ones((CELL, CELL)))
    values = dict(sc.objective_features, openness=sc.openness)
    for k, name in enumerate(SLOTS):
        rows, cols = slot_region(name)
        if name == "land_use":
            c = LAND_USE_CONTRAST if sc.land_use == "commercial" else 0.0
        else:
            c = _contrast(values[name])
        img[rows, cols] += c * _PATTERNS[k]
        if name == "greenery":
            img[rows, cols] += GREEN_LIFT * c
    return np.rint(np.clip(img, 0.0, 1.0) * 255.0) / 255.0


def slot_mean(pixels: np.ndarray, name: str) -> float:
    rows, cols = slot_region(name)
    return float(pixels[rows, cols].mean())


def slot_statistic(pixels: np.ndarray, name: str) -> float:
    """Mean absolute deviation from the 4×4 cell means inside an attribute's slot."""
    rows, cols = slot_region(name)
    block = pixels[rows, cols]
    cells = block.reshape(CELL, 4, CELL).transpose(1, 0, 2)
    return float(np.mean(np.abs(cells - cells.mean(axis=(1, 2), keepdims=True))))


# ---------------------------------------------------------------------------
# satisfaction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EffectModel:
    betas: dict[str, float] = field(default_factory=lambda: dict(PLANTED_BETAS))
    intercept: float = 4.0
    center: float = 4.0
    quad: float = 0.1           # curvature of the connectivity inverted-U
    quad_vertex: float = 5.0
    openness_betas: dict[str, float] = field(default_factory=lambda: {"commercial": 0.3, "residential": 0.0})
    noise_sd: float = 0.5
    clip: tuple[float, float] = (LO, HI)

    def __post_init__(self):
        if self.noise_sd < 0 or self.quad < 0:
            raise InputError("noise_sd and quad must be non-negative")
        unknown = set(self.betas) - set(FEATURES)
        if unknown:
            raise InputError(f"betas for unknown features {sorted(unknown)}")
        if not self.clip[0] < self.clip[1]:
            raise InputError("empty clip range")

    def deterministic(self, features: dict[str, float], openness: float = 4.0,
                      land_use: str = "residential") -> float:
        s = self.intercept + math.fsum(b * (features[k] - self.center) for k, b in self.betas.items())
        s -= self.quad * (features["connectivity"] - self.quad_vertex) ** 2
        s += self.openness_betas.get(land_use, 0.0) * (openness - self.center)
        return s

    def to_dict(self) -> dict:
        d = asdict(self)
        d["clip"] = list(self.clip)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EffectModel":
        known = set(cls.__dataclass_fields__)
        bad = set(d) - known
        if bad:
            raise InputError(f"unknown effect keys {sorted(bad)}")
        d = dict(d)
        if "clip" in d:
            d["clip"] = tuple(d["clip"])
        return cls(**d)


def plant_satisfaction(sc: SceneSpec, effects: EffectModel, seed: int | None = None,
                       noise: float | None = None) -> float:
    """Planted 1-7 satisfaction. ``noise`` (a standard normal draw) overrides ``seed``."""
    s = effects.deterministic(sc.objective_features, sc.openness, sc.land_use)
    if effects.noise_sd > 0:
        z = noise if noise is not None else make_rng(sc.seed if seed is None else seed, 0x5A).standard_normal()
        s += effects.noise_sd * z
    lo, hi = effects.clip
    return float(min(hi, max(lo, s)))


def to_likert_scale(s: float) -> float:
    """Affine map of the 1-7 scale onto 1-5."""
    return 3.0 + (s - 4.0) * 2.0 / 3.0


def subjective_truth(features: dict[str, float], satisfaction: float) -> dict[str, float]:
    """Planted consensus for the six surveyed dimensions, on 1-5."""
    raw = {
        "accessibility": (features["pedestrian_width"] + features["connectivity"]) / 2,
        "cleanliness": (features["greenery"] + 8.0 - features["commercial_intensity"]) / 2,
        "perceived_safety": features["perceived_safety"],
        "visual_richness": features["visual_richness"],
        "commercial_convenience": features["commercial_intensity"],
        "overall_satisfaction": satisfaction,
    }
    return {k: to_likert_scale(v) for k, v in raw.items()}


# ---------------------------------------------------------------------------
# respondents
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RespondentProfile:
    respondent_id: str
    bias: float = 0.0
    spread: float = 1.0
    skip_prob: float = 0.0

    def __post_init__(self):
        if self.spread <= 0:
            raise InputError("spread must be positive")
        if not 0 <= self.skip_prob < 1:
            raise InputError("skip probability must lie in [0, 1)")

    def rate(self, truth5: float, rng: np.random.Generator, noise_sd: float = 0.0) -> float | None:
        if self.skip_prob > 0 and rng.random() < self.skip_prob:
            return None
        x = 3.0 + self.bias + self.spread * (truth5 - 3.0)
        if noise_sd > 0:
            x += noise_sd * rng.standard_normal()
        return float(math.floor(min(5.0, max(1.0, x)) + 0.5))


def make_respondents(n: int, seed: int, bias_max: float = 0.5, spread_range=(0.8, 1.2),
                     skip_prob: float = 0.05, biases: Sequence[float] | None = None) -> list[RespondentProfile]:
    rng = make_rng(seed, 0x202)
    out = []
    for i in range(n):
        b = biases[i % len(biases)] if biases else float(rng.uniform(-bias_max, bias_max))
        s = float(rng.uniform(*spread_range))
        out.append(RespondentProfile(f"r{i:03d}", round(b, 6), round(s, 6), skip_prob))
    return out


# ---------------------------------------------------------------------------
# text
# ---------------------------------------------------------------------------

DIM_WORDS = {
    "accessibility": "accessibility",
    "cleanliness": "cleanliness",
    "perceived_safety": "perceived safety",
    "visual_richness": "visual richness",
    "commercial_convenience": "commercial convenience",
    "overall_satisfaction": "overall satisfaction",
    "sidewalk_width": "sidewalk width",
    "roadway_width": "roadway width",
    "greening_level": "greening level",
    "motorization": "motorization",
    "commercial_activity_density": "commercial activity density",
    "sky_openness": "sky openness",
    "public_facilities": "public facilities",
}

_DETAIL = {  # (low, high)
    "accessibility": ("narrow sidewalk", "wide sidewalk"),
    "cleanliness": ("clutter", "clean space"),
    "perceived_safety": ("poor lighting", "good lighting"),
    "visual_richness": ("poor space", "many trees and shops"),
    "commercial_convenience": ("few shops", "many shops"),
    "overall_satisfaction": ("poor street", "good street"),
    "sidewalk_width": ("narrow sidewalk", "wide sidewalk"),
    "roadway_width": ("narrow roadway", "wide roadway and many cars"),
    "greening_level": ("few trees", "many trees"),
    "motorization": ("quiet street", "busy traffic"),
    "commercial_activity_density": ("few shops", "many shops"),
    "sky_openness": ("narrow space", "open sky"),
    "public_facilities": ("few benches", "many benches"),
}


def level_word(score: float, lo: float, hi: float) -> str:
    u = (score - lo) / (hi - lo)
    return "low" if u < 1 / 3 else "moderate" if u <= 2 / 3 else "high"


def question_for(dim: str, variant: int = 0) -> str:
    w = DIM_WORDS[dim]
    return f"how is the {w} of this street" if variant == 0 else f"rate the {w} here"


def rationale_for(dim: str, score: float, lo: float, hi: float, variant: int = 0) -> str:
    lvl = level_word(score, lo, hi)
    w = DIM_WORDS[dim]
    if variant:
        return f"this street shows {lvl} {w}"
    if lvl == "moderate":
        return f"moderate {w}"
    return f"{lvl} {w} with {_DETAIL[dim][lvl == 'high']}"


# ---------------------------------------------------------------------------
# corpus
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CorpusConfig:
    n_communities: int = 25
    images_per_community: int = 4
    respondents: int = 12
    raters_per_image: int = 3
    feature_sd: float = 0.8
    uniform_features: tuple[str, ...] = ("connectivity",)
    bias_max: float = 0.5
    respondent_biases: tuple[float, ...] = ()
    skip_prob: float = 0.05
    rating_noise_sd: float = 0.25
    commercial_share: float = 0.5
    reserve_per_image: int = 1
    triplets: bool = True

    def __post_init__(self):
        if min(self.n_communities, self.images_per_community, self.respondents) < 1:
            raise InputError("community, image and respondent counts must be at least 1")
        if self.raters_per_image < 1:
            raise InputError("raters_per_image must be at least 1")
        if self.raters_per_image > self.respondents:
            object.__setattr__(self, "raters_per_image", self.respondents)
        bad = set(self.uniform_features) - set(FEATURES) - {"openness"}
        if bad:
            raise InputError(f"unknown uniform features {sorted(bad)}")

    @classmethod
    def from_dict(cls, d: dict) -> "CorpusConfig":
        bad = set(d) - set(cls.__dataclass_fields__)
        if bad:
            raise InputError(f"unknown corpus keys {sorted(bad)}")
        d = dict(d)
        for k in ("uniform_features", "respondent_biases"):
            if k in d:
                d[k] = tuple(d[k])
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["uniform_features"] = list(self.uniform_features)
        d["respondent_biases"] = list(self.respondent_biases)
        return d


@dataclass
class Corpus:
    images: list[ImageRecord]
    ratings: list[RatingRecord]
    triplets: list[QATriplet]
    communities: list[tuple[str, float, float, float]]
    manifest: dict


def tier_sizes(n: int) -> list[int]:
    base, extra = divmod(n, N_TIERS)
    return [base + (1 if k < extra else 0) for k in range(N_TIERS)]


def _draw_feature(rng: np.random.Generator, name: str, cfg: CorpusConfig) -> float:
    if name in cfg.uniform_features:
        return float(rng.uniform(LO, HI))
    return float(np.clip(rng.normal(4.0, cfg.feature_sd), LO, HI))


IMAGE_SPACING_M = 50.0
COMMUNITY_GAP_M = 500.0
_M_PER_DEG = 111_195.0
ORIGIN = (45.70, 126.55)


def _side(n: int) -> int:
    return math.isqrt(n - 1) + 1


def _offset(lat: float, lon: float, row: int, col: int, step: float = IMAGE_SPACING_M) -> tuple[float, float]:
    dlat = row * step / _M_PER_DEG
    dlon = col * step / (_M_PER_DEG * math.cos(math.radians(lat)))
    return lat + dlat, lon + dlon


def _community_origin(ci: int, cfg: "CorpusConfig") -> tuple[float, float]:
    """Communities on a square grid, images on a 50 m grid inside each."""
    pitch = _side(cfg.images_per_community) * IMAGE_SPACING_M + COMMUNITY_GAP_M
    return _offset(*ORIGIN, *divmod(ci, _side(cfg.n_communities)), step=pitch)


def _hash_bits(pixels: np.ndarray) -> np.ndarray:
    cells = pixels.reshape(8, CELL, 8, CELL).mean(axis=(1, 3)).ravel()
    return cells >= cells.mean()


def _render_separated(layouts: list[SceneSpec]) -> list[np.ndarray]:
    """Render every scene, redrawing the signature of any image whose hash
    lands within MIN_SIG_DISTANCE-1 bits of an earlier one.

    Runs serially in image order, so the result does not depend on how the
    communities were generated.
    """
    out: list[np.ndarray] = []
    bank = np.zeros((len(layouts), 64), dtype=bool)
    for i, sc in enumerate(layouts):
        salt = 0
        px = render_scene(sc)
        bits = _hash_bits(px)
        while i and int(np.min(np.sum(bank[:i] != bits, axis=1))) < MIN_SIG_DISTANCE:
            salt += 1
            px = render_scene(sc, signature_bits(sc.seed, salt))
            bits = _hash_bits(px)
        bank[i] = bits
        out.append(px)
    return out


def gen_corpus(cfg: CorpusConfig = CorpusConfig(), effects: EffectModel = EffectModel(),
               seed: int = 0) -> Corpus:
    """Build images, ratings, triplets and a ground-truth manifest."""
    profiles = make_respondents(cfg.respondents, seed, cfg.bias_max, skip_prob=cfg.skip_prob,
                                biases=list(cfg.respondent_biases) or None)
    sizes = tier_sizes(cfg.n_communities)
    tiers = [k for k, s in enumerate(sizes) for _ in range(s)]
    order = make_rng(seed, 0x7E).permutation(cfg.n_communities)
    tier_of = {int(c): tiers[i] for i, c in enumerate(order)}

    communities, scenes = [], []
    for ci in range(cfg.n_communities):
        rng = make_rng(seed, 0x101, ci)
        cid = f"c{ci:03d}"
        tier = tier_of[ci]
        lo, hi = TIER_PRICES[tier]
        price = round(float(rng.uniform(lo, hi)), 2)
        lat0, lon0 = _community_origin(ci, cfg)
        communities.append((cid, price, lat0, lon0))
        land_use = "commercial" if rng.random() < cfg.commercial_share else "residential"
        for j in range(cfg.images_per_community):
            feats = {f: _draw_feature(rng, f, cfg) for f in FEATURES}
            openness = _draw_feature(rng, "openness", cfg)
            z = float(rng.standard_normal())
            img_seed = int(rng.integers(0, 2**63))
            sc = SceneSpec(feats, cid, tier, img_seed, openness, land_use)
            lat, lon = _offset(lat0, lon0, *divmod(j, _side(cfg.images_per_community)))
            scenes.append((sc, z, ci, j, price, lat, lon, rng))

    rasters = _render_separated([s[0] for s in scenes])

    images, ratings, triplets = [], [], []
    for (sc, z, ci, j, price, lat, lon, rng), pixels in zip(scenes, rasters):
        image_id = f"img_{ci:03d}_{j:03d}"
        sat = plant_satisfaction(sc, effects, noise=z)
        subj = subjective_truth(sc.objective_features, sat)
        minute = ci * cfg.images_per_community + j
        images.append(ImageRecord(
            image_id, pixels, lat, lon, f"2023-07-{1 + minute // 1440:02d}T{(minute // 60) % 24:02d}:{minute % 60:02d}:00",
            sc.community_id, price, sc.tier, dict(sc.objective_features),
            {"openness": sc.openness, "land_use": sc.land_use, "satisfaction": sat, "subjective": subj},
        ))
        raters = rng.choice(len(profiles), size=cfg.raters_per_image, replace=False)
        given: dict[str, list[float]] = {}
        for r in sorted(int(x) for x in raters):
            prof = profiles[r]
            for dim in SUBJECTIVE:
                score = prof.rate(subj[dim], rng, cfg.rating_noise_sd)
                ratings.append(RatingRecord(prof.respondent_id, image_id, dim, score, score is None))
                if score is not None:
                    given.setdefault(dim, []).append(score)
        if cfg.triplets:
            triplets.extend(_triplets_for(image_id, sc, subj, given, rng, cfg.reserve_per_image))

    manifest = {
        "seed": seed,
        "corpus": cfg.to_dict(),
        "effects": effects.to_dict(),
        "features": list(FEATURES),
        "planted_betas": dict(PLANTED_BETAS),
        "quad_vertex": effects.quad_vertex,
        "tier_prices": [list(p) for p in TIER_PRICES],
        "tiers": {c[0]: tier_of[i] for i, c in enumerate(communities)},
        "respondents": [asdict(p) for p in profiles],
        "counts": {"communities": len(communities), "images": len(images), "ratings": len(ratings),
                   "triplets": len(triplets)},
    }
    return Corpus(images, ratings, triplets, communities, manifest)


def _triplets_for(image_id: str, sc: SceneSpec, subj: dict[str, float], given: dict[str, list[float]],
                  rng: np.random.Generator, n_reserve: int) -> list[QATriplet]:
    out = []
    values = dict(sc.objective_features, openness=sc.openness)
    for dim in SUBJECTIVE:
        scores = given.get(dim)
        s = round(float(np.mean(scores)), 4) if scores else round(subj[dim], 4)
        out.append(QATriplet(image_id, question_for(dim), s, rationale_for(dim, s, 1, 5), dim))
    for dim in OBJECTIVE:
        s = round(values[OBJECTIVE_SOURCE[dim]], 1)
        out.append(QATriplet(image_id, question_for(dim), s, rationale_for(dim, s, LO, HI), dim))
    picks = rng.choice(len(out), size=min(n_reserve, len(out)), replace=False) if n_reserve else []
    for k in sorted(int(p) for p in picks):
        t = out[k]
        lo, hi = (1, 5) if t.dimension in SUBJECTIVE else (LO, HI)
        out.append(t.replace(question=question_for(t.dimension, 1),
                             answer_text=rationale_for(t.dimension, t.answer_score, lo, hi, 1),
                             split="reserve"))
    return out


# ---------------------------------------------------------------------------
# files
# ---------------------------------------------------------------------------

CORPUS_FILES = ("images.jsonl", "ratings.csv", "communities.csv", "triplets.jsonl", "manifest.json")


def file_sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_corpus(corpus: Corpus, out_dir: str | Path) -> dict[str, str]:
    out = Path(out_dir)
    write_images(out / "images.jsonl", corpus.images)
    write_ratings(out / "ratings.csv", corpus.ratings)
    write_communities(out / "communities.csv", corpus.communities)
    write_jsonl(out / "triplets.jsonl", (t.to_json() for t in corpus.triplets))
    (out / "manifest.json").write_text(json.dumps(corpus.manifest, indent=2, sort_keys=True) + "\n",
                                       encoding="utf-8")
    return {name: file_sha256(out / name) for name in CORPUS_FILES}


# ---------------------------------------------------------------------------
# noise calibration
# ---------------------------------------------------------------------------

def _poly_r2(x: np.ndarray, y: np.ndarray) -> float:
    V = np.column_stack([np.ones_like(x), x, x * x])
    beta, *_ = np.linalg.lstsq(V, y, rcond=None)
    r = y - V @ beta
    return float(1.0 - (r @ r) / np.sum((y - y.mean()) ** 2))


def calibrate_noise(effects: EffectModel, target_r2: float = 0.49, cfg: CorpusConfig = CorpusConfig(),
                    n: int = 20000, seed: int = 0, tol: float = 1e-4) -> tuple[float, float]:
    """Noise sd at which a quadratic in connectivity explains ``target_r2`` of
    the clipped satisfaction variance. Returns ``(noise_sd, achieved R²)``.

    The sweep reuses one set of scenes and noise draws, so R² is monotone in
    the noise level and bisection converges. If the target is above the
    noise-free R², the noise-free level is returned.
    """
    rng = make_rng(seed, 0xCA1)
    base = np.empty(n)
    conn = np.empty(n)
    for i in range(n):
        feats = {f: _draw_feature(rng, f, cfg) for f in FEATURES}
        lu = "commercial" if rng.random() < cfg.commercial_share else "residential"
        base[i] = effects.deterministic(feats, _draw_feature(rng, "openness", cfg), lu)
        conn[i] = feats["connectivity"]
    z = rng.standard_normal(n)
    lo, hi = effects.clip

    def r2(sd: float) -> float:
        return _poly_r2(conn, np.clip(base + sd * z, lo, hi))

    if r2(0.0) <= target_r2:
        return 0.0, r2(0.0)
    a, b = 0.0, 1.0
    while r2(b) > target_r2:
        b *= 2.0
    while b - a > tol:
        mid = (a + b) / 2
        if r2(mid) > target_r2:
            a = mid
        else:
            b = mid
    sd = (a + b) / 2
    return sd, r2(sd)


def pixels_digest(pixels: np.ndarray) -> str:
    return hashlib.sha256(encode_pixels(pixels).encode()).hexdigest()


def inverted_u_preset(target_r2: float = 0.49, n_communities: int = 50, images_per_community: int = 20,
                      seed: int = 0) -> tuple[CorpusConfig, EffectModel, float]:
    """Corpus where connectivity carries a visible inverted-U.

    Other attributes are drawn tightly around the midpoint and the noise level
    is calibrated so the quadratic explains ``target_r2``. Returns the config,
    the calibrated effects and the oracle R².
    """
    cfg = CorpusConfig(n_communities=n_communities, images_per_community=images_per_community,
                       feature_sd=0.5, uniform_features=("connectivity",))
    effects = EffectModel(quad=0.2, intercept=4.8)
    sd, r2 = calibrate_noise(effects, target_r2, cfg, seed=seed)
    return cfg, EffectModel(quad=0.2, intercept=4.8, noise_sd=round(sd, 6)), r2
