"""Record types and their on-disk formats (JSON-lines and CSV)."""

from __future__ import annotations

import base64
import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator

import numpy as np

from ..errors import InputError, RangeError, ValidationError
from .registry import DimensionRegistry

log = logging.getLogger(__name__)

SPLITS = ("train", "val", "reserve")
TRIPLET_FIELDS = ("image_id", "question", "answer_score", "answer_text", "dimension", "split", "augmented")
_REQUIRED = ("image_id", "question", "answer_text", "dimension")

RATING_HEADER = ("respondent_id", "image_id", "dimension", "score", "skipped")
COMMUNITY_HEADER = ("community_id", "price_per_sqm", "lat", "lon")


@dataclass(frozen=True)
class QATriplet:
    image_id: str
    question: str
    answer_score: float | None
    answer_text: str
    dimension: str
    split: str = "train"
    augmented: bool = False

    def to_json(self) -> str:
        d = {k: getattr(self, k) for k in TRIPLET_FIELDS}
        return json.dumps(d, ensure_ascii=False, sort_keys=False)

    def replace(self, **kw) -> "QATriplet":
        d = {k: getattr(self, k) for k in TRIPLET_FIELDS}
        d.update(kw)
        return QATriplet(**d)


def _number(value: Any, name: str) -> float:
    if isinstance(value, bool):
        raise ValidationError(f"{name} must be a number, got a boolean", field=name)
    if isinstance(value, (int, float)):
        x = float(value)
    elif isinstance(value, str):
        try:
            x = float(value.strip())
        except ValueError:
            raise ValidationError(f"{name} is not numeric: {value!r}", field=name) from None
    else:
        raise ValidationError(f"{name} must be a number, got {type(value).__name__}", field=name)
    if not math.isfinite(x):
        raise ValidationError(f"{name} is not finite", field=name)
    return x


def parse_triplet(record: str | dict, registry: DimensionRegistry | None = None,
                  strict: bool = True) -> QATriplet:
    """Validate one triplet from JSON text (or an already-decoded dict).

    Unknown fields raise in strict mode and are logged and dropped otherwise.
    Numeric strings are accepted for ``answer_score``.
    """
    registry = registry or DimensionRegistry.default()
    if isinstance(record, str):
        try:
            data = json.loads(record)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"malformed JSON: {exc.msg}") from None
    else:
        data = dict(record)
    if not isinstance(data, dict):
        raise ValidationError("triplet must be a JSON object")

    extra = sorted(set(data) - set(TRIPLET_FIELDS))
    if extra:
        if strict:
            raise ValidationError(f"unknown field(s) {extra}", field=extra[0])
        log.warning("ignoring unknown triplet field(s) %s", extra)

    for name in _REQUIRED:
        if name not in data or data[name] is None:
            raise ValidationError(f"missing required field {name!r}", field=name)
        if not isinstance(data[name], str):
            raise ValidationError(f"{name} must be a string", field=name)
    if not data["image_id"].strip():
        raise ValidationError("image_id is empty", field="image_id")

    dim = registry[data["dimension"]]
    score = data.get("answer_score")
    if score is None:
        if dim.scored:
            raise ValidationError(f"answer_score required for scored dimension {dim.name!r}",
                                  field="answer_score")
    else:
        score = _number(score, "answer_score")
        if not dim.contains(score):
            raise RangeError(f"answer_score {score} outside [{dim.lo:g}, {dim.hi:g}] for {dim.name}",
                             field="answer_score")

    split = data.get("split", "train")
    if split not in SPLITS:
        raise ValidationError(f"split must be one of {SPLITS}, got {split!r}", field="split")
    augmented = data.get("augmented", False)
    if not isinstance(augmented, bool):
        raise ValidationError("augmented must be a boolean", field="augmented")
    return QATriplet(data["image_id"], data["question"], score, data["answer_text"],
                     dim.name, split, augmented)


def read_triplets(path: str | Path, registry: DimensionRegistry | None = None,
                  strict: bool = True) -> tuple[list[QATriplet], list[tuple[int, str]]]:
    """Parse a JSON-lines file. Returns (triplets, [(line number, error)])."""
    out, errors = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(parse_triplet(line, registry, strict))
            except ValidationError as exc:
                errors.append((lineno, str(exc)))
    return out, errors


def write_jsonl(path: str | Path, rows: Iterable[str | dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(row if isinstance(row, str) else json.dumps(row, ensure_ascii=False))
            fh.write("\n")


def read_jsonl(path: str | Path) -> Iterator[dict]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                yield json.loads(line)


# --- images -----------------------------------------------------------------

def encode_pixels(pixels: np.ndarray) -> str:
    q = np.rint(np.clip(pixels, 0.0, 1.0) * 255.0).astype(np.uint8)
    return base64.b64encode(q.tobytes()).decode("ascii")


def decode_pixels(blob: str, shape: tuple[int, int]) -> np.ndarray:
    raw = np.frombuffer(base64.b64decode(blob), dtype=np.uint8)
    return raw.reshape(shape).astype(np.float64) / 255.0


@dataclass
class ImageRecord:
    """One rendered scene with its geotag, community and planted attributes."""

    image_id: str
    pixels: np.ndarray
    lat: float
    lon: float
    capture_time: str
    community_id: str
    price_per_sqm: float
    tier: int
    objective_features: dict[str, float]
    attributes: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not -90.0 <= self.lat <= 90.0 or not -180.0 <= self.lon <= 180.0:
            raise ValidationError(f"{self.image_id}: invalid coordinates", field="lat")
        if not 0 <= self.tier <= 4:
            raise ValidationError(f"{self.image_id}: tier {self.tier} outside 0-4", field="tier")

    def to_dict(self) -> dict:
        return {
            "image_id": self.image_id,
            "shape": list(self.pixels.shape),
            "pixels": encode_pixels(self.pixels),
            "lat": self.lat,
            "lon": self.lon,
            "capture_time": self.capture_time,
            "community_id": self.community_id,
            "price_per_sqm": self.price_per_sqm,
            "tier": self.tier,
            "objective_features": self.objective_features,
            "attributes": self.attributes,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ImageRecord":
        return cls(d["image_id"], decode_pixels(d["pixels"], tuple(d["shape"])), float(d["lat"]),
                   float(d["lon"]), d["capture_time"], d["community_id"], float(d["price_per_sqm"]),
                   int(d["tier"]), {k: float(v) for k, v in d["objective_features"].items()},
                   d.get("attributes", {}))


def read_images(path: str | Path) -> list[ImageRecord]:
    return [ImageRecord.from_dict(d) for d in read_jsonl(path)]


def write_images(path: str | Path, images: Iterable[ImageRecord]) -> None:
    write_jsonl(path, (img.to_dict() for img in images))


# --- ratings and communities --------------------------------------------------

@dataclass(frozen=True)
class RatingRecord:
    respondent_id: str
    image_id: str
    dimension: str
    score: float | None
    skipped: bool = False

    def __post_init__(self):
        if not self.skipped and (self.score is None or not 1 <= self.score <= 5):
            raise RangeError(f"rating {self.score!r} outside the 1-5 Likert scale", field="score")


def _csv_text(rows: list[list], header: tuple[str, ...]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _read_csv(path: str | Path, header: tuple[str, ...]) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != header:
            raise InputError(f"{path}: expected header {','.join(header)}")
        return list(reader)


def write_ratings(path: str | Path, ratings: Iterable[RatingRecord]) -> None:
    rows = [[r.respondent_id, r.image_id, r.dimension, "" if r.score is None else format(r.score, ".12g"),
             int(r.skipped)] for r in ratings]
    Path(path).write_text(_csv_text(rows, RATING_HEADER), encoding="utf-8")


def read_ratings(path: str | Path) -> list[RatingRecord]:
    out = []
    for row in _read_csv(path, RATING_HEADER):
        skipped = row["skipped"].strip().lower() in ("1", "true", "yes")
        score = None if row["score"].strip() == "" else float(row["score"])
        out.append(RatingRecord(row["respondent_id"], row["image_id"], row["dimension"], score, skipped))
    return out


def write_communities(path: str | Path, rows: Iterable[tuple[str, float, float, float]]) -> None:
    Path(path).write_text(_csv_text([list(r) for r in rows], COMMUNITY_HEADER), encoding="utf-8")


def read_communities(path: str | Path) -> list[tuple[str, float, float, float]]:
    return [(r["community_id"], float(r["price_per_sqm"]), float(r["lat"]), float(r["lon"]))
            for r in _read_csv(path, COMMUNITY_HEADER)]
