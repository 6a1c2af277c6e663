"""Run configuration: one YAML or JSON tree, strict keys, paths relative to the file."""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import yaml

from ..curation.registry import DimensionRegistry
from ..errors import ConfigError, ContractError, InputError
from ..model.config import AdapterConfig
from ..synth import CorpusConfig, EffectModel

REPORT_DIR_ENV = "MSEF_REPORT_DIR"


def _strict(cls, block: Any, where: str):
    if block is None:
        return cls()
    if not isinstance(block, dict):
        raise ConfigError(f"{where}: expected a mapping")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(block) - known)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")
    kw = {k: tuple(v) if isinstance(v, list) else v for k, v in block.items()}
    try:
        return cls(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


@dataclass(frozen=True)
class Paths:
    corpus: str = "corpus"
    curated: str = "curated"
    train: str = "train"
    predictions: str = "predictions"
    report: str = "report"


@dataclass(frozen=True)
class CurationConfig:
    hamming_max: int = 10
    geo_max_m: float = 5.0
    tau: float = 0.2
    fraction: float = 0.1
    val_fraction: float = 0.2
    strict: bool = True
    names: tuple[str, ...] = ()
    target_share: float = 0.8
    tiering: str = "quintile"

    def __post_init__(self):
        if self.tiering not in ("quintile", "fixed"):
            raise ValueError("tiering must be 'quintile' or 'fixed'")
        if not 0 < self.val_fraction < 1:
            raise ValueError("val_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 2
    lr: float = 0.01
    batch_size: int = 4
    steps_per_epoch: int | None = None
    limit: int | None = None
    refresh_images: int = 8
    resume: bool = True

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be at least 1")
        if self.lr < 0:
            raise ValueError("lr must be non-negative")


@dataclass(frozen=True)
class EvalConfig:
    k: int = 3
    split: str = "val"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")


@dataclass(frozen=True)
class ReportConfig:
    figures: bool = True
    csv: bool = True
    min_n: int = 3


TOP_LEVEL = ("seed", "paths", "model", "corpus", "effects", "curation", "train", "evaluate", "report")


def default_model(registry: DimensionRegistry | None = None) -> AdapterConfig:
    reg = registry or DimensionRegistry.default()
    ranges = reg.ranges()
    return AdapterConfig(score_dims=tuple(ranges), score_ranges=ranges)


@dataclass(frozen=True)
class RunConfig:
    base_dir: Path
    seed: int = 0
    paths: Paths = field(default_factory=Paths)
    model: AdapterConfig = field(default_factory=default_model)
    corpus: CorpusConfig = field(default_factory=CorpusConfig)
    effects: EffectModel = field(default_factory=EffectModel)
    curation: CurationConfig = field(default_factory=CurationConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    evaluate: EvalConfig = field(default_factory=EvalConfig)
    report: ReportConfig = field(default_factory=ReportConfig)

    def path(self, name: str) -> Path:
        if name == "report" and os.environ.get(REPORT_DIR_ENV):
            return Path(os.environ[REPORT_DIR_ENV]).resolve()
        p = Path(getattr(self.paths, name))
        return p if p.is_absolute() else (self.base_dir / p).resolve()

    def with_seed(self, seed: int | None) -> "RunConfig":
        return self if seed is None else replace(self, seed=seed)

    def with_path(self, name: str, value: str | os.PathLike | None) -> "RunConfig":
        if value is None:
            return self
        return replace(self, paths=replace(self.paths, **{name: str(Path(value).resolve())}))


def parse_config(doc: Any, base_dir: str | os.PathLike = ".") -> RunConfig:
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a mapping")
    unknown = sorted(set(doc) - set(TOP_LEVEL))
    if unknown:
        raise ConfigError(f"unknown top-level keys {unknown}")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError("seed must be an integer")

    model_block = dict(doc.get("model") or {})
    try:
        defaults = default_model().to_dict()
        model = AdapterConfig.from_dict({**{k: defaults[k] for k in ("score_dims", "score_ranges")},
                                         **model_block})
        corpus = CorpusConfig.from_dict(doc.get("corpus") or {})
        effects = EffectModel.from_dict(doc.get("effects") or {})
    except (ContractError, InputError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc

    return RunConfig(
        base_dir=Path(base_dir).resolve(),
        seed=seed,
        paths=_strict(Paths, doc.get("paths"), "paths"),
        model=model,
        corpus=corpus,
        effects=effects,
        curation=_strict(CurationConfig, doc.get("curation"), "curation"),
        train=_strict(TrainConfig, doc.get("train"), "train"),
        evaluate=_strict(EvalConfig, doc.get("evaluate"), "evaluate"),
        report=_strict(ReportConfig, doc.get("report"), "report"),
    )


def load_config(path: str | os.PathLike) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(doc, path.parent)
