"""Pipeline stages. Each reads the previous stage's files and writes its own."""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
import sys
from pathlib import Path
from typing import Any, Callable, TextIO

import numpy as np

from .. import synth
from ..curation import (
    OBJECTIVE,
    SUBJECTIVE,
    DimensionRegistry,
    QATriplet,
    aggregate,
    balance_dimensions,
    curriculum_refresh,
    dedup,
    normalize_all,
    quintile_bin,
    read_communities,
    read_images,
    read_ratings,
    read_triplets,
    scrub_pii,
    stratified_split,
    write_communities,
    write_images,
    write_jsonl,
    write_ratings,
)
from ..curation.records import parse_triplet, read_jsonl
from ..curation.strata import FIXED_THRESHOLDS
from ..errors import ConfigError, ContractError, InputError, NumericError, SingularityError, ValidationError
from ..model import Example, MSEFModel, load_checkpoint, save_checkpoint, train_step
from ..stats import (
    ConfusionCounts,
    EvalReport,
    agreement_rate,
    bland_altman,
    corr_matrix,
    distribution_summary,
    ols_fit,
    out_of_range_rate,
    poly_fit_r2,
    precision_recall_f1,
    shapiro_wilk,
    tertile_recode,
    validate_report,
)
from ..synth import file_sha256
from ..tensor import make_rng
from . import figures
from .config import RunConfig

CORPUS_INPUTS = ("images.jsonl", "ratings.csv", "communities.csv", "triplets.jsonl")
CHECKPOINT = "checkpoint.json"
PREDICTIONS = "predictions.jsonl"
REPORT = "report.json"
TERTILE_NAMES = ("low", "medium", "high")
SW_MAX_N = 5000


def _say(stream: TextIO | None, msg: str) -> None:
    print(msg, file=stream or sys.stdout)


def _out_dir(path: Path, create: bool) -> Path:
    if not path.exists():
        if not create:
            raise ConfigError(f"output directory does not exist: {path} (pass --create)")
        path.mkdir(parents=True)
    elif not path.is_dir():
        raise ConfigError(f"output path is not a directory: {path}")
    return path


def _require(folder: Path, names: tuple[str, ...], what: str) -> None:
    missing = [n for n in names if not (folder / n).is_file()]
    if missing:
        raise ConfigError(f"missing {what} input(s) in {folder}: {', '.join(missing)}")


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _question(dim: str) -> str:
    if dim in synth.DIM_WORDS:
        return synth.question_for(dim)
    return f"how is the {dim.replace('_', ' ')} of this street"


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------

def cmd_generate(cfg: RunConfig, create: bool = False, stream: TextIO | None = None) -> dict:
    out = _out_dir(cfg.path("corpus"), create)
    corpus = synth.gen_corpus(cfg.corpus, cfg.effects, cfg.seed)
    hashes = synth.write_corpus(corpus, out)
    counts = corpus.manifest["counts"]
    _say(stream, "generated " + ", ".join(f"{k}={v}" for k, v in counts.items()))
    _say(stream, f"manifest sha256 {hashes['manifest.json']}")
    return {"counts": counts, "hashes": hashes, "dir": str(out)}


# ---------------------------------------------------------------------------
# curate
# ---------------------------------------------------------------------------

def _write_audit(folder: Path, stage: str, rows: list[dict]) -> None:
    write_jsonl(folder / f"{stage}.jsonl", rows)


def cmd_curate(cfg: RunConfig, create: bool = False, stream: TextIO | None = None) -> dict:
    src = cfg.path("corpus")
    _require(src, CORPUS_INPUTS, "corpus")
    out = _out_dir(cfg.path("curated"), create)
    audit = out / "audit"
    audit.mkdir(exist_ok=True)
    cc = cfg.curation
    registry = DimensionRegistry.default()
    summary: dict[str, Any] = {}

    # validate
    triplets, errors = read_triplets(src / "triplets.jsonl", registry, strict=cc.strict)
    images = read_images(src / "images.jsonl")
    try:
        ratings = read_ratings(src / "ratings.csv")
    except ValidationError as exc:
        errors.append((0, f"ratings.csv: {exc}"))
        ratings = []
    known = {im.image_id for im in images}
    for k, t in enumerate(triplets):
        if t.image_id not in known:
            errors.append((0, f"triplet {k}: unknown image {t.image_id}"))
    _write_audit(audit, "validate", [{"line": ln, "error": msg} for ln, msg in errors])
    if errors:
        listing = "; ".join(f"line {ln}: {msg}" if ln else msg for ln, msg in errors[:20])
        raise ValidationError(f"{len(errors)} invalid record(s): {listing}")
    summary["validate"] = {"triplets": len(triplets), "images": len(images), "ratings": len(ratings)}

    # scrub
    scrub_log, redactions = [], 0
    clean = []
    for t in triplets:
        q, nq = scrub_pii(t.question, cc.names)
        a, na = scrub_pii(t.answer_text, cc.names)
        if nq or na:
            scrub_log.append({"image_id": t.image_id, "dimension": t.dimension, "question": nq, "answer": na})
            redactions += nq + na
            t = t.replace(question=q, answer_text=a)
        clean.append(t)
    _write_audit(audit, "scrub", scrub_log)
    summary["scrub"] = {"redactions": redactions}

    # dedup
    kept, dup_log = dedup(images, cc.hamming_max, cc.geo_max_m)
    removed = {p.removed for p in dup_log}
    clean = [t for t in clean if t.image_id not in removed]
    ratings = [r for r in ratings if r.image_id not in removed]
    _write_audit(audit, "dedup", [p.to_dict() for p in dup_log])
    summary["dedup"] = {"removed": len(removed), "kept": len(kept)}

    # normalize
    normed, flagged = normalize_all(ratings)
    means = aggregate(normed)
    rescored = []
    for t in clean:
        key = (t.image_id, t.dimension)
        if t.dimension in SUBJECTIVE and key in means:
            t = t.replace(answer_score=round(means[key], 6))
        rescored.append(t)
    resp = sorted({r.respondent_id for r in normed})
    _write_audit(audit, "normalize", [{"respondent_id": r, "normalized": r not in flagged} for r in resp])
    summary["normalize"] = {"respondents": len(resp), "passed_through": len(flagged)}

    # balance
    balanced, report = balance_dimensions(rescored, SUBJECTIVE, seed=cfg.seed, target_share=cc.target_share)
    _write_audit(audit, "balance", [{"dimension": d, **r.to_dict()} for d, r in report.dims.items()])
    summary["balance"] = {"added": len(balanced) - len(rescored), "flagged": report.flagged}

    # split
    communities = read_communities(src / "communities.csv")
    ids = [c[0] for c in communities]
    prices = [c[1] for c in communities]
    tiers = quintile_bin(prices, ids, FIXED_THRESHOLDS if cc.tiering == "fixed" else None)
    tier_of = dict(zip(ids, tiers.tiers))
    split = stratified_split(tier_of, cc.val_fraction, cfg.seed)
    community = {im.image_id: im.community_id for im in kept}
    final = [t.replace(split="val") if t.split == "train" and community[t.image_id] in split.val else t
             for t in balanced]
    split_doc = {
        "tiers": tier_of,
        "thresholds": list(tiers.thresholds),
        "train": sorted(split.train),
        "val": sorted(split.val),
        "warnings": list(split.warnings),
    }
    _write_audit(audit, "split", [{"community_id": c, "tier": tier_of[c], "split": "val" if c in split.val
                                   else "train"} for c in sorted(ids)])
    summary["split"] = {"train_communities": len(split.train), "val_communities": len(split.val),
                        "warnings": list(split.warnings)}

    write_images(out / "images.jsonl", kept)
    write_ratings(out / "ratings.csv", normed)
    write_communities(out / "communities.csv", communities)
    write_jsonl(out / "triplets.jsonl", (t.to_json() for t in final))
    (out / "split.json").write_text(json.dumps(split_doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    for stage, info in summary.items():
        _say(stream, f"{stage}: " + ", ".join(f"{k}={v}" for k, v in info.items()))
    return summary


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------

def _load_curated(folder: Path) -> tuple[list[QATriplet], dict[str, Any]]:
    _require(folder, ("images.jsonl", "triplets.jsonl", "split.json"), "curated")
    triplets, errors = read_triplets(folder / "triplets.jsonl")
    if errors:
        ln, msg = errors[0]
        raise ValidationError(f"curated triplets line {ln}: {msg}")
    images = {im.image_id: im for im in read_images(folder / "images.jsonl")}
    return triplets, images


def _triplet_rows(ts: list[QATriplet]) -> list[str]:
    return [t.to_json() for t in ts]


def _from_rows(rows: list[str]) -> list[QATriplet]:
    return [parse_triplet(r) for r in rows]


def cmd_train(cfg: RunConfig, create: bool = False, stream: TextIO | None = None) -> dict:
    triplets, images = _load_curated(cfg.path("curated"))
    out = _out_dir(cfg.path("train"), create)
    tc = cfg.train
    active = [t for t in triplets if t.split == "train"]
    if tc.limit is not None:
        active = active[: tc.limit]
    if not active:
        raise InputError("no training triplets in the curated corpus")
    in_train = {t.image_id for t in active}
    reserve = [t for t in triplets if t.split == "reserve" and t.image_id in in_train]

    ckpt = out / CHECKPOINT
    history: list[dict] = []
    steps_log: list[list] = []
    start = 0
    if tc.resume and ckpt.is_file():
        model, state, extra = load_checkpoint(ckpt)
        if model.cfg != cfg.model:
            raise ConfigError(f"{ckpt} was trained with a different model config")
        opt = model.make_optimizer(tc.lr)
        if state is not None:
            opt.state = state
        start = int(extra.get("epoch", 0))
        active = _from_rows(extra["active"])
        reserve = _from_rows(extra["reserve"])
        history = list(extra.get("history", []))
        steps_log = [list(r) for r in extra.get("steps", [])]
        _say(stream, f"resuming from epoch {start}, step {opt.state.step}")
    else:
        model = MSEFModel(cfg.model)
        opt = model.make_optimizer(tc.lr)

    before = model.frozen_hash()
    _say(stream, f"frozen sha256 before {before}")
    curriculum_log: list[dict] = []

    for epoch in range(start, tc.epochs):
        # curriculum refresh between epochs, done on entry so a resumed run matches
        promotions = periodic = 0
        if epoch > 0:
            gens = _generations(model, active, images, cfg, epoch)
            res = curriculum_refresh(gens, active, reserve, cfg.curation.tau, cfg.curation.fraction,
                                     seed=cfg.seed, epoch=epoch)
            active, reserve = res.active, res.reserve
            promotions, periodic = res.promotions, res.periodic
            curriculum_log.extend(res.log)

        n = len(active)
        steps = tc.steps_per_epoch or math.ceil(n / tc.batch_size)
        order = make_rng(cfg.seed, 41, epoch).permutation(n)
        losses = []
        for s in range(steps):
            idx = [int(order[(s * tc.batch_size + b) % n]) for b in range(min(tc.batch_size, n))]
            batch = [Example.from_triplet(active[i], images[active[i].image_id].pixels) for i in idx]
            try:
                loss = train_step(batch, model, opt)
            except NumericError as exc:
                raise NumericError(f"epoch {epoch} step {s}: {exc}") from exc
            losses.append(loss)
            steps_log.append([epoch, opt.state.step, loss])

        history.append({"epoch": epoch, "steps": steps, "mean_loss": float(np.mean(losses)),
                        "first_loss": losses[0], "last_loss": losses[-1],
                        "promotions": promotions, "periodic": periodic})
        save_checkpoint(ckpt, model, opt, extra={
            "epoch": epoch + 1, "active": _triplet_rows(active), "reserve": _triplet_rows(reserve),
            "history": history, "steps": steps_log,
        })
        _say(stream, f"epoch {epoch}: mean loss {history[-1]['mean_loss']:.6f} over {steps} steps, "
                     f"{promotions} promotions, {periodic} periodic swaps")

    after = model.frozen_hash()
    _say(stream, f"frozen sha256 after  {after}")
    if after != before:
        raise ContractError("frozen parameters changed during training")

    _write_csv(out / "epochs.csv", ["epoch", "steps", "mean_loss", "first_loss", "last_loss", "promotions",
                                     "periodic"], [[h[k] for k in ("epoch", "steps", "mean_loss", "first_loss",
                                                                   "last_loss", "promotions", "periodic")]
                                                   for h in history])
    _write_csv(out / "losses.csv", ["epoch", "step", "loss"], steps_log)
    with open(out / "curriculum.jsonl", "a" if start else "w", encoding="utf-8") as fh:
        for row in curriculum_log:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    return {"history": history, "frozen_hash": after, "steps": [r[2] for r in steps_log],
            "checkpoint": str(ckpt)}


def _generations(model: MSEFModel, active: list[QATriplet], images: dict, cfg: RunConfig,
                 epoch: int) -> dict[str, str]:
    first: dict[str, QATriplet] = {}
    for t in active:
        first.setdefault(t.image_id, t)
    ids = sorted(first)
    k = min(cfg.train.refresh_images, len(ids))
    picks = sorted(ids[i] for i in make_rng(cfg.seed, 43, epoch).permutation(len(ids))[:k])
    return {i: model.forward(images[i].pixels, first[i].question).rationale_text for i in picks}


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    path.write_text(buf.getvalue(), encoding="utf-8")


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------

def cmd_evaluate(cfg: RunConfig, create: bool = False, stream: TextIO | None = None) -> dict:
    ckpt = cfg.path("train") / CHECKPOINT
    if not ckpt.is_file():
        raise ConfigError(f"missing checkpoint: {ckpt}")
    triplets, images = _load_curated(cfg.path("curated"))
    out = _out_dir(cfg.path("predictions"), create)
    model, _, _ = load_checkpoint(ckpt)
    wanted = cfg.evaluate.split
    ids = sorted({t.image_id for t in triplets if t.split == wanted})
    if not ids:
        raise InputError(f"the {wanted!r} split is empty; nothing to evaluate")

    dims = model.cfg.score_dims
    rows = []
    for image_id in ids:
        px = images[image_id].pixels
        rationale = model.forward(px, _question(dims[0]))
        for dim in dims:
            q = _question(dim)
            reps = [model.forward(px, q, decode=False).scores[dim] for _ in range(cfg.evaluate.k)]
            rows.append({
                "image_id": image_id,
                "dimension": dim,
                "score": math.fsum(reps) / len(reps),
                "variance": statistics.pvariance(reps),
                "repetitions": len(reps),
                "rationale": rationale.rationale_text,
                "rationale_tokens": rationale.rationale_tokens,
            })
    write_jsonl(out / PREDICTIONS, rows)
    _say(stream, f"predicted {len(ids)} images x {len(dims)} dimensions = {len(rows)} rows")
    return {"rows": len(rows), "images": len(ids), "path": str(out / PREDICTIONS)}


# ---------------------------------------------------------------------------
# audit
# ---------------------------------------------------------------------------

def _guard(report: EvalReport, name: str, fn: Callable[[], Any]) -> Any:
    """Run one statistic; record an omission instead of failing the report."""
    try:
        return fn()
    except (InputError, SingularityError, ContractError) as exc:
        report.omit(name, str(exc))
        return None


def cmd_audit(cfg: RunConfig, create: bool = False, stream: TextIO | None = None) -> dict:
    curated = cfg.path("curated")
    if (curated / "images.jsonl").is_file():
        truth_dir, stage = curated, "curated"
    else:
        truth_dir, stage = cfg.path("corpus"), "corpus"
    _require(truth_dir, ("images.jsonl", "ratings.csv"), "ground-truth")
    pred_path = cfg.path("predictions") / PREDICTIONS
    out = _out_dir(cfg.path("report"), create)
    min_n = max(3, cfg.report.min_n)

    inputs = {f"{stage}/images.jsonl": file_sha256(truth_dir / "images.jsonl"),
              f"{stage}/ratings.csv": file_sha256(truth_dir / "ratings.csv")}
    images = sorted(read_images(truth_dir / "images.jsonl"), key=lambda im: im.image_id)
    human = aggregate(read_ratings(truth_dir / "ratings.csv"))
    preds: dict[tuple[str, str], float] = {}
    if pred_path.is_file():
        inputs[f"predictions/{PREDICTIONS}"] = file_sha256(pred_path)
        for row in read_jsonl(pred_path):
            preds[(row["image_id"], row["dimension"])] = float(row["score"])

    report = EvalReport(seed=cfg.seed, inputs=inputs)
    pred_ids = sorted({k[0] for k in preds})
    report.counts = {"images": len(images), "rated_pairs": len(human), "predictions": len(preds),
                     "predicted_images": len(pred_ids)}
    by_id = {im.image_id: im for im in images}
    sat = np.array([im.attributes["satisfaction"] for im in images], dtype=float)
    X = np.array([[im.objective_features[f] for f in synth.LINEAR] for im in images], dtype=float)
    conn = np.array([im.objective_features["connectivity"] for im in images], dtype=float)
    figs: dict[str, str] = {}

    # regression on the planted satisfaction
    if len(images) >= len(synth.LINEAR) + 2:
        fit = _guard(report, "ols/satisfaction", lambda: ols_fit(X, sat, names=list(synth.LINEAR)))
        if fit is not None:
            report.ols["satisfaction"] = fit.to_dict()
            _normality(report, "ols_residuals", fit.residuals)
    else:
        report.omit("ols/satisfaction", f"need at least {len(synth.LINEAR) + 2} images, have {len(images)}")

    if len(images) >= min_n:
        for deg, key in ((2, "satisfaction~connectivity"), (1, "satisfaction~connectivity_linear")):
            pf = _guard(report, f"polynomial/{key}", lambda d=deg: poly_fit_r2(conn, sat, d))
            if pf is not None:
                report.polynomial[key] = pf.to_dict()
                if deg == 2:
                    figs["connectivity_fit.svg"] = figures.scatter_fit_svg(
                        conn, sat, pf.coefficients, "satisfaction vs connectivity", "connectivity", "satisfaction")
        cols = {f: X[:, k] for k, f in enumerate(synth.LINEAR)}
        cols["connectivity"] = conn
        cols["satisfaction"] = sat
        for method in ("pearson", "spearman"):
            cm = _guard(report, f"correlations/{method}", lambda m=method: corr_matrix(cols, m))
            if cm is not None:
                report.correlations[method] = cm.to_dict()
                if method == "pearson":
                    figs["correlation_heatmap.svg"] = figures.heatmap_svg(cm.names, cm.values,
                                                                          "pearson correlations")
        report.distributions["satisfaction"] = distribution_summary(sat.tolist())
        figs["satisfaction_hist.svg"] = figures.histogram_svg(sat, "planted satisfaction", xlabel="score")
        _normality(report, "satisfaction", sat)
    else:
        for name in ("polynomial", "correlations", "distributions/satisfaction"):
            report.omit(name, f"need at least {min_n} images, have {len(images)}")

    for dim in SUBJECTIVE:
        vals = [v for (i, d), v in human.items() if d == dim]
        if len(vals) >= min_n:
            report.distributions[f"human/{dim}"] = distribution_summary(vals)

    if not preds:
        for name in ("f1", "agreement", "bland_altman", "out_of_range", "ols/predicted"):
            report.omit(name, "no predictions file")
    else:
        _model_stats(report, preds, pred_ids, by_id, human, min_n, figs)

    doc = report.to_dict()
    validate_report(doc)
    text = report.to_json()
    (out / REPORT).write_text(text, encoding="utf-8")
    if cfg.report.csv:
        for name, table in report.ols.items():
            _write_csv(out / f"ols_{name}.csv", ["term", "beta", "se", "t", "p", "ci_low", "ci_high"],
                       [[r["term"], r["beta"], r["se"], r["t"], r["p"], r["ci_low"], r["ci_high"]]
                        for r in doc["ols"][name]["terms"]])
    if cfg.report.figures:
        for name, svg in figs.items():
            (out / name).write_text(svg, encoding="utf-8")
    digest = file_sha256(out / REPORT)
    _say(stream, f"report {out / REPORT} sha256 {digest}; omitted {len(report.omitted)} statistic(s)")
    return {"report": doc, "path": str(out / REPORT), "sha256": digest}


def _normality(report: EvalReport, name: str, values: np.ndarray) -> None:
    n = len(values)
    if not 3 <= n <= SW_MAX_N:
        report.omit(f"normality/{name}", f"Shapiro-Wilk needs 3 <= n <= {SW_MAX_N}, have {n}")
        return
    res = _guard(report, f"normality/{name}", lambda: shapiro_wilk(list(values)))
    if res is not None:
        report.normality[name] = {"w": res[0], "p": res[1], "n": n}


def _model_stats(report: EvalReport, preds: dict, ids: list[str], by_id: dict, human: dict, min_n: int,
                 figs: dict[str, str]) -> None:
    missing = [i for i in ids if i not in by_id]
    if missing:
        raise InputError(f"predictions reference unknown images: {', '.join(missing[:5])}")

    # tertile F1 over objective dimensions, pooled
    truth_lab, pred_lab = [], []
    for dim in OBJECTIVE:
        pairs = [(_truth_feature(by_id[i], dim), preds[(i, dim)]) for i in ids if (i, dim) in preds]
        if len(pairs) < min_n:
            continue
        truth_lab += tertile_recode([p[0] for p in pairs]).labels
        pred_lab += tertile_recode([p[1] for p in pairs]).labels
    if truth_lab:
        res = precision_recall_f1(ConfusionCounts.from_labels(truth_lab, pred_lab, classes=[0, 1, 2]))
        report.f1["macro"] = dict(zip(("precision", "recall", "f1"), res["macro"]))
        for k, (p, r, f) in res["per_class"].items():
            report.f1[TERTILE_NAMES[int(k)]] = {"precision": p, "recall": r, "f1": f}
    else:
        report.omit("f1", f"fewer than {min_n} predicted images per objective dimension")

    ba_plot = None
    all_pred, all_ranges = [], []
    for dim in SUBJECTIVE:
        pairs = [(preds[(i, dim)], human[(i, dim)]) for i in ids if (i, dim) in preds and (i, dim) in human]
        if not pairs:
            continue
        model_s = [p[0] for p in pairs]
        human_s = [p[1] for p in pairs]
        all_pred += model_s
        all_ranges += [(h - 1.0, h + 1.0) for h in human_s]
        report.agreement[dim] = {
            "exact": agreement_rate([_round_half_up(x) for x in model_s], [_round_half_up(x) for x in human_s]),
            "fuzzy": agreement_rate(model_s, human_s, "fuzzy", 1.0),
            "n": len(pairs),
        }
        if len(pairs) < 2:
            report.omit(f"bland_altman/{dim}", "need at least 2 paired scores")
            continue
        ba = bland_altman(model_s, human_s)
        report.bland_altman[dim] = ba.to_dict()
        if dim == "overall_satisfaction" or ba_plot is None:
            ba_plot = (dim, model_s, human_s, ba)
    if not report.agreement:
        report.omit("agreement", "no prediction has a matching human rating")
    if all_pred:
        rate, bad = out_of_range_rate(all_pred, all_ranges)
        report.out_of_range = {"rate": rate, "n": len(all_pred), "indices": bad}
    else:
        report.omit("out_of_range", "no prediction has a matching human rating")
    if ba_plot is not None:
        dim, m, h, ba = ba_plot
        figs["bland_altman.svg"] = figures.bland_altman_svg(
            [(a + b) / 2 for a, b in zip(m, h)], [a - b for a, b in zip(m, h)], ba.bias, ba.lower, ba.upper,
            f"Bland-Altman: {dim}")

    for dim in sorted({d for _, d in preds}):
        vals = [preds[(i, dim)] for i in ids if (i, dim) in preds]
        if len(vals) >= min_n:
            report.distributions[f"predicted/{dim}"] = distribution_summary(vals)

    target = "overall_satisfaction"
    rows = [i for i in ids if (i, target) in preds]
    if len(rows) >= len(synth.LINEAR) + 2:
        Xp = np.array([[by_id[i].objective_features[f] for f in synth.LINEAR] for i in rows])
        yp = np.array([preds[(i, target)] for i in rows])
        fit = _guard(report, "ols/predicted", lambda: ols_fit(Xp, yp, names=list(synth.LINEAR)))
        if fit is not None:
            report.ols["predicted"] = fit.to_dict()
    else:
        report.omit("ols/predicted", f"need at least {len(synth.LINEAR) + 2} predicted images, have {len(rows)}")


def _truth_feature(image, dim: str) -> float:
    src = synth.OBJECTIVE_SOURCE.get(dim, dim)
    if src in image.objective_features:
        return image.objective_features[src]
    return float(image.attributes[src])


COMMANDS = {
    "generate": (cmd_generate, "corpus"),
    "curate": (cmd_curate, "curated"),
    "train": (cmd_train, "train"),
    "evaluate": (cmd_evaluate, "predictions"),
    "audit": (cmd_audit, "report"),
}
