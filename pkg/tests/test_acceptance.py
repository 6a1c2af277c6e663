"""Acceptance suite. Each test carries a ``criterion`` mark; conftest prints one
PASS/FAIL line per criterion at the end of the run."""

import io
import json
import math
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest
import scipy.stats as ss
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import SW_VECTORS, oracle_sweep

from msef import synth
from msef.cli.commands import cmd_audit, cmd_curate, cmd_evaluate, cmd_generate, cmd_train
from msef.cli.config import default_model, parse_config
from msef.curation import (
    ImageRecord,
    QATriplet,
    curriculum_refresh,
    dedup,
    normalize_all,
    per_image_counts,
    phash,
    stratified_split,
)
from msef.curation.registry import SUBJECTIVE
from msef.model import (
    Example,
    LoraLayer,
    MSEFModel,
    PrefixBank,
    lora_apply,
    lora_merge,
    prefix_concat,
    train_step,
)
from msef.model.vocab import WORDS
from msef.stats import shapiro_wilk
from msef.tensor import Tensor, finite_diff_check

criterion = pytest.mark.criterion
QUIET = io.StringIO


def random_example(rng, cfg, size=32):
    dim = cfg.score_dims[int(rng.integers(len(cfg.score_dims)))]
    lo, hi = cfg.range_of(dim)
    score = float(rng.uniform(lo, hi))
    variant = int(rng.integers(3))
    return Example(rng.random((size, size)), synth.question_for(dim, variant), dim, score,
                   synth.rationale_for(dim, score, lo, hi, variant))


def run_config(tmp_path, doc):
    return parse_config(doc, tmp_path)


# -- 1 ------------------------------------------------------------------------

@criterion(1, "gradient check on every trainable tensor, 20 seeds, rel err <= 1e-4, < 60 s")
def test_gradient_correctness():
    start = time.perf_counter()
    worst = 0.0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        m = MSEFModel(replace(default_model(), seed=seed))
        for name in m.trainable:
            # zero-initialised LoRA B would hide errors in the A gradient
            if name.endswith(".B") or name.startswith("gate."):
                m.params[name].data[...] = rng.normal(0, 0.1, size=m.params[name].shape)
        ex = random_example(rng, m.cfg)
        for name in sorted(m.trainable):
            x = m.params[name]
            coords = rng.choice(x.size, size=min(4, x.size), replace=False)
            err = finite_diff_check(lambda _: m.batch_loss([ex]), x, coords=coords)
            assert err <= 1e-4, (seed, name, err)
            worst = max(worst, err)
    elapsed = time.perf_counter() - start
    print(f"worst relative error {worst:.2e} in {elapsed:.1f}s")
    assert elapsed < 60


# -- 2 ------------------------------------------------------------------------

@criterion(2, "LoRA apply and merge agree within 1e-10 over 200 configs; merged delta rank <= 8")
def test_lora_equivalence():
    rng = np.random.default_rng(2)
    for _ in range(200):
        d_in, d_out = (int(v) for v in rng.integers(9, 48, size=2))
        r = int(rng.integers(1, 9))
        layer = LoraLayer(Tensor(rng.normal(size=(d_in, d_out))),
                          Tensor(rng.normal(size=(d_in, r)), requires_grad=True),
                          Tensor(rng.normal(size=(r, d_out)), requires_grad=True))
        x = rng.normal(size=(int(rng.integers(1, 20)), d_in))
        applied = lora_apply(layer, Tensor(x)).data
        merged = x @ lora_merge(layer)
        assert np.max(np.abs(applied - merged)) <= 1e-10 * max(1.0, np.max(np.abs(merged)))
        delta = lora_merge(layer) - layer.W0.data
        assert np.linalg.matrix_rank(delta) <= min(r, 8)


# -- 3 ------------------------------------------------------------------------

@criterion(3, "frozen hash unchanged after 500 training steps; trainable fraction <= 10%")
def test_freeze_invariance():
    m = MSEFModel(default_model())
    trainable, total = m.parameter_counts()
    assert trainable / total <= 0.10
    before = m.frozen_hash()
    frozen = {n: m.params[n].data.copy() for n in m.frozen_names()}
    opt = m.make_optimizer(lr=0.01)
    rng = np.random.default_rng(3)
    pool = [random_example(rng, m.cfg) for _ in range(16)]
    for step in range(500):
        train_step([pool[step % len(pool)]], m, opt)
    assert m.frozen_hash() == before
    assert all(np.array_equal(frozen[n], m.params[n].data) for n in frozen)


# -- 4 ------------------------------------------------------------------------

@criterion(4, "prefix output length m+n and exact suffix recovery")
@settings(max_examples=200, deadline=None)
@given(st.integers(0, 32), st.integers(1, 64), st.integers(1, 16), st.integers(0, 2**32 - 1))
def test_prefix_contract(m, n, d, seed):
    rng = np.random.default_rng(seed)
    P, x = rng.normal(size=(m, d)), rng.normal(size=(n, d))
    out = prefix_concat(PrefixBank(Tensor(P)), Tensor(x)).data
    assert out.shape == (m + n, d)
    assert np.array_equal(out[m:], x) and np.array_equal(out[:m], P)


# -- 5 ------------------------------------------------------------------------

@criterion(5, "attention rows sum to 1 within 1e-9; Q-Former output 32 x d for 1-256 tokens")
def test_attention_rows_normalised():
    m = MSEFModel(default_model())
    rng = np.random.default_rng(5)
    p = m.cfg.patch_size
    words = list(WORDS)
    for _ in range(100):
        h, w = (p * int(k) for k in rng.integers(1, 13, size=2))
        q = " ".join(rng.choice(words, size=int(rng.integers(1, 10))))
        out = m.forward(rng.random((h, w)), q, decode=False)
        assert {"qformer", "vit.0"} <= set(out.attention_maps)
        for name, a in out.attention_maps.items():
            assert np.max(np.abs(a.sum(axis=-1) - 1.0)) <= 1e-9, name


@criterion(5, "attention rows sum to 1 within 1e-9; Q-Former output 32 x d for 1-256 tokens")
def test_qformer_fixed_output():
    m = MSEFModel(default_model())
    rng = np.random.default_rng(55)
    d = m.cfg.model_dim
    for n in range(1, 257):
        out, alpha = m.qformer_compress(Tensor(rng.normal(size=(n, d))))
        assert out.shape == (32, d)
        assert np.max(np.abs(alpha.sum(axis=-1) - 1.0)) <= 1e-9


# -- 6 ------------------------------------------------------------------------

@criterion(6, "single-triplet overfit drops loss below 10% in 200 steps, < 60 s")
def test_overfit_single_triplet():
    start = time.perf_counter()
    corpus = synth.gen_corpus(synth.CorpusConfig(n_communities=5, images_per_community=1, respondents=3),
                              seed=6)
    pixels = {im.image_id: im.pixels for im in corpus.images}
    t = next(t for t in corpus.triplets if t.split == "train")
    m = MSEFModel(default_model())
    opt = m.make_optimizer(lr=0.02)
    batch = [Example.from_triplet(t, pixels[t.image_id])]
    losses = [train_step(batch, m, opt) for _ in range(200)]
    elapsed = time.perf_counter() - start
    print(f"loss {losses[0]:.3f} -> {losses[-1]:.4f} in {elapsed:.1f}s")
    assert losses[-1] < 0.1 * losses[0]
    assert elapsed < 60


# -- 7 ------------------------------------------------------------------------

@criterion(7, "OLS on 10000 synthetic images recovers planted betas within 0.05, p < 0.001, < 120 s")
def test_planted_coefficients_recovered(tmp_path):
    start = time.perf_counter()
    cfg = run_config(tmp_path, {
        "seed": 7,
        "corpus": {"n_communities": 100, "images_per_community": 100, "triplets": False},
        "effects": {"noise_sd": 0.5},
        "report": {"figures": False},
    })
    cmd_generate(cfg, create=True, stream=QUIET())
    doc = cmd_audit(cfg, create=True, stream=QUIET())["report"]
    elapsed = time.perf_counter() - start
    fit = doc["ols"]["satisfaction"]
    assert fit["n"] == 10000
    terms = {r["term"]: r for r in fit["terms"]}
    for name, beta in synth.PLANTED_BETAS.items():
        assert abs(terms[name]["beta"] - beta) <= 0.05, (name, terms[name]["beta"], beta)
        assert terms[name]["p"] < 0.001, name
    print(f"max |beta error| {max(abs(terms[k]['beta'] - b) for k, b in synth.PLANTED_BETAS.items()):.4f}"
          f" in {elapsed:.1f}s")
    assert elapsed < 120


# -- 8 ------------------------------------------------------------------------

@criterion(8, "quadratic fit vertex within 5 +/- 0.5 and R2 gain over linear >= 0.1")
def test_inverted_u(tmp_path):
    corpus_cfg, effects, oracle_r2 = synth.inverted_u_preset(0.49)
    cfg = run_config(tmp_path, {
        "seed": 8,
        "corpus": {**corpus_cfg.to_dict(), "triplets": False},
        "effects": effects.to_dict(),
        "report": {"figures": False},
    })
    cmd_generate(cfg, create=True, stream=QUIET())
    poly = cmd_audit(cfg, create=True, stream=QUIET())["report"]["polynomial"]
    quad, lin = poly["satisfaction~connectivity"], poly["satisfaction~connectivity_linear"]
    print(f"vertex {quad['vertex']:.3f}, R2 {quad['r2']:.3f} vs linear {lin['r2']:.3f} (target {oracle_r2:.2f})")
    assert abs(quad["vertex"] - 5.0) <= 0.5
    assert quad["r2"] - lin["r2"] >= 0.1


# -- 9 ------------------------------------------------------------------------

@criterion(9, "statistics match brute-force oracles within 1e-8; Shapiro-Wilk within 1e-3")
def test_statistics_oracles():
    worst = oracle_sweep(1000, seed=9)
    print({k: f"{v:.1e}" for k, v in worst.items()})
    assert all(v <= 1e-8 for v in worst.values()), worst


@criterion(9, "statistics match brute-force oracles within 1e-8; Shapiro-Wilk within 1e-3")
def test_shapiro_wilk_reference():
    rng = np.random.default_rng(99)
    vectors = list(SW_VECTORS) + [rng.normal(size=n).tolist() for n in (3, 12, 50, 400)]
    vectors += [rng.exponential(size=n).tolist() for n in (8, 30, 1000)]
    for xs in vectors:
        w, p = shapiro_wilk(xs)
        ref = ss.shapiro(xs)
        assert abs(w - ref.statistic) <= 1e-3 and abs(p - ref.pvalue) <= 1e-3, len(xs)


# -- 10 -----------------------------------------------------------------------

M_PER_DEG = 111_195.0


def planted_duplicates(seed, n=500):
    """Grid of distinct scenes 50-70 m apart, then hash-near, geo-near and chained copies."""
    rng = np.random.default_rng(seed)
    lat = [45.0 + (i // 25) * 50 / M_PER_DEG for i in range(n)]
    lon = [126.0 + (i % 25) * 70 / M_PER_DEG for i in range(n)]
    px = [rng.random((32, 32)) for _ in range(n)]
    for k in range(0, 90, 3):
        px[k + 1] = np.clip(px[k] + rng.normal(0, 0.01, (32, 32)), 0, 1)
    for k in range(150, 240, 3):
        lat[k + 1] = lat[k] + rng.uniform(0.5, 4.5) / M_PER_DEG
        lon[k + 1] = lon[k]
    for k in range(300, 400, 4):
        px[k + 1] = px[k].copy()
        lat[k + 2], lon[k + 2] = lat[k + 1] + 3 / M_PER_DEG, lon[k + 1]
    order = rng.permutation(n)
    return [ImageRecord(f"r{i:04d}", px[i], lat[i], lon[i], f"2023-05-01T{i // 60 % 24:02d}:{i % 60:02d}:00",
                        "c0", 5000.0, 0, {}) for i in order]


def _ham(a, b):
    return bin(a ^ b).count("1")


def _meters(a, b):
    p1, p2 = math.radians(a.lat), math.radians(b.lat)
    dl = math.radians(b.lon - a.lon)
    h = math.sin((p2 - p1) / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2 * 6_371_008.8 * math.asin(math.sqrt(h))


def _components(recs):
    hs = [phash(r.pixels) for r in recs]
    seen, count = set(), 0
    for s in range(len(recs)):
        if s in seen:
            continue
        count += 1
        stack = [s]
        seen.add(s)
        while stack:
            i = stack.pop()
            for j in range(len(recs)):
                if j not in seen and (_ham(hs[i], hs[j]) <= 10 or _meters(recs[i], recs[j]) <= 5.0):
                    seen.add(j)
                    stack.append(j)
    return count


@criterion(10, "dedup sound and idempotent on planted duplicates; split per tier within 1 of 0.2 x count")
@pytest.mark.parametrize("seed", [10, 11])
def test_dedup_sound_idempotent(seed):
    recs = planted_duplicates(seed)
    kept, log = dedup(recs, hamming_max=10, geo_max_m=5.0)
    hs = {r.image_id: phash(r.pixels) for r in kept}
    for i, a in enumerate(kept):
        for b in kept[i + 1:]:
            assert _ham(hs[a.image_id], hs[b.image_id]) > 10 and _meters(a, b) > 5.0, (a.image_id, b.image_id)
    assert len(kept) == _components(recs)
    assert len(kept) + len(log) == len(recs) and len(log) >= 30 + 30 + 50
    again, log2 = dedup(kept)
    assert [r.image_id for r in again] == [r.image_id for r in kept] and log2 == []


@criterion(10, "dedup sound and idempotent on planted duplicates; split per tier within 1 of 0.2 x count")
@pytest.mark.parametrize("per_tier", [(5, 5, 5, 5, 5), (7, 9, 11, 13, 24), (1, 2, 3, 4, 100)])
def test_split_per_tier(per_tier):
    tiers = {f"c{t}_{i}": t for t, k in enumerate(per_tier) for i in range(k)}
    s = stratified_split(tiers, 0.2, seed=10)
    assert s.train | s.val == set(tiers) and not s.train & s.val
    for t, k in enumerate(per_tier):
        assert abs(sum(tiers[c] == t for c in s.val) - 0.2 * k) <= 1


# -- 11 -----------------------------------------------------------------------

@criterion(11, "Likert normalisation removes at least half of planted +/-1 respondent bias")
@pytest.mark.parametrize("seed", [11, 12])
def test_bias_correction(seed):
    cfg = synth.CorpusConfig(n_communities=25, images_per_community=8, respondents=12, raters_per_image=12,
                             respondent_biases=(-1.0, 1.0), skip_prob=0.0, triplets=False)
    c = synth.gen_corpus(cfg, seed=seed)
    truth = {(im.image_id, d): im.attributes["subjective"][d] for im in c.images for d in SUBJECTIVE}

    def mean_abs_bias(rows):
        per = {}
        for r in rows:
            per.setdefault(r.respondent_id, []).append(r.score - truth[r.image_id, r.dimension])
        return float(np.mean([abs(np.mean(v)) for v in per.values()]))

    raw = mean_abs_bias(c.ratings)
    normed, _ = normalize_all(c.ratings)
    fixed = mean_abs_bias(normed)
    print(f"mean |bias| raw {raw:.3f} -> normalised {fixed:.3f}")
    assert fixed <= 0.5 * raw


# -- 12 -----------------------------------------------------------------------

SMALL = {
    "seed": 12,
    "corpus": {"n_communities": 10, "images_per_community": 3, "respondents": 5},
    "train": {"epochs": 2, "steps_per_epoch": 4, "batch_size": 2, "refresh_images": 4},
    "evaluate": {"k": 2},
}


@criterion(12, "two full pipeline runs give byte-identical reports that embed input hashes")
def test_end_to_end_determinism(tmp_path):
    blobs = []
    for run in ("a", "b"):
        cfg = run_config(tmp_path / run, SMALL)
        for cmd in (cmd_generate, cmd_curate, cmd_train, cmd_evaluate):
            cmd(cfg, create=True, stream=QUIET())
        out = cmd_audit(cfg, create=True, stream=QUIET())
        blobs.append(Path(out["path"]).read_bytes())
        doc = json.loads(blobs[-1])
        for key, digest in doc["inputs"].items():
            stage, name = key.split("/", 1)
            assert digest == synth.file_sha256(cfg.path(stage) / name), key
    assert blobs[0] == blobs[1]
    assert len(json.loads(blobs[0])["inputs"]) == 3


# -- 13 -----------------------------------------------------------------------

def _pool(n_images):
    act, res = [], []
    for i in range(n_images):
        act += [QATriplet(f"i{i}", "how green is this street", 4.0, f"many trees line walk {k}",
                          "greening_level") for k in range(2)]
        res.append(QATriplet(f"i{i}", "how green is this street", 4.0, "tall shade trees here",
                             "greening_level", "reserve"))
    return act, res


@criterion(13, "one drifted generation gives one promotion with counts conserved; tau 0 is a no-op")
def test_curriculum_single_promotion():
    act, res = _pool(6)
    gens = {t.image_id: t.answer_text for t in act}
    gens["i3"] = "busy road with heavy traffic"
    out = curriculum_refresh(gens, act, res, tau=0.2, fraction=0.0)
    assert out.promotions == 1 and out.log[0]["image_id"] == "i3"
    assert len(out.active) == len(act) and len(out.reserve) == len(res)
    assert per_image_counts(out.active, out.reserve) == per_image_counts(act, res)


@criterion(13, "one drifted generation gives one promotion with counts conserved; tau 0 is a no-op")
def test_curriculum_noop():
    act, res = _pool(6)
    gens = {t.image_id: "busy road with heavy traffic" for t in act}
    out = curriculum_refresh(gens, act, res, tau=0.0, fraction=0.0)
    assert out.active == act and out.reserve == res and out.promotions == 0
