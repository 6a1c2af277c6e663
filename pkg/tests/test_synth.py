import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from msef import synth
from msef.curation import dedup, hamming, normalize_all, phash, quintile_bin, read_images
from msef.curation.records import RatingRecord
from msef.curation.registry import SUBJECTIVE
from msef.errors import InputError
from msef.model.vocab import TOKEN_IDS
from msef.stats import ols_fit, poly_fit_r2
from msef.synth import (
    FEATURES,
    LINEAR,
    PLANTED_BETAS,
    CorpusConfig,
    EffectModel,
    RespondentProfile,
    SceneSpec,
    gen_corpus,
    plant_satisfaction,
    render_scene,
    slot_statistic,
)

MID = {f: 4.0 for f in FEATURES}


def scene(**over):
    feats = dict(MID)
    feats.update({k: v for k, v in over.items() if k in FEATURES})
    rest = {k: v for k, v in over.items() if k not in FEATURES}
    return SceneSpec(feats, **rest)


def design(corpus):
    X = np.array([[im.objective_features[f] for f in LINEAR] for im in corpus.images])
    y = np.array([im.attributes["satisfaction"] for im in corpus.images])
    return X, y


# -- rendering ---------------------------------------------------------------

def test_render_shape_range_and_quantisation():
    px = render_scene(scene(seed=3))
    assert px.shape == (32, 32)
    assert px.min() >= 0 and px.max() <= 1
    assert np.allclose(px * 255, np.rint(px * 255))


def test_render_deterministic():
    a = render_scene(scene(seed=11, greenery=6.2))
    b = render_scene(scene(seed=11, greenery=6.2))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, render_scene(scene(seed=12, greenery=6.2)))


def test_minimal_scene_is_near_uniform_and_dark():
    px = render_scene(SceneSpec({f: 1.0 for f in FEATURES}, seed=5, openness=1.0))
    assert px.std() < 0.03
    assert px.mean() < 0.4


@pytest.mark.parametrize("name", FEATURES + ("openness",))
def test_slot_statistic_strictly_monotone(name):
    stats = []
    for v in np.arange(1.0, 7.01, 0.5):
        kw = {name: float(v)} if name != "openness" else {"openness": float(v)}
        stats.append(slot_statistic(render_scene(scene(seed=9, **kw)), name))
    assert all(b > a for a, b in zip(stats, stats[1:]))


def test_greenery_brightens_top_band():
    means = [synth.slot_mean(render_scene(scene(seed=2, greenery=g)), "greenery") for g in (1.0, 2.5, 4.0, 5.5, 7.0)]
    assert all(b > a for a, b in zip(means, means[1:]))
    assert synth.slot_region("greenery")[0].start == 0


def test_slots_do_not_interfere():
    base = render_scene(scene(seed=1))
    moved = render_scene(scene(seed=1, greenery=7.0))
    for name in FEATURES:
        if name != "greenery":
            assert slot_statistic(moved, name) == pytest.approx(slot_statistic(base, name), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.lists(st.floats(1, 7), min_size=10, max_size=10))
def test_hash_ignores_attributes_other_than_greenery(seed, vals):
    feats = dict(zip(FEATURES, vals), greenery=4.0)
    a = render_scene(SceneSpec(feats, seed=seed, openness=vals[9], land_use="commercial"))
    b = render_scene(SceneSpec(dict(MID), seed=seed))
    assert phash(a) == phash(b)


def test_scene_validation():
    with pytest.raises(InputError):
        SceneSpec({"greenery": 4.0})
    with pytest.raises(InputError):
        scene(greenery=9.0)
    with pytest.raises(InputError):
        scene(land_use="industrial")


# -- satisfaction ------------------------------------------------------------

def test_midpoint_linear_value_exact():
    e = EffectModel(noise_sd=0.0, quad=0.0, openness_betas={})
    assert plant_satisfaction(scene(), e) == 4.0
    s = scene(greenery=5.0, motorization=2.0)
    assert plant_satisfaction(s, e) == pytest.approx(4.0 + 0.444 - 0.437 * -2.0, abs=1e-12)


def test_motorization_decreases_satisfaction():
    e = EffectModel(noise_sd=0.0)
    vals = [plant_satisfaction(scene(motorization=m), e) for m in (2.0, 3.0, 4.0, 5.0, 6.0)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_connectivity_peaks_at_five():
    e = EffectModel(noise_sd=0.0, quad=0.3)
    grid = np.round(np.arange(1.0, 7.01, 0.25), 2)
    vals = [plant_satisfaction(scene(connectivity=float(c)), e) for c in grid]
    assert grid[int(np.argmax(vals))] == 5.0


def test_openness_slope_depends_on_land_use():
    e = EffectModel(noise_sd=0.0, quad=0.0)
    com = [plant_satisfaction(scene(openness=o, land_use="commercial"), e) for o in (3.0, 5.0)]
    res = [plant_satisfaction(scene(openness=o, land_use="residential"), e) for o in (3.0, 5.0)]
    assert com[1] - com[0] == pytest.approx(0.6)
    assert res[1] == res[0]


def test_satisfaction_clipped():
    e = EffectModel(noise_sd=0.0, quad=0.0)
    best = {f: (7.0 if PLANTED_BETAS.get(f, 0) > 0 else 1.0) for f in FEATURES}
    assert plant_satisfaction(SceneSpec(best), e) == 7.0


def test_effect_model_roundtrip_and_validation():
    e = EffectModel(quad=0.2, noise_sd=0.1)
    assert EffectModel.from_dict(json.loads(json.dumps(e.to_dict()))) == e
    with pytest.raises(InputError):
        EffectModel(noise_sd=-1)
    with pytest.raises(InputError):
        EffectModel.from_dict({"bogus": 1})


# -- respondents -------------------------------------------------------------

def test_neutral_respondent_rounds_truth():
    rng = np.random.default_rng(0)
    p = RespondentProfile("r", 0.0, 1.0, 0.0)
    for t in np.linspace(1, 5, 41):
        r = p.rate(float(t), rng)
        assert abs(r - t) <= 0.5 and r in (1, 2, 3, 4, 5)


def test_respondent_bias_and_skip():
    rng = np.random.default_rng(0)
    assert RespondentProfile("r", 1.0).rate(3.0, rng) == 4.0
    assert RespondentProfile("r", -5.0).rate(3.0, rng) == 1.0
    p = RespondentProfile("r", skip_prob=0.5)
    skips = sum(p.rate(3.0, rng) is None for _ in range(2000))
    assert 850 < skips < 1150


# -- corpus ------------------------------------------------------------------

SMALL = CorpusConfig(n_communities=10, images_per_community=6, respondents=5)


def test_corpus_deterministic():
    a = gen_corpus(SMALL, seed=4)
    b = gen_corpus(SMALL, seed=4)
    assert [i.to_dict() for i in a.images] == [i.to_dict() for i in b.images]
    assert a.ratings == b.ratings and a.triplets == b.triplets and a.manifest == b.manifest
    assert [i.to_dict() for i in gen_corpus(SMALL, seed=5).images] != [i.to_dict() for i in a.images]


def test_corpus_counts_and_files(tmp_path):
    c = gen_corpus(SMALL, seed=1)
    assert len(c.images) == 60
    assert len(c.ratings) == 60 * SMALL.raters_per_image * len(SUBJECTIVE)
    assert len(c.triplets) == 60 * 14
    assert sum(t.split == "reserve" for t in c.triplets) == 60
    hashes = synth.write_corpus(c, tmp_path)
    assert set(hashes) == set(synth.CORPUS_FILES)
    back = read_images(tmp_path / "images.jsonl")
    assert [i.to_dict() for i in back] == [i.to_dict() for i in c.images]
    (tmp_path / "again").mkdir()
    assert synth.write_corpus(c, tmp_path / "again") == hashes


def test_quintile_recovers_planted_tiers():
    c = gen_corpus(CorpusConfig(n_communities=23, images_per_community=1, respondents=3), seed=8)
    ids = [row[0] for row in c.communities]
    prices = [row[1] for row in c.communities]
    res = quintile_bin(prices, ids)
    assert res.tiers == [c.manifest["tiers"][i] for i in ids]
    fixed = quintile_bin(prices, ids, thresholds=(5000, 6800, 8200, 10000))
    assert fixed.tiers == res.tiers


def test_clean_corpus_has_no_duplicates():
    c = gen_corpus(CorpusConfig(n_communities=20, images_per_community=25, respondents=3, triplets=False), seed=2)
    kept, log = dedup(c.images)
    assert log == [] and len(kept) == 500
    hs = [phash(i.pixels) for i in c.images]
    assert min(hamming(a, b) for k, a in enumerate(hs) for b in hs[k + 1:]) >= synth.MIN_SIG_DISTANCE


def test_triplet_text_within_vocabulary():
    c = gen_corpus(SMALL, seed=3)
    for t in c.triplets:
        for w in (t.question + " " + t.answer_text).split():
            assert w in TOKEN_IDS, w


def test_ols_closure_without_noise():
    e = EffectModel(noise_sd=0.0, quad=0.0, openness_betas={})
    c = gen_corpus(CorpusConfig(n_communities=10, images_per_community=30, respondents=3,
                                feature_sd=0.4, uniform_features=(), triplets=False), e, seed=2)
    X, y = design(c)
    assert 1 < y.min() and y.max() < 7
    fit = ols_fit(X, y, names=list(LINEAR))
    for name, beta in PLANTED_BETAS.items():
        assert abs(fit.coef(name) - beta) < 1e-8


def test_ols_recovery_with_noise():
    c = gen_corpus(CorpusConfig(n_communities=50, images_per_community=60, respondents=3, triplets=False),
                   EffectModel(noise_sd=0.5), seed=6)
    X, y = design(c)
    fit = ols_fit(X, y, names=list(LINEAR))
    for name, beta in PLANTED_BETAS.items():
        assert abs(fit.coef(name) - beta) < 0.06


def test_normalization_reduces_respondent_bias():
    cfg = CorpusConfig(n_communities=20, images_per_community=10, respondents=10, raters_per_image=10,
                       respondent_biases=(-1.0, 1.0), skip_prob=0.0, rating_noise_sd=0.2, triplets=False)
    c = gen_corpus(cfg, seed=3)
    truth = {(i.image_id, d): i.attributes["subjective"][d] for i in c.images for d in SUBJECTIVE}

    def mab(rows):
        per = {}
        for r in rows:
            per.setdefault(r.respondent_id, []).append(r.score - truth[r.image_id, r.dimension])
        return np.mean([abs(np.mean(v)) for v in per.values()])

    raw = mab(c.ratings)
    normed, flagged = normalize_all(c.ratings)
    assert flagged == []
    assert mab(normed) <= 0.5 * raw


def test_calibration_hits_target():
    cfg, e, oracle = synth.inverted_u_preset(0.49, n_communities=50, images_per_community=20)
    assert oracle == pytest.approx(0.49, abs=1e-3)
    c = gen_corpus(cfg, e, seed=1)
    x = np.array([i.objective_features["connectivity"] for i in c.images])
    y = np.array([i.attributes["satisfaction"] for i in c.images])
    quad = poly_fit_r2(x, y, 2)
    assert abs(quad.vertex - 5.0) < 0.5
    assert abs(quad.r2 - oracle) < 0.1
    assert quad.r2 - poly_fit_r2(x, y, 1).r2 >= 0.1


def test_calibration_unattainable_returns_zero_noise():
    sd, r2 = synth.calibrate_noise(EffectModel(quad=0.0), 0.9, n=2000)
    assert sd == 0.0 and r2 < 0.9


def test_corpus_config_validation():
    with pytest.raises(InputError):
        CorpusConfig(raters_per_image=0)
    assert CorpusConfig(respondents=2, raters_per_image=3).raters_per_image == 2
    with pytest.raises(InputError):
        CorpusConfig.from_dict({"n_images": 3})
    assert CorpusConfig.from_dict(SMALL.to_dict()) == SMALL


def test_rating_rows_are_valid_records():
    c = gen_corpus(SMALL, seed=2)
    assert all(isinstance(r, RatingRecord) for r in c.ratings)
    assert all(r.skipped == (r.score is None) for r in c.ratings)
