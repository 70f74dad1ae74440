import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fap.core import Dataset, ImageRecord
from fap.metrics import aspect_f1, polarity_accuracy
from fap.models import (ModelFormatError, ModelSpec, NoApplicableLabelError, ScoreVector,
                        UntrainableCombinationError, convert_scores, load_model, model_to_json,
                        predict_aspect, predict_dataset, predict_polarity, save_model, train)
from fap.pipeline import SplitPlan, SynthConfig, make_split, synth_generate

FAST = dict(lr=1e-2, epochs=15, batch_size=32)


def test_convert_aspect_and_polarity(lexicon):
    s = ScoreVector([0.8, 0.3, 0.95], ["young_dog", "sad_dog", "old_cat"])
    assert convert_scores(s, lexicon, "aspect", noun="dog") == "age"
    assert convert_scores(s, lexicon, "polarity", aspect="age", noun="dog") == -1


def test_convert_happiness_polarity(lexicon):
    s = ScoreVector([0.9, 0.2], ["smiling", "sad"])
    assert convert_scores(s, lexicon, "polarity", aspect="happiness") == -1


def test_convert_aspect_polarity_heads(lexicon):
    s = ScoreVector([0.1, 0.7], ["age:-1", "size:1"])
    assert convert_scores(s, lexicon, "aspect") == "size"
    assert convert_scores(s, lexicon, "polarity", aspect="age") == -1


def test_convert_single_label(lexicon):
    s = ScoreVector([-3.0], ["bad_dog"])
    assert convert_scores(s, lexicon, "aspect", noun="dog") == "evaluation"


def test_convert_tie_goes_to_earlier_label(lexicon):
    s = ScoreVector([0.5, 0.5], ["big_tree", "old_tree"])
    assert convert_scores(s, lexicon, "aspect", noun="tree") == "size"


def test_convert_no_survivors(lexicon):
    s = ScoreVector([0.8, 0.3], ["young_dog", "sad_dog"])
    with pytest.raises(NoApplicableLabelError):
        convert_scores(s, lexicon, "aspect", noun="cat")
    with pytest.raises(NoApplicableLabelError):
        convert_scores(s, lexicon, "polarity", aspect="size", noun="dog")


LABELS = ["young_dog", "old_dog", "sad_dog", "happy_dog", "big_dog", "small_cat"]


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=6, max_size=6), st.integers(0, 4), st.floats(0.01, 3))
def test_convert_monotone_in_winner(lexicon, scores, k, bump):
    s = ScoreVector(scores, LABELS)
    before = convert_scores(s, lexicon, "aspect", noun="dog")
    top = int(np.argmax(scores[:5]))
    raised = list(scores)
    raised[top] += bump
    assert convert_scores(ScoreVector(raised, LABELS), lexicon, "aspect", noun="dog") == before


def test_noun_agnostic_ignores_noun(flip_data):
    data, _ = flip_data
    m = train(ModelSpec("lr_noun_agnostic", "polarity", seed=0, **FAST), data)
    x = data.X[0]
    assert predict_polarity(m, x, "dog", "age") == predict_polarity(m, x, "cat", "age")


def test_zero_score_maps_to_positive(flip_data):
    data, _ = flip_data
    m = train(ModelSpec("lr_noun_agnostic", "polarity", seed=0, epochs=0), data)
    m.params = {k: np.zeros_like(v) if k != "trained" else v for k, v in m.params.items()}
    score, pol = predict_polarity(m, data.X[0], "dog", "age")
    assert score == 0.0 and pol == 1


def planted_dataset(lexicon, rng, n=300, D=6, aspects=("age", "size")):
    centres = {a: 1.0 * rng.standard_normal(D) for a in aspects}
    records, X = [], []
    for i in range(n):
        a = aspects[i % len(aspects)]
        pol = 1 if (i // len(aspects)) % 2 else -1
        entry = lexicon.by_name(a)
        split = ("train", "dev", "test")[i % 10 // 5] if i % 10 < 8 else "test"
        records.append(ImageRecord(f"r{i}", "dog" if i % 3 else "cat", a, pol, entry.side(pol)[0], split))
        X.append(centres[a] + pol * 3.0 * np.eye(D)[0] + 0.5 * rng.standard_normal(D))
    return Dataset(lexicon, records, np.array(X))


def test_constant_aspect_training_set(lexicon):
    data = planted_dataset(lexicon, np.random.default_rng(0), aspects=("size",))
    m = train(ModelSpec("lr_noun_agnostic", "aspect", seed=0, **FAST), data)
    preds = predict_dataset(m, data.subset(data.mask("test")))
    assert set(preds.aspect_pred) == {"size"}


def test_linearly_separable_polarity(lexicon):
    data = planted_dataset(lexicon, np.random.default_rng(1))
    m = train(ModelSpec("lr_noun_agnostic", "polarity", seed=0, lr=5e-2, epochs=40), data)
    dev = data.subset(data.mask("dev"))
    assert polarity_accuracy(predict_dataset(m, dev)) >= 0.98


def test_tensor_cond_recovers_planted_aspects(multi_aspect_data):
    m = train(ModelSpec("tensor_cond", "aspect", seed=0, lr=1e-2, epochs=30), multi_aspect_data)
    test = multi_aspect_data.subset(multi_aspect_data.mask("test"))
    p = predict_dataset(m, test)
    acc = np.mean([g == q for g, q in zip(p.aspect_gold, p.aspect_pred)])
    assert acc >= 0.90


def test_adj_noun_predicts_only_cooccurring_aspects(multi_aspect_data):
    m = train(ModelSpec("lr_adj_noun", "aspect", seed=0, **FAST), multi_aspect_data)
    allowed = {"dog": {"age", "evaluation", "activity"}, "cat": {"age", "happiness"},
               "man": {"evaluation", "age"}}
    rng = np.random.default_rng(0)
    for noun, ok in allowed.items():
        for _ in range(30):
            _, aspect = predict_aspect(m, 5 * rng.standard_normal(8), noun)
            assert aspect in ok


@pytest.mark.parametrize("family", ["lr_noun_specific", "lr_adj_noun", "concat_mlp", "tensor_cond"])
def test_training_is_deterministic(multi_aspect_data, family):
    spec = ModelSpec(family, "polarity", seed=4, epochs=3)
    a, b = train(spec, multi_aspect_data), train(spec, multi_aspect_data)
    assert a.params.keys() == b.params.keys()
    for k in a.params:
        assert a.params[k].tobytes() == b.params[k].tobytes()


def test_best_dev_snapshot_is_kept(multi_aspect_data):
    m = train(ModelSpec("concat_mlp", "aspect", seed=1, epochs=5), multi_aspect_data)
    scores = [h["dev_metric"] for h in m.history]
    assert len(scores) == 6
    dev = multi_aspect_data.subset(multi_aspect_data.mask("dev"))
    assert aspect_f1(predict_dataset(m, dev)) == pytest.approx(max(scores))


@pytest.mark.parametrize("family", ["lr_noun_agnostic", "lr_noun_specific", "lr_adj_noun",
                                    "concat_mlp", "tensor_cond"])
def test_save_load_round_trip(tmp_path, multi_aspect_data, family):
    m = train(ModelSpec(family, "aspect", seed=2, epochs=2), multi_aspect_data)
    path = tmp_path / "m.json"
    save_model(m, path)
    loaded = load_model(path)
    test = multi_aspect_data.subset(multi_aspect_data.mask("test"))
    assert predict_dataset(loaded, test).aspect_pred == predict_dataset(m, test).aspect_pred
    assert json.dumps(model_to_json(loaded)) == json.dumps(model_to_json(m))


def test_truncated_model_file(tmp_path, multi_aspect_data):
    m = train(ModelSpec("tensor_cond", "aspect", seed=2, epochs=1), multi_aspect_data)
    path = tmp_path / "m.json"
    save_model(m, path)
    text = path.read_text()
    path.write_text(text[: len(text) // 2])
    with pytest.raises(ModelFormatError):
        load_model(path)


def test_wrong_parameter_count(tmp_path, multi_aspect_data):
    m = train(ModelSpec("tensor_cond", "aspect", seed=2, epochs=1), multi_aspect_data)
    obj = model_to_json(m)
    obj["params"]["W"]["data"] = obj["params"]["W"]["data"][:-1]
    path = tmp_path / "m.json"
    path.write_text(json.dumps(obj))
    with pytest.raises(ModelFormatError):
        load_model(path)


def test_dimension_mismatch(lexicon):
    data, _ = synth_generate(SynthConfig(dim=16, images_per_cell=30, seed=1), lexicon)
    data = make_split(data, SplitPlan())
    m = train(ModelSpec("tensor_cond", "polarity", seed=0, epochs=1), data)
    with pytest.raises(ValueError, match="dimension"):
        predict_polarity(m, np.zeros(32), "dog", "age")


def test_noun_specific_has_no_model_for_heldout_combo(lexicon):
    cfg = SynthConfig(dim=8, nouns=("dog", "cat"), aspects={"dog": ("age", "evaluation"),
                                                            "cat": ("age",)},
                      images_per_cell=40, noun_flip=False, seed=3)
    data, _ = synth_generate(cfg, lexicon)
    data = make_split(data, SplitPlan.zeroshot(holdouts=[("dog", "age")]))
    m = train(ModelSpec("lr_noun_specific", "polarity", seed=0, epochs=2), data)
    with pytest.raises(UntrainableCombinationError):
        predict_polarity(m, data.X[0], "dog", "age")
    assert predict_polarity(m, data.X[0], "cat", "age")[1] in (-1, 1)


def test_empty_dev_split_rejected(lexicon):
    data = planted_dataset(lexicon, np.random.default_rng(0))
    data = data.with_splits({i: "train" for i in data.ids})
    with pytest.raises(ValueError, match="development"):
        train(ModelSpec("lr_noun_agnostic", "aspect", seed=0), data)


def test_spec_validation():
    with pytest.raises(ValueError):
        ModelSpec("svm", "aspect", seed=0)
    with pytest.raises(ValueError):
        ModelSpec("tensor_cond", "colour", seed=0)
