import numpy as np
import pytest

from fap.core import ImageRecord
from fap.metrics import (PredictionSet, aspect_f1, aspect_f1_report, baseline_aspect,
                         baseline_polarity, polarity_accuracy, polarity_accuracy_report)

from oracles import (aspect_f1_brute, polarity_acc_brute, random_aspect_rows,
                     random_polarity_rows)


def aspect_set(rows):
    return PredictionSet(ids=range(len(rows)), nouns=[r[0] for r in rows],
                         aspect_gold=[r[1] for r in rows], aspect_pred=[r[2] for r in rows])


def polarity_set(rows):
    return PredictionSet(ids=range(len(rows)), nouns=[r[0] for r in rows],
                         aspect_gold=[r[1] for r in rows], polarity_gold=[r[2] for r in rows],
                         polarity_pred=[r[3] for r in rows])


def test_aspect_f1_matches_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(200):
        rows = random_aspect_rows(rng)
        assert abs(aspect_f1(aspect_set(rows)) - aspect_f1_brute(rows)) < 1e-12


def test_polarity_accuracy_matches_brute_force():
    rng = np.random.default_rng(1)
    for _ in range(200):
        rows = random_polarity_rows(rng)
        assert abs(polarity_accuracy(polarity_set(rows)) - polarity_acc_brute(rows)) < 1e-12


def test_single_row_edge_cases():
    assert aspect_f1(aspect_set([("dog", "age", "age")])) == 1.0
    assert aspect_f1(aspect_set([("dog", "age", "size")])) == 0.0
    assert polarity_accuracy(polarity_set([("dog", "age", 1, -1)])) == 0.0


def test_noun_with_one_wrong_aspect():
    rows = [("dog", "age", "age"), ("dog", "size", "age")]
    rep = aspect_f1_report(aspect_set(rows))
    assert rep["per_noun"]["dog"]["aspects"] == {"age": pytest.approx(2 / 3), "size": 0.0}
    assert rep["overall"] == pytest.approx(1 / 3)


def test_polarity_macro_average_ignores_cell_size():
    rows = [("dog", "age", 1, 1)] * 10
    rows += [("cat", "age", 1, 1)] * 500 + [("cat", "age", -1, 1)] * 500
    rows += [("tree", "size", -1, -1)] * 8 + [("tree", "size", 1, -1)] * 2
    rep = polarity_accuracy_report(polarity_set(rows))
    assert rep["per_aspect"]["age"]["score"] == pytest.approx(0.75)
    assert rep["per_aspect"]["size"]["score"] == pytest.approx(0.8)
    assert rep["overall"] == pytest.approx(0.775)


def test_invariant_to_row_order():
    rng = np.random.default_rng(2)
    for _ in range(20):
        rows = random_aspect_rows(rng)
        perm = [rows[i] for i in rng.permutation(len(rows))]
        assert aspect_f1(aspect_set(rows)) == pytest.approx(aspect_f1(aspect_set(perm)), abs=1e-12)
        prow = random_polarity_rows(rng)
        pperm = [prow[i] for i in rng.permutation(len(prow))]
        assert polarity_accuracy(polarity_set(prow)) == pytest.approx(
            polarity_accuracy(polarity_set(pperm)), abs=1e-12)


def test_polarity_invariant_to_cell_duplication():
    rng = np.random.default_rng(3)
    rows = random_polarity_rows(rng, 40)
    cell = (rows[0][0], rows[0][1])
    dup = rows + [r for r in rows if (r[0], r[1]) == cell] * 3
    assert polarity_accuracy(polarity_set(dup)) == pytest.approx(polarity_accuracy(polarity_set(rows)))


def test_scores_are_bounded():
    rng = np.random.default_rng(4)
    for _ in range(50):
        assert 0.0 <= aspect_f1(aspect_set(random_aspect_rows(rng))) <= 1.0
        assert 0.0 <= polarity_accuracy(polarity_set(random_polarity_rows(rng))) <= 1.0


def test_empty_set_is_rejected():
    with pytest.raises(ValueError):
        aspect_f1(aspect_set([]))


def test_column_length_mismatch():
    with pytest.raises(ValueError):
        PredictionSet(ids=[1, 2], nouns=["dog"], aspect_gold=["age", "age"])


def rec(i, noun, aspect, pol=1):
    return ImageRecord(str(i), noun, aspect, pol, "x")


def test_aspect_baseline_single_aspect_noun_is_perfect():
    train = [rec(i, "city", "activity") for i in range(20)]
    ev = PredictionSet(range(30), ["city"] * 30, ["activity"] * 30)
    assert baseline_aspect(train, ev, seed=0) == 1.0


def test_aspect_baseline_two_aspect_prior():
    train = [rec(i, "dog", "age") for i in range(50)] + [rec(i + 50, "dog", "size") for i in range(50)]
    gold = ["age", "size"] * 2000
    ev = PredictionSet(range(len(gold)), ["dog"] * len(gold), gold)
    assert abs(baseline_aspect(train, ev, seed=3) - 0.5) < 0.05


def test_aspect_baseline_unknown_noun():
    with pytest.raises(KeyError):
        baseline_aspect([rec(0, "dog", "age")], PredictionSet([0], ["cat"], ["age"]), seed=0)


def test_polarity_baseline_is_half():
    pol = [1, -1] * 5000
    ev = PredictionSet(range(len(pol)), ["dog"] * len(pol), ["age"] * len(pol), None, pol, None)
    assert abs(baseline_polarity(ev, seed=0) - 0.5) < 0.02


def test_baselines_are_deterministic():
    pol = [1, -1] * 50
    ev = PredictionSet(range(100), ["dog"] * 100, ["age", "size"] * 50, None, pol, None)
    assert baseline_polarity(ev, seed=9) == baseline_polarity(ev, seed=9)
    train = [rec(i, "dog", a) for i, a in enumerate(["age", "size"] * 10)]
    assert baseline_aspect(train, ev, seed=9) == baseline_aspect(train, ev, seed=9)
