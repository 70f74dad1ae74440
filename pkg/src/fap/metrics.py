"""Hierarchical evaluation metrics and the statistical baselines.

``aspect_f1`` averages one-vs-rest F1 over each noun's applicable aspects and
then over nouns. ``polarity_accuracy`` averages per-noun accuracy within each
aspect and then over aspects. Neither weights by row counts. Applicable
nouns and aspects are taken from the gold labels of the rows being scored.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class PredictionSet:
    """Parallel per-image columns of gold and predicted labels."""

    ids: tuple
    nouns: tuple
    aspect_gold: tuple
    aspect_pred: tuple | None = None
    polarity_gold: tuple | None = None
    polarity_pred: tuple | None = None

    def __post_init__(self):
        n = len(self.ids)
        for name in ("nouns", "aspect_gold", "aspect_pred", "polarity_gold", "polarity_pred"):
            col = getattr(self, name)
            if col is not None:
                col = tuple(col)
                object.__setattr__(self, name, col)
                if len(col) != n:
                    raise ValueError(f"column {name} has {len(col)} rows, expected {n}")
        object.__setattr__(self, "ids", tuple(self.ids))

    def __len__(self) -> int:
        return len(self.ids)

    @classmethod
    def from_rows(cls, rows: Sequence[tuple]) -> "PredictionSet":
        """Build from ``(id, noun, aspect_gold, aspect_pred, polarity_gold, polarity_pred)`` rows."""
        cols = list(zip(*rows)) if rows else [()] * 6
        return cls(*cols)

    @classmethod
    def from_dataset(cls, data, aspect_pred=None, polarity_pred=None) -> "PredictionSet":
        recs = data.records
        return cls(ids=[r.id for r in recs], nouns=[r.noun for r in recs],
                   aspect_gold=[r.aspect for r in recs], aspect_pred=aspect_pred,
                   polarity_gold=[r.polarity for r in recs], polarity_pred=polarity_pred)


def _groups(keys) -> dict:
    out: dict = {}
    for i, k in enumerate(keys):
        out.setdefault(k, []).append(i)
    return out


def _f1(gold: np.ndarray, pred: np.ndarray, label) -> float:
    tp = np.sum((gold == label) & (pred == label))
    n_pred = np.sum(pred == label)
    n_gold = np.sum(gold == label)
    if tp == 0 or n_pred == 0 or n_gold == 0:
        return 0.0
    precision = tp / n_pred
    recall = tp / n_gold
    return float(2 * precision * recall / (precision + recall))


def aspect_f1_report(p: PredictionSet) -> dict:
    if len(p) == 0:
        raise ValueError("cannot score an empty prediction set")
    if p.aspect_pred is None or any(a is None for a in p.aspect_pred):
        raise ValueError("aspect predictions missing")
    gold = np.array(p.aspect_gold, dtype=object)
    pred = np.array(p.aspect_pred, dtype=object)
    per_noun = {}
    for noun, rows in _groups(p.nouns).items():
        g, q = gold[rows], pred[rows]
        applicable = list(dict.fromkeys(g))
        scores = {a: _f1(g, q, a) for a in applicable}
        per_noun[noun] = {"score": float(np.mean(list(scores.values()))),
                          "aspects": scores, "rows": len(rows)}
    overall = float(np.mean([v["score"] for v in per_noun.values()]))
    return {"metric": "aspect_f1", "overall": overall, "per_noun": per_noun}


def aspect_f1(p: PredictionSet) -> float:
    return aspect_f1_report(p)["overall"]


def polarity_accuracy_report(p: PredictionSet) -> dict:
    if len(p) == 0:
        raise ValueError("cannot score an empty prediction set")
    if p.polarity_gold is None or p.polarity_pred is None or any(
            v is None for v in p.polarity_pred):
        raise ValueError("polarity labels missing")
    correct = np.array([int(g) == int(q) for g, q in zip(p.polarity_gold, p.polarity_pred)])
    per_aspect = {}
    for aspect, rows in _groups(p.aspect_gold).items():
        nouns = [p.nouns[i] for i in rows]
        cells = {noun: float(correct[[rows[j] for j in idx]].mean())
                 for noun, idx in _groups(nouns).items()}
        per_aspect[aspect] = {"score": float(np.mean(list(cells.values()))), "nouns": cells,
                              "rows": len(rows)}
    overall = float(np.mean([v["score"] for v in per_aspect.values()]))
    return {"metric": "polarity_accuracy", "overall": overall, "per_aspect": per_aspect}


def polarity_accuracy(p: PredictionSet) -> float:
    return polarity_accuracy_report(p)["overall"]


def baseline_aspect(train, eval_rows: PredictionSet, seed: int) -> float:
    """Aspect F1 of image-blind guessing from the training prior P(aspect | noun).

    ``train`` is a :class:`~fap.core.Dataset` (or any sequence of records with
    ``noun`` and ``aspect``).
    """
    return aspect_f1(baseline_aspect_predictions(train, eval_rows, seed))


def baseline_aspect_predictions(train, eval_rows: PredictionSet, seed: int) -> PredictionSet:
    records = getattr(train, "records", train)
    counts: dict[str, dict[str, int]] = {}
    for r in records:
        c = counts.setdefault(r.noun, {})
        c[r.aspect] = c.get(r.aspect, 0) + 1
    rng = np.random.default_rng(seed)
    preds = []
    for noun in eval_rows.nouns:
        if noun not in counts:
            raise KeyError(f"noun {noun!r} does not occur in the training data")
        aspects = list(counts[noun])
        weights = np.array([counts[noun][a] for a in aspects], float)
        preds.append(aspects[rng.choice(len(aspects), p=weights / weights.sum())])
    return PredictionSet(eval_rows.ids, eval_rows.nouns, eval_rows.aspect_gold, tuple(preds),
                         eval_rows.polarity_gold, eval_rows.polarity_pred)


def baseline_polarity(eval_rows: PredictionSet, seed: int) -> float:
    """Polarity accuracy of a fair coin flip per row."""
    rng = np.random.default_rng(seed)
    guesses = tuple(int(v) for v in rng.choice([-1, 1], size=len(eval_rows)))
    return polarity_accuracy(PredictionSet(eval_rows.ids, eval_rows.nouns, eval_rows.aspect_gold,
                                           eval_rows.aspect_pred, eval_rows.polarity_gold,
                                           guesses))
