"""Model families for aspect prediction and polarity detection.

Families
--------
``lr_noun_agnostic``
    Linear models on the embedding alone: one multinomial model for aspects,
    one binary model per aspect for polarity.
``lr_noun_specific``
    The same, but one model per noun (aspects) or per noun-aspect
    combination (polarity). Combinations without training rows have no
    model, so these families cannot do 0-shot prediction.
``lr_adj_noun``
    One multinomial model over adjective-noun classes; its scores are turned
    into aspect/polarity predictions by :func:`convert_scores`.
``concat_mlp``
    One-hot noun appended to the embedding, one tanh hidden layer.
``tensor_cond``
    The Tensor Conditioning layer of :mod:`fap.condition`.

All families are trained with the same seeded mini-batch loop and keep the
parameter snapshot with the best development score.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import condition as cond
from .core import AspectLexicon, DataError, Dataset, lexicon_from_json
from .metrics import PredictionSet, aspect_f1, polarity_accuracy
from .ndmath import NumericError, OptState, glorot_uniform, logistic_loss_pm1, optimizer_step, softmax_xent

log = logging.getLogger(__name__)

FAMILIES = ("lr_noun_agnostic", "lr_noun_specific", "lr_adj_noun", "concat_mlp", "tensor_cond")
TASKS = ("aspect", "polarity")
FORMAT_VERSION = 1


class UntrainableCombinationError(LookupError):
    """No model exists for a noun / noun-aspect combination that had no training rows."""


class NoApplicableLabelError(LookupError):
    """Score conversion left no label to choose from."""


class UnknownNounError(LookupError):
    pass


class ModelFormatError(DataError):
    pass


@dataclass(frozen=True)
class ModelSpec:
    family: str
    task: str
    seed: int
    hidden: int = 10
    lr: float = 1e-3
    epochs: int = 50
    batch_size: int = 64
    optimizer: str = "adam"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}; expected one of {TASKS}")
        if self.seed is None:
            raise ValueError("seed is mandatory")
        if self.hidden < 1 or self.batch_size < 1 or self.epochs < 0:
            raise ValueError("hidden and batch_size must be positive, epochs non-negative")


# -- score conversion --------------------------------------------------------

@dataclass(frozen=True)
class ScoreVector:
    """Scores over a label vocabulary.

    Labels are ``head`` or ``head_noun``. A head is either an adjective
    (``"young"``) or an aspect-polarity pair (``"age:-1"``).
    """

    scores: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        scores = np.asarray(self.scores, float).reshape(-1)
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "labels", tuple(self.labels))
        if scores.size != len(self.labels):
            raise ValueError("scores and labels differ in length")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("labels must be unique")


def adj_noun_label(adjective: str, noun: str) -> str:
    return f"{adjective}_{noun}"


def parse_label(label: str) -> tuple[str, str | None]:
    head, sep, noun = label.partition("_")
    return head, (noun if sep else None)


def resolve_head(head: str, lexicon: AspectLexicon) -> tuple[str, int]:
    """(aspect name, polarity) for an adjective or ``aspect:pol`` head."""
    if ":" in head:
        aspect, _, pol = head.partition(":")
        lexicon.by_name(aspect)
        return aspect, int(pol)
    aspect_id, pol = lexicon.lookup(head)
    return lexicon.by_id(aspect_id).name, pol


def convert_scores(s: ScoreVector, lexicon: AspectLexicon, mode: str = "aspect",
                   aspect: str | None = None, noun: str | None = None):
    """Turn label scores into an aspect name (``mode="aspect"``) or a polarity.

    With ``noun`` only labels carrying that noun survive; in polarity mode
    only labels of ``aspect`` survive as well. The top-scoring survivor
    decides, ties going to the earlier label.
    """
    if mode not in ("aspect", "polarity"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "polarity" and aspect is None:
        raise ValueError("polarity mode needs an aspect")
    best, best_score = None, -np.inf
    for score, label in zip(s.scores, s.labels):
        head, label_noun = parse_label(label)
        if noun is not None and label_noun != noun:
            continue
        lab_aspect, lab_pol = resolve_head(head, lexicon)
        if mode == "polarity" and lab_aspect != aspect:
            continue
        if best is None or score > best_score:
            best, best_score = (lab_aspect, lab_pol), score
    if best is None:
        raise NoApplicableLabelError(
            f"no label left for noun={noun!r}" + (f", aspect={aspect!r}" if aspect else ""))
    return best[0] if mode == "aspect" else best[1]


# -- trained model -----------------------------------------------------------

@dataclass
class TrainedModel:
    spec: ModelSpec
    params: dict[str, np.ndarray]
    nouns: tuple[str, ...]
    aspects: tuple[str, ...]
    dim: int
    lexicon: AspectLexicon
    labels: tuple[str, ...] | None = None
    history: list = field(default_factory=list, compare=False, repr=False)

    def noun_index(self, noun: str) -> int:
        try:
            return self.nouns.index(noun)
        except ValueError:
            raise UnknownNounError(f"noun {noun!r} not in the model vocabulary") from None

    def aspect_index(self, aspect: str) -> int:
        try:
            return self.aspects.index(aspect)
        except ValueError:
            raise LookupError(f"aspect {aspect!r} not in the model vocabulary") from None


def _check_dim(m: TrainedModel, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, float))
    if X.shape[1] != m.dim:
        raise ValueError(f"embedding dimension {X.shape[1]} does not match model dimension {m.dim}")
    return X


def _label_table(m: TrainedModel):
    nouns, aspects, pols = [], [], []
    for label in m.labels:
        head, noun = parse_label(label)
        aspect, pol = resolve_head(head, m.lexicon)
        nouns.append(noun)
        aspects.append(aspect)
        pols.append(pol)
    return np.array(nouns, dtype=object), np.array(aspects, dtype=object), np.array(pols)


def raw_scores(m: TrainedModel, X, noun_idx) -> np.ndarray:
    """Batch scores before any conversion: aspect units, or adjective-noun classes.

    For ``tensor_cond`` these are the pre-activations (tanh is monotone, so
    argmax and sign decisions are unchanged by it).
    """
    X = _check_dim(m, X)
    noun_idx = np.asarray(noun_idx, dtype=np.int64).reshape(-1)
    p, fam = m.params, m.spec.family
    if fam in ("lr_noun_agnostic", "lr_adj_noun"):
        return X @ p["W"].T + p["b"]
    if fam == "lr_noun_specific":
        return np.einsum("bad,bd->ba", p["W"][noun_idx], X) + p["b"][noun_idx]
    onehot = cond.one_hot(noun_idx, len(m.nouns))
    if fam == "concat_mlp":
        return cond.concat_mlp_forward(cond.ConcatMlpParams.from_dict(p), X, onehot)[1]
    return cond.tensor_condition_forward(cond.TensorCondParams.from_dict(p), X, onehot)[0]


def _output_scores(m: TrainedModel, raw: np.ndarray) -> np.ndarray:
    return np.tanh(raw) if m.spec.family == "tensor_cond" else raw


def score_vector(m: TrainedModel, x) -> ScoreVector:
    if m.spec.family != "lr_adj_noun":
        raise ValueError("score vectors are produced by the lr_adj_noun family")
    return ScoreVector(raw_scores(m, x, [0])[0], m.labels)


def predict_aspect(m: TrainedModel, x, noun: str) -> tuple[np.ndarray, str]:
    """Per-aspect scores and the predicted aspect (ties to the lowest aspect id)."""
    if m.spec.task != "aspect":
        raise ValueError("model was trained for polarity detection")
    fam = m.spec.family
    if fam == "lr_adj_noun":
        sv = score_vector(m, x)
        label_noun, label_aspect, _ = _label_table(m)
        scores = np.full(len(m.aspects), -np.inf)
        for k, a in enumerate(m.aspects):
            sel = (label_noun == noun) & (label_aspect == a)
            if sel.any():
                scores[k] = sv.scores[sel].max()
        return scores, convert_scores(sv, m.lexicon, "aspect", noun=noun)
    n = 0 if fam == "lr_noun_agnostic" else m.noun_index(noun)
    if fam == "lr_noun_specific" and not m.params["trained"][n]:
        raise UntrainableCombinationError(f"no aspect model for noun {noun!r}")
    raw = raw_scores(m, x, [n])[0]
    return _output_scores(m, raw), m.aspects[int(np.argmax(raw))]


def predict_polarity(m: TrainedModel, x, noun: str, aspect: str) -> tuple[float, int]:
    """Score of the relevant unit and its sign as polarity (zero maps to +1)."""
    if m.spec.task != "polarity":
        raise ValueError("model was trained for aspect prediction")
    fam = m.spec.family
    if fam == "lr_adj_noun":
        sv = score_vector(m, x)
        pol = convert_scores(sv, m.lexicon, "polarity", aspect=aspect, noun=noun)
        label_noun, label_aspect, _ = _label_table(m)
        sel = (label_noun == noun) & (label_aspect == aspect)
        return float(sv.scores[sel].max()), pol
    a = m.aspect_index(aspect)
    n = 0 if fam == "lr_noun_agnostic" else m.noun_index(noun)
    if fam == "lr_noun_agnostic" and not m.params["trained"][a]:
        raise UntrainableCombinationError(f"no polarity model for aspect {aspect!r}")
    if fam == "lr_noun_specific" and not m.params["trained"][n, a]:
        raise UntrainableCombinationError(f"no polarity model for ({noun!r}, {aspect!r})")
    raw = raw_scores(m, x, [n])[0, a]
    return float(_output_scores(m, raw)), (1 if raw >= 0 else -1)


def _batch_predictions(m: TrainedModel, X, nouns, aspects=None, strict: bool = True):
    """Vectorised predictions for many rows.

    With ``strict=False`` rows without an applicable model/label get ``None``
    instead of raising.
    """
    X = _check_dim(m, X)
    fam, task = m.spec.family, m.spec.task
    if fam == "lr_noun_agnostic":
        noun_idx = np.zeros(len(nouns), dtype=np.int64)
    else:
        noun_idx = np.array([m.noun_index(n) for n in nouns], dtype=np.int64)
    raw = raw_scores(m, X, noun_idx) if len(nouns) else np.zeros((0, 1))
    out: list = []
    if fam == "lr_adj_noun":
        label_noun, label_aspect, label_pol = _label_table(m)
        for i, noun in enumerate(nouns):
            sel = label_noun == noun
            if task == "polarity":
                sel = sel & (label_aspect == aspects[i])
            if not sel.any():
                if strict:
                    raise NoApplicableLabelError(f"no label for noun={noun!r}"
                                                 + (f", aspect={aspects[i]!r}" if task == "polarity" else ""))
                out.append(None)
                continue
            cols = np.flatnonzero(sel)
            top = cols[int(np.argmax(raw[i, cols]))]
            out.append(label_aspect[top] if task == "aspect" else int(label_pol[top]))
        return out
    if task == "aspect":
        for i in range(len(nouns)):
            if fam == "lr_noun_specific" and not m.params["trained"][noun_idx[i]]:
                if strict:
                    raise UntrainableCombinationError(f"no aspect model for noun {nouns[i]!r}")
                out.append(None)
                continue
            out.append(m.aspects[int(np.argmax(raw[i]))])
        return out
    for i in range(len(nouns)):
        a = m.aspect_index(aspects[i])
        ok = True
        if fam == "lr_noun_agnostic":
            ok = bool(m.params["trained"][a])
        elif fam == "lr_noun_specific":
            ok = bool(m.params["trained"][noun_idx[i], a])
        if not ok:
            if strict:
                raise UntrainableCombinationError(
                    f"no polarity model for ({nouns[i]!r}, {aspects[i]!r})")
            out.append(None)
            continue
        out.append(1 if raw[i, a] >= 0 else -1)
    return out


def predict_dataset(m: TrainedModel, data: Dataset, strict: bool = True) -> PredictionSet:
    """Predictions for every record of ``data`` as a :class:`PredictionSet`."""
    nouns = [r.noun for r in data.records]
    if m.spec.task == "aspect":
        preds = _batch_predictions(m, data.X, nouns, strict=strict)
        return PredictionSet.from_dataset(data, aspect_pred=preds)
    aspects = [r.aspect for r in data.records]
    preds = _batch_predictions(m, data.X, nouns, aspects, strict=strict)
    return PredictionSet.from_dataset(data, polarity_pred=preds)


def _task_metric(task: str, p: PredictionSet) -> float:
    # unanswerable rows count as wrong during model selection
    if task == "aspect":
        p = PredictionSet(p.ids, p.nouns, p.aspect_gold,
                          tuple("" if a is None else a for a in p.aspect_pred))
        return aspect_f1(p)
    p = PredictionSet(p.ids, p.nouns, p.aspect_gold, None, p.polarity_gold,
                      tuple(0 if v is None else v for v in p.polarity_pred))
    return polarity_accuracy(p)


# -- training ----------------------------------------------------------------

def _fit(params: dict, loss_grad: Callable, n_train: int, dev_score: Callable | None,
         spec: ModelSpec, rng: np.random.Generator, history: list, tag: str) -> dict:
    """Mini-batch descent keeping the best-dev snapshot (first one on ties)."""
    state = OptState(lr=spec.lr, mode=spec.optimizer)
    all_rows = np.arange(n_train)
    loss0, _ = loss_grad(params, all_rows)
    best = dev_score(params) if dev_score else None
    best_params = {k: v.copy() for k, v in params.items()}
    history.append({"model": tag, "epoch": 0, "train_loss": loss0, "dev_metric": best})
    for epoch in range(1, spec.epochs + 1):
        order = rng.permutation(n_train)
        total = 0.0
        for start in range(0, n_train, spec.batch_size):
            idx = order[start:start + spec.batch_size]
            loss, grads = loss_grad(params, idx)
            if not np.isfinite(loss):
                raise NumericError(f"{tag}: non-finite training loss at epoch {epoch}")
            params, state = optimizer_step(params, grads, state)
            total += loss * len(idx)
        score = dev_score(params) if dev_score else None
        history.append({"model": tag, "epoch": epoch, "train_loss": total / max(n_train, 1),
                        "dev_metric": score})
        if dev_score is None or score > best:
            best = score
            best_params = {k: v.copy() for k, v in params.items()}
    return best_params


def _multinomial_loss(X: np.ndarray, y: np.ndarray):
    def loss_grad(p, idx):
        xb = X[idx]
        loss, G = softmax_xent(xb @ p["W"].T + p["b"], y[idx])
        return loss, {"W": G.T @ xb, "b": G.sum(axis=0)}
    return loss_grad


def _binary_loss(X: np.ndarray, y: np.ndarray):
    def loss_grad(p, idx):
        xb = X[idx]
        losses, g = logistic_loss_pm1(np.atleast_1d(xb @ p["w"] + p["b"]), y[idx])
        g = np.atleast_1d(g) / len(idx)
        return float(np.mean(losses)), {"w": xb.T @ g, "b": np.array(g.sum())}
    return loss_grad


def _rng(spec: ModelSpec, *key: int) -> np.random.Generator:
    return np.random.default_rng([spec.seed, *key])


def _train_linear_aspect(spec, data, rows_tr, rows_dv, rng, history, tag, A):
    """Multinomial linear model over all aspects, on the given row subsets."""
    X, y = data.X[rows_tr], data.aspect_idx[rows_tr]
    params = {"W": glorot_uniform(rng, (A, data.dim), data.dim, A), "b": np.zeros(A)}
    names = data.lexicon.names
    dev_score = None
    if len(rows_dv):
        Xd = data.X[rows_dv]
        base = PredictionSet.from_dataset(data.subset(rows_dv))

        def dev_score(p):
            pred = [names[k] for k in np.argmax(Xd @ p["W"].T + p["b"], axis=1)]
            return aspect_f1(PredictionSet(base.ids, base.nouns, base.aspect_gold, pred))
    return _fit(params, _multinomial_loss(X, y), len(rows_tr), dev_score, spec, rng, history, tag)


def _train_linear_polarity(spec, data, rows_tr, rows_dv, rng, history, tag):
    X, y = data.X[rows_tr], data.polarity[rows_tr]
    params = {"w": glorot_uniform(rng, (data.dim,), data.dim, 1), "b": np.array(0.0)}
    dev_score = None
    if len(rows_dv):
        Xd = data.X[rows_dv]
        base = PredictionSet.from_dataset(data.subset(rows_dv))

        def dev_score(p):
            pred = np.where(Xd @ p["w"] + p["b"] >= 0, 1, -1)
            return polarity_accuracy(PredictionSet(base.ids, base.nouns, base.aspect_gold, None,
                                                   base.polarity_gold, pred))
    return _fit(params, _binary_loss(X, y), len(rows_tr), dev_score, spec, rng, history, tag)


def _new_model(spec, data, params, labels=None) -> TrainedModel:
    return TrainedModel(spec=spec, params=params, nouns=data.noun_vocab,
                        aspects=data.lexicon.names, dim=data.dim, lexicon=data.lexicon,
                        labels=labels)


def train(spec: ModelSpec, data: Dataset, split: dict | None = None) -> TrainedModel:
    """Fit one model family on the ``train`` rows, selecting on ``dev`` rows.

    ``split`` optionally maps record ids to split names, overriding the
    labels stored in ``data``. Deterministic for a given spec and dataset.
    """
    if split is not None:
        data = data.with_splits(split)
    tr = np.flatnonzero(data.mask("train"))
    dv = np.flatnonzero(data.mask("dev"))
    if len(dv) == 0:
        raise ValueError("the development split is empty")
    if len(tr) == 0:
        raise ValueError("the training split is empty")
    A, D, N = len(data.lexicon), data.dim, len(data.noun_vocab)
    history: list = []
    fam, task = spec.family, spec.task

    if fam == "lr_noun_agnostic" and task == "aspect":
        p = _train_linear_aspect(spec, data, tr, dv, _rng(spec), history, "all", A)
        model = _new_model(spec, data, p)

    elif fam == "lr_noun_agnostic":
        W, b, trained = np.zeros((A, D)), np.zeros(A), np.zeros(A)
        for a in range(A):
            rt, rd = tr[data.aspect_idx[tr] == a], dv[data.aspect_idx[dv] == a]
            if len(rt) == 0:
                continue
            p = _train_linear_polarity(spec, data, rt, rd, _rng(spec, a), history,
                                       data.lexicon.names[a])
            W[a], b[a], trained[a] = p["w"], p["b"], 1.0
        model = _new_model(spec, data, {"W": W, "b": b, "trained": trained})

    elif fam == "lr_noun_specific" and task == "aspect":
        W, b, trained = np.zeros((N, A, D)), np.zeros((N, A)), np.zeros(N)
        for n in range(N):
            rt, rd = tr[data.noun_idx[tr] == n], dv[data.noun_idx[dv] == n]
            if len(rt) == 0:
                continue
            p = _train_linear_aspect(spec, data, rt, rd, _rng(spec, n), history,
                                     data.noun_vocab[n], A)
            W[n], b[n], trained[n] = p["W"], p["b"], 1.0
        model = _new_model(spec, data, {"W": W, "b": b, "trained": trained})

    elif fam == "lr_noun_specific":
        W, b, trained = np.zeros((N, A, D)), np.zeros((N, A)), np.zeros((N, A))
        for n in range(N):
            for a in range(A):
                cell_t = (data.noun_idx[tr] == n) & (data.aspect_idx[tr] == a)
                cell_d = (data.noun_idx[dv] == n) & (data.aspect_idx[dv] == a)
                if not cell_t.any():
                    continue
                tag = f"{data.noun_vocab[n]}/{data.lexicon.names[a]}"
                p = _train_linear_polarity(spec, data, tr[cell_t], dv[cell_d],
                                           _rng(spec, n, a), history, tag)
                W[n, a], b[n, a], trained[n, a] = p["w"], p["b"], 1.0
        model = _new_model(spec, data, {"W": W, "b": b, "trained": trained})

    elif fam == "lr_adj_noun":
        labels = list(dict.fromkeys(adj_noun_label(data.records[i].adjective, data.records[i].noun)
                                    for i in tr))
        pos = {lab: k for k, lab in enumerate(labels)}
        y = np.array([pos[adj_noun_label(data.records[i].adjective, data.records[i].noun)]
                      for i in tr])
        L = len(labels)
        rng = _rng(spec)
        params = {"W": glorot_uniform(rng, (L, D), D, L), "b": np.zeros(L)}
        model = _new_model(spec, data, params, labels=tuple(labels))
        dev_data = data.subset(dv)

        def dev_score(p):
            model.params = p
            return _task_metric(task, predict_dataset(model, dev_data, strict=False))
        model.params = _fit(params, _multinomial_loss(data.X[tr], y), len(tr), dev_score,
                            spec, rng, history, "all")

    else:
        model = _train_network(spec, data, tr, dv, history)

    model.history = history
    return model


def _train_network(spec, data, tr, dv, history) -> TrainedModel:
    A, D, N = len(data.lexicon), data.dim, len(data.noun_vocab)
    rng = _rng(spec)
    X = data.X[tr]
    Nn = cond.one_hot(data.noun_idx[tr], N)
    a_idx = data.aspect_idx[tr]
    pol = data.polarity[tr]
    if spec.family == "tensor_cond":
        params = cond.TensorCondParams.init(A, D, N, rng).as_dict()
    else:
        params = cond.ConcatMlpParams.init(A, D, N, spec.hidden, rng).as_dict()
    loss_grad = network_loss(spec.family, spec.task, X, Nn, a_idx, pol)
    model = _new_model(spec, data, params)
    dev_data = data.subset(dv)

    def dev_score(p):
        model.params = p
        return _task_metric(spec.task, predict_dataset(model, dev_data, strict=False))
    model.params = _fit(params, loss_grad, len(tr), dev_score, spec, rng, history, "all")
    return model


def network_loss(family: str, task: str, X, Nn, aspect_idx, polarity) -> Callable:
    """``loss_grad(params, rows)`` for a conditioned network on fixed data.

    Aspect task: softmax cross-entropy over the per-aspect units.
    Polarity task: logistic loss on the unit of each row's aspect only.
    The loss is the mean over ``rows``.
    """
    X, Nn = np.asarray(X, float), np.asarray(Nn, float)
    aspect_idx, polarity = np.asarray(aspect_idx), np.asarray(polarity)

    def loss_grad(p, rows):
        xb, nb, ab = X[rows], Nn[rows], aspect_idx[rows]
        if family == "tensor_cond":
            tp = cond.TensorCondParams.from_dict(p)
            scores = cond.tensor_condition_forward(tp, xb, nb)[0]
        else:
            mp = cond.ConcatMlpParams.from_dict(p)
            scores = cond.concat_mlp_forward(mp, xb, nb)[1]
        scores = np.atleast_2d(scores)
        if task == "aspect":
            loss, G = softmax_xent(scores, ab)
        else:
            r = np.arange(len(ab))
            losses, g = logistic_loss_pm1(scores[r, ab], polarity[rows])
            losses, g = np.atleast_1d(losses), np.atleast_1d(g)
            loss = float(losses.mean())
            G = np.zeros_like(scores)
            G[r, ab] = g / len(ab)
        if family == "tensor_cond":
            grads = cond.tensor_condition_backward(tp, xb, nb, G)
        else:
            grads = cond.concat_mlp_backward(mp, xb, nb, G)
        return loss, grads
    return loss_grad


# -- persistence -------------------------------------------------------------

_REQUIRED = {
    "lr_noun_agnostic": ("W", "b"),
    "lr_noun_specific": ("W", "b", "trained"),
    "lr_adj_noun": ("W", "b"),
    "concat_mlp": ("Wh", "bh", "Wo", "bo"),
    "tensor_cond": ("W0", "b0", "W", "B"),
}


def model_to_json(m: TrainedModel) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "spec": asdict(m.spec),
        "vocab_nouns": list(m.nouns),
        "vocab_aspects": list(m.aspects),
        "vocab_labels": None if m.labels is None else list(m.labels),
        "dim": m.dim,
        "lexicon": m.lexicon.to_json(),
        "params": {k: {"shape": list(v.shape), "data": [float(t) for t in np.ravel(v)]}
                   for k, v in sorted(m.params.items())},
    }


def save_model(m: TrainedModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_json(m)) + "\n", encoding="utf-8")


def model_from_json(obj: dict) -> TrainedModel:
    try:
        if obj.get("format_version") != FORMAT_VERSION:
            raise ModelFormatError(f"unsupported model format version {obj.get('format_version')!r}")
        spec = ModelSpec(**obj["spec"])
        params = {}
        for name, entry in obj["params"].items():
            shape = tuple(int(s) for s in entry["shape"])
            data = np.array(entry["data"], dtype=np.float64)
            if data.size != int(np.prod(shape)):
                raise ModelFormatError(f"parameter {name!r}: {data.size} values for shape {shape}")
            params[name] = data.reshape(shape)
        m = TrainedModel(spec=spec, params=params, nouns=tuple(obj["vocab_nouns"]),
                         aspects=tuple(obj["vocab_aspects"]), dim=int(obj["dim"]),
                         lexicon=lexicon_from_json(obj["lexicon"]),
                         labels=None if obj.get("vocab_labels") is None else tuple(obj["vocab_labels"]))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ModelFormatError):
            raise
        raise ModelFormatError(f"malformed model file: {exc!r}") from exc
    missing = [k for k in _REQUIRED[spec.family] if k not in params]
    if missing:
        raise ModelFormatError(f"model file lacks parameters {missing}")
    _check_shapes(m)
    return m


def _check_shapes(m: TrainedModel) -> None:
    A, D, N = len(m.aspects), m.dim, len(m.nouns)
    p, fam = m.params, m.spec.family
    expect = {
        "lr_noun_agnostic": {"W": (A, D), "b": (A,)},
        "lr_noun_specific": {"W": (N, A, D), "b": (N, A)},
        "lr_adj_noun": {"W": (len(m.labels or ()), D), "b": (len(m.labels or ()),)},
        "concat_mlp": {"Wh": (m.spec.hidden, D + N), "Wo": (A, m.spec.hidden)},
        "tensor_cond": {"W0": (A, D), "W": (A, D, N), "B": (A, N)},
    }[fam]
    for name, shape in expect.items():
        if p[name].shape != shape:
            raise ModelFormatError(f"parameter {name!r} has shape {p[name].shape}, expected {shape}")
        if not np.all(np.isfinite(p[name])):
            raise ModelFormatError(f"parameter {name!r} has non-finite values")


def load_model(path: str | Path) -> TrainedModel:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}:{exc.lineno}: cannot parse model file ({exc.msg})") from exc
    return model_from_json(obj)
