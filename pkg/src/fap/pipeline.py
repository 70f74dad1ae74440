"""Dataset compilation, polarity balancing, train/dev/test splits and synthetic data.

The compilation rules are applied repeatedly until none of them removes
anything more:

1. adjective-noun combinations with fewer than 20 images are dropped;
2. a noun-aspect combination survives only with at least 100 images on
   each polarity;
3. nouns with fewer than 500 images and fewer than two aspects are dropped
   (``mode="and"``; ``mode="or"`` drops nouns failing either condition);
4. aspects with fewer than 500 images on either polarity are dropped.

Per-cell random streams are derived from ``(seed, noun, aspect, polarity)``
so results do not depend on record order or on processing order.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.special import ndtr

from .core import AspectLexicon, Dataset, ImageRecord, UnknownAdjectiveError

# Images per noun-aspect combination in the published dataset (both polarities).
PUBLISHED_COUNTS: dict[tuple[str, str], int] = {
    ("people", "age"): 7352, ("people", "rareness"): 1620,
    ("guy", "evaluation"): 1672, ("guy", "age"): 296,
    ("man", "evaluation"): 554, ("man", "age"): 5846,
    ("baby", "happiness"): 690, ("baby", "activity"): 298,
    ("boy", "evaluation"): 1558, ("boy", "happiness"): 602,
    ("cat", "evaluation"): 874, ("cat", "age"): 960, ("cat", "happiness"): 214,
    ("dog", "evaluation"): 2094, ("dog", "age"): 402, ("dog", "happiness"): 630,
    ("dog", "activity"): 922,
    ("building", "size"): 312, ("building", "age"): 9912,
    ("house", "size"): 2084, ("house", "age"): 7814,
    ("architecture", "evaluation"): 528, ("architecture", "age"): 8746,
    ("hotel", "evaluation"): 342, ("hotel", "age"): 5384,
    ("city", "size"): 698, ("city", "age"): 2372, ("city", "activity"): 286,
    ("tree", "size"): 2428, ("tree", "age"): 328,
}

# Combinations withheld from training in the 0-shot polarity protocol.
DEFAULT_HOLDOUTS: tuple[tuple[str, str], ...] = (
    ("man", "evaluation"), ("boy", "happiness"), ("cat", "happiness"), ("dog", "age"),
    ("building", "size"), ("hotel", "evaluation"), ("city", "age"),
)


def cell_rng(seed: int, *key) -> np.random.Generator:
    """Generator for one cell, keyed by strings/ints independent of call order."""
    parts = [int(seed)]
    for k in key:
        parts.append(zlib.crc32(k.encode("utf-8")) if isinstance(k, str) else int(k) + 2)
    return np.random.default_rng(parts)


# -- compilation -------------------------------------------------------------

@dataclass(frozen=True)
class TagRecord:
    id: str
    noun: str
    adjective: str


@dataclass
class CompileResult:
    records: list[ImageRecord]
    log: list[dict] = field(default_factory=list)


@dataclass(frozen=True)
class Thresholds:
    min_pair: int = 20
    min_polarity: int = 100
    min_noun_images: int = 500
    min_noun_aspects: int = 2
    min_aspect_polarity: int = 500


def _count_ids(rows, key) -> dict:
    groups: dict = {}
    for r in rows:
        groups.setdefault(key(r), set()).add(r.id)
    return {k: len(v) for k, v in groups.items()}


def compile_dataset(records: Iterable, lexicon: AspectLexicon,
                    exclusions: Iterable[tuple[str, str]] = (), mode: str = "and",
                    thresholds: Thresholds = Thresholds()) -> CompileResult:
    """Resolve tag records against the lexicon and apply the cleaning rules.

    ``records`` are :class:`TagRecord` or anything with ``id``, ``noun`` and
    ``adjective``. ``exclusions`` holds ``(adjective, noun)`` pairs rejected by
    manual inspection. The log lists every removal as
    ``{"rule", "target", "count"}`` where ``count`` is the number of images.
    """
    if mode not in ("and", "or"):
        raise ValueError(f"mode must be 'and' or 'or', got {mode!r}")
    t = thresholds
    log: list[dict] = []
    excluded = {(a, n) for a, n in exclusions}
    names = lexicon.names

    rows: list[ImageRecord] = []
    unknown: dict[str, int] = {}
    dropped_excl: dict[tuple[str, str], int] = {}
    seen = set()
    for r in records:
        key = (str(r.id), r.noun, r.adjective)
        if key in seen:
            continue
        seen.add(key)
        try:
            aspect_id, pol = lexicon.lookup(r.adjective)
        except UnknownAdjectiveError:
            unknown[r.adjective] = unknown.get(r.adjective, 0) + 1
            continue
        if (r.adjective, r.noun) in excluded:
            dropped_excl[(r.adjective, r.noun)] = dropped_excl.get((r.adjective, r.noun), 0) + 1
            continue
        rows.append(ImageRecord(str(r.id), r.noun, names[aspect_id - 1], pol, r.adjective))
    for adj in sorted(unknown):
        log.append({"rule": "unknown_adjective", "target": adj, "count": unknown[adj]})
    for (adj, noun) in sorted(dropped_excl):
        log.append({"rule": "manual_exclusion", "target": f"{adj} {noun}",
                    "count": dropped_excl[(adj, noun)]})

    def drop(rows, bad, key, rule, fmt, counts):
        for k in sorted(bad):
            log.append({"rule": rule, "target": fmt(k), "count": counts[k]})
        return [r for r in rows if key(r) not in bad]

    changed = True
    while changed:
        changed = False

        pair_counts = _count_ids(rows, lambda r: (r.adjective, r.noun))
        bad = {k for k, c in pair_counts.items() if c < t.min_pair}
        if bad:
            rows = drop(rows, bad, lambda r: (r.adjective, r.noun), "min_adjective_noun_images",
                        lambda k: f"{k[0]} {k[1]}", pair_counts)
            changed = True

        pol_counts = _count_ids(rows, lambda r: (r.noun, r.aspect, r.polarity))
        combo_totals = _count_ids(rows, lambda r: (r.noun, r.aspect))
        bad = {k for k in combo_totals
               if min(pol_counts.get(k + (-1,), 0), pol_counts.get(k + (1,), 0)) < t.min_polarity}
        if bad:
            rows = drop(rows, bad, lambda r: (r.noun, r.aspect), "min_polarity_images",
                        lambda k: f"{k[0]}/{k[1]}", combo_totals)
            changed = True

        noun_totals = _count_ids(rows, lambda r: r.noun)
        noun_aspects: dict[str, set] = {}
        for r in rows:
            noun_aspects.setdefault(r.noun, set()).add(r.aspect)
        bad = set()
        for noun, total in noun_totals.items():
            small = total < t.min_noun_images
            narrow = len(noun_aspects[noun]) < t.min_noun_aspects
            if (small and narrow) if mode == "and" else (small or narrow):
                bad.add(noun)
        if bad:
            rows = drop(rows, bad, lambda r: r.noun, "noun_size", str, noun_totals)
            changed = True

        asp_pol = _count_ids(rows, lambda r: (r.aspect, r.polarity))
        asp_totals = _count_ids(rows, lambda r: r.aspect)
        bad = {a for a in asp_totals
               if min(asp_pol.get((a, -1), 0), asp_pol.get((a, 1), 0)) < t.min_aspect_polarity}
        if bad:
            rows = drop(rows, bad, lambda r: r.aspect, "aspect_size", str, asp_totals)
            changed = True

    return CompileResult(rows, log)


def _canonical_key(lexicon: AspectLexicon, noun_pos: Mapping[str, int]):
    adj_pos = {a: i for i, a in enumerate(lexicon.adjectives)}
    asp_pos = {n: i for i, n in enumerate(lexicon.names)}

    def key(r):
        return (noun_pos[r.noun], asp_pos[r.aspect], r.polarity, adj_pos[r.adjective])
    return key


def _balance_mask(records: Sequence[ImageRecord], lexicon: AspectLexicon, seed: int,
                  log: list | None = None) -> np.ndarray:
    noun_pos: dict[str, int] = {}
    for r in records:
        noun_pos.setdefault(r.noun, len(noun_pos))
    key = _canonical_key(lexicon, noun_pos)

    keep = np.zeros(len(records), dtype=bool)
    owner: dict[str, int] = {}
    for i in sorted(range(len(records)), key=lambda i: (key(records[i]), i)):
        owner.setdefault(records[i].id, i)
    n_dupes = len(records) - len(owner)
    if n_dupes and log is not None:
        log.append({"rule": "duplicate_image", "target": "*", "count": n_dupes})

    cells: dict[tuple[str, str], dict[int, list[int]]] = {}
    for i in sorted(owner.values()):
        r = records[i]
        cells.setdefault((r.noun, r.aspect), {-1: [], 1: []})[r.polarity].append(i)
    for (noun, aspect) in sorted(cells, key=lambda c: (noun_pos[c[0]], lexicon.names.index(c[1]))):
        sides = cells[(noun, aspect)]
        k = min(len(sides[-1]), len(sides[1]))
        removed = 0
        for pol in (-1, 1):
            idx = sorted(sides[pol], key=lambda i: records[i].id)
            if len(idx) > k:
                pick = cell_rng(seed, noun, aspect, pol).choice(len(idx), size=k, replace=False)
                idx = [idx[j] for j in sorted(pick)]
                removed += len(sides[pol]) - k
            keep[idx] = True
        if removed and log is not None:
            log.append({"rule": "balance", "target": f"{noun}/{aspect}", "count": removed})
    return keep


def balance(data, seed: int, lexicon: AspectLexicon | None = None, log: list | None = None):
    """Downsample each noun-aspect combination to equal polarity counts.

    Accepts a :class:`Dataset` (returns a Dataset) or a sequence of records
    (returns a list; ``lexicon`` is then required). An image id tagged for
    several combinations is first assigned to the earliest combination in
    canonical order (noun first-appearance, aspect id, polarity, adjective).
    """
    if isinstance(data, Dataset):
        return data.subset(_balance_mask(data.records, data.lexicon, seed, log))
    if lexicon is None:
        raise ValueError("lexicon is required when balancing plain records")
    records = list(data)
    mask = _balance_mask(records, lexicon, seed, log)
    return [r for r, k in zip(records, mask) if k]


def build_dataset(records: Iterable, lexicon: AspectLexicon,
                  exclusions: Iterable[tuple[str, str]] = (), mode: str = "and", seed: int = 0,
                  thresholds: Thresholds = Thresholds()) -> CompileResult:
    """Compile and balance, repeating until neither step changes the records."""
    exclusions = list(exclusions)
    current = list(records)
    log: list[dict] = []
    while True:
        res = compile_dataset(current, lexicon, exclusions, mode, thresholds)
        log.extend(res.log)
        balanced = balance(res.records, seed, lexicon, log)
        as_tags = [TagRecord(r.id, r.noun, r.adjective) for r in balanced]
        prev = [TagRecord(str(r.id), r.noun, r.adjective) for r in current]
        if as_tags == prev:
            return CompileResult(balanced, log)
        current = as_tags


# -- splits ------------------------------------------------------------------

@dataclass(frozen=True)
class SplitPlan:
    kind: str = "standard"
    ratios: tuple[float, ...] | None = None
    holdouts: tuple[tuple[str, str], ...] = ()
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("standard", "zeroshot"):
            raise ValueError(f"unknown split kind {self.kind!r}")
        ratios = self.ratios
        if ratios is None:
            ratios = (0.5, 0.2, 0.3) if self.kind == "standard" else (0.7, 0.3)
        ratios = tuple(float(r) for r in ratios)
        object.__setattr__(self, "ratios", ratios)
        object.__setattr__(self, "holdouts", tuple(tuple(h) for h in self.holdouts))
        expected = 3 if self.kind == "standard" else 2
        if len(ratios) != expected:
            raise ValueError(f"{self.kind} split needs {expected} ratios, got {ratios}")
        if any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
            raise ValueError(f"ratios must be non-negative and sum to 1, got {ratios}")
        if (self.kind == "zeroshot") != bool(self.holdouts):
            raise ValueError("holdout combinations are required for, and only for, zeroshot splits")

    @classmethod
    def zeroshot(cls, holdouts=DEFAULT_HOLDOUTS, seed: int = 0, ratios=None) -> "SplitPlan":
        return cls("zeroshot", ratios, tuple(holdouts), seed)


def allocate(n: int, ratios: Sequence[float]) -> list[int]:
    """Split ``n`` items by ``ratios``; leftovers go to earlier parts first."""
    counts = [math.floor(r * n + 1e-9) for r in ratios]
    rest = n - sum(counts)
    for i in range(rest):
        counts[i % len(counts)] += 1
    return counts


def make_split(data: Dataset, plan: SplitPlan) -> Dataset:
    """Label every record ``train``/``dev``/``test``, stratified per (noun, aspect, polarity)."""
    combos = set(data.combos())
    for h in plan.holdouts:
        if h not in combos:
            raise ValueError(f"holdout combination {h[0]}/{h[1]} does not occur in the dataset")
    holdouts = set(plan.holdouts)
    names = ("train", "dev", "test") if plan.kind == "standard" else ("train", "dev")

    cells: dict[tuple[str, str, int], list[str]] = {}
    for r in data.records:
        cells.setdefault((r.noun, r.aspect, r.polarity), []).append(r.id)
    labels: dict[str, str] = {}
    for (noun, aspect, pol), ids in cells.items():
        if (noun, aspect) in holdouts:
            labels.update((i, "test") for i in ids)
            continue
        ids = sorted(ids)
        order = cell_rng(plan.seed, noun, aspect, pol).permutation(len(ids))
        start = 0
        for name, count in zip(names, allocate(len(ids), plan.ratios)):
            for j in order[start:start + count]:
                labels[ids[j]] = name
            start += count
    return data.with_splits(labels)


def split_counts(data: Dataset) -> dict[tuple[str, str, int], dict[str, int]]:
    out: dict = {}
    for r in data.records:
        cell = out.setdefault((r.noun, r.aspect, r.polarity),
                              {"train": 0, "dev": 0, "test": 0, "unassigned": 0})
        cell[r.split] += 1
    return out


# -- synthetic data ----------------------------------------------------------

@dataclass(frozen=True)
class SynthConfig:
    """Planted Gaussian clusters with known optimal accuracy.

    Every (noun, aspect, polarity) cell is a spherical Gaussian with standard
    deviation ``noise``. The two polarity means of a cell sit
    ``separation * noise`` apart along an aspect-specific direction, around an
    aspect-specific centre. With ``noun_flip`` every second noun (in ``nouns``
    order) has the polarity direction reversed, so the embedding alone says
    nothing about polarity.
    """

    dim: int = 16
    nouns: tuple[str, ...] = ("dog", "cat")
    aspects: Mapping[str, Sequence[str]] | None = None
    images_per_cell: int | Mapping[tuple[str, str], int] = 400
    separation: float = 6.0
    noise: float = 1.0
    noun_flip: bool = True
    aspect_spread: float = 4.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "nouns", tuple(self.nouns))
        if self.dim < 1 or not self.nouns:
            raise ValueError("dim and the noun list must be non-empty")
        if self.separation < 0 or self.noise <= 0 or self.aspect_spread < 0:
            raise ValueError("separation and aspect_spread must be >= 0, noise > 0")
        for noun in self.nouns:
            for aspect in self.noun_aspects(noun):
                if self.count(noun, aspect) < 1:
                    raise ValueError(f"cell {noun}/{aspect} needs a positive image count")

    def noun_aspects(self, noun: str) -> tuple[str, ...]:
        if self.aspects is None:
            return ("age",)
        return tuple(self.aspects.get(noun, ()))

    def count(self, noun: str, aspect: str) -> int:
        if isinstance(self.images_per_cell, Mapping):
            return int(self.images_per_cell[(noun, aspect)])
        return int(self.images_per_cell)

    def flipped(self, noun: str) -> bool:
        return self.noun_flip and self.nouns.index(noun) % 2 == 1

    def to_json(self) -> dict:
        out = {"dim": self.dim, "nouns": list(self.nouns),
               "aspects": None if self.aspects is None else {k: list(v) for k, v in self.aspects.items()},
               "separation": self.separation, "noise": self.noise, "noun_flip": self.noun_flip,
               "aspect_spread": self.aspect_spread, "seed": self.seed}
        if isinstance(self.images_per_cell, Mapping):
            out["images_per_cell"] = [[n, a, c] for (n, a), c in self.images_per_cell.items()]
        else:
            out["images_per_cell"] = self.images_per_cell
        return out

    @classmethod
    def from_json(cls, obj: Mapping) -> "SynthConfig":
        obj = dict(obj)
        ipc = obj.get("images_per_cell", 400)
        if isinstance(ipc, list):
            obj["images_per_cell"] = {(n, a): int(c) for n, a, c in ipc}
        if obj.get("nouns") is not None:
            obj["nouns"] = tuple(obj["nouns"])
        return cls(**obj)


def published_layout_config(scale: float = 0.1, min_per_polarity: int = 10, **kwargs) -> SynthConfig:
    """Synthetic layout mirroring the published noun/aspect table, counts scaled down."""
    nouns: list[str] = []
    aspects: dict[str, list[str]] = {}
    counts = {}
    for (noun, aspect), total in PUBLISHED_COUNTS.items():
        if noun not in aspects:
            nouns.append(noun)
            aspects[noun] = []
        aspects[noun].append(aspect)
        counts[(noun, aspect)] = max(min_per_polarity, int(round(total / 2 * scale)))
    kwargs.setdefault("noun_flip", False)
    return SynthConfig(nouns=tuple(nouns), aspects=aspects, images_per_cell=counts, **kwargs)


def _unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def oracle_report(cfg: SynthConfig, lexicon: AspectLexicon) -> dict:
    """Optimal polarity accuracies implied by the generating parameters.

    Each cell is a two-Gaussian problem with equal spherical covariance, so
    the optimal accuracy is ``Phi(separation / 2)``. Without the noun, the
    best rule for an aspect follows the majority direction among its nouns;
    under the per-noun averaged metric its accuracy is
    ``(max(u, f) * Phi + min(u, f) * (1 - Phi)) / (u + f)`` for ``u``
    unflipped and ``f`` flipped nouns.
    """
    phi = float(ndtr(cfg.separation / 2.0))
    cells = []
    per_noun: dict[str, list[float]] = {}
    per_aspect: dict[str, list[str]] = {}
    for noun in cfg.nouns:
        for aspect in cfg.noun_aspects(noun):
            cells.append({"noun": noun, "aspect": aspect, "bayes_accuracy": phi})
            per_noun.setdefault(noun, []).append(phi)
            per_aspect.setdefault(aspect, []).append(noun)
    blind = {}
    for aspect, nouns in per_aspect.items():
        f = sum(cfg.flipped(n) for n in nouns)
        u = len(nouns) - f
        blind[aspect] = (max(u, f) * phi + min(u, f) * (1.0 - phi)) / (u + f)
    order = [a for a in lexicon.names if a in blind]
    return {
        "separation": cfg.separation,
        "noise": cfg.noise,
        "flipped_nouns": [n for n in cfg.nouns if cfg.flipped(n)],
        "cells": cells,
        "per_noun": {n: float(np.mean(v)) for n, v in per_noun.items()},
        "bayes_polarity_accuracy": phi,
        "noun_blind": {a: blind[a] for a in order},
        "noun_blind_ceiling": float(np.mean([blind[a] for a in order])) if order else None,
    }


def synth_generate(cfg: SynthConfig, lexicon: AspectLexicon) -> tuple[Dataset, dict]:
    """Sample a dataset from ``cfg``; returns it with its oracle report."""
    used = {a for n in cfg.nouns for a in cfg.noun_aspects(n)}
    for a in used:
        lexicon.by_name(a)
    geometry = {}
    for aspect in lexicon.names:
        if aspect in used:
            rng = cell_rng(cfg.seed, "geometry", aspect)
            centre = cfg.aspect_spread * cfg.noise * _unit(rng, cfg.dim)
            geometry[aspect] = (centre, _unit(rng, cfg.dim))
    half = cfg.separation * cfg.noise / 2.0

    records, rows = [], []
    for noun in cfg.nouns:
        sign = -1.0 if cfg.flipped(noun) else 1.0
        for aspect in sorted(cfg.noun_aspects(noun), key=lexicon.names.index):
            centre, direction = geometry[aspect]
            entry = lexicon.by_name(aspect)
            for pol in (-1, 1):
                rng = cell_rng(cfg.seed, noun, aspect, pol)
                k = cfg.count(noun, aspect)
                mean = centre + pol * sign * half * direction
                X = mean + cfg.noise * rng.standard_normal((k, cfg.dim))
                side = entry.side(pol)
                adjs = rng.integers(len(side), size=k)
                tag = "L" if pol < 0 else "R"
                for j in range(k):
                    records.append(ImageRecord(f"{noun}-{aspect}-{tag}{j:05d}", noun, aspect, pol,
                                               side[adjs[j]]))
                rows.append(X)
    X = np.vstack(rows) if rows else np.zeros((0, cfg.dim))
    return Dataset(lexicon, records, X), oracle_report(cfg, lexicon)
