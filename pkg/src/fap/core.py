"""Domain types: the aspect lexicon, image records and embedded datasets.

Polarity is always the integer -1 (left side of an aspect) or +1 (right
side). File formats:

* lexicon: JSON object ``{"aspects": [{"id", "name", "left", "right"}, ...]}``
* manifest: JSON Lines, one image per line with keys ``id``, ``noun``,
  ``aspect``, ``polarity``, ``adjective`` and optionally ``split``
* embeddings: text, first line ``#dim=D``, then ``id<TAB>v0<TAB>...``
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

SPLITS = ("train", "dev", "test", "unassigned")
LEFT, RIGHT = -1, 1


class DataError(ValueError):
    """Malformed or inconsistent input data."""


class LexiconError(DataError):
    pass


class UnknownAdjectiveError(LexiconError):
    def __init__(self, adjective: str):
        super().__init__(f"unknown adjective {adjective!r}")
        self.adjective = adjective


@dataclass(frozen=True)
class AspectEntry:
    id: int
    name: str
    left: tuple[str, ...]
    right: tuple[str, ...]

    def side(self, polarity: int) -> tuple[str, ...]:
        return self.left if polarity == LEFT else self.right


@dataclass(frozen=True)
class AspectLexicon:
    """Ordered aspects, each with two mutually exclusive adjective lists."""

    aspects: tuple[AspectEntry, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        index = {}
        for pos, entry in enumerate(self.aspects):
            if entry.id != pos + 1:
                raise LexiconError(
                    f"aspect {entry.name!r}: id {entry.id} breaks consecutive numbering "
                    f"(expected {pos + 1})")
            for pol, words in ((LEFT, entry.left), (RIGHT, entry.right)):
                if not words:
                    side = "left" if pol == LEFT else "right"
                    raise LexiconError(f"aspect {entry.name!r}: empty {side} side")
                for adj in words:
                    if adj in index:
                        other = self.aspects[index[adj][0] - 1].name
                        raise LexiconError(
                            f"aspect {entry.name!r}: duplicate adjective {adj!r} "
                            f"(already in aspect {other!r})")
                    index[adj] = (entry.id, pol)
        names = [a.name for a in self.aspects]
        if len(set(names)) != len(names):
            raise LexiconError(f"duplicate aspect names in {names}")
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.aspects)

    def __iter__(self) -> Iterator[AspectEntry]:
        return iter(self.aspects)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.aspects)

    @property
    def adjectives(self) -> tuple[str, ...]:
        return tuple(self._index)

    def __contains__(self, adjective: str) -> bool:
        return adjective in self._index

    def by_name(self, name: str) -> AspectEntry:
        for entry in self.aspects:
            if entry.name == name:
                return entry
        raise LexiconError(f"unknown aspect {name!r}")

    def by_id(self, aspect_id: int) -> AspectEntry:
        if not 1 <= aspect_id <= len(self.aspects):
            raise LexiconError(f"unknown aspect id {aspect_id}")
        return self.aspects[aspect_id - 1]

    def lookup(self, adjective: str) -> tuple[int, int]:
        try:
            return self._index[adjective]
        except KeyError:
            raise UnknownAdjectiveError(adjective) from None

    def to_json(self) -> dict:
        return {"aspects": [
            {"id": a.id, "name": a.name, "left": list(a.left), "right": list(a.right)}
            for a in self.aspects]}


def adjective_lookup(lexicon: AspectLexicon, adjective: str) -> tuple[int, int]:
    """Return ``(aspect_id, polarity)`` of the side containing ``adjective``."""
    return lexicon.lookup(adjective)


def lexicon_from_json(obj: Mapping) -> AspectLexicon:
    try:
        entries = obj["aspects"]
        aspects = tuple(
            AspectEntry(int(e["id"]), str(e["name"]),
                        tuple(str(w) for w in e["left"]),
                        tuple(str(w) for w in e["right"]))
            for e in entries)
    except (KeyError, TypeError, ValueError) as exc:
        raise LexiconError(f"malformed lexicon: {exc!r}") from exc
    return AspectLexicon(aspects)


def load_lexicon(path: str | Path) -> AspectLexicon:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise LexiconError(f"{path}:{exc.lineno}: {exc.msg}") from exc
    return lexicon_from_json(obj)


def default_lexicon() -> AspectLexicon:
    """The six-aspect lexicon shipped with the package."""
    text = resources.files("fap").joinpath("data/lexicon.json").read_text(encoding="utf-8")
    return lexicon_from_json(json.loads(text))


def save_lexicon(lexicon: AspectLexicon, path: str | Path) -> None:
    Path(path).write_text(json.dumps(lexicon.to_json(), indent=2) + "\n", encoding="utf-8")


def expand_aspect(lexicon: AspectLexicon, aspect_id: int,
                  synonyms: Mapping[str, Iterable[str]],
                  antonyms: Mapping[str, Iterable[str]]) -> AspectLexicon:
    """Grow both sides of one aspect with thesaurus relations until nothing changes.

    Synonyms of an adjective join its own side, antonyms the opposite side.
    A candidate already present anywhere in the lexicon is skipped, which
    keeps every side mutually exclusive.
    """
    target = lexicon.by_id(aspect_id)
    sides = {LEFT: list(target.left), RIGHT: list(target.right)}
    taken = set(lexicon.adjectives)
    changed = True
    while changed:
        changed = False
        for pol in (LEFT, RIGHT):
            for adj in list(sides[pol]):
                for rel, dest in ((synonyms, pol), (antonyms, -pol)):
                    for cand in sorted(rel.get(adj, ())):
                        if cand not in taken:
                            sides[dest].append(cand)
                            taken.add(cand)
                            changed = True
    entry = replace(target, left=tuple(sides[LEFT]), right=tuple(sides[RIGHT]))
    aspects = tuple(entry if a.id == aspect_id else a for a in lexicon.aspects)
    return AspectLexicon(aspects)


@dataclass(frozen=True)
class ImageRecord:
    id: str
    noun: str
    aspect: str
    polarity: int
    adjective: str
    split: str = "unassigned"

    def to_json(self) -> dict:
        return {"id": self.id, "noun": self.noun, "aspect": self.aspect,
                "polarity": self.polarity, "adjective": self.adjective,
                "split": self.split}


def check_record(record: ImageRecord, lexicon: AspectLexicon) -> None:
    aspect_id, polarity = lexicon.lookup(record.adjective)
    aspect = lexicon.by_id(aspect_id).name
    if record.polarity not in (LEFT, RIGHT):
        raise DataError(f"record {record.id!r}: polarity must be -1 or 1, got {record.polarity!r}")
    if aspect != record.aspect:
        raise DataError(f"record {record.id!r}: adjective {record.adjective!r} belongs to "
                        f"aspect {aspect!r}, not {record.aspect!r}")
    if polarity != record.polarity:
        raise DataError(f"record {record.id!r}: adjective side mismatch, {record.adjective!r} "
                        f"has polarity {polarity:+d}, record says {record.polarity:+d}")
    if record.split not in SPLITS:
        raise DataError(f"record {record.id!r}: unknown split {record.split!r}")


def iter_jsonl(path: str | Path) -> Iterator[tuple[int, dict]]:
    """Yield ``(line_number, object)`` for each non-blank line of a JSON Lines file."""
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: malformed JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise DataError(f"{path}:{lineno}: expected a JSON object")
            yield lineno, obj


def write_jsonl(path: str | Path, objects: Iterable[Mapping]) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for obj in objects:
            fh.write(json.dumps(obj) + "\n")


def read_manifest(path: str | Path) -> list[ImageRecord]:
    records = []
    for lineno, obj in iter_jsonl(path):
        try:
            records.append(ImageRecord(
                id=str(obj["id"]), noun=str(obj["noun"]), aspect=str(obj["aspect"]),
                polarity=int(obj["polarity"]), adjective=str(obj["adjective"]),
                split=str(obj.get("split", "unassigned"))))
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{path}:{lineno}: bad manifest entry ({exc!r})") from exc
    return records


def write_manifest(path: str | Path, records: Iterable[ImageRecord]) -> None:
    write_jsonl(path, (r.to_json() for r in records))


def read_embeddings(path: str | Path) -> tuple[int, dict[str, np.ndarray]]:
    path = Path(path)
    out: dict[str, np.ndarray] = {}
    with path.open(encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("#dim="):
            raise DataError(f"{path}:1: expected '#dim=D' header")
        try:
            dim = int(header[5:])
        except ValueError:
            raise DataError(f"{path}:1: bad dimension in header {header!r}") from None
        for lineno, line in enumerate(fh, 2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != dim + 1:
                raise DataError(f"{path}:{lineno}: dimension mismatch, expected {dim} "
                                f"values for {parts[0]!r}, got {len(parts) - 1}")
            try:
                values = np.array([float(v) for v in parts[1:]])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            if not np.all(np.isfinite(values)):
                raise DataError(f"{path}:{lineno}: non-finite embedding value")
            if parts[0] in out:
                raise DataError(f"{path}:{lineno}: duplicate embedding id {parts[0]!r}")
            out[parts[0]] = values
    return dim, out


def write_embeddings(path: str | Path, ids: Sequence[str], X: np.ndarray) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"#dim={X.shape[1]}\n")
        for id_, row in zip(ids, X):
            fh.write(id_ + "\t" + "\t".join(repr(float(v)) for v in row) + "\n")


class Dataset:
    """Image records joined with their embedding vectors.

    The embedding matrix ``X`` is aligned with ``records`` and read-only.
    Index arrays (``noun_idx``, ``aspect_idx``, ``polarity``) are derived once
    at construction; nouns are indexed by first appearance, aspects by
    lexicon order.
    """

    def __init__(self, lexicon: AspectLexicon, records: Sequence[ImageRecord],
                 embeddings: Mapping[str, np.ndarray] | np.ndarray, dim: int | None = None,
                 noun_vocab: Sequence[str] | None = None):
        self.lexicon = lexicon
        self.records = tuple(records)
        seen = set()
        for r in self.records:
            if r.id in seen:
                raise DataError(f"duplicate record id {r.id!r}")
            seen.add(r.id)
            check_record(r, lexicon)

        if isinstance(embeddings, np.ndarray):
            X = np.asarray(embeddings, dtype=np.float64)
            if X.ndim != 2 or X.shape[0] != len(self.records):
                raise DataError("embedding matrix must have one row per record")
        else:
            rows = []
            for r in self.records:
                if r.id not in embeddings:
                    raise DataError(f"missing embedding for record id {r.id!r}")
                rows.append(np.asarray(embeddings[r.id], dtype=np.float64))
            if dim is None:
                dim = len(rows[0]) if rows else 0
            for r, row in zip(self.records, rows):
                if row.shape != (dim,):
                    raise DataError(f"record {r.id!r}: embedding has {row.size} values, "
                                    f"expected {dim}")
            X = np.array(rows).reshape(len(rows), dim)
        if dim is not None and X.shape[1] != dim:
            raise DataError(f"embedding dimension {X.shape[1]} != {dim}")
        if not np.all(np.isfinite(X)):
            raise DataError("non-finite embedding values")
        X = X.copy()
        X.flags.writeable = False
        self.X = X
        self.dim = X.shape[1]

        vocab = list(noun_vocab) if noun_vocab is not None else []
        for r in self.records:
            if r.noun not in vocab:
                vocab.append(r.noun)
        self.noun_vocab = tuple(vocab)
        noun_pos = {n: i for i, n in enumerate(self.noun_vocab)}
        aspect_pos = {n: i for i, n in enumerate(lexicon.names)}
        self.noun_idx = np.array([noun_pos[r.noun] for r in self.records], dtype=np.int64)
        self.aspect_idx = np.array([aspect_pos[r.aspect] for r in self.records], dtype=np.int64)
        self.polarity = np.array([r.polarity for r in self.records], dtype=np.int64)
        self.splits = np.array([r.split for r in self.records], dtype=object)
        for arr in (self.noun_idx, self.aspect_idx, self.polarity, self.splits):
            arr.flags.writeable = False

    def __len__(self) -> int:
        return len(self.records)

    def __repr__(self) -> str:
        return (f"Dataset({len(self)} records, D={self.dim}, nouns={len(self.noun_vocab)}, "
                f"aspects={len(self.lexicon)})")

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(r.id for r in self.records)

    def embedding(self, id_: str) -> np.ndarray:
        for i, r in enumerate(self.records):
            if r.id == id_:
                return self.X[i]
        raise KeyError(id_)

    def mask(self, split: str) -> np.ndarray:
        if split == "all":
            return np.ones(len(self), dtype=bool)
        return self.splits == split

    def subset(self, mask: np.ndarray | Sequence[int], keep_vocab: bool = True) -> "Dataset":
        """Rows selected by a boolean mask or index list; noun vocabulary is kept."""
        idx = np.flatnonzero(mask) if np.asarray(mask).dtype == bool else np.asarray(mask, dtype=int)
        return Dataset(self.lexicon, [self.records[i] for i in idx], self.X[idx],
                       noun_vocab=self.noun_vocab if keep_vocab else None)

    def with_splits(self, splits: Mapping[str, str]) -> "Dataset":
        records = [replace(r, split=splits.get(r.id, r.split)) for r in self.records]
        return Dataset(self.lexicon, records, self.X, noun_vocab=self.noun_vocab)

    def combos(self) -> list[tuple[str, str]]:
        """Distinct (noun, aspect) pairs in noun-vocab, then lexicon order."""
        pairs = {(int(n), int(a)) for n, a in zip(self.noun_idx, self.aspect_idx)}
        return [(self.noun_vocab[n], self.lexicon.names[a]) for n, a in sorted(pairs)]

    def save(self, manifest_path: str | Path, embeddings_path: str | Path) -> None:
        write_manifest(manifest_path, self.records)
        write_embeddings(embeddings_path, self.ids, self.X)


def load_dataset(manifest_path: str | Path, embeddings_path: str | Path,
                 lexicon: AspectLexicon) -> Dataset:
    records = read_manifest(manifest_path)
    dim, emb = read_embeddings(embeddings_path)
    return Dataset(lexicon, records, emb, dim=dim)
