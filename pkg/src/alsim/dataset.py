"""Dataset ingestion, feature-matrix storage, TF-IDF, and split bookkeeping.

The store tracks every example's split membership (``pool``, ``labeled``,
``validation``, ``test``) and any number of named feature spaces, each a dense
row-major float32 matrix covering every example exactly once.

File formats owned by this module (the interchange contract):

* Dataset JSONL: one object per line with fields ``id`` (string), ``label``
  (integer), ``split`` (string), and optional ``text`` (string). Text is
  tokenized on load: lowercased, split on Unicode whitespace, leading and
  trailing punctuation stripped.
* FMAT binary feature matrix: magic bytes ``FMAT``, little-endian u32
  version (always 1), u64 rows, u64 cols, then rows*cols IEEE-754 float32
  little-endian values in row-major order. Row ids live in a sibling JSONL
  index file at ``<path>.index.jsonl`` with one ``{"row": n, "id": s}``
  object per line.
"""

import json
import math
import struct
import unicodedata
from dataclasses import dataclass

import numpy as np

from .errors import (
    FormatError,
    ParseError,
    SizingError,
    StateError,
    StratificationError,
    ValidationError,
)

SPLITS = ("pool", "labeled", "validation", "test")

FMAT_MAGIC = b"FMAT"
FMAT_VERSION = 1
FMAT_INDEX_SUFFIX = ".index.jsonl"


def round_half_up(x: float) -> int:
    """Round a non-negative real to the nearest integer, halves up."""
    return int(math.floor(x + 0.5))


def tokenize(text: str) -> tuple[str, ...]:
    """Lowercase, split on Unicode whitespace, strip edge punctuation.

    Tokens that are pure punctuation vanish; inner punctuation is kept
    (``"don't"`` stays one token).
    """
    out = []
    for raw in text.lower().split():
        start, end = 0, len(raw)
        while start < end and unicodedata.category(raw[start]).startswith("P"):
            start += 1
        while end > start and unicodedata.category(raw[end - 1]).startswith("P"):
            end -= 1
        if end > start:
            out.append(raw[start:end])
    return tuple(out)


@dataclass
class Example:
    """One data point: identity, gold label, optional tokens, split membership."""

    id: str
    label: int
    split: str
    tokens: tuple[str, ...] | None = None


class FeatureMatrix:
    """Dense row-major float32 matrix with example ids aligned to rows.

    Values are stored as float32; all distance/score arithmetic elsewhere in
    the package upcasts to float64. Construction validates finiteness, the
    row count, and row-id uniqueness.
    """

    def __init__(self, values: np.ndarray, row_ids):
        values = np.asarray(values, dtype=np.float32)
        if values.ndim != 2:
            raise ValidationError(f"feature matrix must be 2-D, got shape {values.shape}")
        row_ids = [str(r) for r in row_ids]
        if len(row_ids) != values.shape[0]:
            raise ValidationError(
                f"{len(row_ids)} row ids for {values.shape[0]} rows"
            )
        if len(set(row_ids)) != len(row_ids):
            raise ValidationError("duplicate row ids in feature matrix")
        if not np.all(np.isfinite(values)):
            raise ValidationError("feature matrix contains non-finite values")
        self.values = values
        self.row_ids = row_ids
        self._row_of = {rid: i for i, rid in enumerate(row_ids)}

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    def row_index(self, example_id: str) -> int:
        try:
            return self._row_of[example_id]
        except KeyError:
            raise StateError(f"id {example_id!r} not present in feature matrix") from None

    def row(self, example_id: str) -> np.ndarray:
        return self.values[self.row_index(example_id)]

    def subset(self, ids) -> "FeatureMatrix":
        """New matrix whose rows follow ``ids`` order."""
        ids = list(ids)
        idx = [self.row_index(i) for i in ids]
        return FeatureMatrix(self.values[idx], ids)

    def __eq__(self, other):
        return (
            isinstance(other, FeatureMatrix)
            and self.row_ids == other.row_ids
            and np.array_equal(self.values, other.values)
        )


@dataclass
class Vocabulary:
    """Dense token ids plus per-token document frequencies."""

    token_to_id: dict[str, int]
    doc_freq: np.ndarray  # aligned to token ids, each >= 1

    def __len__(self) -> int:
        return len(self.token_to_id)


class DatasetStore:
    """Collection of examples, the class count, and named feature spaces."""

    def __init__(self, C: int):
        if C < 2:
            raise ValidationError(f"class count must be >= 2, got {C}")
        self.C = C
        self.examples: dict[str, Example] = {}
        self.feature_spaces: dict[str, FeatureMatrix] = {}

    def add_example(self, example: Example) -> None:
        if example.id in self.examples:
            raise ValidationError(f"duplicate example id {example.id!r}")
        if not 0 <= example.label < self.C:
            raise ValidationError(
                f"label {example.label} out of range for C={self.C} (id {example.id!r})"
            )
        if example.split not in SPLITS:
            raise ValidationError(f"unknown split {example.split!r} (id {example.id!r})")
        self.examples[example.id] = example

    def __len__(self) -> int:
        return len(self.examples)

    def ids_in_split(self, split: str) -> list[str]:
        if split not in SPLITS:
            raise ValidationError(f"unknown split {split!r}")
        return [e.id for e in self.examples.values() if e.split == split]

    def split_of(self, example_id: str) -> str:
        return self.examples[example_id].split

    def labels_for(self, ids) -> np.ndarray:
        return np.array([self.examples[i].label for i in ids], dtype=np.int64)

    def tokens_for(self, ids) -> list[tuple[str, ...] | None]:
        return [self.examples[i].tokens for i in ids]

    def class_counts(self, split: str) -> np.ndarray:
        counts = np.zeros(self.C, dtype=np.int64)
        for e in self.examples.values():
            if e.split == split:
                counts[e.label] += 1
        return counts

    def register_feature_space(self, name: str, matrix: FeatureMatrix) -> None:
        """Attach a named feature space; it must cover every example exactly once."""
        if set(matrix.row_ids) != set(self.examples):
            missing = set(self.examples) - set(matrix.row_ids)
            extra = set(matrix.row_ids) - set(self.examples)
            raise ValidationError(
                f"feature space {name!r} does not cover the store "
                f"({len(missing)} missing, {len(extra)} unknown ids)"
            )
        self.feature_spaces[name] = matrix

    def snapshot_splits(self) -> dict[str, str]:
        return {i: e.split for i, e in self.examples.items()}

    def restore_splits(self, snapshot: dict[str, str]) -> None:
        for i, split in snapshot.items():
            self.examples[i].split = split


def load_jsonl(path, C: int) -> DatasetStore:
    """Read a dataset JSONL file into a store, validating labels against ``C``.

    Raises ParseError (with the line number) for unreadable lines and
    ValidationError for out-of-range labels or duplicate ids. Blank lines are
    ignored. An empty file yields an empty store.
    """
    store = DatasetStore(C)
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON ({exc.msg})", line=lineno) from None
            if not isinstance(obj, dict):
                raise ParseError("expected a JSON object", line=lineno)
            try:
                ex_id = obj["id"]
                label = obj["label"]
                split = obj["split"]
            except KeyError as exc:
                raise ParseError(f"missing field {exc.args[0]!r}", line=lineno) from None
            if not isinstance(ex_id, str) or not isinstance(label, int) or isinstance(label, bool):
                raise ParseError("id must be a string and label an integer", line=lineno)
            text = obj.get("text")
            tokens = tokenize(text) if isinstance(text, str) else None
            try:
                store.add_example(Example(id=ex_id, label=label, split=split, tokens=tokens))
            except ValidationError as exc:
                raise ValidationError(f"line {lineno}: {exc}") from None
    return store


def save_jsonl(store: DatasetStore, path) -> None:
    """Write the store back out in the dataset JSONL format."""
    with open(path, "w", encoding="utf-8") as fh:
        for e in store.examples.values():
            obj = {"id": e.id, "label": int(e.label), "split": e.split}
            if e.tokens is not None:
                obj["text"] = " ".join(e.tokens)
            fh.write(json.dumps(obj) + "\n")


def _index_path(path) -> str:
    return str(path) + FMAT_INDEX_SUFFIX


def write_feature_matrix(matrix: FeatureMatrix, path) -> None:
    """Write the FMAT file and its sibling row-id index."""
    header = FMAT_MAGIC + struct.pack("<IQQ", FMAT_VERSION, matrix.rows, matrix.cols)
    payload = np.ascontiguousarray(matrix.values, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)
    with open(_index_path(path), "w", encoding="utf-8") as fh:
        for n, rid in enumerate(matrix.row_ids):
            fh.write(json.dumps({"row": n, "id": rid}) + "\n")


def load_feature_matrix(path, index_path=None) -> FeatureMatrix:
    """Read an FMAT file (and its sibling index) back into memory.

    Raises FormatError for a bad magic/version or a payload whose length does
    not match the header exactly, and ValidationError for non-finite values.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    head_len = len(FMAT_MAGIC) + struct.calcsize("<IQQ")
    if len(blob) < head_len or blob[:4] != FMAT_MAGIC:
        raise FormatError(f"{path}: not an FMAT file (bad magic)")
    version, rows, cols = struct.unpack("<IQQ", blob[4:head_len])
    if version != FMAT_VERSION:
        raise FormatError(f"{path}: unsupported FMAT version {version}")
    expected = rows * cols * 4
    payload = blob[head_len:]
    if len(payload) != expected:
        raise FormatError(
            f"{path}: payload is {len(payload)} bytes, header promises {expected}"
        )
    values = np.frombuffer(payload, dtype="<f4").reshape(rows, cols)
    if not np.all(np.isfinite(values)):
        raise ValidationError(f"{path}: non-finite value in payload")

    if index_path is None:
        index_path = _index_path(path)
    try:
        fh = open(index_path, "r", encoding="utf-8")
    except FileNotFoundError:
        raise FormatError(f"{index_path}: missing row-id index for {path}") from None
    with fh:
        row_ids: list[str | None] = [None] * rows
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                n, rid = obj["row"], obj["id"]
            except (json.JSONDecodeError, KeyError, TypeError):
                raise ParseError("invalid index line", line=lineno) from None
            if not isinstance(n, int) or not 0 <= n < rows:
                raise ParseError(f"row {n!r} out of range", line=lineno)
            row_ids[n] = str(rid)
    if any(r is None for r in row_ids):
        raise FormatError(f"{index_path}: index does not cover all {rows} rows")
    return FeatureMatrix(values.copy(), row_ids)


def build_tfidf(store: DatasetStore, min_df: int = 1) -> FeatureMatrix:
    """Build the ``tfidf`` feature space from the stored token sequences.

    entry(i, t) = tf(i, t) * (ln((1 + N) / (1 + df(t))) + 1), rows then
    L2-normalized. Tokens with document frequency below ``min_df`` are
    dropped; documents left with no retained tokens become zero rows.
    """
    if min_df < 1:
        raise ValidationError(f"min_df must be >= 1, got {min_df}")
    ids = list(store.examples)
    token_lists = []
    for ex_id in ids:
        tokens = store.examples[ex_id].tokens
        if tokens is None:
            raise ValidationError(f"example {ex_id!r} has no tokens; cannot build tf-idf")
        token_lists.append(tokens)

    n_docs = len(ids)
    df: dict[str, int] = {}
    for tokens in token_lists:
        for tok in set(tokens):
            df[tok] = df.get(tok, 0) + 1
    kept = sorted(tok for tok, d in df.items() if d >= min_df)
    if not kept:
        raise ValidationError(f"vocabulary is empty after min_df={min_df} filtering")
    vocab = Vocabulary(
        token_to_id={tok: i for i, tok in enumerate(kept)},
        doc_freq=np.array([df[tok] for tok in kept], dtype=np.int64),
    )

    idf = np.log((1.0 + n_docs) / (1.0 + vocab.doc_freq.astype(np.float64))) + 1.0
    values = np.zeros((n_docs, len(vocab)), dtype=np.float64)
    for row, tokens in enumerate(token_lists):
        for tok in tokens:
            col = vocab.token_to_id.get(tok)
            if col is not None:
                values[row, col] += idf[col]
    norms = np.linalg.norm(values, axis=1)
    nonzero = norms > 0
    values[nonzero] /= norms[nonzero, None]

    matrix = FeatureMatrix(values, ids)
    store.register_feature_space("tfidf", matrix)
    return matrix


def _largest_remainder(total: int, weights: np.ndarray) -> np.ndarray:
    """Apportion ``total`` across classes proportionally to ``weights``.

    Floors the exact quotas, then hands the leftover units to the largest
    fractional remainders, ties broken by ascending class index.
    """
    quotas = total * weights / weights.sum()
    alloc = np.floor(quotas).astype(np.int64)
    leftover = total - int(alloc.sum())
    if leftover > 0:
        remainders = quotas - alloc
        order = sorted(range(len(weights)), key=lambda c: (-remainders[c], c))
        for c in order[:leftover]:
            alloc[c] += 1
    return alloc


def stratified_initial_sample(
    store: DatasetStore, fraction: float, rng: np.random.Generator
) -> list[str]:
    """Draw the initial labeled set from the pool, preserving label proportions.

    Moves the returned ids from ``pool`` to ``labeled``. The total is
    round(fraction * |pool|) apportioned by largest remainder, with every
    class guaranteed at least one example.
    """
    if not 0 < fraction <= 1:
        raise ValidationError(f"fraction must be in (0, 1], got {fraction}")
    pool_ids = store.ids_in_split("pool")
    if not pool_ids:
        raise StateError("pool is empty")
    counts = store.class_counts("pool")
    if np.any(counts == 0):
        absent = [c for c in range(store.C) if counts[c] == 0]
        raise StratificationError(f"classes {absent} absent from pool")

    total = round_half_up(fraction * len(pool_ids))
    if total < store.C:
        raise SizingError(
            f"requested size {total} cannot cover {store.C} classes"
        )
    alloc = _largest_remainder(total, counts.astype(np.float64))
    # Guarantee one per class; steal from the currently largest allocation.
    while np.any(alloc == 0):
        needy = int(np.argmin(alloc))
        donor = int(np.argmax(alloc))
        alloc[needy] += 1
        alloc[donor] -= 1
    over = [c for c in range(store.C) if alloc[c] > counts[c]]
    if over:
        raise StratificationError(
            f"classes {over} have fewer pool examples than their quota"
        )

    by_class: dict[int, list[str]] = {c: [] for c in range(store.C)}
    for ex_id in pool_ids:
        by_class[store.examples[ex_id].label].append(ex_id)
    chosen: list[str] = []
    for c in range(store.C):
        members = sorted(by_class[c])
        picks = rng.choice(len(members), size=int(alloc[c]), replace=False)
        chosen.extend(members[int(i)] for i in picks)
    transfer_to_labeled(store, chosen)
    return chosen


def transfer_to_labeled(store: DatasetStore, ids) -> DatasetStore:
    """Move ids from the pool into the labeled split. Empty input is a no-op."""
    ids = list(ids)
    for ex_id in ids:
        if ex_id not in store.examples:
            raise StateError(f"id {ex_id!r} not in store")
        if store.examples[ex_id].split != "pool":
            raise StateError(
                f"id {ex_id!r} is in split {store.examples[ex_id].split!r}, not pool"
            )
    for ex_id in ids:
        store.examples[ex_id].split = "labeled"
    return store
