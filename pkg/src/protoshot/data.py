"""Embedding and split ingestion.

Embedding file format: UTF-8 CSV with header ``id,label,e0,...,e{d-1}``,
decimal point ``.``, LF or CRLF line endings. Splits are a JSON object with
keys ``base``, ``val`` and ``novel``, each a list of class labels.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .exceptions import EmbeddingFormatError, SplitError


@dataclass(frozen=True)
class EmbeddingSet:
    """Labeled fixed-dimension vectors, the sole input data modality."""

    ids: tuple[str, ...]
    labels: tuple[str, ...]
    vectors: np.ndarray  # (n, dim) float64
    by_label: dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.by_label:
            index: dict[str, list[int]] = {}
            for i, lab in enumerate(self.labels):
                index.setdefault(lab, []).append(i)
            object.__setattr__(
                self,
                "by_label",
                {lab: np.asarray(rows, dtype=np.intp) for lab, rows in index.items()},
            )

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def label_set(self) -> frozenset:
        return frozenset(self.by_label)

    @classmethod
    def from_arrays(cls, ids, labels, vectors) -> "EmbeddingSet":
        vectors = np.ascontiguousarray(vectors, dtype=np.float64)
        ids = tuple(str(i) for i in ids)
        labels = tuple(str(l) for l in labels)
        if vectors.ndim != 2:
            raise EmbeddingFormatError("vectors must be a 2-D array")
        if not (len(ids) == len(labels) == vectors.shape[0]):
            raise EmbeddingFormatError("ids, labels and vectors disagree in length")
        if len(set(ids)) != len(ids):
            seen, dup = set(), None
            for i in ids:
                if i in seen:
                    dup = i
                    break
                seen.add(i)
            raise EmbeddingFormatError(f"duplicate id {dup!r}")
        if any(not lab for lab in labels):
            raise EmbeddingFormatError("empty label")
        if not np.isfinite(vectors).all():
            raise EmbeddingFormatError("non-finite value in vectors")
        return cls(ids=ids, labels=labels, vectors=vectors)


def parse_embeddings(text: str, source: str = "<embeddings>") -> EmbeddingSet:
    lines = text.splitlines()
    if not lines:
        raise EmbeddingFormatError(f"{source}: empty file")
    header = [h.strip() for h in lines[0].split(",")]
    if len(header) < 3 or header[0] != "id" or header[1] != "label":
        raise EmbeddingFormatError(
            f"{source}:1: header must be 'id,label,e0,...,e{{d-1}}', got {lines[0]!r}"
        )
    dim = len(header) - 2
    expected = ["id", "label"] + [f"e{i}" for i in range(dim)]
    if header != expected:
        raise EmbeddingFormatError(
            f"{source}:1: malformed header columns {header[2:]!r}"
        )

    ids, labels, rows = [], [], []
    seen_ids = set()
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        parts = raw.split(",")
        if len(parts) != dim + 2:
            raise EmbeddingFormatError(
                f"{source}:{lineno}: expected {dim + 2} fields, got {len(parts)}"
            )
        rid, label = parts[0].strip(), parts[1].strip()
        if not rid:
            raise EmbeddingFormatError(f"{source}:{lineno}: empty id")
        if rid in seen_ids:
            raise EmbeddingFormatError(f"{source}:{lineno}: duplicate id {rid!r}")
        if not label:
            raise EmbeddingFormatError(f"{source}:{lineno}: empty label")
        try:
            vec = [float(tok) for tok in parts[2:]]
        except ValueError as exc:
            raise EmbeddingFormatError(f"{source}:{lineno}: {exc}") from None
        if not all(np.isfinite(vec)):
            bad = next(tok for tok, v in zip(parts[2:], vec) if not np.isfinite(v))
            raise EmbeddingFormatError(
                f"{source}:{lineno}: non-finite value {bad.strip()!r}"
            )
        seen_ids.add(rid)
        ids.append(rid)
        labels.append(label)
        rows.append(vec)
    if not rows:
        raise EmbeddingFormatError(f"{source}: no data rows")
    return EmbeddingSet.from_arrays(ids, labels, np.asarray(rows, dtype=np.float64))


def load_embeddings(path) -> EmbeddingSet:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise EmbeddingFormatError(f"cannot read embeddings file: {exc}") from None
    return parse_embeddings(text, source=str(path))


def save_embeddings(data: EmbeddingSet, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("id,label," + ",".join(f"e{i}" for i in range(data.dim)) + "\n")
        for rid, lab, vec in zip(data.ids, data.labels, data.vectors):
            fh.write(f"{rid},{lab}," + ",".join(format(v, ".17g") for v in vec) + "\n")


@dataclass(frozen=True)
class DatasetSplit:
    """Disjoint base/val/novel class partitions."""

    base: tuple[str, ...]
    val: tuple[str, ...]
    novel: tuple[str, ...]

    def part(self, name: str) -> tuple[str, ...]:
        if name not in ("base", "val", "novel"):
            raise SplitError(f"unknown split part {name!r}")
        return getattr(self, name)

    @classmethod
    def from_mapping(cls, mapping, source: str = "<splits>") -> "DatasetSplit":
        missing = [k for k in ("base", "val", "novel") if k not in mapping]
        if missing:
            raise SplitError(f"{source}: missing keys {missing}")
        extra = sorted(set(mapping) - {"base", "val", "novel"})
        if extra:
            raise SplitError(f"{source}: unknown keys {extra}")
        parts = {}
        for key in ("base", "val", "novel"):
            val = mapping[key]
            if not isinstance(val, (list, tuple)) or not all(
                isinstance(v, str) for v in val
            ):
                raise SplitError(f"{source}: {key} must be a list of labels")
            if len(set(val)) != len(val):
                raise SplitError(f"{source}: repeated label inside {key}")
            parts[key] = tuple(sorted(val))
        for a, b in (("base", "val"), ("base", "novel"), ("val", "novel")):
            overlap = sorted(set(parts[a]) & set(parts[b]))
            if overlap:
                raise SplitError(
                    f"{source}: label {overlap[0]!r} appears in both {a} and {b}"
                )
        return cls(**parts)

    def validate_against(self, known_labels, source: str = "<splits>") -> None:
        known = set(known_labels)
        for key in ("base", "val", "novel"):
            for lab in self.part(key):
                if lab not in known:
                    raise SplitError(
                        f"{source}: unknown label {lab!r} in {key} split"
                    )


def load_splits(path, data: EmbeddingSet | None = None) -> DatasetSplit:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            try:
                payload = json.load(fh)
            except json.JSONDecodeError as exc:
                raise SplitError(
                    f"{path}:{exc.lineno}: invalid JSON: {exc.msg}"
                ) from None
    except OSError as exc:
        raise SplitError(f"cannot read splits file: {exc}") from None
    if not isinstance(payload, dict):
        raise SplitError(f"{path}: top level must be an object")
    split = DatasetSplit.from_mapping(payload, source=str(path))
    if data is not None:
        split.validate_against(data.label_set, source=str(path))
    return split


def save_splits(split: DatasetSplit, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(
            {"base": list(split.base), "val": list(split.val), "novel": list(split.novel)},
            fh,
            indent=2,
        )
        fh.write("\n")
