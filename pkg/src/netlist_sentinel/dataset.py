"""Record collections: CSV persistence, combining, seeded splits, balance."""

from __future__ import annotations

import csv
import io
import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .featex import NON_TROJAN, TROJAN, FeatureVector, NetRecord, Origin

CSV_HEADER = ("part", "version", "line", "name", "net", "LGFi", "FFi", "FFo", "PI", "PO", "class")


@dataclass(frozen=True)
class Dataset:
    records: tuple[NetRecord, ...]
    source_manifest: tuple[tuple[str, str, str], ...] = ()

    def __post_init__(self):
        seen = set()
        for rec in self.records:
            if rec.key in seen:
                raise ValueError(f"duplicate record {rec.key}")
            seen.add(rec.key)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def count(self, label: int) -> int:
        return sum(1 for r in self.records if r.class_label == label)

    def features(self) -> list[tuple[int, ...]]:
        return [tuple(r.features) for r in self.records]

    def labels(self) -> list[int]:
        return [r.class_label for r in self.records]

    def sorted(self) -> "Dataset":
        return Dataset(tuple(sorted(self.records, key=lambda r: r.key)), self.source_manifest)


@dataclass(frozen=True)
class Split:
    train: Dataset
    test: Dataset
    seed: int
    test_fraction: float
    test_keys: tuple[tuple[str, str, str], ...] = field(default=())

    def manifest(self) -> dict:
        return {
            "seed": self.seed,
            "test_fraction": self.test_fraction,
            "test_keys": [list(k) for k in self.test_keys],
        }


def combine(datasets: Iterable[Dataset]) -> Dataset:
    records: list[NetRecord] = []
    manifest: list[tuple[str, str, str]] = []
    for ds in datasets:
        records.extend(ds.records)
        manifest.extend(ds.source_manifest)
    return Dataset(tuple(records), tuple(manifest))


def holdout_size(total: int, test_fraction: float) -> int:
    """Half-up rounding of ``test_fraction * total``."""
    return int(math.floor(test_fraction * total + 0.5))


def split(ds: Dataset, test_fraction: float = 0.2, seed: int = 0) -> Split:
    """Seeded uniform split; records are canonically sorted first."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie in (0, 1)")
    if len(ds) == 0:
        raise ValueError("cannot split an empty dataset")
    ordered = sorted(ds.records, key=lambda r: r.key)
    n_test = holdout_size(len(ordered), test_fraction)
    picked = set(random.Random(seed).sample(range(len(ordered)), n_test))
    test = tuple(r for i, r in enumerate(ordered) if i in picked)
    train = tuple(r for i, r in enumerate(ordered) if i not in picked)
    return Split(
        train=Dataset(train, ds.source_manifest),
        test=Dataset(test, ds.source_manifest),
        seed=seed,
        test_fraction=test_fraction,
        test_keys=tuple(r.key for r in test),
    )


def balance_from_counts(n_nontrojan: int, n_trojan: int) -> float:
    if n_trojan <= 0:
        raise ValueError("balance is undefined without trojan samples")
    return n_nontrojan / n_trojan


def balance(ds: Dataset | Sequence[int], label: int = TROJAN) -> float:
    """Class weight: |non-trojan| / |trojan| for trojans, 1.0 otherwise."""
    if label == NON_TROJAN:
        return 1.0
    labels = ds.labels() if isinstance(ds, Dataset) else list(ds)
    n_t = sum(1 for y in labels if y == TROJAN)
    return balance_from_counts(len(labels) - n_t, n_t)


# CSV ----------------------------------------------------------------------


def write_csv(records: Iterable[NetRecord], path: str | Path | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        o = r.origin
        w.writerow([o.part, o.version, o.line, o.name, o.net, *r.features, r.class_label])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def parse_csv(text: str, source: str = "<csv>") -> Dataset:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
        raise ValueError(f"{source}: expected header {','.join(CSV_HEADER)}")
    records = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(CSV_HEADER):
            raise ValueError(f"{source}:{lineno}: expected {len(CSV_HEADER)} fields, got {len(row)}")
        try:
            feats = FeatureVector(*(int(v) for v in row[5:10]))
            label = int(row[10])
            line = int(row[2])
        except ValueError as exc:
            raise ValueError(f"{source}:{lineno}: {exc}") from None
        if label not in (TROJAN, NON_TROJAN) or min(feats) < 0:
            raise ValueError(f"{source}:{lineno}: invalid class or negative feature")
        records.append(NetRecord(Origin(row[0], row[1], line, row[3], row[4]), feats, label))
    manifest = tuple(sorted({(r.origin.part, r.origin.version, source) for r in records}))
    return Dataset(tuple(records), manifest)


def read_csv(path: str | Path) -> Dataset:
    return parse_csv(Path(path).read_text(encoding="utf-8"), str(path))


def write_split_manifest(sp: Split, path: str | Path) -> None:
    Path(path).write_text(json.dumps(sp.manifest(), indent=2) + "\n", encoding="utf-8")
