"""Case-based explanations from a training index.

The index maps each exact feature vector seen in training to the origins
of its trojan and non-trojan samples. A query collects the nearest keys
("shells") by raw Euclidean distance and weights each class by
``count * b(class) / (d + 1)^2``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .dataset import Dataset, balance_from_counts
from .featex import NON_TROJAN, TROJAN, Origin
from .svm import TrainedSvm

DEFAULT_K = 4
TAGS = {TROJAN: "t", NON_TROJAN: "n"}

Key = tuple[int, ...]


@dataclass
class IndexEntry:
    trojan_refs: list[Origin] = field(default_factory=list)
    nontrojan_refs: list[Origin] = field(default_factory=list)


@dataclass(frozen=True)
class TrainingIndex:
    entries: Mapping[Key, IndexEntry]
    balance_t: float

    def __post_init__(self):
        keys = sorted(self.entries)
        object.__setattr__(self, "_keys", keys)
        object.__setattr__(self, "_matrix", np.asarray(keys, dtype=np.int64).reshape(len(keys), -1))

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def size(self) -> int:
        return sum(len(e.trojan_refs) + len(e.nontrojan_refs) for e in self.entries.values())

    def to_dict(self) -> dict:
        return {
            "balance_t": self.balance_t,
            "entries": [
                {"key": list(k),
                 "trojan": [o.as_dict() for o in self.entries[k].trojan_refs],
                 "nontrojan": [o.as_dict() for o in self.entries[k].nontrojan_refs]}
                for k in self._keys
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"

    @classmethod
    def from_dict(cls, d: Mapping) -> "TrainingIndex":
        entries = {}
        for e in d["entries"]:
            entries[tuple(int(v) for v in e["key"])] = IndexEntry(
                [Origin(**o) for o in e.get("trojan", [])],
                [Origin(**o) for o in e.get("nontrojan", [])],
            )
        return cls(entries, float(d["balance_t"]))

    @classmethod
    def from_json(cls, text: str) -> "TrainingIndex":
        return cls.from_dict(json.loads(text))


def build_index(train: Dataset | Iterable) -> TrainingIndex:
    entries: dict[Key, IndexEntry] = {}
    n_t = n_n = 0
    for rec in train:
        e = entries.setdefault(tuple(int(v) for v in rec.features), IndexEntry())
        if rec.class_label == TROJAN:
            e.trojan_refs.append(rec.origin)
            n_t += 1
        else:
            e.nontrojan_refs.append(rec.origin)
            n_n += 1
    if not entries:
        raise ValueError("cannot index an empty training set")
    return TrainingIndex(entries, balance_from_counts(n_n, n_t))


@dataclass(frozen=True)
class NeighborShell:
    distance: float
    key: Key
    t_count: int
    n_count: int
    w_t: float
    w_n: float
    trojan_refs: tuple[Origin, ...] = ()
    nontrojan_refs: tuple[Origin, ...] = ()

    def to_dict(self) -> dict:
        return {
            "distance": self.distance, "key": list(self.key), "t": self.t_count, "n": self.n_count,
            "w_t": self.w_t, "w_n": self.w_n,
            "refs": [o.as_dict() | {"class": TAGS[TROJAN]} for o in self.trojan_refs]
            + [o.as_dict() | {"class": TAGS[NON_TROJAN]} for o in self.nontrojan_refs],
        }


def shell_weight(count: int, b: float, distance: float) -> float:
    return count * b / (distance + 1.0) ** 2


def make_shell(key: Key, distance: float, t_count: int, n_count: int, balance_t: float,
               trojan_refs=(), nontrojan_refs=()) -> NeighborShell:
    return NeighborShell(
        distance=distance, key=tuple(key), t_count=t_count, n_count=n_count,
        w_t=shell_weight(t_count, balance_t, distance),
        w_n=shell_weight(n_count, 1.0, distance),
        trojan_refs=tuple(trojan_refs), nontrojan_refs=tuple(nontrojan_refs),
    )


def knn_query(ti: TrainingIndex, x: Sequence[int], k: int = DEFAULT_K,
              balance_t: float | None = None) -> list[NeighborShell]:
    """The ``k`` nearest distinct keys, plus any keys tied with the k-th."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if len(ti) == 0:
        raise ValueError("empty training index")
    b = ti.balance_t if balance_t is None else balance_t
    q = np.asarray([int(v) for v in x], dtype=np.int64)
    # squared distances are exact integers, so ties compare exactly
    d2 = ((ti._matrix - q) ** 2).sum(axis=1)
    order = np.lexsort((np.arange(len(d2)), d2))
    cutoff = d2[order[min(k, len(order)) - 1]]
    shells = []
    for idx in order:
        if d2[idx] > cutoff:
            break
        key = ti._keys[idx]
        e = ti.entries[key]
        shells.append(make_shell(key, math.sqrt(int(d2[idx])), len(e.trojan_refs), len(e.nontrojan_refs),
                                 b, e.trojan_refs, e.nontrojan_refs))
    return shells


def correspondence(shells: Sequence[NeighborShell]) -> dict[int, float]:
    wt = math.fsum(s.w_t for s in shells)
    wn = math.fsum(s.w_n for s in shells)
    total = wt + wn
    if not total > 0:
        raise ValueError("neighbor shells carry no weight")
    return {TROJAN: wt / total, NON_TROJAN: wn / total}


@dataclass(frozen=True)
class CaseExplanation:
    prediction: int
    shells: tuple[NeighborShell, ...]
    sum_w: Mapping[int, float]
    correspondence: Mapping[int, float]
    agrees: bool

    def to_dict(self) -> dict:
        return {
            "prediction": TAGS[self.prediction],
            "correspondence": {TAGS[c]: self.correspondence[c] for c in (TROJAN, NON_TROJAN)},
            "agrees": self.agrees,
            "shells": [s.to_dict() for s in self.shells],
        }


def _dominant(corr: Mapping[int, float]) -> int:
    return TROJAN if corr[TROJAN] > corr[NON_TROJAN] else NON_TROJAN


def justify(prediction: int, shells: Sequence[NeighborShell]) -> CaseExplanation:
    corr = correspondence(shells)
    sums = {TROJAN: math.fsum(s.w_t for s in shells), NON_TROJAN: math.fsum(s.w_n for s in shells)}
    return CaseExplanation(prediction, tuple(shells), sums, corr, _dominant(corr) == prediction)


def explain(model: TrainedSvm, ti: TrainingIndex, record, k: int = DEFAULT_K,
            balance_t: float | None = None) -> CaseExplanation:
    """SVM decision plus neighbor evidence for one record or feature vector."""
    features = tuple(getattr(record, "features", record))
    if model.n_features_in != len(features) or not all(model.feature_mask):
        raise ValueError("case-based explanations need a model trained on all features")
    prediction = model.classify(features)
    return justify(prediction, knn_query(ti, features, k, balance_t))


def agreement_rate(model: TrainedSvm, ti: TrainingIndex, test: Dataset | Sequence, k: int = DEFAULT_K) -> float:
    records = list(test)
    if not records:
        raise ValueError("empty test set")
    preds = model.predict([tuple(r.features) for r in records])
    agree = 0
    for rec, p in zip(records, preds):
        agree += justify(int(p), knn_query(ti, rec.features, k)).agrees
    return agree / len(records)


def format_report(exp: CaseExplanation, query: Sequence[int] | None = None, max_refs: int = 3) -> str:
    """Text table: distance, key, t:n, w(t), w(n), then sums and correspondence."""
    out = []
    if query is not None:
        out.append(f"Sample <{', '.join(str(v) for v in query)}>  SVM prediction: {TAGS[exp.prediction]}")
    out.append(f"{'Distance':>8}  {'Feature Values':<24} {'t:n':>9} {'w(t)':>10} {'w(n)':>10}")
    for s in exp.shells:
        key = "<" + ", ".join(str(v) for v in s.key) + ">"
        out.append(f"{s.distance:>8.2f}  {key:<24} {f'{s.t_count}:{s.n_count}':>9} {s.w_t:>10.2f} {s.w_n:>10.2f}")
    nt = sum(s.t_count for s in exp.shells)
    nn = sum(s.n_count for s in exp.shells)
    out.append(f"{'':>8}  {'Sum':<24} {f'{nt}+{nn}={nt + nn}':>9} "
               f"{exp.sum_w[TROJAN]:>10.2f} {exp.sum_w[NON_TROJAN]:>10.2f}")
    out.append(f"{'':>8}  {'Correspondence':<24} {'':>9} "
               f"{exp.correspondence[TROJAN]:>10.1%} {exp.correspondence[NON_TROJAN]:>10.1%}")
    out.append(f"agrees with prediction: {'yes' if exp.agrees else 'no'}")
    for s in exp.shells:
        refs = [("t", o) for o in s.trojan_refs] + [("n", o) for o in s.nontrojan_refs]
        for tag, o in refs[:max_refs]:
            out.append(f"  {tag} part {o.part}, version {o.version}, line {o.line}, name {o.name}, net {o.net}")
        if len(refs) > max_refs:
            out.append(f"  ... {len(refs) - max_refs} more at <{', '.join(str(v) for v in s.key)}>")
    return "\n".join(out) + "\n"
