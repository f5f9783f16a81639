"""Property-based explainable classifier.

Every non-empty subset of the five features is a *property* with its own
SVM inference engine. Votes are tallied with per-property effectiveness
weights from a knowledge base, and the rationale lists the properties
that carried enough weight for each class.
"""

from __future__ import annotations

import itertools
import json
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import svm
from .dataset import Dataset
from .featex import FEATURE_NAMES, NON_TROJAN, TROJAN
from .metrics import Confusion, get_metric

CLASS_TAGS = {TROJAN: "t", NON_TROJAN: "n"}
DEFAULT_THRESHOLD = 0.05
DEFAULT_METRIC = "mcc"


@dataclass(frozen=True)
class Property:
    id: int
    features: tuple[str, ...]

    @property
    def mask(self) -> tuple[bool, ...]:
        return tuple(f in self.features for f in FEATURE_NAMES)

    @property
    def explainability(self) -> float:
        return explainability(self)


def enumerate_properties(features: Sequence[str] = FEATURE_NAMES) -> list[Property]:
    """All non-empty feature subsets by size, then in feature order."""
    props = []
    for size in range(1, len(features) + 1):
        for combo in itertools.combinations(features, size):
            props.append(Property(len(props) + 1, combo))
    return props


PROPERTIES = tuple(enumerate_properties())
PROPERTY_BY_ID = {p.id: p for p in PROPERTIES}


def explainability(p: Property | int, n: int = len(FEATURE_NAMES)) -> float:
    size = p if isinstance(p, int) else len(p.features)
    if not 1 <= size <= n:
        raise ValueError(f"property size {size} outside 1..{n}")
    if n == 1:
        return 1.0
    return 1.0 - (size - 1) / (n - 1)


@dataclass(frozen=True)
class KnowledgeBase:
    effectiveness: Mapping[int, float]
    metric_name: str = DEFAULT_METRIC

    def __post_init__(self):
        if any(not 0.0 <= w <= 1.0 for w in self.effectiveness.values()):
            raise ValueError("effectiveness weights must lie in [0, 1]")
        if not sum(self.effectiveness.values()) > 0:
            raise ValueError("knowledge base has no positive weight")

    @property
    def total(self) -> float:
        return float(sum(self.effectiveness[j] for j in sorted(self.effectiveness)))

    def to_dict(self) -> dict:
        return {"metric": self.metric_name,
                "weights": {str(j): self.effectiveness[j] for j in sorted(self.effectiveness)}}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"

    @classmethod
    def from_dict(cls, d: Mapping) -> "KnowledgeBase":
        return cls({int(k): float(v) for k, v in d["weights"].items()}, d.get("metric", DEFAULT_METRIC))

    @classmethod
    def from_json(cls, text: str) -> "KnowledgeBase":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class Verdict:
    decision: int
    confidence: Mapping[int, float]
    registered: Mapping[int, tuple[int, ...]]
    explainability: Mapping[int, float]
    raw_votes: Mapping[int, int]
    weights: Mapping[int, float] = field(default_factory=dict)


def effectiveness_weight(metric: str, y_true, y_pred) -> float:
    """Metric value clipped into [0, 1] (a negative MCC earns no weight)."""
    value = get_metric(metric)(Confusion.of(y_true, y_pred))
    return float(min(1.0, max(0.0, value)))


@dataclass
class EnsembleConfig:
    C_grid: Sequence[float] = svm.DEFAULT_C_GRID
    gamma_grid: Sequence = svm.DEFAULT_GAMMA_GRID
    folds: int = 5
    metric: str = DEFAULT_METRIC
    seed: int = 0
    tol: float = 1e-3
    max_iter: int = 1_000_000


def train_ensemble(train: Dataset, cfg: EnsembleConfig | None = None,
                   properties: Sequence[Property] = PROPERTIES):
    """Grid-search and fit one IE per property, then score each on the training set."""
    cfg = cfg or EnsembleConfig()
    X = np.asarray(train.features(), dtype=float)
    y = np.asarray(train.labels(), dtype=int)
    if set(y.tolist()) != {TROJAN, NON_TROJAN}:
        raise ValueError("training data must contain both classes")
    models: dict[int, svm.TrainedSvm] = {}
    weights: dict[int, float] = {}
    for prop in properties:
        params = svm.grid_search(X, y, mask=prop.mask, C_grid=cfg.C_grid, gamma_grid=cfg.gamma_grid,
                                 folds=cfg.folds, metric=cfg.metric, seed=cfg.seed, tol=cfg.tol,
                                 max_iter=cfg.max_iter)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", svm.ConvergenceWarning)
            model = svm.train(X, y, params, cfg.tol, cfg.max_iter, mask=prop.mask)
        models[prop.id] = model
        weights[prop.id] = effectiveness_weight(cfg.metric, y, model.predict(X))
    return models, KnowledgeBase(weights, cfg.metric)


def tally(votes: Mapping[int, int], kb: KnowledgeBase, threshold: float = DEFAULT_THRESHOLD) -> Verdict:
    """Weighted vote tally over already-cast votes."""
    if set(votes) != set(kb.effectiveness):
        raise ValueError("votes and knowledge base cover different properties")
    total = kb.total
    w = kb.effectiveness
    score = {c: float(sum(w[j] for j in sorted(votes) if votes[j] == c)) for c in (TROJAN, NON_TROJAN)}
    decision = TROJAN if score[TROJAN] > score[NON_TROJAN] else NON_TROJAN
    conf_t = score[TROJAN] / total
    confidence = {TROJAN: conf_t, NON_TROJAN: score[NON_TROJAN] / total}
    registered = {}
    expl = {}
    for c in (TROJAN, NON_TROJAN):
        ids = [j for j in votes if votes[j] == c and w[j] / total >= threshold]
        ids.sort(key=lambda j: (-w[j], j))
        registered[c] = tuple(ids)
        expl[c] = mean_explainability(ids)
    return Verdict(decision, confidence, registered, expl, dict(votes), dict(w))


def mean_explainability(ids: Sequence[int]) -> float:
    if not ids:
        return 0.0
    return sum(PROPERTY_BY_ID[j].explainability for j in ids) / len(ids)


def decide(models: Mapping[int, svm.TrainedSvm], kb: KnowledgeBase, x: Sequence[float],
           threshold: float = DEFAULT_THRESHOLD) -> Verdict:
    if set(models) != set(kb.effectiveness):
        raise ValueError("knowledge base and models cover different properties")
    votes = {j: models[j].classify(x) for j in sorted(models)}
    return tally(votes, kb, threshold)


def decide_many(models, kb, X, threshold: float = DEFAULT_THRESHOLD) -> list[Verdict]:
    X = np.asarray(X, dtype=float)
    preds = {j: models[j].predict(X) for j in sorted(models)}
    return [tally({j: int(preds[j][i]) for j in preds}, kb, threshold) for i in range(len(X))]


def compose_rationale(v: Verdict) -> dict:
    """JSON-ready rationale; properties listed by descending weight."""
    classes = {}
    for c in (TROJAN, NON_TROJAN):
        classes[CLASS_TAGS[c]] = {
            "confidence": v.confidence[c],
            "properties": [
                {"id": j, "features": list(PROPERTY_BY_ID[j].features), "weight": v.weights.get(j)}
                for j in v.registered[c]
            ],
            "explainability": v.explainability[c],
        }
    return {
        "decision": CLASS_TAGS[v.decision],
        "confidence": {CLASS_TAGS[c]: v.confidence[c] for c in (TROJAN, NON_TROJAN)},
        "classes": classes,
    }


def format_rationale(v: Verdict) -> str:
    """Plain-text table: one row per class, winning class first."""
    lines = [f"{'Prediction':<11}{'Confidence':>11}  {'Explainability':>14}  Properties"]
    order = (v.decision, 1 - v.decision)
    for c in order:
        ids = v.registered[c]
        props = ", ".join(str(j) for j in ids) if ids else "No opinion"
        lines.append(f"{c:<11}{v.confidence[c]:>10.1%}  {v.explainability[c]:>14.1%}  {props}")
    for c in order:
        for j in v.registered[c]:
            p = PROPERTY_BY_ID[j]
            lines.append(f"  [{CLASS_TAGS[c]}] {j:>2}  w={v.weights.get(j, 0.0):.3f}  "
                         f"X={p.explainability:.2f}  {', '.join(p.features)}")
    return "\n".join(lines) + "\n"
