"""Command-line front end: extract, split, train, explain, eval, synth.

Exit status is a stable contract: 0 success, 1 usage error, 2 data error,
3 when training finished but at least one SVM hit the iteration limit.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from . import casexai, propxai, svm, synthgen
from .dataset import Dataset, balance, combine, read_csv, split, write_csv, write_split_manifest
from .featex import DEFAULT_CAP, DEFAULT_PATTERNS, FEATURE_NAMES, NON_TROJAN, TROJAN, extract_all
from .metrics import Confusion, precision, recall, specificity
from .netlist import CellLibrary, NetlistError, default_library, load_cell_library, parse_netlist

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_CONVERGENCE = 0, 1, 2, 3
CONFIG_ENV = "NETLIST_SENTINEL_CONFIG"
ARCHES = ("prop", "case", "both")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


# configuration --------------------------------------------------------------


@dataclass
class SplitConfig:
    fraction: float = 0.2
    seed: int = 0


@dataclass
class SvmConfig:
    C_grid: list = field(default_factory=lambda: list(svm.DEFAULT_C_GRID))
    gamma_grid: list = field(default_factory=lambda: list(svm.DEFAULT_GAMMA_GRID))
    folds: int = 5
    tol: float = 1e-3
    max_iter: int = 1_000_000


@dataclass
class PropConfig:
    metric: str = propxai.DEFAULT_METRIC
    threshold: float = propxai.DEFAULT_THRESHOLD


@dataclass
class CaseConfig:
    k: int = casexai.DEFAULT_K


@dataclass
class RunConfig:
    cell_library_path: str | None = None
    label_patterns: list = field(default_factory=lambda: list(DEFAULT_PATTERNS))
    feature_cap: int = DEFAULT_CAP
    split: SplitConfig = field(default_factory=SplitConfig)
    svm: SvmConfig = field(default_factory=SvmConfig)
    propxai: PropConfig = field(default_factory=PropConfig)
    casexai: CaseConfig = field(default_factory=CaseConfig)
    out: str = "out"

    _SECTIONS = {"split": SplitConfig, "svm": SvmConfig, "propxai": PropConfig, "casexai": CaseConfig}

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        kwargs = {}
        for key, value in d.items():
            section = cls._SECTIONS.get(key)
            if section is not None:
                if not isinstance(value, dict):
                    raise UsageError(f"config section {key!r} must be an object")
                bad = set(value) - {f.name for f in fields(section)}
                if bad:
                    raise UsageError(f"unknown keys in {key!r}: {', '.join(sorted(bad))}")
                value = section(**value)
            kwargs[key] = value
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return asdict(self)

    def validate(self) -> None:
        if self.cell_library_path is not None and not Path(self.cell_library_path).is_file():
            raise UsageError(f"cell library not found: {self.cell_library_path}")
        if not self.label_patterns:
            raise UsageError("label_patterns must not be empty")
        if self.feature_cap < 1:
            raise UsageError("feature_cap must be positive")
        if not 0.0 < self.split.fraction < 1.0:
            raise UsageError("split.fraction must lie in (0, 1)")
        if not self.svm.C_grid or not self.svm.gamma_grid:
            raise UsageError("svm grids must be non-empty")
        if self.svm.folds < 2:
            raise UsageError("svm.folds must be at least 2")
        if not 0.0 <= self.propxai.threshold <= 1.0:
            raise UsageError("propxai.threshold must lie in [0, 1]")
        if self.casexai.k < 1:
            raise UsageError("casexai.k must be at least 1")

    def library(self) -> CellLibrary:
        if self.cell_library_path is None:
            return default_library()
        return load_cell_library(Path(self.cell_library_path).read_text(encoding="utf-8"))

    def ensemble(self) -> propxai.EnsembleConfig:
        return propxai.EnsembleConfig(
            C_grid=self.svm.C_grid, gamma_grid=self.svm.gamma_grid, folds=self.svm.folds,
            metric=self.propxai.metric, seed=self.split.seed, tol=self.svm.tol, max_iter=self.svm.max_iter,
        )


def load_config(path: str | None) -> RunConfig:
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return RunConfig()
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise UsageError(f"config not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError(f"config {path}: top level must be an object")
    return RunConfig.from_dict(data)


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.split.seed = args.seed
    if args.k is not None:
        cfg.casexai.k = args.k
    if args.threshold is not None:
        cfg.propxai.threshold = args.threshold
    if args.out is not None:
        cfg.out = args.out
    cfg.validate()
    return cfg


# helpers --------------------------------------------------------------------


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc.strerror}") from None


def _dump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=False) + "\n"


def _emit_report(out: Path, stem: str, text: str, doc: dict) -> None:
    _write(out / f"{stem}.txt", text)
    _write(out / f"{stem}.json", _dump(doc))
    sys.stdout.write(text)


def _part_version(path: Path) -> tuple[str, str]:
    # trust-hub style names such as RS232-T1000 carry part and version
    stem = path.stem
    if "-" in stem:
        part, version = stem.rsplit("-", 1)
        return part, version
    return stem, ""


def _read_dataset(path: str) -> Dataset:
    try:
        return read_csv(path)
    except FileNotFoundError:
        raise DataError(f"no such file: {path}") from None


def _ie_path(root: Path, pid: int) -> Path:
    return root / "prop" / f"ie_{pid:02d}.json"


# commands -------------------------------------------------------------------


def cmd_extract(files: Sequence[str], cfg: RunConfig) -> Dataset:
    if not files:
        raise UsageError("extract needs at least one netlist file")
    lib = cfg.library()
    parts = []
    for f in files:
        path = Path(f)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise DataError(f"{f}: {exc.strerror}") from None
        try:
            ir = parse_netlist(text, lib)
        except NetlistError as exc:
            where = f"{f}:{exc.line}" if exc.line is not None else f
            raise DataError(f"{where}: {exc.message}") from None
        part, version = _part_version(path)
        recs = extract_all(ir, lib, part, version, cfg.label_patterns, cap=cfg.feature_cap)
        n_t = sum(r.class_label == TROJAN for r in recs)
        print(f"{f}: {len(recs)} nets, {n_t} trojan")
        parts.append(Dataset(tuple(recs), ((part, version, str(f)),)))
    try:
        return combine(parts)
    except ValueError as exc:
        raise DataError(str(exc)) from None


def _effectiveness_table(models, kb: propxai.KnowledgeBase) -> str:
    lines = [f"{'Id':>3}  {'Weight':>7}  {'C':>8}  {'gamma':>8}  Features"]
    for pid in sorted(models):
        m = models[pid]
        feats = ", ".join(propxai.PROPERTY_BY_ID[pid].features)
        lines.append(f"{pid:>3}  {kb.effectiveness[pid]:>7.3f}  {m.params.C:>8g}  {m.params.gamma:>8.4g}  {feats}")
    return "\n".join(lines)


def cmd_train(train: Dataset, cfg: RunConfig, arch: str, out: Path) -> bool:
    """Train and write artifacts; returns False if any solver hit its limit."""
    if {r.class_label for r in train} != {TROJAN, NON_TROJAN}:
        raise DataError("training data must contain both trojan and non-trojan nets")
    b = balance(train, TROJAN)
    models_dir = out / "models"
    converged = True
    text = [f"training nets: {len(train)} ({train.count(TROJAN)} trojan)", f"b(trojan) = {b:.4f}"]
    doc: dict = {"config": cfg.to_dict(), "n_train": len(train), "n_trojan": train.count(TROJAN),
                 "balance_t": b}
    X = np.asarray(train.features(), dtype=float)
    y = np.asarray(train.labels(), dtype=int)
    if arch in ("prop", "both"):
        models, kb = propxai.train_ensemble(train, cfg.ensemble())
        for pid, m in models.items():
            _write(_ie_path(models_dir, pid), m.to_json())
            converged &= m.converged
        _write(models_dir / "prop" / "kb.json", kb.to_json())
        text += ["", "property effectiveness", _effectiveness_table(models, kb)]
        doc["prop"] = {"effectiveness": kb.to_dict()["weights"],
                       "params": {str(p): {"C": m.params.C, "gamma": m.params.gamma} for p, m in models.items()}}
    if arch in ("case", "both"):
        ec = cfg.ensemble()
        params = svm.grid_search(X, y, C_grid=ec.C_grid, gamma_grid=ec.gamma_grid, folds=ec.folds,
                                 metric=ec.metric, seed=ec.seed, tol=ec.tol, max_iter=ec.max_iter)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", svm.ConvergenceWarning)
            model = svm.train(X, y, params, ec.tol, ec.max_iter)
        converged &= model.converged
        ti = casexai.build_index(train)
        _write(models_dir / "case" / "svm.json", model.to_json())
        _write(models_dir / "case" / "index.json", ti.to_json())
        text += ["", f"case model: C={params.C:g} gamma={params.gamma:.4g}, index keys {len(ti)}"]
        doc["case"] = {"C": params.C, "gamma": params.gamma, "index_keys": len(ti)}
    doc["converged"] = converged
    if not converged:
        text.append("warning: at least one SVM stopped at the iteration limit")
    _emit_report(out, "train_report", "\n".join(text) + "\n", doc)
    return converged


def _load_json(path: Path, loader):
    try:
        return loader(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DataError(f"missing artifact: {path}") from None
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed artifact {path}: {exc}") from None


def load_prop(models_dir: Path):
    kb = _load_json(models_dir / "prop" / "kb.json", propxai.KnowledgeBase.from_json)
    models = {pid: _load_json(_ie_path(models_dir, pid), svm.TrainedSvm.from_json) for pid in sorted(kb.effectiveness)}
    return models, kb


def load_case(models_dir: Path):
    model = _load_json(models_dir / "case" / "svm.json", svm.TrainedSvm.from_json)
    ti = _load_json(models_dir / "case" / "index.json", casexai.TrainingIndex.from_json)
    return model, ti


def parse_sample(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(v) for v in text.replace(" ", "").strip("<>()").split(","))
    except ValueError:
        raise DataError(f"malformed sample {text!r}: expected {len(FEATURE_NAMES)} integers") from None
    if len(values) != len(FEATURE_NAMES) or min(values) < 0:
        raise DataError(f"malformed sample {text!r}: expected {len(FEATURE_NAMES)} non-negative integers")
    return values


def cmd_explain(models_dir: Path, sample: tuple[int, ...], cfg: RunConfig, arch: str) -> tuple[str, dict]:
    text: list[str] = [f"Sample <{', '.join(str(v) for v in sample)}>"]
    doc: dict = {"config": cfg.to_dict(), "sample": list(sample)}
    if arch in ("prop", "both"):
        models, kb = load_prop(models_dir)
        v = propxai.decide(models, kb, sample, cfg.propxai.threshold)
        text += ["", "property-based", propxai.format_rationale(v)]
        doc["prop"] = propxai.compose_rationale(v)
    if arch in ("case", "both"):
        model, ti = load_case(models_dir)
        exp = casexai.explain(model, ti, sample, cfg.casexai.k)
        text += ["", "case-based", casexai.format_report(exp, sample)]
        doc["case"] = exp.to_dict()
    return "\n".join(text).rstrip("\n") + "\n", doc


def _class_metrics(c: Confusion) -> dict:
    return {
        "confusion": c._asdict(),
        "accuracy": (c.tp + c.tn) / max(1, sum(c)),
        "t": {"precision": precision(c), "recall": recall(c)},
        "n": {"precision": c.tn / (c.tn + c.fn) if c.tn + c.fn else 0.0, "recall": specificity(c)},
    }


def _metrics_text(name: str, m: dict) -> list[str]:
    c = m["confusion"]
    return [
        f"{name}",
        f"  {'':>10}{'pred t':>8}{'pred n':>8}",
        f"  {'actual t':>10}{c['tp']:>8}{c['fn']:>8}",
        f"  {'actual n':>10}{c['fp']:>8}{c['tn']:>8}",
        f"  accuracy {m['accuracy']:.4f}",
        f"  trojan precision {m['t']['precision']:.4f} recall {m['t']['recall']:.4f}",
        f"  non-trojan precision {m['n']['precision']:.4f} recall {m['n']['recall']:.4f}",
    ]


def cmd_eval(models_dir: Path, test: Dataset, cfg: RunConfig, arch: str) -> tuple[str, dict]:
    if len(test) == 0:
        raise DataError("test set is empty")
    X = np.asarray(test.features(), dtype=float)
    y = test.labels()
    text = [f"test nets: {len(test)} ({test.count(TROJAN)} trojan)"]
    doc: dict = {"config": cfg.to_dict(), "n_test": len(test), "n_trojan": test.count(TROJAN)}
    prop_pred = case_pred = None
    if arch in ("prop", "both"):
        models, kb = load_prop(models_dir)
        verdicts = propxai.decide_many(models, kb, X, cfg.propxai.threshold)
        prop_pred = [v.decision for v in verdicts]
        m = _class_metrics(Confusion.of(y, prop_pred))
        m["mean_explainability"] = float(np.mean([v.explainability[v.decision] for v in verdicts]))
        doc["prop"] = m
        text += _metrics_text("property-based", m)
        text.append(f"  mean decision explainability {m['mean_explainability']:.4f}")
    if arch in ("case", "both"):
        model, ti = load_case(models_dir)
        case_pred = model.predict(X).tolist()
        m = _class_metrics(Confusion.of(y, case_pred))
        m["knn_agreement"] = casexai.agreement_rate(model, ti, test, cfg.casexai.k)
        doc["case"] = m
        text += _metrics_text("case-based", m)
        text.append(f"  KNN agreement {m['knn_agreement']:.4f}")
    if prop_pred is not None and case_pred is not None:
        agree = sum(p == c for p, c in zip(prop_pred, case_pred)) / len(test)
        doc["prop_case_agreement"] = agree
        text.append(f"prop vs case decision agreement {agree:.4f}")
    return "\n".join(text) + "\n", doc


def cmd_synth(out: Path, count: int, *, seed: int, width: int, width_max: int | None = None,
              payload: str = "alternate", host_gates: int = 150, tree_fanin: int = 4) -> list[Path]:
    """Write ``count`` netlists plus manifests; widths cycle through width..width_max."""
    paths = []
    widths = range(width, (width_max or width) + 1)
    if not widths:
        raise UsageError("--trigger-width-max must not be below --trigger-width")
    for i in range(count):
        spec = synthgen.TrojanSpec(
            trigger_width=widths[i % len(widths)],
            payload=synthgen.PAYLOADS[i % len(synthgen.PAYLOADS)] if payload == "alternate" else payload,
            host_gates=host_gates, seed=seed + i, module_name=f"synth{i:02d}", tree_fanin=tree_fanin,
        )
        try:
            text, manifest = synthgen.generate(spec)
        except ValueError as exc:
            raise DataError(str(exc)) from None
        path = out / f"synth{i:02d}-T{i:02d}.v"
        _write(path, text)
        _write(path.with_suffix(".json"), manifest.to_json())
        print(f"{path}: {manifest.gate_count} gates, {len(manifest.trojan_nets)} trojan nets")
        paths.append(path)
    return paths


# argument parsing -----------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help=f"JSON run config (fallback: ${CONFIG_ENV})")
    common.add_argument("--seed", type=int, help="split and cross-validation seed")
    common.add_argument("--k", type=int, help="nearest keys for case-based explanations")
    common.add_argument("--threshold", type=float, help="minimum normalized weight to register a property")
    common.add_argument("--out", help="output directory")
    arch = argparse.ArgumentParser(add_help=False)
    arch.add_argument("--arch", choices=ARCHES, default="both")

    p = _Parser(prog="netlist-sentinel", description="Explainable trojan net detection for gate-level netlists.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("extract", parents=[common], help="netlists -> feature CSV")
    s.add_argument("netlists", nargs="*")

    s = sub.add_parser("split", parents=[common], help="feature CSV -> train/test CSVs")
    s.add_argument("csv")

    s = sub.add_parser("train", parents=[common, arch], help="train CSV -> model artifacts")
    s.add_argument("csv")

    s = sub.add_parser("explain", parents=[common, arch], help="explain one sample")
    s.add_argument("models", help="models directory written by train")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--sample", help="five comma-separated features, e.g. 8,1,3,2,3")
    g.add_argument("--row", nargs=2, metavar=("CSV", "N"), help="data row N (1-based) of a feature CSV")

    s = sub.add_parser("eval", parents=[common, arch], help="evaluate on a test CSV")
    s.add_argument("models", help="models directory written by train")
    s.add_argument("csv")

    s = sub.add_parser("synth", parents=[common], help="write synthetic trojan netlists")
    s.add_argument("--count", type=int, default=1)
    s.add_argument("--trigger-width", type=int, default=4)
    s.add_argument("--trigger-width-max", type=int)
    s.add_argument("--payload", choices=(*synthgen.PAYLOADS, "alternate"), default="alternate")
    s.add_argument("--host-gates", type=int, default=150)
    s.add_argument("--tree-fanin", type=int, default=4)
    return p


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        out = Path(cfg.out)
        if args.command == "extract":
            ds = cmd_extract(args.netlists, cfg)
            _write(out / "features.csv", write_csv(ds.records))
            print(f"{len(ds)} nets ({ds.count(TROJAN)} trojan) -> {out / 'features.csv'}")
        elif args.command == "split":
            try:
                sp = split(_read_dataset(args.csv), cfg.split.fraction, cfg.split.seed)
            except ValueError as exc:
                raise DataError(str(exc)) from None
            _write(out / "train.csv", write_csv(sp.train.records))
            _write(out / "test.csv", write_csv(sp.test.records))
            out.mkdir(parents=True, exist_ok=True)
            write_split_manifest(sp, out / "split.json")
            print(f"train {len(sp.train)} ({sp.train.count(TROJAN)} trojan), "
                  f"test {len(sp.test)} ({sp.test.count(TROJAN)} trojan)")
        elif args.command == "train":
            if not cmd_train(_read_dataset(args.csv), cfg, args.arch, out):
                return EXIT_CONVERGENCE
        elif args.command == "explain":
            if args.sample is not None:
                sample = parse_sample(args.sample)
            else:
                ds = _read_dataset(args.row[0])
                try:
                    sample = tuple(ds.records[int(args.row[1]) - 1].features)
                except (ValueError, IndexError):
                    raise DataError(f"no data row {args.row[1]} in {args.row[0]}") from None
            text, doc = cmd_explain(Path(args.models), sample, cfg, args.arch)
            _emit_report(out, "explain_report", text, doc)
        elif args.command == "eval":
            text, doc = cmd_eval(Path(args.models), _read_dataset(args.csv), cfg, args.arch)
            _emit_report(out, "eval_report", text, doc)
        elif args.command == "synth":
            if args.count < 1:
                raise UsageError("--count must be positive")
            cmd_synth(out, args.count, seed=cfg.split.seed, width=args.trigger_width,
                      width_max=args.trigger_width_max, payload=args.payload, host_gates=args.host_gates,
                      tree_fanin=args.tree_fanin)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def main() -> None:
    sys.exit(run())
