"""Config-driven orchestration behind the ``run``, ``sweep`` and ``report`` verbs."""
from __future__ import annotations

import copy
import dataclasses
import csv
import datetime as dt
import hashlib
import io
import json
import logging
import platform
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, _core, models
from .dataset import (
    DescriptorCache,
    FeatureMatrix,
    SplitSpec,
    build_matrix,
    matrix_to_csv,
    split,
)
from .errors import (
    ConfigInvalid,
    InfeasibleCombination,
    MalformedArtifact,
    MissingManifest,
    PhysioFuseError,
    StageError,
)
from .explain import explain_rows, global_importance, importance_from_csv, shap_json, waterfall
from .features import (
    ALL_MODALITIES,
    GROUP_NAMES,
    KIND_ORDER,
    ModalityCombination,
    enumerate_modality_combinations,
)
from .ingest import config_from_dict as synth_config_from_dict
from .ingest import (
    ChannelMeta,
    LabelMap,
    default_config,
    generate_sessions,
    parse_edf,
    read_csv_record,
    read_kss_sidecar,
)
from .metrics import TABLE3_COLUMNS, evaluate
from .preprocess import FilterSpec, preprocess_record
from .segmentation import CLASS_NAMES, segment_record

log = logging.getLogger(__name__)

PAPER_FEATURE_COUNTS = {"Corr": 41, "CrossCorr": 40, "Cov": 36, "total": 117}
TABLE2_COLUMNS = ("Feature Group", "Best Accuracy (XGBoost)", "Best Accuracy (RF)",
                  "AUC (XGBoost)", "AUC (RF)")


# --- configuration ----------------------------------------------------------

@dataclass
class PipelineConfig:
    input: dict
    base_dir: Path = Path(".")
    seed: int = 0
    preprocess: dict = field(default_factory=dict)
    window_seconds: float = 20.0
    lag_ms: float = 500.0
    combinations: object = "all"
    features: dict = field(default_factory=dict)
    split: dict = field(default_factory=dict)
    classifiers: tuple = models.CLASSIFIERS
    models: dict = field(default_factory=dict)
    explain: dict = field(default_factory=dict)
    output: str = "out"
    threads: int = 1

    def resolved(self) -> dict:
        """JSON-ready view used for hashing and the manifest."""
        return {
            "input": self.input, "seed": self.seed, "preprocess": self.preprocess,
            "window_seconds": self.window_seconds, "lag_ms": self.lag_ms,
            "combinations": self.combinations, "features": self.features, "split": self.split,
            "classifiers": list(self.classifiers), "models": self.models,
            "explain": self.explain,
        }

    def path(self, p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else self.base_dir / p

    @property
    def filter_spec(self) -> FilterSpec:
        keys = {"low_cut", "high_cut", "order", "zero_phase"}
        return FilterSpec(**{k: v for k, v in self.preprocess.items() if k in keys})

    @property
    def split_spec(self) -> SplitSpec:
        return SplitSpec(train_fraction=float(self.split.get("train_fraction", 0.7)),
                         mode=self.split.get("mode", "stratified"),
                         seed=int(self.split.get("seed", self.seed)))

    @property
    def train_config(self) -> models.TrainConfig:
        return models.TrainConfig.from_dict(self.models, seed=self.seed)


_TOP_KEYS = {"input", "seed", "preprocess", "window_seconds", "lag_ms", "combinations",
             "features", "split", "classifiers", "models", "explain", "output", "threads"}


def _number(doc, key, kind=float, positive=False, minimum=None):
    try:
        v = kind(doc[key])
    except (TypeError, ValueError):
        raise ConfigInvalid(key, f"expected a number, got {doc[key]!r}") from None
    if positive and not v > 0:
        raise ConfigInvalid(key, f"must be > 0, got {v}")
    if minimum is not None and v < minimum:
        raise ConfigInvalid(key, f"must be >= {minimum}, got {v}")
    return v


def config_from_dict(doc: dict, base_dir=".", seed=None, out=None, threads=None,
                     strict_labels=None) -> PipelineConfig:
    """Validate a parsed config document; errors name the offending field."""
    if not isinstance(doc, dict):
        raise ConfigInvalid("<root>", "config must be a mapping")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigInvalid(sorted(unknown)[0], "unknown key")
    doc = copy.deepcopy(doc)
    if "input" not in doc or not isinstance(doc["input"], dict):
        raise ConfigInvalid("input", "required mapping")
    cfg = PipelineConfig(input=doc["input"], base_dir=Path(base_dir))
    if seed is not None:
        doc["seed"] = seed
    cfg.seed = int(_number(doc, "seed", int)) if "seed" in doc else 0
    if "window_seconds" in doc:
        cfg.window_seconds = _number(doc, "window_seconds", positive=True)
    if "lag_ms" in doc:
        cfg.lag_ms = _number(doc, "lag_ms", minimum=0)
    for key in ("preprocess", "features", "split", "models", "explain"):
        val = doc.get(key) or {}
        if not isinstance(val, dict):
            raise ConfigInvalid(key, "must be a mapping")
        setattr(cfg, key, val)
    if strict_labels is not None:
        cfg.input["strict_labels"] = bool(strict_labels)
    combos = doc.get("combinations", "all")
    if combos != "all":
        if isinstance(combos, str):
            combos = [combos]
        try:
            combos = [ModalityCombination.parse(c).name for c in combos]
        except ValueError as exc:
            raise ConfigInvalid("combinations", str(exc)) from None
        if not combos:
            raise ConfigInvalid("combinations", "empty list")
    cfg.combinations = combos
    clfs = doc.get("classifiers", list(models.CLASSIFIERS))
    clfs = [str(c).upper() for c in clfs]
    bad = [c for c in clfs if c not in models.CLASSIFIERS]
    if bad or not clfs:
        raise ConfigInvalid("classifiers",
                            f"choose from {list(models.CLASSIFIERS)}, got {bad or clfs}")
    cfg.classifiers = tuple(c for c in models.CLASSIFIERS if c in clfs)
    cfg.output = str(out or doc.get("output", "out"))
    cfg.threads = int(threads or doc.get("threads", 1))
    for name, prop in (("preprocess", "filter_spec"), ("split", "split_spec"),
                       ("models", "train_config")):
        try:
            getattr(cfg, prop)
        except (ValueError, TypeError) as exc:
            raise ConfigInvalid(name, str(exc)) from None
    _check_input(cfg)
    return cfg


def _check_input(cfg: PipelineConfig):
    inp = cfg.input
    sources = [k for k in ("synthetic", "recordings", "drozy_dir") if k in inp]
    if len(sources) != 1:
        raise ConfigInvalid("input", "give exactly one of synthetic, recordings, drozy_dir")
    for key in ("label_map",):
        if key in inp and not cfg.path(inp[key]).exists():
            raise ConfigInvalid(f"input.{key}", f"path does not exist: {inp[key]}")
    if "synthetic" in inp:
        synth = inp["synthetic"]
        if isinstance(synth, str):
            if not cfg.path(synth).exists():
                raise ConfigInvalid("input.synthetic", f"path does not exist: {synth}")
        elif not isinstance(synth, dict):
            raise ConfigInvalid("input.synthetic", "must be a path or a mapping")
    if "recordings" in inp:
        recs = inp["recordings"]
        if not isinstance(recs, list) or not recs:
            raise ConfigInvalid("input.recordings", "must be a non-empty list")
        for i, r in enumerate(recs):
            for key in ("path", "kss"):
                if key not in r:
                    raise ConfigInvalid(f"input.recordings[{i}].{key}", "required")
                if not cfg.path(r[key]).exists():
                    raise ConfigInvalid(f"input.recordings[{i}].{key}",
                                        f"path does not exist: {r[key]}")
    if "drozy_dir" in inp and not cfg.path(inp["drozy_dir"]).is_dir():
        raise ConfigInvalid("input.drozy_dir", f"not a directory: {inp['drozy_dir']}")


def load_config(path, **overrides) -> PipelineConfig:
    import yaml

    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigInvalid("<file>", f"{path}: {exc}") from None
    return config_from_dict(doc, base_dir=path.parent, **overrides)


# --- stages -----------------------------------------------------------------

def _stage(name, key, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except (PhysioFuseError, ValueError, OSError, KeyError) as exc:
        raise StageError(name, key, exc) from exc


def _label_map(cfg) -> LabelMap:
    strict = bool(cfg.input.get("strict_labels", False))
    if "label_map" in cfg.input:
        return LabelMap.from_yaml(cfg.path(cfg.input["label_map"]), strict=strict)
    return LabelMap(strict=strict)


def _read_recording(cfg, entry, index, label_map):
    path = cfg.path(entry["path"])
    session = str(entry.get("session_id", path.stem))
    kss = read_kss_sidecar(cfg.path(entry["kss"]).read_text(encoding="utf-8"))
    fmt = entry.get("format", path.suffix.lstrip(".").lower())
    if fmt == "edf":
        return parse_edf(path.read_bytes(), label_map, session, kss)
    if fmt == "csv":
        text = path.read_text(encoding="utf-8")
        header = next(csv.reader(io.StringIO(text)))
        rate = float(entry.get("rate", 512.0))
        metas = []
        for label in header:
            hit = label_map.lookup(label.strip())
            if hit is None:
                raise ValueError(f"CSV column {label!r} is not in the label map")
            metas.append(ChannelMeta(label.strip(), hit[0], hit[1], rate))
        return read_csv_record(text, metas, session, kss)
    raise ValueError(f"unknown recording format {fmt!r}")


_DROZY_NAME = re.compile(r"^(\d+)-(\d+)\.edf$", re.IGNORECASE)


def read_drozy_kss(text: str) -> dict[tuple[int, int], int]:
    """``KSS.txt``: one whitespace-separated row of session scores per subject."""
    table = {}
    rows = [r.split() for r in text.splitlines() if r.strip()]
    for s, row in enumerate(rows, start=1):
        for t, v in enumerate(row, start=1):
            table[(s, t)] = int(float(v))
    return table


def _drozy_records(cfg, label_map):
    root = cfg.path(cfg.input["drozy_dir"])
    kss_file = next((p for p in root.rglob("*") if p.name.upper() == "KSS.TXT"), None)
    if kss_file is None:
        raise ValueError(f"{root}: no KSS.txt found")
    table = read_drozy_kss(kss_file.read_text(encoding="utf-8"))
    records = []
    for path in sorted(root.rglob("*.edf")):
        m = _DROZY_NAME.match(path.name)
        if not m:
            continue
        subject, session = int(m.group(1)), int(m.group(2))
        if (subject, session) not in table:
            raise ValueError(f"{path.name}: no KSS entry for subject {subject} session {session}")
        kss = [(0.0, table[(subject, session)])]
        records.append(_stage("ingest", path.name, parse_edf, path.read_bytes(), label_map,
                              f"{subject:02d}-{session}", kss))
    if not records:
        raise ValueError(f"{root}: no <subject>-<session>.edf files")
    return records


def synth_config(doc: dict | None):
    """Synthetic layout from a mapping; without ``classes`` the default layout is used.

    The default layout accepts ``block_seconds`` and ``gap`` plus the scalar
    keys ``sampling_rate``, ``sine_fraction``, ``session_id`` and ``sessions``.
    """
    doc = dict(doc or {})
    if doc.get("classes"):
        return synth_config_from_dict(doc)
    base = default_config(block_seconds=float(doc.pop("block_seconds", 120.0)),
                          gap=float(doc.pop("gap", 0.45)))
    allowed = {"sampling_rate", "sine_fraction", "session_id", "sessions"}
    unknown = set(doc) - allowed - {"classes"}
    if unknown:
        raise ValueError(f"unknown synthetic config keys: {sorted(unknown)}")
    doc.pop("classes", None)
    return dataclasses.replace(base, **doc)


def load_records(cfg: PipelineConfig):
    inp = cfg.input
    if "synthetic" in inp:
        synth = inp["synthetic"]
        if isinstance(synth, str):
            import yaml

            with open(cfg.path(synth), encoding="utf-8") as fh:
                synth = yaml.safe_load(fh)
        sc = _stage("ingest", "synthetic", synth_config, synth)
        return _stage("ingest", "synthetic", generate_sessions, sc, cfg.seed)
    label_map = _label_map(cfg)
    if "drozy_dir" in inp:
        return _stage("ingest", inp["drozy_dir"], _drozy_records, cfg, label_map)
    return [_stage("ingest", e["path"], _read_recording, cfg, e, i, label_map)
            for i, e in enumerate(inp["recordings"])]


def resolve_combinations(cfg: PipelineConfig, records) -> list[ModalityCombination]:
    """Configured combinations with feasibility judged on the loaded channels."""
    counts = {}
    for ch in records[0].channels:
        counts[ch.meta.modality] = counts.get(ch.meta.modality, 0) + 1
    available = enumerate_modality_combinations(counts.keys(), counts)
    if cfg.combinations == "all":
        return available
    by_name = {c.name: c for c in available}
    out = []
    for name in cfg.combinations:
        if name not in by_name:
            raise InfeasibleCombination(f"{name} uses a modality missing from the recordings")
        out.append(by_name[name])
    return out


@dataclass
class Prepared:
    segments: list
    cache: DescriptorCache
    combinations: list
    full: FeatureMatrix
    train_keys: tuple
    test_keys: tuple
    split_manifest: dict
    summary: dict


def prepare(cfg: PipelineConfig, require_all_feasible=True) -> Prepared:
    """Ingest, preprocess, segment, extract features for the full channel union, split."""
    records = load_records(cfg)
    combos = resolve_combinations(cfg, records)
    infeasible = [c.name for c in combos if not c.feasible]
    if infeasible and (require_all_feasible or len(infeasible) == len(combos)):
        raise InfeasibleCombination(
            f"{infeasible[0]} has fewer than two channels; no pairwise features exist")
    combos = [c for c in combos if c.feasible]
    spec = cfg.filter_spec
    target_rate = cfg.preprocess.get("target_rate")
    threshold = cfg.preprocess.get("amplitude_threshold")
    segments, constant, dropped_unlabeled, dropped_artifact = [], [], 0, 0
    for rec in records:
        pre = _stage("preprocess", rec.session_id, preprocess_record, rec, spec, target_rate)
        constant += [f"{rec.session_id}:{c}" for c in pre.constant_channels]
        seg = _stage("segmentation", rec.session_id, segment_record, pre.record,
                     cfg.window_seconds, threshold)
        segments.extend(seg.segments)
        dropped_unlabeled += seg.dropped_unlabeled
        dropped_artifact += seg.dropped_artifact
    if not segments:
        raise StageError("segmentation", "all", ValueError("no labeled segments"))
    cache = DescriptorCache(cfg.lag_ms)
    present = {ch.meta.modality for ch in segments[0].channels}
    union = ModalityCombination(tuple(present))
    full = _stage("features", union.name, build_matrix, segments, union, cfg.lag_ms, cache)
    sp = _stage("split", cfg.split_spec.mode.value, split, full, cfg.split_spec)
    if len(sp.train) == 0 or len(sp.test) == 0:
        raise StageError("split", cfg.split_spec.mode.value, ValueError(
            f"split left {len(sp.train)} train and {len(sp.test)} test rows"))
    summary = {
        "n_segments": len(segments),
        "class_counts": {CLASS_NAMES[k]: int(v) for k, v in enumerate(full.class_counts())},
        "dropped_unlabeled": dropped_unlabeled,
        "dropped_artifact": dropped_artifact,
        "constant_channels": constant,
        "sessions": sorted({k[0] for k in full.keys}),
        "skipped_infeasible": infeasible,
    }
    return Prepared(segments, cache, combos, full, sp.train.keys, sp.test.keys, sp.manifest(),
                    summary)


def _matrix_for(prep: Prepared, combo: ModalityCombination, cfg: PipelineConfig, kind=None):
    fm = build_matrix(prep.segments, combo, cfg.lag_ms, prep.cache,
                      allowlist=cfg.features.get("allowlist"))
    if kind is not None:
        fm = fm.restrict_kind(kind)
    pos = {k: i for i, k in enumerate(fm.keys)}
    return (fm.take([pos[k] for k in prep.train_keys]),
            fm.take([pos[k] for k in prep.test_keys]))


@dataclass
class CellResult:
    combination: str
    classifier: str
    kind: str | None
    report: object
    model: object
    test: FeatureMatrix


def _run_cell(prep, cfg, tc, combo, clf, kind=None) -> CellResult:
    key = f"{combo.name}/{clf}" + (f"/{kind.value}" if kind else "")
    train, test = _stage("features", key, _matrix_for, prep, combo, cfg, kind)
    model = _stage("train", key, models.fit, clf, train, tc)
    report = _stage("evaluate", key, evaluate, models.predict_proba(model, test), test.y)
    return CellResult(combo.name, clf, kind.value if kind else None, report, model, test)


def _run_cells(cells, prep, cfg, tc):
    def job(cell):
        return _run_cell(prep, cfg, tc, *cell)

    if cfg.threads > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            return list(pool.map(job, cells))
    return [job(c) for c in cells]


# --- artifacts --------------------------------------------------------------

def _write(out: Path, name: str, text: str, written: list):
    path = out / name
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    written.append(name)


def _dump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def _csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerows(rows)
    return buf.getvalue()


def _explain(cell: CellResult, cfg: PipelineConfig, out: Path, written: list):
    max_rows = int(cfg.explain.get("max_rows", 100))
    top_k = int(cfg.explain.get("top_k", 10))
    test = cell.test
    rows = test.X[:max_rows]
    keys = test.keys[:max_rows]
    exps = explain_rows(cell.model, rows, keys)
    K = cell.model.num_classes
    _write(out, "shap.json", shap_json(exps, K) + "\n", written)
    per_class = [global_importance(exps, k) for k in range(K)]
    overall = {}
    for imp in per_class:
        for name, v in imp.items:
            overall[name] = overall.get(name, 0.0) + v / K
    from .explain import GlobalImportance

    combined = GlobalImportance(tuple(sorted(overall.items(), key=lambda t: (-t[1], t[0]))))
    _write(out, "importance.csv", combined.to_csv(), written)
    for k, imp in enumerate(per_class):
        _write(out, f"importance_class{k}.csv", imp.to_csv(), written)
    pred = models.predict(cell.model, rows[:1])[0]
    wf = waterfall(exps[0], top_k=top_k, class_index=int(pred))
    _write(out, "waterfall.json",
           _dump({"row_key": list(keys[0]), "class": int(pred), **wf.to_dict()}), written)
    force = [{"row_key": list(e.row_key), "class": int(c),
              "base_value": float(e.base_value[c]), "output": e.output(int(c)),
              "features": [{"name": n, "value": float(v), "phi": float(p)}
                           for n, v, p in zip(e.feature_names, e.feature_values, e.phi[:, c])]}
             for e, c in zip(exps, models.predict(cell.model, rows))]
    _write(out, "force.json", _dump(force), written)
    return {"classifier": cell.classifier, "combination": cell.combination,
            "rows_explained": len(rows), "explained_output":
                "raw_score" if cell.classifier == "XGBOOST" else
                ("class_score" if cell.classifier == "LR" else "probability")}


def _file_digests(out: Path, names) -> dict:
    return {n: hashlib.sha256((out / n).read_bytes()).hexdigest() for n in sorted(names)}


def _manifest(cfg, command, prep, extra, out, written):
    resolved = cfg.resolved()
    digest = hashlib.sha256(json.dumps(resolved, sort_keys=True).encode()).hexdigest()
    comb_counts = {}
    for c in prep.combinations:
        k = sum(1 for ch in prep.segments[0].channels if ch.meta.modality in c.modalities)
        comb_counts[c.name] = 3 * k * (k - 1) // 2
    doc = {
        "tool": "physiofuse",
        "command": command,
        "created": dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds"),
        "config_sha256": digest,
        "config": resolved,
        "seed": cfg.seed,
        "split_mode": cfg.split_spec.mode.value,
        "versions": {"physiofuse": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "kernel_backend": _core.BACKEND},
        "data": prep.summary,
        "feature_counts": comb_counts,
        "feature_count_note": (
            "features are all three descriptors over every unordered channel pair "
            f"(3 x C(k, 2), {comb_counts.get(ALL_MODALITIES.name, 'n/a')} for the full union); "
            f"the reference feature table lists {PAPER_FEATURE_COUNTS} whose extra Corr/CrossCorr "
            "entries are not derivable, use features.allowlist to reproduce a bespoke subset"),
        **extra,
        "files": _file_digests(out, written),
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        fh.write(_dump(doc))
    return doc


def cmd_run(cfg: PipelineConfig) -> dict:
    """Single combination, every configured classifier, plus explanations."""
    if cfg.combinations != "all" and len(cfg.combinations) != 1:
        raise ConfigInvalid("combinations", "run takes exactly one combination; use sweep")
    prep = prepare(cfg, require_all_feasible=cfg.combinations != "all")
    # default: every modality present in the recordings
    combo = prep.combinations[-1]
    tc = cfg.train_config
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    train, test = _matrix_for(prep, combo, cfg)
    _write(out, "features.csv", matrix_to_csv(build_matrix(
        prep.segments, combo, cfg.lag_ms, prep.cache,
        allowlist=cfg.features.get("allowlist"))), written)
    _write(out, "split.json", _dump(prep.split_manifest), written)
    cells = _run_cells([(combo, c) for c in cfg.classifiers], prep, cfg, tc)
    metrics = {}
    for cell in cells:
        _write(out, f"models/{cell.classifier}.json", models.dumps(cell.model) + "\n", written)
        metrics[cell.classifier] = {"combination": cell.combination, **cell.report.to_dict()}
    _write(out, "metrics.json", _dump(metrics), written)
    table = _results_table(cells)
    _write(out, "results.csv", _csv([TABLE3_COLUMNS, *table]), written)
    target = cfg.explain.get("classifier")
    chosen = next((c for c in cells if c.classifier == str(target).upper()), None) if target \
        else None
    chosen = chosen or _best(cells)
    explained = _explain(chosen, cfg, out, written)
    return _manifest(cfg, "run", prep, {"explained": explained, "combination": combo.name},
                     out, written)


def _best(cells):
    # stable: earlier cells win ties
    return max(cells, key=lambda c: c.report.accuracy)


def _results_table(cells):
    ranked = sorted(cells, key=lambda c: -c.report.accuracy)
    return [c.report.table_row(c.classifier, c.combination) for c in ranked]


def cmd_sweep(cfg: PipelineConfig) -> dict:
    """Every feasible combination x classifier on one shared split."""
    prep = prepare(cfg, require_all_feasible=False)
    tc = cfg.train_config
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    _write(out, "features.csv", matrix_to_csv(prep.full), written)
    _write(out, "split.json", _dump(prep.split_manifest), written)
    cells = _run_cells([(c, m) for c in prep.combinations for m in cfg.classifiers],
                       prep, cfg, tc)
    _write(out, "results.csv", _csv([TABLE3_COLUMNS, *_results_table(cells)]), written)
    metrics = {f"{c.combination}/{c.classifier}": c.report.to_dict() for c in cells}
    _write(out, "metrics.json", _dump(metrics), written)
    group_clfs = [c for c in ("XGBOOST", "RF") if c in cfg.classifiers]
    group_cells = _run_cells([(c, m, k) for k in KIND_ORDER for c in prep.combinations
                              for m in group_clfs], prep, cfg, tc) if group_clfs else []
    rows = [TABLE2_COLUMNS]
    detail = {}
    for kind in KIND_ORDER:
        best = {}
        for m in ("XGBOOST", "RF"):
            mine = [c for c in group_cells if c.kind == kind.value and c.classifier == m]
            best[m] = _best(mine) if mine else None
            if best[m]:
                detail[f"{GROUP_NAMES[kind]}/{m}"] = {
                    "combination": best[m].combination,
                    "accuracy": best[m].report.accuracy, "auc_ovr": best[m].report.auc_ovr}

        def fmt(cell, attr):
            if cell is None:
                return ""
            v = getattr(cell.report, attr)
            return "" if v is None else f"{v:.4f}"

        rows.append([GROUP_NAMES[kind], fmt(best["XGBOOST"], "accuracy"),
                     fmt(best["RF"], "accuracy"), fmt(best["XGBOOST"], "auc_ovr"),
                     fmt(best["RF"], "auc_ovr")])
    _write(out, "feature_groups.csv", _csv(rows), written)
    _write(out, "feature_groups.json", _dump(detail), written)
    best = _best(cells)
    _write(out, f"models/{best.combination.replace('|', '_')}__{best.classifier}.json",
           models.dumps(best.model) + "\n", written)
    explained = _explain(best, cfg, out, written)
    return _manifest(cfg, "sweep", prep,
                     {"explained": explained,
                      "best_cell": {"classifier": best.classifier,
                                    "combination": best.combination,
                                    "accuracy": best.report.accuracy},
                      "cells": len(cells)}, out, written)


# --- report -----------------------------------------------------------------

def _read_json(path: Path):
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MalformedArtifact(path, f"invalid JSON ({exc})") from None
    except FileNotFoundError:
        raise MalformedArtifact(path, "file missing") from None


def _read_table(path: Path):
    try:
        rows = list(csv.reader(io.StringIO(path.read_text(encoding="utf-8"))))
    except FileNotFoundError:
        raise MalformedArtifact(path, "file missing") from None
    if not rows or tuple(rows[0]) != TABLE3_COLUMNS:
        raise MalformedArtifact(path, f"expected header {','.join(TABLE3_COLUMNS)}")
    return [r for r in rows[1:] if r]


def cmd_report(run_dir, top=10) -> str:
    """Human-readable summary of a ``run`` or ``sweep`` directory."""
    run_dir = Path(run_dir)
    manifest_path = run_dir / "manifest.json"
    if not manifest_path.exists():
        raise MissingManifest(f"{run_dir}: no manifest.json (not a run directory?)")
    manifest = _read_json(manifest_path)
    _read_json(run_dir / "metrics.json")
    rows = _read_table(run_dir / "results.csv")
    lines = [f"{manifest.get('command', '?')} | seed {manifest.get('seed')} | split "
             f"{manifest.get('split_mode')} | config {manifest.get('config_sha256', '')[:12]}",
             ""]
    shown = rows[:top]
    widths = [max(len(str(r[i])) for r in [TABLE3_COLUMNS, *shown]) for i in range(6)]
    fmt_row = lambda r: "  ".join(str(v).ljust(w) for v, w in zip(r, widths))  # noqa: E731
    lines.append(f"Top {len(shown)} classifier/signal combinations by accuracy")
    lines.append(fmt_row(TABLE3_COLUMNS))
    lines.extend(fmt_row(r) for r in shown)
    if rows:
        b = rows[0]
        lines += ["", f"Best cell: {b[0]} on {b[1]} (accuracy {b[2]}, AUC {b[5] or 'n/a'})"]
    explained = manifest.get("explained", {})
    for k, name in enumerate(CLASS_NAMES):
        path = run_dir / f"importance_class{k}.csv"
        if not path.exists():
            continue
        try:
            imp = importance_from_csv(path.read_text(encoding="utf-8"))
        except (ValueError, IndexError) as exc:
            raise MalformedArtifact(path, str(exc)) from None
        lines += ["", f"Top {min(top, len(imp.items))} SHAP features, class {k} ({name}); "
                      f"{explained.get('classifier', '?')} on {explained.get('combination', '?')}"]
        for rank, (feat, v) in enumerate(imp.top(top), start=1):
            lines.append(f"  {rank:2d}. {feat:<28s} {v:.6g}")
    return "\n".join(lines) + "\n"


def synth_to_disk(synth_doc: dict, seed: int, out) -> list[str]:
    """Write each synthetic session as ``<session>.csv`` plus ``<session>_kss.csv``."""
    from .ingest import write_csv_record, write_kss_sidecar

    sc = synth_config(synth_doc)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for rec in generate_sessions(sc, seed):
        with open(out / f"{rec.session_id}.csv", "w", encoding="utf-8", newline="") as fh:
            write_csv_record(rec, fh)
        with open(out / f"{rec.session_id}_kss.csv", "w", encoding="utf-8", newline="") as fh:
            write_kss_sidecar(rec.kss_annotations, fh)
        written += [f"{rec.session_id}.csv", f"{rec.session_id}_kss.csv"]
    return written


__all__ = ["PipelineConfig", "cmd_report", "cmd_run", "cmd_sweep", "config_from_dict",
           "load_config", "prepare", "synth_to_disk"]
