"""Config-driven experiment runner and the exploratory summary.

A run goes: load -> drop leaky columns -> stratified holdout split -> fit the
preprocessing on the training rows -> resample the training rows -> fit every
model -> holdout metrics, stratified k-fold CV on the training rows and paired
t-tests among the top three models -> report files.

Everything written to the run directory is a pure function of the resolved
config, so a rerun reproduces it byte for byte.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from itertools import combinations
from pathlib import Path

import numpy as np

from .dataset import (LEAKY_COLUMNS, POSITIVE_MEANING, Table, class_counts, load_weather_csv,
                      split_holdout)
from .errors import ConfigError
from .evaluation import (TTEST_CAVEAT, EvalReport, cross_validate, derive_seed, evaluate,
                         paired_t_test, roc_auc, stratified_kfold)
from .models import ClassifierSpec
from .preprocess import Preprocessor, check_no_leakage, pearson_correlation
from .resample import ResamplePlan, resample

log = logging.getLogger(__name__)

REFERENCE_CLASS_COUNTS = {"No": 110316, "Yes": 31877}


def default_roster() -> list[ClassifierSpec]:
    """The seven model families in their reference configurations."""
    return [
        ClassifierSpec("logreg", {}, name="logreg"),
        ClassifierSpec("tree", {}, name="tree"),
        *(ClassifierSpec("knn", {"k": k}, name=f"knn_k{k}") for k in (25, 27, 29)),
        ClassifierSpec("decision_table", {}, name="decision_table"),
        ClassifierSpec("random_forest", {"n_estimators": 100, "max_depth": 4}, name="random_forest"),
        ClassifierSpec("adaboost", {"n_estimators": 50}, name="adaboost"),
        *(ClassifierSpec("gbm", {"n_estimators": 100, "learning_rate": lr, "max_depth": 2,
                                 "max_features": 2}, name=f"gbm_lr{lr}")
          for lr in (0.05, 0.1, 0.25)),
    ]


PRESETS = {
    "experiment1": ("Original dataset", "none"),
    "experiment2": ("Undersampled dataset", "undersample_random"),
    "experiment3": ("Oversampled dataset", "smote"),
}

# published ranking for each arm, printed next to the measured one
REFERENCE_FINDINGS = {
    "experiment1": "best by accuracy: gradient boosting (lr=0.25); worst coverage: random forest, decision tree",
    "experiment2": "best by accuracy and coverage: logistic regression; worst: decision tree",
    "experiment3": "best by accuracy and coverage: decision tree; worst: logistic regression",
}


@dataclass
class ExperimentConfig:
    data_path: str
    seed: int = 42
    selector_k: int = 4
    hash_width: int = 8
    resample: ResamplePlan = field(default_factory=ResamplePlan)
    split_ratio: float = 0.75
    models: list[ClassifierSpec] = field(default_factory=default_roster)
    cv_k: int = 10
    report_dir: str = "runs/latest"
    name: str = "custom"
    hash_columns: list[str] = field(
        default_factory=lambda: ["Location", "WindGustDir", "WindDir9am", "WindDir3pm"])
    onehot_columns: list[str] = field(default_factory=lambda: ["RainToday"])
    signed_hash: bool = True
    features: list[str] | None = None
    knn_eval_cap: int | None = None
    max_rows: int | None = None
    n_jobs: int = 1

    def validate(self) -> None:
        if not self.models:
            raise ConfigError("models must be nonempty")
        if not 0.0 < self.split_ratio < 1.0:
            raise ConfigError(f"split_ratio must be in (0, 1), got {self.split_ratio}")
        if self.cv_k < 2:
            raise ConfigError(f"cv_k must be >= 2, got {self.cv_k}")
        if self.selector_k is not None and self.selector_k < 1:
            raise ConfigError(f"selector_k must be >= 1, got {self.selector_k}")
        if self.hash_width < 1:
            raise ConfigError(f"hash_width must be >= 1, got {self.hash_width}")
        if self.knn_eval_cap is not None and self.knn_eval_cap < 1:
            raise ConfigError("knn_eval_cap must be >= 1")
        if self.max_rows is not None and self.max_rows < 4:
            raise ConfigError("max_rows must be >= 4")
        if self.n_jobs < 1:
            raise ConfigError("n_jobs must be >= 1")
        check_no_leakage(self.hash_columns + self.onehot_columns + list(self.features or []))
        labels = [m.label for m in self.models]
        if len(set(labels)) != len(labels):
            raise ConfigError(f"model names must be unique, got {labels}")
        for m in self.models:
            m.validate()

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["resample"] = self.resample.to_dict()
        d["models"] = [m.to_dict() for m in self.models]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config field(s): {sorted(unknown)}")
        if "data_path" not in d:
            raise ConfigError("config needs a data_path")
        d = dict(d)
        if "resample" in d:
            d["resample"] = ResamplePlan.from_dict(d["resample"])
        if "models" in d:
            if not isinstance(d["models"], list):
                raise ConfigError("models must be a list")
            d["models"] = [ClassifierSpec.from_dict(m) for m in d["models"]]
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    return ExperimentConfig.from_dict(raw)


def preset(name: str, data_path: str, seed: int = 42, report_dir: str | None = None,
           **overrides) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    _, mode = PRESETS[name]
    cfg = ExperimentConfig(
        data_path=str(data_path), seed=seed, name=name,
        resample=ResamplePlan(mode=mode, k_neighbors=5, seed=seed),
        report_dir=report_dir or f"runs/{name}",
    )
    for k, v in overrides.items():
        if not hasattr(cfg, k):
            raise ConfigError(f"unknown config field {k!r}")
        setattr(cfg, k, v)
    return cfg


# -- running ------------------------------------------------------------------


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x) if math.isfinite(x) else str(x)
    return str(x)


def _task(args):
    """One (model, split) unit of work; returns plain data so it pickles."""
    kind, spec, Xtr, ytr, Xte, yte, plan, fold_plan, cap, seed = args
    if kind == "holdout":
        model = spec.build(seed=seed)
        model.fit(Xtr, ytr)
        rows = np.arange(yte.size)
        if cap is not None and yte.size > cap:
            rows = np.sort(np.random.default_rng(seed).choice(yte.size, cap, replace=False))
        scores = model.score(Xte[rows])
        pred = model.predict(Xte[rows])
        return model.to_dict(), evaluate(yte[rows], pred, scores), scores, yte[rows]
    return cross_validate(Xtr, ytr, spec, fold_plan, plan, eval_cap=cap)


@dataclass
class ModelResult:
    name: str
    kind: str
    holdout: EvalReport
    cv_accuracies: list[float]
    cv_reports: list[EvalReport]
    cv_mean: float
    cv_std: float
    roc: tuple[np.ndarray, np.ndarray] | None
    state: dict


@dataclass
class RunResult:
    config: ExperimentConfig
    out_dir: Path
    results: list[ModelResult]
    ranking: list[str]
    ttests: list[tuple[str, str, object]]
    selected_features: list[str]
    info: dict


def _stratified_subsample(y, max_rows, seed):
    if max_rows is None or y.size <= max_rows:
        return np.arange(y.size)
    return split_holdout(y.size, y, max_rows / y.size, derive_seed(seed, 7)).train_indices


def run_experiment(config: ExperimentConfig) -> RunResult:
    config.validate()
    table = load_weather_csv(config.data_path)
    for c in config.hash_columns + config.onehot_columns + list(config.features or []):
        if c not in table:
            raise ConfigError(f"config references column {c!r} which is not in the data")
    leak_present = [c for c in LEAKY_COLUMNS if c in table]
    labels_all = table.labels()
    info = {
        "n_rows_loaded": table.n_rows,
        "n_dropped_unlabeled": table.n_dropped_unlabeled,
        "class_counts_loaded": class_counts(labels_all),
        "leaky_columns_dropped": leak_present,
    }
    keep = _stratified_subsample(labels_all, config.max_rows, config.seed)
    if keep.size != table.n_rows:
        table = table.take(keep)
        info["subsampled_rows"] = table.n_rows
    y = table.labels()
    split = split_holdout(table.n_rows, y, config.split_ratio, config.seed)
    pre = Preprocessor(
        hash_columns=tuple(config.hash_columns), onehot_columns=tuple(config.onehot_columns),
        hash_width=config.hash_width, signed_hash=config.signed_hash,
        selector_k=config.selector_k,
        feature_columns=None if config.features is None else tuple(config.features),
    )
    train_tab, test_tab = table.take(split.train_indices), table.take(split.test_indices)
    Xtr = pre.fit(train_tab)
    Xte = pre.transform(test_tab)
    ytr, yte = y[split.train_indices], y[split.test_indices]
    info["train_class_counts"] = class_counts(ytr)
    info["test_class_counts"] = class_counts(yte)
    info["matrix_shape_train"] = list(Xtr.values.shape)
    Xfit, yfit = resample(Xtr.values, ytr, config.resample)
    info["train_class_counts_resampled"] = class_counts(yfit)
    info["matrix_shape_fit"] = list(np.shape(Xfit))

    fold_plan = stratified_kfold(ytr, config.cv_k, derive_seed(config.seed, 1))
    tasks = []
    for i, spec in enumerate(config.models):
        cap = config.knn_eval_cap if spec.kind == "knn" else None
        seed = derive_seed(config.seed, i, spec.seed)
        seeded = ClassifierSpec(spec.kind, spec.hyperparameters, seed, spec.label)
        tasks.append(("holdout", seeded, Xfit, yfit, Xte.values, yte, None, None, cap, seed))
        tasks.append(("cv", seeded, Xtr.values, ytr, None, None, config.resample, fold_plan, cap, seed))
    if config.n_jobs > 1:
        with ProcessPoolExecutor(max_workers=config.n_jobs) as pool:
            outputs = list(pool.map(_task, tasks))
    else:
        outputs = []
        for t in tasks:
            log.info("%s: %s", t[1].label, t[0])
            outputs.append(_task(t))

    results = []
    for i, spec in enumerate(config.models):
        state, hold, scores, y_eval = outputs[2 * i]
        cv = outputs[2 * i + 1]
        roc = None
        if 0 < y_eval.sum() < y_eval.size:
            r = roc_auc(y_eval, scores)
            roc = (r.fpr, r.tpr)
        hold.fold_scores = cv.accuracies
        results.append(ModelResult(spec.label, spec.kind, hold, cv.accuracies, cv.reports,
                                   cv.mean, cv.std, roc, state))

    ranking = [r.name for r in sorted(results, key=lambda r: (-r.cv_mean, r.name))]
    by_name = {r.name: r for r in results}
    top = ranking[:3]
    ttests = [(a, b, paired_t_test(by_name[a].cv_accuracies, by_name[b].cv_accuracies))
              for a, b in combinations(top, 2)]
    info["knn_eval_cap"] = config.knn_eval_cap
    run = RunResult(config, Path(config.report_dir), results, ranking, ttests,
                    pre.selected_features, info)
    write_reports(run, pre)
    return run


# -- report writing -------------------------------------------------------------


METRIC_COLUMNS = ["model", "kind", "split", "accuracy", "precision", "recall", "f1", "auc",
                  "tp", "tn", "fp", "fn"]


def metrics_csv(results: list[ModelResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(METRIC_COLUMNS)
    for r in results:
        rows = [("holdout", r.holdout)] + [(f"fold{f}", rep) for f, rep in enumerate(r.cv_reports)]
        for split, rep in rows:
            row = rep.as_row()
            w.writerow([r.name, r.kind, split] + [_fmt(row[c]) for c in METRIC_COLUMNS[3:]])
    return buf.getvalue()


def _md_table(header, rows) -> str:
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    lines += ["| " + " | ".join(str(c) for c in row) + " |" for row in rows]
    return "\n".join(lines)


def _f4(x):
    return "n/a" if x is None else f"{x:.4f}"


def report_markdown(run: RunResult) -> str:
    cfg, info = run.config, run.info
    title = PRESETS.get(cfg.name, (cfg.name, None))[0]
    counts = info["class_counts_loaded"]
    out = [f"# Rainfall prediction run: {cfg.name} ({title})", ""]
    out += [
        f"- data: `{cfg.data_path}`",
        f"- rows loaded: {info['n_rows_loaded']} (dropped {info['n_dropped_unlabeled']} rows "
        "with missing RainTomorrow)",
        f"- class counts: No = {counts['n_negative']}, Yes = {counts['n_positive']} "
        f"(positive class: {POSITIVE_MEANING})",
        f"- reference counts are No = {REFERENCE_CLASS_COUNTS['No']}, Yes = "
        f"{REFERENCE_CLASS_COUNTS['Yes']}; Yes (rain) is the positive, minority class",
    ]
    if "subsampled_rows" in info:
        out.append(f"- stratified subsample used: {info['subsampled_rows']} rows")
    if info["leaky_columns_dropped"]:
        out.append(
            f"- leakage: {', '.join(info['leaky_columns_dropped'])} records next-day rainfall, "
            "from which the target is derived; it was dropped before any fitting"
        )
    tc, rc = info["train_class_counts"], info["train_class_counts_resampled"]
    out += [
        f"- split: {cfg.split_ratio:g} train, stratified, seed {cfg.seed}",
        f"- training class counts: No = {tc['n_negative']}, Yes = {tc['n_positive']}; after "
        f"resampling ({cfg.resample.mode}): No = {rc['n_negative']}, Yes = {rc['n_positive']}",
        f"- fit matrix shape: {info['matrix_shape_fit'][0]} x {info['matrix_shape_fit'][1]}",
        f"- selected features (chi2, k={cfg.selector_k}): {', '.join(run.selected_features)}",
        f"- hash width: {cfg.hash_width} ({'signed' if cfg.signed_hash else 'unsigned'})",
    ]
    if info.get("knn_eval_cap"):
        out.append(f"- KNN scored on a seeded subsample of at most {info['knn_eval_cap']} "
                   "held-out rows per split")
    out += ["", "## Metrics", "",
            f"Holdout metrics on the untouched test split; CV is stratified {cfg.cv_k}-fold "
            "accuracy on the training split (resampling applied inside each fold).", ""]
    rows = []
    for name in run.ranking:
        r = next(x for x in run.results if x.name == name)
        h = r.holdout
        rows.append([name, _f4(h.accuracy), _f4(h.precision), _f4(h.recall), _f4(h.f1),
                     _f4(h.auc), f"{r.cv_mean:.4f} ± {r.cv_std:.4f}"])
    out.append(_md_table(["model", "accuracy", "precision", "recall", "f1", "auc",
                          f"{cfg.cv_k}-fold accuracy"], rows))
    out += ["", "## Ranking", "",
            f"- by CV accuracy: {' > '.join(run.ranking)}",
            f"- best: {run.ranking[0]}; worst: {run.ranking[-1]}"]
    auc_rank = sorted((r for r in run.results if r.holdout.auc is not None),
                      key=lambda r: (-r.holdout.auc, r.name))
    if auc_rank:
        out.append(f"- by holdout AUC: best {auc_rank[0].name}; worst {auc_rank[-1].name}")
    if cfg.name in REFERENCE_FINDINGS:
        out.append(f"- reference ranking for this arm: {REFERENCE_FINDINGS[cfg.name]}")
    out += ["", "## Paired t-tests (top three by CV accuracy)", ""]
    out.append(_md_table(["model A", "model B", "t", "df", "p"],
                         [[a, b, f"{t.t:.4f}", t.df, f"{t.p:.4g}"] for a, b, t in run.ttests]))
    out += ["", f"Caveat: {TTEST_CAVEAT}", ""]
    return "\n".join(out)


def write_reports(run: RunResult, pre: Preprocessor) -> None:
    out = run.out_dir
    (out / "models").mkdir(parents=True, exist_ok=True)
    (out / "metrics.csv").write_text(metrics_csv(run.results), encoding="utf-8", newline="")
    (out / "report.md").write_text(report_markdown(run), encoding="utf-8")
    (out / "selected_features.txt").write_text("\n".join(run.selected_features) + "\n",
                                               encoding="utf-8")
    (out / "config.json").write_text(json.dumps(run.config.to_dict(), indent=2) + "\n",
                                     encoding="utf-8")
    (out / "pipeline.json").write_text(json.dumps(pre.to_dict()) + "\n", encoding="utf-8")
    with (out / "ttests.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(["model_a", "model_b", "t", "df", "p"])
        for a, b, t in run.ttests:
            w.writerow([a, b, _fmt(t.t), t.df, _fmt(t.p)])
    for r in run.results:
        if r.roc is not None:
            with (out / f"roc_{r.name}.csv").open("w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\r\n")
                w.writerow(["fpr", "tpr"])
                w.writerows((_fmt(a), _fmt(b)) for a, b in zip(r.roc[0].tolist(), r.roc[1].tolist()))
        (out / "models" / f"{r.name}.json").write_text(json.dumps(r.state) + "\n", encoding="utf-8")


# -- evaluation of a saved run ----------------------------------------------------


def evaluate_saved(run_dir, data_path) -> dict[str, EvalReport]:
    """Re-apply a run's saved pipeline and models to another labelled CSV."""
    from .models import Classifier

    run_dir = Path(run_dir)
    try:
        pre = Preprocessor.from_dict(json.loads((run_dir / "pipeline.json").read_text()))
        model_files = sorted((run_dir / "models").glob("*.json"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read saved run in {run_dir}: {exc}") from exc
    if not model_files:
        raise ConfigError(f"no saved models in {run_dir / 'models'}")
    table = load_weather_csv(data_path)
    X = pre.transform(table)
    y = table.labels()
    out = {}
    for f in model_files:
        model = Classifier.from_dict(json.loads(f.read_text()))
        out[f.stem] = evaluate(y, model.predict(X), model.score(X))
    return out


# -- exploration ----------------------------------------------------------------------


def _explore_columns(table: Table):
    """Numeric view of the raw table: numeric columns, RainToday as 0/1, then the target."""
    cols, names = [], []
    for c in table.schema:
        if c.kind == "numeric":
            v = np.where(table.missing(c.name), np.nan, table.values(c.name))
        elif c.kind == "categorical" and set(table.vocab[c.name]) <= {"Yes", "No"}:
            strs = table.strings(c.name)
            v = np.array([np.nan if s is None else float(s == "Yes") for s in strs])
        elif c.kind == "binary_label":
            v = table.values(c.name).astype(np.float64)
        else:
            continue
        cols.append(v)
        names.append(c.name)
    return names, (np.column_stack(cols) if cols else np.zeros((table.n_rows, 0)))


def explore(data_path, out_dir=None) -> dict:
    """Per-column summary statistics, class distribution and the correlation matrix.

    Correlations use pairwise-complete rows and are rounded to 12 decimals,
    so exact linear relationships read as 1.0 rather than 0.9999999999999997.
    Statistics that do not exist
    (empty table, fewer than two rows) are reported as empty strings.
    """
    table = load_weather_csv(data_path)
    summary = []
    for c in table.schema:
        miss = table.missing(c.name)
        n_present = int((~miss).sum())
        row = {"column": c.name, "kind": c.kind, "count": n_present,
               "missing_pct": "" if table.n_rows == 0 else 100.0 * miss.mean(),
               "mean": "", "std": "", "min": "", "max": ""}
        if c.kind in ("numeric", "binary_label") and n_present:
            v = table.values(c.name)[~miss].astype(np.float64)
            row.update(mean=float(v.mean()), min=float(v.min()), max=float(v.max()),
                       std=float(v.std(ddof=1)) if v.size > 1 else "")
        elif c.kind == "categorical":
            row["n_categories"] = len(set(table.values(c.name)[~miss].tolist()))
        summary.append(row)

    names, M = _explore_columns(table)
    corr = np.full((len(names), len(names)), np.nan)
    for i in range(len(names)):
        for j in range(i, len(names)):
            ok = ~np.isnan(M[:, i]) & ~np.isnan(M[:, j])
            if ok.sum() >= 2:
                r = pearson_correlation(M[ok][:, [i]], M[ok][:, j]).target[0]
                corr[i, j] = corr[j, i] = round(float(r), 12)
    result = {"summary": summary, "class_counts": class_counts(table.labels()),
              "n_rows": table.n_rows, "n_dropped_unlabeled": table.n_dropped_unlabeled,
              "correlation_columns": names, "correlation": corr}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        keys = ["column", "kind", "count", "missing_pct", "mean", "std", "min", "max"]
        with (out / "summary.csv").open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\r\n")
            w.writerow(keys)
            for row in summary:
                w.writerow([_fmt(row[k]) for k in keys])
        with (out / "correlation.csv").open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\r\n")
            w.writerow([""] + names)
            for n, r in zip(names, corr.tolist()):
                w.writerow([n] + ["" if math.isnan(x) else _fmt(x) for x in r])
        cc = result["class_counts"]
        (out / "class_counts.csv").write_text(
            f"class,count\r\nNo,{cc['n_negative']}\r\nYes,{cc['n_positive']}\r\n", encoding="utf-8")
    return result
