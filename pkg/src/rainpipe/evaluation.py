"""Classification metrics, ROC/AUC, stratified k-fold CV and paired t-tests."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .resample import ResamplePlan, resample

# Folds share training rows, so fold scores are not independent; the t-test
# below does not correct for that.
TTEST_CAVEAT = (
    "Paired t-tests use per-fold accuracies from one shared fold plan; overlapping "
    "training sets violate the independence assumption and no correction is applied."
)


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


def confusion(y_true, y_pred) -> ConfusionMatrix:
    t = np.asarray(y_true).astype(bool)
    p = np.asarray(y_pred).astype(bool)
    if t.shape != p.shape:
        raise DataError(f"length mismatch: {t.size} true labels vs {p.size} predictions")
    return ConfusionMatrix(
        tp=int(np.count_nonzero(t & p)),
        tn=int(np.count_nonzero(~t & ~p)),
        fp=int(np.count_nonzero(~t & p)),
        fn=int(np.count_nonzero(t & ~p)),
    )


def binary_metrics(cm: ConfusionMatrix) -> dict:
    """Accuracy, precision, recall and F1; undefined ratios become 0 and are flagged."""
    if cm.total == 0:
        raise DataError("cannot compute metrics of an empty confusion matrix")
    flags = []
    accuracy = (cm.tp + cm.tn) / cm.total
    if cm.tp + cm.fp:
        precision = cm.tp / (cm.tp + cm.fp)
    else:
        precision = 0.0
        flags.append("precision_undefined")
    if cm.tp + cm.fn:
        recall = cm.tp / (cm.tp + cm.fn)
    else:
        recall = 0.0
        flags.append("recall_undefined")
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {"accuracy": accuracy, "precision": precision, "recall": recall, "f1": f1,
            "flags": flags}


@dataclass(frozen=True)
class RocResult:
    auc: float
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray


def roc_auc(y_true, scores) -> RocResult:
    """ROC curve over every distinct score (ties grouped) and its trapezoid area."""
    y = np.asarray(y_true).astype(bool)
    s = np.asarray(scores, dtype=np.float64)
    if y.shape != s.shape:
        raise DataError("labels and scores differ in length")
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("AUC is undefined when y_true has a single class")
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    y_sorted = y[order]
    # last index of each run of equal scores
    ends = np.flatnonzero(np.r_[s_sorted[1:] != s_sorted[:-1], True])
    tps = np.cumsum(y_sorted)[ends]
    fps = (ends + 1) - tps
    tpr = np.r_[0.0, tps / n_pos]
    fpr = np.r_[0.0, fps / n_neg]
    auc = float(np.sum((fpr[1:] - fpr[:-1]) * (tpr[1:] + tpr[:-1]) / 2.0))
    return RocResult(auc, fpr, tpr, np.r_[np.inf, s_sorted[ends]])


@dataclass
class EvalReport:
    confusion: ConfusionMatrix
    accuracy: float
    precision: float
    recall: float
    f1: float
    auc: float | None
    fold_scores: list[float] | None = None
    flags: list[str] = field(default_factory=list)

    def as_row(self) -> dict:
        return {
            "accuracy": self.accuracy, "precision": self.precision, "recall": self.recall,
            "f1": self.f1, "auc": self.auc, "tp": self.confusion.tp, "tn": self.confusion.tn,
            "fp": self.confusion.fp, "fn": self.confusion.fn,
        }


def evaluate(y_true, y_pred, scores=None) -> EvalReport:
    cm = confusion(y_true, y_pred)
    m = binary_metrics(cm)
    auc = None
    flags = list(m["flags"])
    if scores is not None:
        y = np.asarray(y_true)
        if 0 < y.sum() < y.size:
            auc = roc_auc(y, scores).auc
        else:
            flags.append("auc_undefined")
    return EvalReport(cm, m["accuracy"], m["precision"], m["recall"], m["f1"], auc, flags=flags)


# -- cross-validation -------------------------------------------------------


@dataclass(frozen=True)
class FoldPlan:
    k: int
    fold_of: np.ndarray
    seed: int

    def test_indices(self, f: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of == f)

    def train_indices(self, f: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of != f)


def stratified_kfold(labels, k: int, seed: int) -> FoldPlan:
    """Shuffle each class (seeded) and deal its rows round-robin into ``k`` folds.

    Dealing continues from the fold where the previous class stopped, which
    keeps fold sizes within one row of each other.
    """
    y = np.asarray(labels)
    if k < 2:
        raise DataError(f"k must be >= 2, got {k}")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(y.size, dtype=np.intp)
    start = 0
    for c in np.unique(y):
        members = np.flatnonzero(y == c)
        if members.size < k:
            raise DataError(f"class {c} has {members.size} rows, fewer than k={k} folds")
        members = rng.permutation(members)
        fold_of[members] = (start + np.arange(members.size)) % k
        start = (start + members.size) % k
    return FoldPlan(k, fold_of, seed)


def derive_seed(*parts: int) -> int:
    """A 32-bit seed derived from a tuple of integers, stable across platforms."""
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


@dataclass
class CVResult:
    reports: list[EvalReport]
    accuracies: list[float]
    mean: float
    std: float


def _eval_rows(n: int, cap: int | None, seed: int) -> np.ndarray:
    if cap is None or n <= cap:
        return np.arange(n)
    return np.sort(np.random.default_rng(seed).choice(n, size=cap, replace=False))


def cross_validate(X, y, spec, plan: FoldPlan, resample_plan: ResamplePlan | None = None,
                   eval_cap: int | None = None) -> CVResult:
    """Fit on all folds but one, score the held-out fold, for every fold.

    Resampling, when configured, is applied to each training portion only,
    with a seed derived from (resample seed, fold id); the model seed is
    derived from (model seed, fold id). ``eval_cap`` limits the number of
    held-out rows scored per fold.
    """
    values = getattr(X, "values", X)
    values = np.asarray(values, dtype=np.float64)
    y = np.asarray(y)
    if plan.fold_of.shape != y.shape:
        raise DataError("fold plan does not match the label vector")
    reports = []
    for f in range(plan.k):
        tr, te = plan.train_indices(f), plan.test_indices(f)
        Xtr, ytr = values[tr], y[tr]
        if resample_plan is not None and resample_plan.mode != "none":
            fold_plan = ResamplePlan(resample_plan.mode, resample_plan.k_neighbors,
                                     derive_seed(resample_plan.seed, f))
            Xtr, ytr = resample(Xtr, ytr, fold_plan)
        model = spec.build(seed=derive_seed(spec.seed, f))
        model.fit(Xtr, ytr)
        te = te[_eval_rows(te.size, eval_cap, derive_seed(plan.seed, f))]
        Xte = values[te]
        reports.append(evaluate(y[te], model.predict(Xte), model.score(Xte)))
    acc = [r.accuracy for r in reports]
    std = float(np.std(acc, ddof=1)) if len(acc) > 1 else 0.0
    return CVResult(reports, acc, float(np.mean(acc)), std)


# -- paired t-test ------------------------------------------------------------


def _betacf(a: float, b: float, x: float, tol: float = 1e-15, max_iter: int = 10_000) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > tiny else tiny)
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < tol:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def betainc_regularized(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must be in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_two_sided_p(t: float, df: float) -> float:
    if not math.isfinite(t):
        return 0.0
    return betainc_regularized(df / 2.0, 0.5, df / (df + t * t))


@dataclass(frozen=True)
class TTest:
    t: float
    p: float
    df: int


def paired_t_test(a, b) -> TTest:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DataError(f"score lists differ in length: {a.size} vs {b.size}")
    n = a.size
    if n < 2:
        raise DataError("paired t-test needs at least 2 pairs")
    d = a - b
    df = n - 1
    if not d.any():
        return TTest(0.0, 1.0, df)
    sd = float(np.std(d, ddof=1))
    mean = float(d.mean())
    t = math.copysign(math.inf, mean) if sd == 0.0 else mean / (sd / math.sqrt(n))
    return TTest(t, t_two_sided_p(t, df), df)
