import math

import numpy as np
import pytest
from scipy import integrate, special

from rainpipe.errors import DataError
from rainpipe.evaluation import (ConfusionMatrix, betainc_regularized, binary_metrics, confusion,
                                 cross_validate, derive_seed, evaluate, paired_t_test, roc_auc,
                                 stratified_kfold, t_two_sided_p)
from rainpipe.models import ClassifierSpec
from rainpipe.resample import ResamplePlan


class _Majority:
    def fit(self, X, y):
        self.c = int(np.bincount(y, minlength=2).argmax())
        return self

    def predict(self, X):
        return np.full(len(X), self.c, dtype=np.int8)

    def score(self, X):
        return np.full(len(X), float(self.c))


class MajoritySpec:
    seed = 0

    def build(self, seed=None):
        return _Majority()


# -- confusion and metrics ---------------------------------------------------------


def test_confusion_examples():
    assert confusion([1, 1, 0], [1, 1, 0]) == ConfusionMatrix(tp=2, tn=1, fp=0, fn=0)
    assert confusion([1, 0], [0, 1]) == ConfusionMatrix(tp=0, tn=0, fp=1, fn=1)
    with pytest.raises(DataError, match="length"):
        confusion([1, 0], [1])


def test_confusion_and_metrics_match_counting_oracle(rng):
    for _ in range(500):
        n = int(rng.integers(1, 40))
        t, p = rng.integers(0, 2, n), rng.integers(0, 2, n)
        tp = tn = fp = fn = 0
        for a, b in zip(t.tolist(), p.tolist()):
            if a and b:
                tp += 1
            elif not a and not b:
                tn += 1
            elif b:
                fp += 1
            else:
                fn += 1
        cm = confusion(t, p)
        assert (cm.tp, cm.tn, cm.fp, cm.fn) == (tp, tn, fp, fn)
        m = binary_metrics(cm)
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        assert (m["accuracy"], m["precision"], m["recall"], m["f1"]) == ((tp + tn) / n, prec, rec, f1)
        assert m["accuracy"] == pytest.approx(1 - float(np.mean(t != p)), abs=1e-15)


def test_metric_examples_and_degenerate_flags():
    m = binary_metrics(ConfusionMatrix(2, 1, 0, 0))
    assert [m[k] for k in ("accuracy", "precision", "recall", "f1")] == [1.0, 1.0, 1.0, 1.0]
    m = binary_metrics(ConfusionMatrix(1, 0, 1, 0))
    assert m["precision"] == 0.5 and m["recall"] == 1.0 and m["f1"] == pytest.approx(2 / 3)
    m = binary_metrics(ConfusionMatrix(0, 5, 0, 0))
    assert m["precision"] == m["recall"] == m["f1"] == 0.0
    assert set(m["flags"]) == {"precision_undefined", "recall_undefined"}
    with pytest.raises(DataError, match="empty"):
        binary_metrics(ConfusionMatrix(0, 0, 0, 0))


def test_f1_min_side_bound(rng):
    for _ in range(100):
        tp, tn, fp, fn = (int(v) for v in rng.integers(1, 50, 4))
        m = binary_metrics(ConfusionMatrix(tp, tn, fp, fn))
        p, r = m["precision"], m["recall"]
        lo, hi = min(p, r), max(p, r)
        assert m["f1"] == pytest.approx(2 * p * r / (p + r), abs=1e-15)
        assert m["f1"] <= 2 * lo / (1 + lo / hi) + 1e-15


# -- ROC / AUC -------------------------------------------------------------------


def auc_pair_oracle(y, s):
    pos = [v for v, l in zip(s, y) if l]
    neg = [v for v, l in zip(s, y) if not l]
    total = sum(1.0 if a > b else 0.5 if a == b else 0.0 for a in pos for b in neg)
    return total / (len(pos) * len(neg))


def test_roc_examples():
    y = np.array([0, 1, 1, 0, 1])
    assert roc_auc(y, y.astype(float)).auc == 1.0
    r = roc_auc(y, np.full(5, 0.3))
    assert r.auc == 0.5
    assert (r.fpr[0], r.tpr[0], r.fpr[-1], r.tpr[-1]) == (0.0, 0.0, 1.0, 1.0)
    with pytest.raises(DataError, match="single class"):
        roc_auc(np.ones(3), np.array([0.1, 0.2, 0.3]))


@pytest.mark.parametrize("seed", range(5))
def test_auc_matches_pair_counting(seed):
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, 300)
    s = np.round(rng.random(300), 2)  # rounding creates ties
    assert abs(roc_auc(y, s).auc - auc_pair_oracle(y.tolist(), s.tolist())) < 1e-12


def test_auc_invariant_under_monotone_transforms(rng):
    y = rng.integers(0, 2, 200)
    s = rng.normal(size=200)
    base = roc_auc(y, s).auc
    assert roc_auc(y, s ** 3).auc == pytest.approx(base, abs=1e-12)
    assert roc_auc(y, special.expit(5 * s)).auc == pytest.approx(base, abs=1e-12)


def test_evaluate_flags_single_class_auc():
    rep = evaluate(np.zeros(4), np.zeros(4), np.zeros(4))
    assert rep.auc is None and "auc_undefined" in rep.flags


# -- stratified folds ------------------------------------------------------------


def test_kfold_small_balanced():
    y = np.array([0, 1] * 5)
    plan = stratified_kfold(y, 5, 0)
    for f in range(5):
        assert sorted(y[plan.test_indices(f)].tolist()) == [0, 1]
    assert np.array_equal(plan.fold_of, stratified_kfold(y, 5, 0).fold_of)


def test_kfold_imbalanced_exact_counts():
    y = np.array([0] * 900 + [1] * 100)
    plan = stratified_kfold(y, 10, 3)
    for f in range(10):
        idx = plan.test_indices(f)
        assert (int((y[idx] == 0).sum()), int((y[idx] == 1).sum())) == (90, 10)


@pytest.mark.parametrize("seed", range(10))
def test_kfold_partitions_and_balances(seed):
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, int(rng.integers(40, 200)))
    k = int(rng.integers(2, 11))
    plan = stratified_kfold(y, k, seed)
    assert sorted(np.concatenate([plan.test_indices(f) for f in range(k)]).tolist()) == list(range(y.size))
    n1 = int(y.sum())
    for f in range(k):
        c1 = int(y[plan.test_indices(f)].sum())
        assert abs(c1 - math.ceil(n1 / k)) <= 1
        assert np.array_equal(np.sort(np.concatenate([plan.train_indices(f), plan.test_indices(f)])),
                              np.arange(y.size))


def test_kfold_class_smaller_than_k():
    with pytest.raises(DataError, match="fewer than k"):
        stratified_kfold(np.array([0] * 10 + [1] * 3), 5, 0)


# -- cross-validation -------------------------------------------------------------


def test_cv_majority_classifier_on_90_10():
    y = np.array([0] * 90 + [1] * 10)
    res = cross_validate(np.zeros((100, 1)), y, MajoritySpec(), stratified_kfold(y, 10, 0))
    assert res.accuracies == [0.9] * 10
    assert res.mean == pytest.approx(0.9) and res.std == pytest.approx(0.0, abs=1e-15)


def test_cv_two_folds_on_four_rows():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = np.array([0, 1, 0, 1])
    res = cross_validate(X, y, ClassifierSpec("tree"), stratified_kfold(y, 2, 1))
    assert len(res.reports) == 2
    assert res.mean == sum(res.accuracies) / 2


def test_cv_logreg_deterministic(rng):
    X = rng.random((500, 3))
    y = (X[:, 0] + 0.2 * rng.normal(size=500) > 0.5).astype(int)
    spec = ClassifierSpec("logreg", {"n_iters": 100}, seed=5)
    plan = stratified_kfold(y, 10, 2)
    a = cross_validate(X, y, spec, plan)
    b = cross_validate(X, y, spec, plan)
    assert a.accuracies == b.accuracies
    assert [r.auc for r in a.reports] == [r.auc for r in b.reports]


def test_cv_resamples_training_folds_only(rng):
    X = rng.random((200, 2))
    y = np.array([0] * 160 + [1] * 40)
    plan = stratified_kfold(y, 5, 0)
    res = cross_validate(X, y, ClassifierSpec("tree", {"max_depth": 2}), plan,
                         ResamplePlan("undersample_random", seed=1))
    # held-out folds keep the original 32/8 class mix
    assert all(r.confusion.total == 40 for r in res.reports)
    assert all(r.confusion.tp + r.confusion.fn == 8 for r in res.reports)


def test_cv_plan_mismatch():
    with pytest.raises(DataError):
        cross_validate(np.zeros((4, 1)), np.array([0, 1, 0, 1]), MajoritySpec(),
                       stratified_kfold(np.array([0, 1] * 3), 2, 0))


def test_derive_seed_stable():
    assert derive_seed(42, 1) == derive_seed(42, 1)
    assert derive_seed(42, 1) != derive_seed(42, 2)
    assert 0 <= derive_seed(7) < 2 ** 32


# -- paired t-test ---------------------------------------------------------------


def t_density_tail(t, df):
    c = math.gamma((df + 1) / 2) / (math.sqrt(df * math.pi) * math.gamma(df / 2))
    f = lambda x: c * (1 + x * x / df) ** (-(df + 1) / 2)
    return 2 * integrate.quad(f, abs(t), np.inf, epsabs=1e-14)[0]


def test_t_test_reference_point():
    p = t_two_sided_p(2.262, 9)
    assert abs(p - 0.050) <= 0.001
    assert abs(p - t_density_tail(2.262, 9)) < 1e-10


@pytest.mark.parametrize("df", [1, 2, 5, 9, 30])
def test_t_tail_matches_integration(df):
    for t in (0.1, 0.7, 1.5, 3.0, 8.0):
        assert abs(t_two_sided_p(t, df) - t_density_tail(t, df)) < 1e-10


def test_betainc_matches_scipy():
    for a, b, x in [(0.5, 0.5, 0.3), (4.5, 0.5, 0.9), (15, 0.5, 0.99), (2, 3, 0.01), (1, 1, 0.5)]:
        assert abs(betainc_regularized(a, b, x) - special.betainc(a, b, x)) < 1e-12


def test_t_test_degenerate_and_antisymmetric(rng):
    a = rng.random(10)
    r = paired_t_test(a, a)
    assert (r.t, r.p, r.df) == (0.0, 1.0, 9)
    b = rng.random(10)
    assert paired_t_test(a, b).t == -paired_t_test(b, a).t
    assert paired_t_test(a, b).p == paired_t_test(b, a).p
    c = paired_t_test(a + 0.1, a)
    assert c.t == math.inf and c.p == 0.0


def test_p_monotone_in_t():
    ps = [t_two_sided_p(t, 9) for t in np.linspace(0, 10, 101)]
    assert ps[0] == 1.0
    assert all(0 < p <= 1 for p in ps)
    assert all(q < p for p, q in zip(ps, ps[1:]))


def test_t_test_errors():
    with pytest.raises(DataError, match="length"):
        paired_t_test([1, 2], [1, 2, 3])
    with pytest.raises(DataError, match="at least 2"):
        paired_t_test([1], [2])
