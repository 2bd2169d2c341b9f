import numpy as np
import pytest

from rainpipe.errors import ConfigError, DataError
from rainpipe.neighbors import kneighbors
from rainpipe.preprocess import FeatureMatrix
from rainpipe.resample import ResamplePlan, resample, smote, undersample


def brute_knn(train, q, k, exclude=None):
    d = [(float(((t - q) ** 2).sum()), i) for i, t in enumerate(train) if i != exclude]
    return [i for _, i in sorted(d)[:k]]


def synthetic_parent(s, X, y, minority, k):
    """Find (x, z) with z among x's k true nearest minority rows and s on segment x->z."""
    pts = X[y == minority]
    for i, x in enumerate(pts):
        for j in brute_knn(pts, x, k, exclude=i):
            z = pts[j]
            d = z - x
            nz = np.abs(d) > 0
            if not nz.any():
                if np.allclose(s, x, atol=1e-12):
                    return i, j
                continue
            u = (s[nz] - x[nz]) / d[nz]
            if np.ptp(u) < 1e-9 and -1e-12 <= u[0] <= 1 + 1e-12 and np.allclose(x + u[0] * d, s, atol=1e-12):
                return i, j
    return None


# -- neighbour search -------------------------------------------------------------


@pytest.mark.parametrize("seed", range(30))
def test_kneighbors_matches_full_sort(seed):
    rng = np.random.default_rng(seed)
    n, d = rng.integers(5, 60), rng.integers(1, 4)
    # coarse grid values force many distance ties
    train = rng.integers(0, 4, size=(n, d)).astype(float)
    queries = rng.integers(0, 4, size=(7, d)).astype(float)
    k = int(rng.integers(1, n + 1))
    sq, idx = kneighbors(train, queries, k)
    for q, row, dist in zip(queries, idx, sq):
        assert row.tolist() == brute_knn(train, q, k)
        assert np.allclose(dist, ((train[row] - q) ** 2).sum(axis=1))


def test_kneighbors_excluding_self(rng):
    pts = rng.integers(0, 3, size=(25, 2)).astype(float)
    _, idx = kneighbors(pts, pts, 4, exclude=np.arange(25))
    for i in range(25):
        assert idx[i].tolist() == brute_knn(pts, pts[i], 4, exclude=i)


# -- undersampling --------------------------------------------------------------


def test_undersample_small_example():
    X = np.arange(16, dtype=float).reshape(8, 2)
    y = np.array([0, 0, 1, 0, 0, 1, 0, 0])
    for mode in ("undersample_random", "undersample_distance"):
        Xr, yr = undersample(X, y, ResamplePlan(mode, seed=3))
        assert np.bincount(yr).tolist() == [2, 2]
        for row in Xr:
            assert any(np.array_equal(row, r) for r in X)


def test_balanced_input_returned_unchanged(rng):
    X = rng.random((10, 3))
    y = np.array([0, 1] * 5)
    Xr, yr = undersample(X, y, ResamplePlan("undersample_random", seed=1))
    assert np.array_equal(Xr, X) and np.array_equal(yr, y)


def test_distance_mode_matches_exhaustive_oracle():
    X = np.array([[0.0], [1.0], [2.0], [3.0], [4.0], [5.0], [6.5], [8.0], [9.0], [9.5]])
    y = np.array([0, 0, 1, 0, 0, 0, 1, 0, 0, 1])
    maj = [i for i in range(10) if y[i] == 0]
    mino = [i for i in range(10) if y[i] == 1]
    score = {}
    for i in maj:
        dists = sorted(abs(X[i, 0] - X[j, 0]) for j in mino)
        score[i] = sum(dists[:3]) / 3
    expected = sorted(sorted(maj, key=lambda i: (-score[i], i))[:3])
    Xr, yr = undersample(X, y, ResamplePlan("undersample_distance"))
    kept_majority = [int(np.flatnonzero(X[:, 0] == v)[0]) for v in Xr[yr == 0, 0]]
    assert sorted(kept_majority) == expected


def test_undersample_errors():
    with pytest.raises(DataError):
        undersample(np.zeros((3, 1)), np.zeros(3, dtype=int), ResamplePlan("undersample_random"))
    with pytest.raises(ConfigError):
        undersample(np.zeros((2, 1)), np.array([0, 1]), ResamplePlan("smote"))


# -- SMOTE ------------------------------------------------------------------------


def test_smote_two_point_minority_stays_on_segment():
    X = np.vstack([[0.0, 0.0], [1.0, 1.0], np.full((8, 2), 5.0)])
    y = np.array([1, 1] + [0] * 8)
    Xr, yr = smote(X, y, ResamplePlan("smote", k_neighbors=1, seed=0))
    synth = Xr[10:]
    assert synth.shape == (6, 2) and (yr[10:] == 1).all()
    assert np.array_equal(synth[:, 0], synth[:, 1])
    assert (synth >= 0).all() and (synth <= 1).all()


def test_smote_balances_and_preserves_originals(rng):
    X = rng.random((140, 3))
    y = np.array([0] * 100 + [1] * 40)
    Xr, yr = smote(X, y, ResamplePlan("smote", seed=9))
    assert np.bincount(yr).tolist() == [100, 100]
    assert np.array_equal(Xr[:140], X)
    assert np.array_equal(Xr[yr == 1][:40], X[y == 1])
    lo, hi = X[y == 1].min(axis=0), X[y == 1].max(axis=0)
    assert ((Xr[140:] >= lo) & (Xr[140:] <= hi)).all()


def test_smote_synthetic_rows_pass_knn_oracle(rng):
    X = rng.random((30, 2))
    y = np.array([1] * 12 + [0] * 18)
    Xr, yr = smote(X, y, ResamplePlan("smote", k_neighbors=5, seed=4))
    for s in Xr[30:]:
        assert synthetic_parent(s, X, y, 1, 5) is not None


def test_smote_deterministic_and_feature_matrix_passthrough(rng):
    X = rng.random((50, 2))
    y = np.array([1] * 10 + [0] * 40)
    plan = ResamplePlan("smote", seed=2)
    a, _ = smote(X, y, plan)
    b, _ = smote(X, y, plan)
    assert np.array_equal(a, b)
    fm, _ = resample(FeatureMatrix(X, ("p", "q")), y, plan)
    assert isinstance(fm, FeatureMatrix) and np.array_equal(fm.values, a)


def test_smote_errors():
    X = np.zeros((8, 1))
    y = np.array([1] * 3 + [0] * 5)
    with pytest.raises(DataError, match="lower k_neighbors"):
        smote(X, y, ResamplePlan("smote", k_neighbors=3))
    with pytest.raises(DataError):
        smote(X, np.zeros(8, dtype=int), ResamplePlan("smote", k_neighbors=1))
    with pytest.raises(ConfigError):
        ResamplePlan("smote", k_neighbors=0)
    with pytest.raises(ConfigError):
        ResamplePlan("tomek")


def test_plan_json_fragment():
    plan = ResamplePlan.from_dict({"mode": "smote", "k_neighbors": 5, "seed": 42})
    assert plan.to_dict() == {"mode": "smote", "k_neighbors": 5, "seed": 42}
    with pytest.raises(ConfigError, match="unknown"):
        ResamplePlan.from_dict({"mode": "none", "ratio": 1})


def test_none_mode_is_identity(rng):
    X = rng.random((5, 2))
    y = np.array([0, 0, 0, 1, 1])
    Xr, yr = resample(X, y, ResamplePlan())
    assert Xr is X and np.array_equal(yr, y)
