import numpy as np
import pytest

from crossphish.errors import (
    AllMissingColumn,
    DegenerateClass,
    InsufficientRows,
    TooFewMinoritySamples,
)
from crossphish.pipeline import (
    PreparedData,
    apply_imputation,
    build_merged,
    drop_constant_columns,
    impute_median,
    prepare_source,
    smote,
    stratified_split,
)
from crossphish.table import DataTable, load_schema_mapping
from crossphish.urlfeat import CANONICAL_FEATURES


def test_impute_median_worked_example():
    t = DataTable(np.array([[1.0], [2.0], [np.nan], [4.0]]), [0, 1, 0, 1], ("a",))
    out, med = impute_median(t)
    np.testing.assert_array_equal(out.X[:, 0], [1, 2, 2, 4])
    assert med[0] == 2.0


def test_impute_median_train_stats_only():
    t = DataTable(np.array([[1.0], [np.nan], [100.0], [200.0]]), [0, 1, 0, 1], ("a",))
    out, med = impute_median(t, train_rows=[0, 1])
    # median of train rows {1} is 1, not the full-column median
    assert med[0] == 1.0
    assert out.X[1, 0] == 1.0


def test_impute_all_missing_raises():
    t = DataTable(np.array([[np.nan], [np.nan]]), [0, 1], ("a",))
    with pytest.raises(AllMissingColumn):
        impute_median(t)


def test_apply_imputation():
    t = DataTable(np.array([[np.nan, 2.0]]), [1], ("a", "b"))
    out = apply_imputation(t, [7.0, 0.0])
    assert out.X[0, 0] == 7.0
    assert out.X[0, 1] == 2.0


def test_drop_constant_columns():
    X = np.array([[1.0, 5.0, 2.0], [1.0, 5.0, 3.0], [1.0, 5.0, 2.0]])
    t = DataTable(X, [0, 1, 0], ("const1", "const2", "varies"))
    out, dropped = drop_constant_columns(t)
    assert out.feature_names == ("varies",)
    assert dropped == ("const1", "const2")


def _table(n_neg, n_pos, m=3, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n_neg + n_pos, m))
    y = np.array([0] * n_neg + [1] * n_pos)
    return DataTable(X, y, tuple(f"f{i}" for i in range(m)))


def test_stratified_split_proportions():
    t = _table(70, 30)
    train_idx, test_idx = stratified_split(t, 0.3, seed=1)
    assert len(train_idx) + len(test_idx) == 100
    assert len(set(train_idx) & set(test_idx)) == 0
    te = t.take(test_idx)
    neg, pos = te.class_counts()
    # each class within one row of its exact share
    assert abs(neg - 21) <= 1 and abs(pos - 9) <= 1
    assert neg + pos == 30


def test_stratified_split_deterministic():
    t = _table(40, 25)
    a = stratified_split(t, 0.25, seed=9)
    b = stratified_split(t, 0.25, seed=9)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])
    c = stratified_split(t, 0.25, seed=10)
    assert not np.array_equal(a[1], c[1])


def test_stratified_split_pinned_counts():
    t = _table(50, 50)
    train_idx, test_idx = stratified_split(t, 0.3, seed=0,
                                           test_counts={0: 20, 1: 5})
    te = t.take(test_idx)
    assert te.class_counts() == (20, 5)
    tr = t.take(train_idx)
    assert tr.class_counts() == (30, 45)


def test_stratified_split_errors():
    with pytest.raises(DegenerateClass):
        stratified_split(_table(10, 0), 0.3, 0)
    with pytest.raises(InsufficientRows):
        stratified_split(_table(50, 1), 0.3, 0)  # positive test share rounds to zero rows
    with pytest.raises(ValueError):
        stratified_split(_table(10, 10), 1.5, 0)


def _brute_knn(X, k):
    """Independent tiny oracle: k nearest by (squared distance, index)."""
    n = X.shape[0]
    out = []
    for i in range(n):
        cand = []
        for j in range(n):
            if j == i:
                continue
            cand.append((float(((X[j] - X[i]) ** 2).sum()), j))
        cand.sort()
        out.append([j for _, j in cand[:k]])
    return out


def test_smote_balances_and_stays_on_segment():
    rng = np.random.default_rng(4)
    n_min, n_maj, m, k = 30, 75, 4, 5
    Xmin = rng.integers(0, 8, size=(n_min, m)).astype(float)
    Xmaj = rng.integers(3, 12, size=(n_maj, m)).astype(float)
    t = DataTable(np.vstack([Xmaj, Xmin]),
                  np.array([0] * n_maj + [1] * n_min),
                  tuple(f"f{i}" for i in range(m)))
    out = smote(t, k=k, seed=2)

    neg, pos = out.class_counts()
    assert neg == pos == n_maj
    # originals untouched, synthetics appended
    np.testing.assert_array_equal(out.X[: t.n_rows], t.X)
    np.testing.assert_array_equal(out.y[: t.n_rows], t.y)

    # neighbours under min-max scaling of the minority block
    lo = Xmin.min(axis=0)
    span = Xmin.max(axis=0) - lo
    span[span == 0] = 1.0
    nn = _brute_knn((Xmin - lo) / span, k)

    synth = out.X[t.n_rows:]
    for srow in synth:
        best = np.inf
        for a in range(n_min):
            xa = Xmin[a]
            for b in nn[a]:
                xb = Xmin[b]
                seg = xb - xa
                denom = float(seg @ seg)
                if denom == 0.0:
                    dist = float(np.linalg.norm(srow - xa))
                else:
                    lam = float((srow - xa) @ seg) / denom
                    lam = min(max(lam, 0.0), 1.0)
                    dist = float(np.linalg.norm(srow - (xa + lam * seg)))
                best = min(best, dist)
        assert best <= 1e-9


def test_smote_deterministic_and_noop_cases():
    t = _table(20, 20)
    assert smote(t, seed=0) is t
    t2 = _table(30, 12, seed=3)
    a = smote(t2, seed=5)
    b = smote(t2, seed=5)
    np.testing.assert_array_equal(a.X, b.X)
    c = smote(t2, seed=6)
    assert not np.array_equal(a.X, c.X)


def test_smote_minority_can_be_negative_class():
    t = _table(8, 40, seed=1)
    out = smote(t, k=3, seed=0)
    assert out.class_counts() == (40, 40)
    np.testing.assert_array_equal(out.y[t.n_rows:], 0)


def test_smote_errors():
    t = _table(30, 4)
    with pytest.raises(TooFewMinoritySamples):
        smote(t, k=5, seed=0)
    bad = DataTable(np.array([[1.0, 2.0]] * 10 + [[np.nan, 1.0]] * 5),
                    [0] * 10 + [1] * 5, ("a", "b"))
    with pytest.raises(ValueError, match="imputed"):
        smote(bad, k=2, seed=0)


def test_smote_round_binary_flag():
    rng = np.random.default_rng(0)
    n_min, n_maj = 12, 30
    Xmin = np.column_stack([rng.integers(0, 2, n_min).astype(float),
                            rng.normal(size=n_min)])
    Xmaj = np.column_stack([rng.integers(0, 2, n_maj).astype(float),
                            rng.normal(size=n_maj)])
    t = DataTable(np.vstack([Xmaj, Xmin]), [0] * n_maj + [1] * n_min,
                  ("is_thing", "amount"))
    out = smote(t, k=3, seed=1, round_binary=True, binary_columns=("is_thing",))
    synth = out.X[t.n_rows:]
    assert set(np.unique(synth[:, 0])) <= {0.0, 1.0}


def test_build_merged():
    d1_tr = _table(100, 80, seed=0)
    d2_tr = _table(40, 35, seed=1)
    d1_te = _table(30, 20, seed=2)
    d2_te = _table(10, 15, seed=3)
    train, test = build_merged(d1_tr, d2_tr, d1_te, d2_te, per_class=50, seed=7)
    assert train.class_counts() == (40 + 50, 35 + 50)
    assert test.class_counts() == (40, 35)
    assert train.source == "merged"
    # D2 rows come last and are untouched
    np.testing.assert_array_equal(train.X[-d2_tr.n_rows:], d2_tr.X)
    with pytest.raises(InsufficientRows):
        build_merged(d1_tr, d2_tr, d1_te, d2_te, per_class=90, seed=0)


def test_prepare_source_end_to_end():
    rng = np.random.default_rng(12)
    n = 400
    cols = {name: rng.integers(0, 6, n).astype(float) for name in CANONICAL_FEATURES}
    # resolver-backed feature with offline gaps
    cols["url_google_index"][rng.random(n) < 0.1] = np.nan
    extra_const = np.zeros(n)
    extra_var = rng.normal(size=n)
    X = np.column_stack(list(cols.values()) + [extra_const, extra_var])
    names = tuple(cols.keys()) + ("always_zero", "extra_signal")
    y = rng.integers(0, 2, n)
    y[:5] = 1
    y[5:10] = 0
    raw = DataTable(X, y, names, source="D1")
    mapping = load_schema_mapping()

    prep = prepare_source(raw, CANONICAL_FEATURES, mapping, "d1",
                          test_fraction=0.3, seed=11, apply_smote=True,
                          smote_k=3, prepared=PreparedData(), source_name="D1")
    tr = prep.get("D1", "common", "train")
    te = prep.get("D1", "common", "test")
    assert tr.feature_names == CANONICAL_FEATURES
    assert not np.isnan(tr.X).any() and not np.isnan(te.X).any()
    neg, pos = tr.class_counts()
    assert neg == pos  # SMOTE balanced
    full_train = prep.get("D1", "all", "train")
    assert "always_zero" not in full_train.feature_names
    assert "extra_signal" in full_train.feature_names
    raw_common = prep.get("D1", "common", "train_raw")
    assert raw_common.n_rows <= tr.n_rows
    m = prep.manifest()
    assert m["tables"]["D1/common/train"]["rows"] == tr.n_rows
    assert m["dropped_columns"]["D1"] == ["always_zero"]
