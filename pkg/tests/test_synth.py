import numpy as np

from crossphish.synth import generate_pair, generate_source_a, generate_source_b
from crossphish.table import load_csv
from crossphish.urlfeat import CANONICAL_FEATURES


def test_source_a_loads_with_canonical_columns(tmp_path):
    path = str(tmp_path / "a.csv")
    generate_source_a(path, n=300, seed=2)
    t = load_csv(path, "phishing", "1", source="d1")
    assert t.n_rows == 300
    missing = set(CANONICAL_FEATURES) - set(t.feature_names)
    assert not missing
    # extras beyond the canonical set are present on purpose
    assert len(t.feature_names) > len(CANONICAL_FEATURES)


def test_source_b_uses_other_schema_and_url_column(tmp_path):
    path = str(tmp_path / "b.csv")
    generate_source_b(path, n=200, seed=3)
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    assert "url" in header
    assert "status" in header
    # column names follow the second source's naming, not the canonical one
    assert "length_url" in header
    assert "qty_dot_url" not in header
    assert "nb_dots" in header
    t = load_csv(path, "status", "phishing", drop_columns=("url",),
                 source="d2")
    assert t.n_rows == 200


def test_class_fractions(tmp_path):
    # labels are per-row Bernoulli draws, so only the rate is pinned
    path = str(tmp_path / "a.csv")
    generate_source_a(path, n=1000, seed=0, phish_fraction=0.3)
    t = load_csv(path, "phishing", "1")
    neg, pos = t.class_counts()
    assert neg + pos == 1000
    assert 240 <= pos <= 360


def test_missing_cells_punched(tmp_path):
    path = str(tmp_path / "a.csv")
    generate_source_a(path, n=1000, seed=1)
    t = load_csv(path, "phishing", "1")
    idx = {n: i for i, n in enumerate(t.feature_names)}
    assert np.isnan(t.X[:, idx["url_google_index"]]).sum() > 0
    assert np.isnan(t.X[:, idx["qty_redirects"]]).sum() > 0
    clean = [n for n in t.feature_names
             if n not in ("url_google_index", "qty_redirects")]
    cols = [idx[n] for n in clean]
    assert not np.isnan(t.X[:, cols]).any()


def test_generate_pair_deterministic(tmp_path):
    pa = generate_pair(str(tmp_path / "one"), n_a=150, n_b=120, seed=9)
    pb = generate_pair(str(tmp_path / "two"), n_a=150, n_b=120, seed=9)
    for key in ("d1", "d2"):
        assert open(pa[key], "rb").read() == open(pb[key], "rb").read()


def test_generate_pair_seed_changes_bytes(tmp_path):
    pa = generate_pair(str(tmp_path / "one"), n_a=150, n_b=120, seed=9)
    pb = generate_pair(str(tmp_path / "two"), n_a=150, n_b=120, seed=10)
    assert open(pa["d1"], "rb").read() != open(pb["d1"], "rb").read()


def test_coupling_flip_between_sources(tmp_path):
    """The engineered shift: within each source the flipped features
    separate the classes, but the direction reverses across sources."""
    paths = generate_pair(str(tmp_path / "pair"), n_a=2000, n_b=2000, seed=4)
    a = load_csv(paths["d1"], "phishing", "1")
    b = load_csv(paths["d2"], "status", "phishing", drop_columns=("url",))

    def class_means(t, name, idx_map):
        col = t.X[:, idx_map[name]]
        pos = np.nanmean(col[t.y == 1])
        neg = np.nanmean(col[t.y == 0])
        return pos - neg

    ia = {n: i for i, n in enumerate(a.feature_names)}
    ib = {n: i for i, n in enumerate(b.feature_names)}
    gap_a = class_means(a, "qty_slash_url", ia)
    gap_b = class_means(b, "nb_slash", ib)
    assert gap_a * gap_b < 0

    gap_a = class_means(a, "tld_present_params", ia)
    gap_b = class_means(b, "tld_in_args", ib)
    assert gap_a * gap_b < 0

    # shared-coupling features keep their direction
    gap_a = class_means(a, "qty_dot_url", ia)
    gap_b = class_means(b, "nb_dots", ib)
    assert gap_a * gap_b > 0
