import csv
import os
import textwrap

import pytest

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")

TINY_CONFIG = textwrap.dedent("""\
    [run]
    seed = 3
    out_dir = {out_dir}
    mode = synthetic

    [data]
    synth_n_a = 900
    synth_n_b = 700
    merge_per_class = 150
    test_fraction = 0.3

    [experiments]
    matrix_model = xgb
    zoo_models = lr, dt, nb
    zoo_sources = d1

    [explain]
    background_size = 32
    explain_per_class = 60

    [model.xgb]
    n_rounds = 30
    max_depth = 4
    learning_rate = 0.3
    """)


def write_tiny_config(dir_path, out_dir, extra=""):
    """Config file for a small but complete synthetic matrix run."""
    path = os.path.join(dir_path, "tiny.ini")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(TINY_CONFIG.format(out_dir=out_dir) + extra)
    return path


@pytest.fixture(scope="session")
def matrix_run(tmp_path_factory):
    """One small synthetic end-to-end run shared by the tests that only
    inspect its artifacts."""
    from crossphish.config import load_config
    from crossphish.experiments import run_matrix

    base = tmp_path_factory.mktemp("matrix")
    cfg_path = write_tiny_config(str(base), str(base / "out"))
    cfg = load_config(cfg_path)
    summary = run_matrix(cfg)
    return cfg, summary


def load_golden_rows():
    path = os.path.join(FIXTURES, "golden_urls.csv")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        return list(reader)


@pytest.fixture(scope="session")
def golden_rows():
    return load_golden_rows()


@pytest.fixture(scope="session")
def golden_resolver():
    """Resolver keyed off the fixture file itself: returns the tabulated
    values for the two resolver-backed features."""
    table = {
        r["url"]: (float(r["url_google_index"]), float(r["qty_redirects"]))
        for r in load_golden_rows()
    }

    def resolve(url):
        return table[url]

    return resolve
