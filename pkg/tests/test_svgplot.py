import xml.etree.ElementTree as ET

import numpy as np
import pytest

from crossphish.errors import InsufficientRows
from crossphish.svgplot import (
    NEGATIVE_COLOR,
    POSITIVE_COLOR,
    render_bar_svg,
    render_beeswarm_svg,
)

SVG_NS = "{http://www.w3.org/2000/svg}"


def _importance(n=5):
    rows = []
    for i in range(n):
        rows.append({
            "rank": i + 1,
            "feature": f"feat_{i}",
            "mean_abs_shap": float(n - i),
            "mean_shap": (-1.0) ** i * (n - i) / 10,
            "direction": "negative" if i % 2 else "positive",
        })
    return rows


def _summary(n_points=40, seed=0):
    rng = np.random.default_rng(seed)
    rows = []
    for name in ("alpha", "beta"):
        for _ in range(n_points):
            rows.append({
                "feature": name,
                "feature_value": float(rng.integers(0, 9)),
                "shap_value": float(rng.normal()),
                "value_quantile": float(rng.uniform()),
            })
    return rows


def test_bar_svg_is_wellformed_xml(tmp_path):
    path = str(tmp_path / "bar.svg")
    render_bar_svg(_importance(), path, title="unit")
    root = ET.parse(path).getroot()
    assert root.tag == f"{SVG_NS}svg"


def test_bar_svg_row_count_and_colors(tmp_path):
    path = str(tmp_path / "bar.svg")
    render_bar_svg(_importance(6), path, top_n=4)
    root = ET.parse(path).getroot()
    # the background rect has no x attribute; bars do
    rects = [el for el in root.iter(f"{SVG_NS}rect")
             if el.get("x") is not None]
    assert len(rects) == 4
    fills = [r.get("fill") for r in rects]
    assert fills[0] == POSITIVE_COLOR
    assert fills[1] == NEGATIVE_COLOR


def test_bar_svg_escapes_names(tmp_path):
    rows = _importance(1)
    rows[0]["feature"] = "a<b&c"
    path = str(tmp_path / "bar.svg")
    render_bar_svg(rows, path)
    texts = [el.text for el in ET.parse(path).getroot().iter(f"{SVG_NS}text")]
    assert any(t == "a<b&c" for t in texts)


def test_bar_svg_empty_rejected(tmp_path):
    with pytest.raises(InsufficientRows):
        render_bar_svg([], str(tmp_path / "bar.svg"))


def test_bar_svg_deterministic_bytes(tmp_path):
    p1, p2 = str(tmp_path / "a.svg"), str(tmp_path / "b.svg")
    render_bar_svg(_importance(), p1, title="t")
    render_bar_svg(_importance(), p2, title="t")
    assert open(p1, "rb").read() == open(p2, "rb").read()


def test_beeswarm_svg_is_wellformed_xml(tmp_path):
    path = str(tmp_path / "bee.svg")
    render_beeswarm_svg(_summary(), path)
    root = ET.parse(path).getroot()
    assert root.tag == f"{SVG_NS}svg"
    circles = list(root.iter(f"{SVG_NS}circle"))
    assert len(circles) == 80


def test_beeswarm_subsamples_to_cap(tmp_path):
    path = str(tmp_path / "bee.svg")
    render_beeswarm_svg(_summary(300), path, max_points=50)
    circles = list(ET.parse(path).getroot().iter(f"{SVG_NS}circle"))
    assert len(circles) == 100  # 50 per feature


def test_beeswarm_deterministic_bytes(tmp_path):
    p1, p2 = str(tmp_path / "a.svg"), str(tmp_path / "b.svg")
    render_beeswarm_svg(_summary(), p1, seed=9)
    render_beeswarm_svg(_summary(), p2, seed=9)
    assert open(p1, "rb").read() == open(p2, "rb").read()


def test_beeswarm_quantile_colors_distinct(tmp_path):
    rows = [
        {"feature": "f", "feature_value": 0.0, "shap_value": -1.0,
         "value_quantile": 0.0},
        {"feature": "f", "feature_value": 9.0, "shap_value": 1.0,
         "value_quantile": 1.0},
    ]
    path = str(tmp_path / "bee.svg")
    render_beeswarm_svg(rows, path)
    circles = list(ET.parse(path).getroot().iter(f"{SVG_NS}circle"))
    fills = {c.get("fill") for c in circles}
    assert len(fills) == 2


def test_beeswarm_feature_order_is_given_order(tmp_path):
    rows = _summary()
    path = str(tmp_path / "bee.svg")
    render_beeswarm_svg(rows, path)
    texts = [el.text for el in ET.parse(path).getroot().iter(f"{SVG_NS}text")
             if el.get("text-anchor") == "end"]
    assert texts == ["alpha", "beta"]


def test_beeswarm_empty_rejected(tmp_path):
    with pytest.raises(InsufficientRows):
        render_beeswarm_svg([], str(tmp_path / "bee.svg"))
