"""Deterministic SVG renderers for attribution reports.

Plots are written as plain SVG text with fixed decimal formatting and no
timestamps, so a rerun with the same inputs produces byte-identical files
and tests can diff them directly.
"""

from xml.sax.saxutils import escape

import numpy as np

from .errors import InsufficientRows

POSITIVE_COLOR = "#d62728"
NEGATIVE_COLOR = "#1f77b4"
_POS_RGB = (214, 39, 40)
_NEG_RGB = (31, 119, 180)

_FONT = 'font-family="Helvetica, Arial, sans-serif"'


def _fmt(x):
    return f"{x:.2f}"


def _blend(q):
    """Low quantile -> blue, high -> red."""
    r = round(_NEG_RGB[0] + q * (_POS_RGB[0] - _NEG_RGB[0]))
    g = round(_NEG_RGB[1] + q * (_POS_RGB[1] - _NEG_RGB[1]))
    b = round(_NEG_RGB[2] + q * (_POS_RGB[2] - _NEG_RGB[2]))
    return f"#{r:02x}{g:02x}{b:02x}"


def _svg(width, height, body):
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
            f'height="{height}" viewBox="0 0 {width} {height}">')
    return head + "\n" + "\n".join(body) + "\n</svg>\n"


def render_bar_svg(importance, out_path, top_n=30, title=""):
    """Horizontal mean-|phi| bars, one per feature, top_n by rank.

    Bar length encodes mean absolute attribution; fill encodes the signed
    mean's direction (red positive, blue negative).
    """
    if not importance:
        raise InsufficientRows("no importance rows to plot")
    rows = importance[:top_n]
    label_w, bar_w, row_h, pad_top = 230, 430, 22, 34
    width = label_w + bar_w + 60
    height = pad_top + row_h * len(rows) + 14
    scale = max(r["mean_abs_shap"] for r in rows)
    scale = scale if scale > 0 else 1.0

    body = [f'<rect width="{width}" height="{height}" fill="white"/>']
    if title:
        body.append(f'<text x="{label_w}" y="20" {_FONT} font-size="14">'
                    f"{escape(title)}</text>")
    for i, r in enumerate(rows):
        y = pad_top + i * row_h
        w = r["mean_abs_shap"] / scale * bar_w
        color = POSITIVE_COLOR if r["direction"] == "positive" else NEGATIVE_COLOR
        body.append(f'<text x="{label_w - 8}" y="{_fmt(y + 15)}" {_FONT} '
                    f'font-size="11" text-anchor="end">{escape(r["feature"])}</text>')
        body.append(f'<rect x="{label_w}" y="{_fmt(y + 3)}" width="{_fmt(w)}" '
                    f'height="{row_h - 7}" fill="{color}"/>')
        body.append(f'<text x="{_fmt(label_w + w + 5)}" y="{_fmt(y + 15)}" {_FONT} '
                    f'font-size="10" fill="#444444">{r["mean_abs_shap"]:.4f}</text>')
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(_svg(width, height, body))
    return out_path


def render_beeswarm_svg(summary, out_path, seed=0, max_points=400, title=""):
    """Attribution strip chart: one horizontal band per feature (already in
    rank order in the summary rows), a dot per instance at x = shap value,
    colored by the feature value's quantile.  Vertical jitter and any
    subsampling are seeded, so output bytes are stable."""
    if not summary:
        raise InsufficientRows("no summary rows to plot")
    order = []
    by_feat = {}
    for row in summary:
        if row["feature"] not in by_feat:
            order.append(row["feature"])
            by_feat[row["feature"]] = []
        by_feat[row["feature"]].append(row)

    label_w, plot_w, row_h, pad_top = 230, 460, 26, 34
    width = label_w + plot_w + 30
    height = pad_top + row_h * len(order) + 14
    span = max(abs(r["shap_value"]) for r in summary)
    span = span if span > 0 else 1.0
    zero_x = label_w + plot_w / 2.0

    def x_of(v):
        return zero_x + (v / span) * (plot_w / 2.0 - 6)

    rng = np.random.default_rng(seed)
    body = [f'<rect width="{width}" height="{height}" fill="white"/>',
            f'<line x1="{_fmt(zero_x)}" y1="{pad_top - 6}" x2="{_fmt(zero_x)}" '
            f'y2="{height - 8}" stroke="#999999" stroke-width="1"/>']
    if title:
        body.append(f'<text x="{label_w}" y="20" {_FONT} font-size="14">'
                    f"{escape(title)}</text>")
    for i, name in enumerate(order):
        pts = by_feat[name]
        if len(pts) > max_points:
            keep = np.sort(rng.choice(len(pts), size=max_points, replace=False))
            pts = [pts[k] for k in keep]
        y_mid = pad_top + i * row_h + row_h / 2.0
        jitter = rng.uniform(-row_h / 2.0 + 4, row_h / 2.0 - 4, size=len(pts))
        body.append(f'<text x="{label_w - 8}" y="{_fmt(y_mid + 4)}" {_FONT} '
                    f'font-size="11" text-anchor="end">{escape(name)}</text>')
        for pt, dy in zip(pts, jitter):
            body.append(f'<circle cx="{_fmt(x_of(pt["shap_value"]))}" '
                        f'cy="{_fmt(y_mid + dy)}" r="2.2" '
                        f'fill="{_blend(pt["value_quantile"])}" fill-opacity="0.8"/>')
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(_svg(width, height, body))
    return out_path
