"""CSV, JSON and SVG emitters.

Reals are written with 12 significant digits everywhere so that golden
files do not depend on platform-specific float printing.
"""
from __future__ import annotations

import csv
import io
import json
import math
from typing import Iterable, Mapping, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .core import Admissibility, PriorHyper, ProblemDims, classify, xi_threshold

__all__ = [
    "PHI_COLUMNS",
    "REGION_COLUMNS",
    "RISK_COLUMNS",
    "COMPARE_COLUMNS",
    "fmt_real",
    "format_rows",
    "rows_to_csv",
    "rows_to_json",
    "region_rows",
    "region_svg",
]

PHI_COLUMNS = ("w", "phi_over_w", "phi_star")
REGION_COLUMNS = ("p", "n", "a", "b", "admissibility", "minimax", "valid")
RISK_COLUMNS = ("estimator", "p", "n", "a", "b", "lambda", "mean_risk", "std_err",
                "reps", "seed", "verdict")
COMPARE_COLUMNS = ("estimator_a", "estimator_b", "p", "n", "a", "b", "lambda",
                   "mean_diff", "std_err_diff", "reps", "seed", "verdict")


def fmt_real(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0:
        return "0"
    return format(x, ".12g")


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt_real(v)
    if isinstance(v, Admissibility):
        return v.value
    return str(v)


def format_rows(rows: Iterable[Mapping], columns: Sequence[str]) -> list[dict]:
    """Rows restricted to ``columns`` with every value rendered as a string."""
    out = []
    for r in rows:
        missing = [c for c in columns if c not in r]
        if missing:
            raise KeyError(f"row lacks columns {missing}")
        out.append({c: _cell(r[c]) for c in columns})
    return out


def rows_to_csv(rows: Iterable[Mapping], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    writer.writerows(format_rows(rows, columns))
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, Mapping):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return fmt_real(v)
    if isinstance(v, Admissibility):
        return v.value
    return v


def rows_to_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2) + "\n"


def region_rows(dims: ProblemDims, a_values, b_values) -> list[dict]:
    rows = []
    for b in b_values:
        for a in a_values:
            lab = classify(PriorHyper(float(a), float(b)), dims)
            rows.append({"p": dims.p, "n": dims.n, "a": float(a), "b": float(b),
                         "admissibility": lab.admissibility, "minimax": lab.minimax,
                         "valid": lab.valid})
    return rows


_FILL = {
    Admissibility.ADMISSIBLE_CASE_I: "#4c9f70",
    Admissibility.ADMISSIBLE_CASE_II: "#1f6f8b",
    Admissibility.ADMISSIBLE_PROPER_MIXING: "#a7d49b",
    Admissibility.INADMISSIBLE: "#d1495b",
    Admissibility.UNKNOWN: "#cccccc",
}


def _edges(vals):
    vals = np.asarray(vals, dtype=float)
    if vals.size == 1:
        return np.array([vals[0] - 0.5, vals[0] + 0.5])
    mid = (vals[1:] + vals[:-1]) / 2
    return np.concatenate([[2 * vals[0] - mid[0]], mid, [2 * vals[-1] - mid[-1]]])


def region_svg(dims: ProblemDims, a_values, b_values) -> str:
    """Heat map over (a, b): fill encodes admissibility, hatching marks minimax."""
    a_values = np.asarray(a_values, dtype=float)
    b_values = np.asarray(b_values, dtype=float)
    ae, be = _edges(a_values), _edges(b_values)
    left, top, width, height = 70, 30, 560, 360
    legend_h = 26 * len(_FILL) + 30

    def X(a):
        return left + (a - ae[0]) / (ae[-1] - ae[0]) * width

    def Y(b):
        return top + height - (b - be[0]) / (be[-1] - be[0]) * height

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{left + width + 260}" '
        f'height="{top + height + 60 + legend_h}" font-family="sans-serif" font-size="12">',
        "<defs><pattern id=\"hatch\" patternUnits=\"userSpaceOnUse\" width=\"6\" height=\"6\">"
        "<path d=\"M0,6 L6,0\" stroke=\"black\" stroke-width=\"1\"/></pattern></defs>",
        f'<text x="{left}" y="18">Region map for p={dims.p}, n={dims.n}</text>',
    ]
    for bi, b in enumerate(b_values):
        for ai, a in enumerate(a_values):
            lab = classify(PriorHyper(float(a), float(b)), dims)
            x0, x1 = X(ae[ai]), X(ae[ai + 1])
            y0, y1 = Y(be[bi + 1]), Y(be[bi])
            rect = f'x="{x0:.2f}" y="{y0:.2f}" width="{x1 - x0:.2f}" height="{y1 - y0:.2f}"'
            out.append(f'<rect {rect} fill="{_FILL[lab.admissibility]}" '
                       f'data-a="{fmt_real(a)}" data-b="{fmt_real(b)}" '
                       f'data-label="{lab.admissibility.value}"/>')
            if lab.minimax:
                out.append(f'<rect {rect} fill="url(#hatch)" class="minimax"/>')

    lines = [(-2.0, "a=-2")]
    if dims.p >= 3:
        lines.append((xi_threshold(dims), f"a=xi={fmt_real(xi_threshold(dims))}"))
    for a, label in lines:
        if ae[0] <= a <= ae[-1]:
            x = X(a)
            out.append(f'<line x1="{x:.2f}" y1="{top}" x2="{x:.2f}" y2="{top + height}" '
                       f'stroke="black" stroke-width="2" class="boundary"/>')
            out.append(f'<text x="{x + 3:.2f}" y="{top + 12}">{escape(label)}</text>')

    out.append(f'<rect x="{left}" y="{top}" width="{width}" height="{height}" '
               'fill="none" stroke="black"/>')
    for a in (ae[0], ae[-1]):
        out.append(f'<text x="{X(a):.2f}" y="{top + height + 16}" text-anchor="middle">'
                   f"{fmt_real(a)}</text>")
    for b in (be[0], be[-1]):
        out.append(f'<text x="{left - 6}" y="{Y(b) + 4:.2f}" text-anchor="end">'
                   f"{fmt_real(b)}</text>")
    out.append(f'<text x="{left + width / 2}" y="{top + height + 34}" '
               'text-anchor="middle">a</text>')
    out.append(f'<text x="{left - 40}" y="{top + height / 2}">b</text>')

    lx, ly = left + width + 20, top
    for k, (adm, color) in enumerate(_FILL.items()):
        y = ly + 26 * k
        out.append(f'<rect x="{lx}" y="{y}" width="16" height="16" fill="{color}"/>')
        out.append(f'<text x="{lx + 22}" y="{y + 12}">{adm.value}</text>')
    y = ly + 26 * len(_FILL)
    out.append(f'<rect x="{lx}" y="{y}" width="16" height="16" fill="url(#hatch)" '
               'stroke="black"/>')
    out.append(f'<text x="{lx + 22}" y="{y + 12}">minimax</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
