"""Text/CSV tables, SVG diagrams and DOT export. All output is byte-deterministic."""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Sequence
from xml.sax.saxutils import escape

from .errors import MissingPosition
from .layout import Layout
from .market_data import AssetId
from .network import CorrelationNetwork
from .rank_stats import CorrelationMatrix, RankedPair

W_MIN = 0.5
W_MAX = 6.0
CANVAS = 1000
MARGIN = 70
NODE_RADIUS = 24
DASH = "10,6"
PALETTE = ("#8dd3c7", "#ffffb3", "#bebada", "#fb8072", "#80b1d3",
           "#fdb462", "#b3de69", "#fccde5", "#d9d9d9", "#bc80bd")
METHOD_LABEL = {"spearman": "SR", "kendall_b": "KT"}
SIGNIFICANCE_LEVELS = (0.01, 0.05, 0.10)


@dataclass(frozen=True)
class EdgeStyle:
    width: float
    darkness: float
    dashed: bool


def style_edge(weight: float, w_min: float = W_MIN, w_max: float = W_MAX) -> EdgeStyle:
    mag = abs(weight)
    if mag > 1:
        raise ValueError(f"|weight| must be <= 1, got {weight}")
    return EdgeStyle(w_min + (w_max - w_min) * mag, mag, weight < 0)


def round4(value: float) -> str:
    """Half-up rounding to 4 decimals on the shortest decimal repr of ``value``."""
    s = str(Decimal(repr(float(value))).quantize(Decimal("0.0001"), rounding=ROUND_HALF_UP))
    return "0.0000" if s == "-0.0000" else s


def format_p(p: float) -> str:
    return f"{p:.6g}"


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _to_canvas(x: float, y: float) -> tuple[float, float]:
    span = CANVAS - 2 * MARGIN
    # layout y grows upward, SVG y downward
    return MARGIN + x * span, CANVAS - MARGIN - y * span


def _node_colors(net: CorrelationNetwork, color_by: str | None) -> dict[str, str]:
    if not color_by:
        return {s: "#ffffff" for s in net.nodes}
    cats = sorted({net.labels.get(s, {}).get(color_by, "") for s in net.nodes})
    return {s: PALETTE[cats.index(net.labels.get(s, {}).get(color_by, "")) % len(PALETTE)]
            for s in net.nodes}


def to_svg(net: CorrelationNetwork, layout: Layout, title: str | None = None,
           color_by: str | None = None) -> str:
    missing = [s for s in net.nodes if s not in layout.positions]
    if missing:
        raise MissingPosition(f"layout has no position for {', '.join(missing)}")
    xy = {s: _to_canvas(*layout.positions[s]) for s in net.nodes}
    order = {s: i for i, s in enumerate(net.nodes)}

    out = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{CANVAS}" '
        f'height="{CANVAS}" viewBox="0 0 {CANVAS} {CANVAS}">',
        f'  <rect x="0" y="0" width="{CANVAS}" height="{CANVAS}" fill="#ffffff"/>',
    ]
    if title:
        out.append(f'  <text x="{CANVAS // 2}" y="36" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="24">{escape(title)}</text>')

    out.append('  <g id="edges">')
    # weaker edges first so stronger ones sit on top
    edges = sorted(net.edges.items(), key=lambda kv: (abs(kv[1]), order[kv[0][0]], order[kv[0][1]]))
    for (a, b), w in edges:
        st = style_edge(w)
        grey = round(255 * (1 - st.darkness))
        (x1, y1), (x2, y2) = xy[a], xy[b]
        dash = f' stroke-dasharray="{DASH}"' if st.dashed else ""
        out.append(
            f'    <line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}" '
            f'stroke="rgb({grey},{grey},{grey})" stroke-width="{_fmt(st.width)}"{dash}>'
            f'<title>{escape(a)} {escape(b)} {round4(w)}</title></line>')
    out.append("  </g>")

    colors = _node_colors(net, color_by)
    out.append('  <g id="nodes">')
    for s in net.nodes:
        x, y = xy[s]
        out.append(f'    <circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{NODE_RADIUS}" '
                   f'fill="{colors[s]}" stroke="#000000" stroke-width="1.50"/>')
        out.append(f'    <text x="{_fmt(x)}" y="{_fmt(y + 6)}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="16">{escape(s)}</text>')
    out.append("  </g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


_DOT_ID = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_DOT_KEYWORDS = {"graph", "digraph", "node", "edge", "subgraph", "strict"}


def _dot_id(s: str) -> str:
    if _DOT_ID.fullmatch(s) and s.lower() not in _DOT_KEYWORDS:
        return s
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(net: CorrelationNetwork, name: str = "correlation") -> str:
    lines = [f"graph {_dot_id(name)} {{"]
    for s in net.nodes:
        attrs = sorted(net.labels.get(s, {}).items())
        tail = " [" + ", ".join(f"{_dot_id(k)}={_dot_id(v)}" for k, v in attrs) + "]" if attrs else ""
        lines.append(f"  {_dot_id(s)}{tail};")
    for (a, b), w in net.sorted_edges():
        style = ", style=dashed" if w < 0 else ""
        lines.append(f"  {_dot_id(a)} -- {_dot_id(b)} [weight={w!r}{style}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def render_table(pairs: Sequence[RankedPair], significance: bool = False,
                 method: str = "spearman") -> tuple[str, str]:
    """Ranked pair table as (aligned text, CSV)."""
    label = METHOD_LABEL.get(method, "VALUE")
    header = ["RANK", "PAIR", label] + (["N", "P", "P_KIND"] if significance else [])
    rows = []
    for rp in pairs:
        row = [str(rp.rank), rp.name, round4(rp.value)]
        if significance:
            row += [str(rp.n), format_p(rp.p), rp.p_kind]
        rows.append(row)

    widths = [max([len(header[i])] + [len(r[i]) for r in rows]) for i in range(len(header))]
    text = ["  ".join(h.ljust(wd) for h, wd in zip(header, widths)).rstrip()]
    for r in rows:
        text.append("  ".join(c.ljust(wd) for c, wd in zip(r, widths)).rstrip())

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["rank", "pair", "value"] + (["n", "p", "p_kind"] if significance else []))
    w.writerows(rows)
    return "\n".join(text) + "\n", buf.getvalue()


def significance_level(p: float) -> str:
    for level in SIGNIFICANCE_LEVELS:
        if p < level:
            return f"{round(level * 100)}%"
    return "ns"


def significance_report(cm: CorrelationMatrix) -> str:
    """CSV of every pair's test result with the smallest level it clears."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["pair", "method", "value", "n", "p", "p_kind", "significant_at"])
    for a, b in cm.pairs():
        e = cm.get(a, b)
        w.writerow([e.name, e.method, round4(e.value), e.n, format_p(e.p_two_sided),
                    e.p_kind, significance_level(e.p_two_sided)])
    return buf.getvalue()


def render_abbreviations(assets: Sequence[AssetId]) -> str:
    rows = [("CRYPTOCURRENCY", "ABBREVIATION")] + [(a.display_name or a.symbol, a.symbol) for a in assets]
    width = max(len(r[0]) for r in rows)
    return "\n".join(f"{name.ljust(width)}  {sym}" for name, sym in rows) + "\n"
