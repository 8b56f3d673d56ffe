import itertools
import xml.etree.ElementTree as ET

import pytest

from corrnet.errors import MissingPosition
from corrnet.layout import Layout, fruchterman_reingold
from corrnet.market_data import AssetId
from corrnet.network import CorrelationNetwork
from corrnet.rank_stats import CorrelationMatrix, RankedPair, rank_pairs
from corrnet.render import (W_MAX, W_MIN, render_abbreviations, render_table, round4,
                            significance_level, significance_report, style_edge, to_dot, to_svg)

SVG = "{http://www.w3.org/2000/svg}"


@pytest.mark.parametrize("w, width, dark, dashed", [
    (0.0, W_MIN, 0.0, False),
    (1.0, W_MAX, 1.0, False),
    (-0.2, W_MIN + (W_MAX - W_MIN) * 0.2, 0.2, True),
])
def test_style_edge(w, width, dark, dashed):
    st = style_edge(w)
    assert st.width == pytest.approx(width)
    assert st.darkness == pytest.approx(dark)
    assert st.dashed is dashed


def test_style_monotone():
    ws = [i / 20 for i in range(21)]
    styles = [style_edge(w) for w in ws]
    assert all(a.width < b.width and a.darkness < b.darkness for a, b in zip(styles, styles[1:]))
    with pytest.raises(ValueError):
        style_edge(1.5)


def test_svg_single_node():
    net = CorrelationNetwork(("btc",))
    root = ET.fromstring(to_svg(net, Layout({"btc": (0.5, 0.5)})))
    assert root.get("width") == "1000" and root.get("height") == "1000"
    assert len(root.findall(f".//{SVG}circle")) == 1


def test_svg_negative_edge_dashed():
    net = CorrelationNetwork(("usdt", "btc"))
    net.add_edge("usdt", "btc", -0.13)
    svg = to_svg(net, Layout({"usdt": (0.0, 0.0), "btc": (1.0, 1.0)}))
    lines = ET.fromstring(svg).findall(f".//{SVG}line")
    assert len(lines) == 1 and lines[0].get("stroke-dasharray")
    assert svg.count("stroke-dasharray") == 1


def test_svg_edges_beneath_nodes_and_each_node_once():
    net = CorrelationNetwork(tuple("abcd"))
    for i, (u, v) in enumerate(itertools.combinations("abcd", 2)):
        net.add_edge(u, v, 0.1 * (i + 1) * (-1) ** i)
    lay = fruchterman_reingold(net, 1, 50)
    svg = to_svg(net, lay, title="a & b")
    root = ET.fromstring(svg)
    groups = [g.get("id") for g in root.findall(f"{SVG}g")]
    assert groups == ["edges", "nodes"]
    labels = [t.text for t in root.find(f"{SVG}g[@id='nodes']").findall(f"{SVG}text")]
    assert labels == list("abcd")
    assert "a &amp; b" in svg
    assert svg == to_svg(net, lay, title="a & b")


def test_svg_missing_position():
    net = CorrelationNetwork(("a", "b"))
    with pytest.raises(MissingPosition):
        to_svg(net, Layout({"a": (0, 0)}))


def test_dot_edge_line():
    net = CorrelationNetwork(("a", "b"))
    net.add_edge("a", "b", 0.5)
    assert "  a -- b [weight=0.5];" in to_dot(net).splitlines()


def test_dot_nodes_only():
    dot = to_dot(CorrelationNetwork(("a", "b")))
    assert dot == "graph correlation {\n  a;\n  b;\n}\n"


def test_dot_canonical_order():
    nodes = ("x", "y", "z")
    w = {("x", "y"): 0.3, ("y", "z"): -0.4, ("x", "z"): 0.9}
    one, two = CorrelationNetwork(nodes), CorrelationNetwork(nodes)
    for (u, v), x in w.items():
        one.add_edge(u, v, x)
    for (u, v), x in reversed(list(w.items())):
        two.add_edge(v, u, x)
    assert to_dot(one) == to_dot(two)
    assert "style=dashed" in to_dot(one)


def test_dot_quotes_awkward_ids():
    net = CorrelationNetwork(("node", "a-b"))
    net.labels["a-b"] = {"validation": "proof of work"}
    dot = to_dot(net)
    assert '"node";' in dot and '"a-b" [validation="proof of work"];' in dot


@pytest.mark.parametrize("v, s", [
    (0.76438, "0.7644"), (0.56805, "0.5681"), (-0.11245, "-0.1125"), (0.5680, "0.5680"),
    (1.0, "1.0000"), (-0.00001, "0.0000"), (0.12345, "0.1235"),
])
def test_round_half_up(v, s):
    assert round4(v) == s


def test_table_rows_and_csv():
    cm = CorrelationMatrix.from_values("abc", {("a", "b"): 0.5, ("a", "c"): 0.76438, ("b", "c"): -0.1})
    text, csv_text = render_table(rank_pairs(cm))
    lines = text.splitlines()
    assert lines[0].split() == ["RANK", "PAIR", "SR"]
    assert [l.split()[0] for l in lines[1:]] == ["1", "2", "3"]
    assert lines[1].split() == ["1", "a", "c", "0.7644"]
    assert csv_text.splitlines() == ["rank,pair,value", "1,a c,0.7644", "2,a b,0.5000", "3,b c,-0.1000"]


def test_table_with_significance():
    rows = [RankedPair(1, ("eth", "etc"), 0.568, 537, 1.2e-30, "asymptotic")]
    text, csv_text = render_table(rows, significance=True, method="kendall_b")
    assert text.splitlines()[0].split() == ["RANK", "PAIR", "KT", "N", "P", "P_KIND"]
    assert csv_text.splitlines() == ["rank,pair,value,n,p,p_kind", "1,eth etc,0.5680,537,1.2e-30,asymptotic"]


def test_table_empty():
    text, csv_text = render_table([])
    assert text == "RANK  PAIR  SR\n"
    assert csv_text == "rank,pair,value\n"


def test_significance_levels():
    assert [significance_level(p) for p in (0.001, 0.02, 0.0547, 0.0447, 0.2)] == \
        ["1%", "5%", "10%", "5%", "ns"]
    cm = CorrelationMatrix.from_values("ab", {("a", "b"): 0.2})
    assert significance_report(cm).splitlines()[1] == "a b,spearman,0.2000,0,1,asymptotic,ns"


def test_abbreviation_table():
    out = render_abbreviations([AssetId("btc", "Bitcoin"), AssetId("usdt", "USD tether")])
    assert out.splitlines()[0].split() == ["CRYPTOCURRENCY", "ABBREVIATION"]
    assert out.splitlines()[2].split() == ["USD", "tether", "usdt"]
