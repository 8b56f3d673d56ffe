"""Artifacts pinned byte-for-byte under tests/golden/."""

from pathlib import Path

from corrnet import layout, network, rank_stats, render
from corrnet.synthetic import planted_blocks

GOLDEN = Path(__file__).parent / "golden"


def golden_artifacts() -> dict[str, str]:
    m, labels = planted_blocks(500, (5, 5), 0.7, 0.1, seed=7)
    cm = rank_stats.corr_matrix(m, "spearman")
    lab = network.GroupLabeling("planted", labels)
    net = network.build_network(cm, [lab])
    split = network.threshold_split(net, 0.01).network
    lay = layout.fruchterman_reingold(net, seed=42, iterations=500)
    text, csv_text = render.render_table(rank_pairs := rank_stats.rank_pairs(cm))
    assert len(rank_pairs) == 45
    return {
        "planted.svg": render.to_svg(split, lay, "SR: split"),
        "planted.dot": render.to_dot(split),
        "planted_table.txt": text,
        "planted_table.csv": csv_text,
    }
