import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from corrnet.errors import (DegenerateLabeling, DisconnectedNetwork, NeverSplits,
                            NodeSetMismatch, NoPositiveEdges)
from corrnet.network import (CorrelationNetwork, GroupLabeling, active_components, build_network,
                             connected_components, group_concordance, load_group_labels,
                             network_agreement, threshold_jump, threshold_split, threshold_top_k)
from corrnet.rank_stats import CorrelationMatrix


def net_from(weights, nodes=None):
    nodes = nodes or sorted({s for p in weights for s in p})
    net = CorrelationNetwork(tuple(nodes))
    for (a, b), w in weights.items():
        net.add_edge(a, b, w)
    return net


def chain_weights(ws):
    # distinct pairs carrying the given weights
    return {(f"n{i}", f"m{i}"): w for i, w in enumerate(ws)}


def complete(k, seed):
    rng = np.random.default_rng(seed)
    syms = [f"v{i:02d}" for i in range(k)]
    vals = {p: float(rng.uniform(0.01, 0.95)) for p in itertools.combinations(syms, 2)}
    return CorrelationMatrix.from_values(syms, vals)


@pytest.mark.parametrize("k, edges", [(3, 3), (9, 36), (14, 91)])
def test_build_network_complete(k, edges):
    net = build_network(complete(k, 0))
    assert len(net.nodes) == k and len(net.edges) == edges


def test_build_network_attaches_labels():
    labels = load_group_labels()
    syms = ["btc", "ltc", "usdt"]
    cm = CorrelationMatrix.from_values(syms, {p: 0.5 for p in itertools.combinations(syms, 2)})
    net = build_network(cm, list(labels.values()))
    assert net.labels["btc"]["validation"] == "proof_of_work"
    assert "token_function" not in net.labels["usdt"]


def test_jump_largest_gap():
    r = threshold_jump(net_from(chain_weights([0.9, 0.88, 0.6, 0.58])), 1)
    assert r.threshold == pytest.approx(0.74, abs=1e-15)
    assert r.kept_edges == 2


def test_jump_single_gap_and_second_gap():
    r = threshold_jump(net_from(chain_weights([0.7, 0.3])))
    assert r.threshold == pytest.approx(0.5) and r.kept_edges == 1
    r2 = threshold_jump(net_from(chain_weights([0.9, 0.5, 0.45, 0.1])), 2)
    # gaps 0.4, 0.05, 0.35: the second largest sits between 0.45 and 0.1
    assert r2.threshold == pytest.approx(0.275) and r2.kept_edges == 3


def test_jump_equal_weights_keep_all_and_drop_negatives():
    r = threshold_jump(net_from(chain_weights([0.4, 0.4, 0.4, -0.2])))
    assert r.kept_edges == 3
    assert all(w > 0 for w in r.network.edges.values())


def test_jump_needs_positive():
    with pytest.raises(NoPositiveEdges):
        threshold_jump(net_from(chain_weights([-0.1, -0.3])))
    with pytest.raises(ValueError):
        threshold_jump(net_from(chain_weights([0.5, 0.4])), 2)


def test_top_k_basic():
    net = net_from(chain_weights([0.5, 0.5, 0.5, 0.2]))
    r = threshold_top_k(net, 3)
    assert sorted(r.network.edges.values()) == [0.5, 0.5, 0.5]
    assert r.boundary_ties == ()
    one = threshold_top_k(build_network(complete(6, 1)), 1)
    assert one.kept_edges == 1
    assert list(one.network.edges.values())[0] == max(build_network(complete(6, 1)).edges.values())


def test_top_k_boundary_tie_reported():
    net = net_from({("a", "b"): 0.9, ("c", "d"): 0.5, ("a", "c"): 0.5, ("b", "d"): 0.1})
    r = threshold_top_k(net, 2)
    assert set(r.network.edges) == {("a", "b"), ("a", "c")}
    assert r.boundary_ties == (("c", "d"),)


def test_top_k_absolute():
    net = net_from(chain_weights([0.3, -0.8, 0.5]))
    assert set(threshold_top_k(net, 1, absolute=True).network.edges.values()) == {-0.8}
    assert set(threshold_top_k(net, 1).network.edges.values()) == {0.5}


@given(st.integers(1, 40), st.integers(3, 9))
def test_top_k_size(k, n):
    net = build_network(complete(n, k))
    assert threshold_top_k(net, k).kept_edges == min(k, len(net.edges))


def two_triangles():
    w = {}
    for tri in (("a", "b", "c"), ("d", "e", "f")):
        for p in itertools.combinations(tri, 2):
            w[p] = 0.8
    w[("c", "d")] = 0.3
    return net_from(w)


def test_split_two_triangles():
    r = threshold_split(two_triangles(), 0.01)
    assert r.threshold == 0.31
    assert active_components(r.network) == [["a", "b", "c"], ["d", "e", "f"]]


def test_split_equal_weights_never_split():
    w = {p: 0.5 for p in itertools.combinations("abcd", 2)}
    with pytest.raises(NeverSplits):
        threshold_split(net_from(w))
    # counting isolated nodes turns the same collapse into a split
    r = threshold_split(net_from(w), count_isolated=True)
    assert r.threshold == 0.51


def test_split_isolated_nodes_not_groups():
    w = {("a", "b"): 0.9, ("b", "c"): 0.85, ("a", "c"): 0.8, ("c", "d"): 0.2,
         ("d", "e"): 0.7, ("e", "f"): 0.75, ("d", "f"): 0.72, ("a", "g"): 0.05}
    r = threshold_split(net_from(w))
    # g drops out at 0.06 without counting as a group; the real split comes later
    assert r.threshold == 0.21
    assert "g" not in {s for comp in active_components(r.network) for s in comp}


def test_split_rejects_disconnected_input():
    with pytest.raises(DisconnectedNetwork):
        threshold_split(net_from({("a", "b"): 0.5, ("c", "d"): 0.5}))


def test_connected_components_examples():
    assert connected_components(CorrelationNetwork(("c", "a", "b"))) == [["a"], ["b"], ["c"]]
    assert connected_components(net_from({("a", "b"): 1, ("b", "c"): 1})) == [["a", "b", "c"]]
    assert connected_components(net_from({("d", "c"): 1, ("a", "b"): 1})) == [["a", "b"], ["c", "d"]]


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.integers(4, 12))
def test_threshold_nesting_and_split_minimality(seed, n):
    net = build_network(complete(n, seed))
    ts = sorted(np.random.default_rng(seed).uniform(0, 1, 6))
    kept = [set(threshold_top_k(net, 10**6).network.edges)] + [
        {p for p, w in net.edges.items() if w >= t} for t in ts]
    assert all(b <= a for a, b in zip(kept, kept[1:]))
    assert all(r.network.nodes == net.nodes for r in (threshold_jump(net), threshold_top_k(net, 3)))
    try:
        r = threshold_split(net)
    except NeverSplits:
        return
    prev = net.with_edges(p for p, w in net.edges.items() if w >= round(r.threshold - 0.01, 10))
    assert len(active_components(prev)) == 1
    assert len(active_components(r.network)) >= 2
    assert r.network.nodes == net.nodes


def test_agreement():
    nodes = ("a", "b", "c", "d")
    x = net_from({("a", "b"): 0.5, ("b", "c"): 0.5}, nodes)
    y = net_from({("a", "b"): 0.1, ("c", "d"): 0.2}, nodes)
    assert network_agreement(x, y) == pytest.approx(1 / 3)
    assert network_agreement(y, x) == network_agreement(x, y)
    assert network_agreement(x, x) == 1.0
    assert network_agreement(x, net_from({("c", "d"): 1}, nodes)) == 0.0
    with pytest.raises(NodeSetMismatch):
        network_agreement(x, net_from({("a", "b"): 1}))


def test_network_json_roundtrip():
    net = build_network(complete(5, 3))
    net.labels["v00"] = {"validation": "voting"}
    assert CorrelationNetwork.from_dict(net.to_dict()).to_dict() == net.to_dict()


def test_bundled_labels_transcribe_groupings():
    labels = load_group_labels()
    assert set(labels) == {"token_creation", "validation", "target_market", "token_function"}
    assert len(labels["token_creation"].assignment) == 14
    assert labels["token_creation"].assignment["usdt"] == "varies_to_maintain_peg"
    assert labels["target_market"].assignment["trx"] == "content_creators"
    assert labels["validation"].assignment["xrp"] == "validators_selected"
    # the token-function grouping does not place tether
    assert "usdt" not in labels["token_function"].assignment
    assert labels["token_function"].categories() == {"transaction": 5, "hybrid": 3, "applications": 5}


def test_concordance_flat_matrix():
    syms = list("abcdef")
    cm = CorrelationMatrix.from_values(syms, {p: 0.3 for p in itertools.combinations(syms, 2)})
    lab = GroupLabeling("planted", dict(zip(syms, "xxxyyy")))
    r = group_concordance(cm, lab, permutations=200, seed=1, exact=False)
    assert r.intra_mean == pytest.approx(r.inter_mean)
    assert r.p_value == 1.0


def test_concordance_planted_blocks():
    syms = [f"a{i}" for i in range(5)] + [f"b{i}" for i in range(5)]
    vals = {(u, v): 0.7 if u[0] == v[0] else 0.1 for u, v in itertools.combinations(syms, 2)}
    cm = CorrelationMatrix.from_values(syms, vals)
    lab = GroupLabeling("planted", {s: s[0] for s in syms})
    exact = group_concordance(cm, lab, permutations=1000, seed=0)
    assert exact.exact and exact.permutations == 252
    assert exact.intra_mean == pytest.approx(0.7) and exact.inter_mean == pytest.approx(0.1)
    # only the true split and its label swap reach the observed gap
    assert exact.p_value == pytest.approx(2 / 252)
    mc = group_concordance(cm, lab, permutations=1000, seed=0, exact=False)
    assert not mc.exact and mc.p_value <= 0.05


def test_concordance_seeded_reproducible():
    cm = complete(12, 9)
    lab = GroupLabeling("g", {s: "abc"[i % 3] for i, s in enumerate(cm.assets)})
    a = group_concordance(cm, lab, 500, seed=4)
    b = group_concordance(cm, lab, 500, seed=4)
    assert a == b and not a.exact


def test_concordance_degenerate_labels():
    syms = list("abcde")
    cm = CorrelationMatrix.from_values(syms, {p: 0.3 for p in itertools.combinations(syms, 2)})
    with pytest.raises(DegenerateLabeling):
        group_concordance(cm, GroupLabeling("g", dict(zip(syms, "xxxxy"))))
    with pytest.raises(DegenerateLabeling):
        group_concordance(cm, GroupLabeling("g", dict(zip(syms, "xxxxx"))))
    with pytest.raises(DegenerateLabeling):
        group_concordance(cm, GroupLabeling("g", dict(zip(syms[:4], "xxyy"))))
