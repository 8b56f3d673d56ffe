"""Correlation networks, edge thresholding and group-label summaries."""

from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np

from .errors import (
    DegenerateLabeling,
    DisconnectedNetwork,
    NeverSplits,
    NodeSetMismatch,
    NoPositiveEdges,
)
from .rank_stats import CorrelationMatrix

DIMENSIONS = ("token_creation", "validation", "target_market", "token_function")
STRATEGIES = ("jump", "top_k", "split")

Pair = tuple[str, str]


@dataclass
class CorrelationNetwork:
    nodes: tuple[str, ...]
    # symbol -> {dimension: category}
    labels: dict[str, dict[str, str]] = field(default_factory=dict)
    # keyed by (a, b) with a before b in node order
    edges: dict[Pair, float] = field(default_factory=dict)

    def key(self, a: str, b: str) -> Pair:
        ia, ib = self.nodes.index(a), self.nodes.index(b)
        if ia == ib:
            raise ValueError(f"self-edge on {a}")
        return (a, b) if ia < ib else (b, a)

    def add_edge(self, a: str, b: str, weight: float) -> None:
        self.edges[self.key(a, b)] = float(weight)

    def sorted_edges(self) -> list[tuple[Pair, float]]:
        pos = {s: i for i, s in enumerate(self.nodes)}
        return sorted(self.edges.items(), key=lambda kv: (pos[kv[0][0]], pos[kv[0][1]]))

    def with_edges(self, keep) -> "CorrelationNetwork":
        keep = set(keep)
        return CorrelationNetwork(self.nodes, self.labels,
                                  {p: w for p, w in self.edges.items() if p in keep})

    def edge_set(self) -> set[frozenset]:
        return {frozenset(p) for p in self.edges}

    def to_dict(self) -> dict:
        return {
            "nodes": [{"symbol": s, "labels": dict(sorted(self.labels.get(s, {}).items()))}
                      for s in self.nodes],
            "edges": [{"source": a, "target": b, "weight": w} for (a, b), w in self.sorted_edges()],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "CorrelationNetwork":
        nodes = tuple(n["symbol"] for n in d["nodes"])
        labels = {n["symbol"]: dict(n.get("labels", {})) for n in d["nodes"] if n.get("labels")}
        net = cls(nodes, labels)
        for e in d["edges"]:
            net.add_edge(e["source"], e["target"], e["weight"])
        return net


def _pair_name(p: Pair) -> str:
    return f"{p[0]} {p[1]}"


def build_network(cm: CorrelationMatrix, labels: Sequence["GroupLabeling"] = ()) -> CorrelationNetwork:
    net = CorrelationNetwork(tuple(cm.assets))
    for lab in labels:
        for sym, cat in lab.assignment.items():
            if sym in net.nodes:
                net.labels.setdefault(sym, {})[lab.dimension] = cat
    for a, b in cm.pairs():
        net.add_edge(a, b, cm.value(a, b))
    return net


@dataclass
class ThresholdResult:
    strategy: str
    threshold: float
    kept_edges: int
    network: CorrelationNetwork
    # pairs tied with the last kept edge but cut by the name tie-break (top_k only)
    boundary_ties: tuple[Pair, ...] = ()

    def to_dict(self) -> dict:
        return {"strategy": self.strategy, "threshold": self.threshold,
                "kept_edges": self.kept_edges,
                "boundary_ties": [list(p) for p in self.boundary_ties]}


def _keep_at_least(net: CorrelationNetwork, threshold: float) -> CorrelationNetwork:
    return net.with_edges(p for p, w in net.edges.items() if w >= threshold)


def threshold_jump(net: CorrelationNetwork, gap_index: int = 1) -> ThresholdResult:
    """Cut at the midpoint of the ``gap_index``-th largest gap between
    consecutive positive weights (sorted descending)."""
    if gap_index < 1:
        raise ValueError("gap_index must be >= 1")
    pos = sorted((w for w in net.edges.values() if w > 0), reverse=True)
    if not pos:
        raise NoPositiveEdges("no positive edge weights to place a jump cut-off")
    if len(pos) == 1:
        threshold = pos[0]
    else:
        gaps = [(pos[i] - pos[i + 1], i) for i in range(len(pos) - 1)]
        if gap_index > len(gaps):
            raise ValueError(f"gap_index {gap_index} exceeds the {len(gaps)} available gaps")
        # larger gaps first; equal gaps resolved toward higher weights
        _, at = sorted(gaps, key=lambda g: (-g[0], g[1]))[gap_index - 1]
        threshold = (pos[at] + pos[at + 1]) / 2.0
    kept = _keep_at_least(net, threshold)
    return ThresholdResult("jump", threshold, len(kept.edges), kept)


def threshold_top_k(net: CorrelationNetwork, k: int = 10, absolute: bool = False) -> ThresholdResult:
    if k < 1:
        raise ValueError("k must be >= 1")
    score = (lambda w: abs(w)) if absolute else (lambda w: w)
    ranked = sorted(net.edges.items(), key=lambda kv: (-score(kv[1]), _pair_name(kv[0])))
    top = ranked[:k]
    if not top:
        return ThresholdResult("top_k", math.nan, 0, net.with_edges(()))
    cutoff = score(top[-1][1])
    ties = tuple(p for p, w in ranked[k:] if score(w) == cutoff)
    kept = net.with_edges(p for p, _ in top)
    return ThresholdResult("top_k", cutoff, len(kept.edges), kept, ties)


def connected_components(net: CorrelationNetwork, nodes: Sequence[str] | None = None) -> list[list[str]]:
    """Undirected components, members sorted, groups ordered by smallest member."""
    nodes = list(net.nodes if nodes is None else nodes)
    adj: dict[str, set[str]] = {s: set() for s in nodes}
    for a, b in net.edges:
        if a in adj and b in adj:
            adj[a].add(b)
            adj[b].add(a)
    seen: set[str] = set()
    groups = []
    for start in nodes:
        if start in seen:
            continue
        stack, comp = [start], []
        seen.add(start)
        while stack:
            u = stack.pop()
            comp.append(u)
            for v in adj[u] - seen:
                seen.add(v)
                stack.append(v)
        groups.append(sorted(comp))
    return sorted(groups, key=lambda g: g[0])


def active_components(net: CorrelationNetwork, count_isolated: bool = False) -> list[list[str]]:
    if count_isolated:
        return connected_components(net)
    touched = {s for p in net.edges for s in p}
    return connected_components(net, [s for s in net.nodes if s in touched])


def threshold_split(net: CorrelationNetwork, step: float = 0.01,
                    count_isolated: bool = False) -> ThresholdResult:
    """Raise the cut-off from 0 in ``step`` increments until the kept edges
    form at least two components.

    Nodes left without edges are dropped rather than counted as a group
    unless ``count_isolated`` is set.
    """
    if step <= 0:
        raise ValueError("step must be > 0")
    max_w = max(net.edges.values(), default=-math.inf)
    i = 0
    while True:
        # rounding keeps i * step on the decimal grid (30 * 0.01 -> 0.3)
        t = round(i * step, 10)
        kept = _keep_at_least(net, t)
        n_comp = len(active_components(kept, count_isolated))
        if i == 0 and n_comp != 1:
            raise DisconnectedNetwork(
                f"network has {n_comp} components on non-negative edges before any thresholding")
        if n_comp >= 2:
            return ThresholdResult("split", t, len(kept.edges), kept)
        if t > max_w:
            raise NeverSplits(f"no split found up to threshold {t} (max weight {max_w})")
        i += 1


def network_agreement(a: CorrelationNetwork, b: CorrelationNetwork) -> float:
    """Jaccard similarity of the two edge sets."""
    if set(a.nodes) != set(b.nodes):
        raise NodeSetMismatch(f"node sets differ: {sorted(set(a.nodes) ^ set(b.nodes))}")
    ea, eb = a.edge_set(), b.edge_set()
    union = ea | eb
    if not union:
        return 1.0
    return len(ea & eb) / len(union)


@dataclass(frozen=True)
class GroupLabeling:
    dimension: str
    assignment: Mapping[str, str]

    def __post_init__(self):
        # DIMENSIONS are the bundled ones; other names are allowed for custom labelings
        if not self.dimension:
            raise ValueError("dimension must be non-empty")

    def categories(self) -> Counter:
        return Counter(self.assignment.values())

    def without_singletons(self) -> "GroupLabeling":
        sizes = self.categories()
        return GroupLabeling(self.dimension,
                             {s: c for s, c in self.assignment.items() if sizes[c] >= 2})


def load_group_labels(path: str | Path | None = None) -> dict[str, GroupLabeling]:
    """Read ``symbol,dimension,category`` rows; the bundled file by default."""
    if path is None:
        text = resources.files("corrnet.data").joinpath("groups.csv").read_text()
    else:
        text = Path(path).read_text()
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != ["symbol", "dimension", "category"]:
        raise ValueError(f"group label CSV header must be symbol,dimension,category, got {reader.fieldnames}")
    by_dim: dict[str, dict[str, str]] = {}
    for row in reader:
        dim = by_dim.setdefault(row["dimension"], {})
        if row["symbol"] in dim:
            raise DegenerateLabeling(f"{row['symbol']} has two categories in {row['dimension']}")
        dim[row["symbol"]] = row["category"]
    return {d: GroupLabeling(d, a) for d, a in by_dim.items()}


@dataclass(frozen=True)
class ConcordanceResult:
    dimension: str
    intra_mean: float
    inter_mean: float
    p_value: float
    permutations: int
    exact: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _multiset_permutations(items: list) -> Iterator[tuple]:
    counts = Counter(items)
    keys = sorted(counts)
    n = len(items)
    out: list = []

    def rec():
        if len(out) == n:
            yield tuple(out)
            return
        for k in keys:
            if counts[k]:
                counts[k] -= 1
                out.append(k)
                yield from rec()
                out.pop()
                counts[k] += 1

    yield from rec()


def _arrangement_count(sizes) -> int:
    total = math.factorial(sum(sizes))
    for s in sizes:
        total //= math.factorial(s)
    return total


def group_concordance(cm: CorrelationMatrix, labels: GroupLabeling, permutations: int = 1000,
                      seed: int = 0, exact: str | bool = "auto") -> ConcordanceResult:
    """Mean same-category vs cross-category correlation, with a label-shuffling p-value.

    p is the fraction of label arrangements whose intra-minus-inter gap is at
    least the observed one. When the number of distinct arrangements is no
    more than ``permutations`` (and ``exact`` is "auto") every arrangement is
    enumerated; otherwise ``permutations`` seeded shuffles are drawn.
    """
    unlabelled = [s for s in cm.assets if s not in labels.assignment]
    if unlabelled:
        raise DegenerateLabeling(f"{labels.dimension}: no category for {', '.join(unlabelled)}")
    sizes = Counter(labels.assignment[s] for s in cm.assets)
    singles = sorted(c for c, k in sizes.items() if k < 2)
    if len(sizes) < 2 or singles:
        raise DegenerateLabeling(
            f"{labels.dimension}: need >= 2 categories with >= 2 members each"
            + (f"; singleton categories {singles}" if singles else ""))

    cats = sorted(sizes)
    codes = np.array([cats.index(labels.assignment[s]) for s in cm.assets])
    iu, ju = np.triu_indices(len(cm.assets), 1)
    w = cm.to_array()[iu, ju]

    def gaps(code_rows: np.ndarray):
        same = code_rows[:, iu] == code_rows[:, ju]
        intra = (same * w).sum(axis=1) / same.sum(axis=1)
        inter = (~same * w).sum(axis=1) / (~same).sum(axis=1)
        return intra, inter

    intra, inter = gaps(codes[None, :])
    observed = intra[0] - inter[0]

    n_arr = _arrangement_count(list(sizes.values()))
    use_exact = exact is True or (exact == "auto" and n_arr <= permutations)
    if use_exact:
        shuffled = np.array(list(_multiset_permutations(list(codes))))
    else:
        rng = np.random.default_rng(seed)
        shuffled = rng.permuted(np.tile(codes, (permutations, 1)), axis=1)
    p_intra, p_inter = gaps(shuffled)
    # tolerance absorbs summation-order noise when all gaps are equal
    hits = np.count_nonzero(p_intra - p_inter >= observed - 1e-12)
    return ConcordanceResult(labels.dimension, float(intra[0]), float(inter[0]),
                             hits / len(shuffled), len(shuffled), bool(use_exact))
