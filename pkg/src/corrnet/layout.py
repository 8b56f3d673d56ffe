"""Seeded Fruchterman-Reingold placement in the unit square."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyNetwork
from .network import CorrelationNetwork

INITIAL_TEMPERATURE = 0.1
DEFAULT_ITERATIONS = 500
# pairs closer than this are treated as coincident and nudged apart
COINCIDENT = 1e-9
JITTER = 1e-6


@dataclass
class Layout:
    positions: dict[str, tuple[float, float]]
    seed: int = 0
    iterations: int = 0
    params: dict = field(default_factory=dict)

    def array(self, order) -> np.ndarray:
        return np.array([self.positions[s] for s in order], dtype=float)

    def to_json(self) -> str:
        rows = [f"  {json.dumps(s)}: [{x!r}, {y!r}]" for s, (x, y) in self.positions.items()]
        return "{\n" + ",\n".join(rows) + "\n}\n"

    @classmethod
    def from_json(cls, text: str) -> "Layout":
        raw = json.loads(text)
        return cls({s: (float(x), float(y)) for s, (x, y) in raw.items()})


def _attraction_matrix(net: CorrelationNetwork, exponent: float) -> np.ndarray:
    idx = {s: i for i, s in enumerate(net.nodes)}
    a = np.zeros((len(net.nodes), len(net.nodes)))
    for (u, v), w in net.edges.items():
        # negative edges are drawn but exert no pull
        if w > 0:
            a[idx[u], idx[v]] = a[idx[v], idx[u]] = w ** exponent
    return a


def _rescale(pos: np.ndarray) -> np.ndarray:
    lo, hi = pos.min(axis=0), pos.max(axis=0)
    span = hi - lo
    out = np.full_like(pos, 0.5)
    for axis in range(pos.shape[1]):
        if span[axis] > 0:
            out[:, axis] = (pos[:, axis] - lo[axis]) / span[axis]
    return out


def fruchterman_reingold(net: CorrelationNetwork, seed: int = 42,
                         iterations: int = DEFAULT_ITERATIONS,
                         weight_exponent: float = 1.0) -> Layout:
    """Classic FR on a unit-area frame.

    Ideal distance k = sqrt(1 / |V|); repulsion k^2 / d between every pair,
    attraction d^2 / k scaled by weight ** weight_exponent along positive
    edges; step length capped by a temperature cooling linearly from 0.1 to 0.
    Each axis of the result is min-max scaled onto [0, 1].
    """
    n = len(net.nodes)
    if n == 0:
        raise EmptyNetwork("cannot lay out a network without nodes")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    params = {"weight_exponent": weight_exponent}
    if n == 1:
        return Layout({net.nodes[0]: (0.5, 0.5)}, seed, iterations, params)

    rng = np.random.default_rng(seed)
    pos = rng.random((n, 2))
    attract = _attraction_matrix(net, weight_exponent)
    k = math.sqrt(1.0 / n)
    off_diag = ~np.eye(n, dtype=bool)

    for it in range(iterations):
        temp = INITIAL_TEMPERATURE * (1.0 - it / iterations)
        delta = pos[:, None, :] - pos[None, :, :]
        dist = np.sqrt((delta ** 2).sum(axis=2))
        close = (dist < COINCIDENT) & off_diag
        if close.any():
            movers = np.unique(np.nonzero(close)[0])
            pos[movers] += rng.uniform(-JITTER, JITTER, size=(movers.size, 2))
            delta = pos[:, None, :] - pos[None, :, :]
            dist = np.sqrt((delta ** 2).sum(axis=2))
        np.fill_diagonal(dist, 1.0)

        # signed force magnitude per pair divided by distance (unit direction)
        coef = (k * k / dist - attract * dist * dist / k) / dist
        np.fill_diagonal(coef, 0.0)
        disp = (delta * coef[:, :, None]).sum(axis=1)

        length = np.sqrt((disp ** 2).sum(axis=1))
        scale = np.where(length > 0, np.minimum(length, temp) / np.where(length > 0, length, 1.0), 0.0)
        pos = pos + disp * scale[:, None]

    pos = _rescale(pos)
    positions = {s: (float(x), float(y)) for s, (x, y) in zip(net.nodes, pos)}
    return Layout(positions, seed, iterations, params)
