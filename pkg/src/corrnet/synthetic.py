"""Seeded synthetic returns with planted block structure (fixtures and demos)."""

from __future__ import annotations

import datetime as dt

import numpy as np

from .market_data import AssetId, PricePoint, PriceSeries
from .returns import ReturnsMatrix


def planted_blocks(rows: int = 500, block_sizes=(5, 5), within: float = 0.7,
                   across: float = 0.1, seed: int = 7,
                   start: dt.date = dt.date(2020, 1, 2)) -> tuple[ReturnsMatrix, dict[str, str]]:
    """Returns driven by a market factor, a block factor and noise.

    Latent variances are chosen so the Pearson correlation is ``within`` inside
    a block and ``across`` between blocks; for Gaussian latents the rank
    correlations land slightly below those (6/pi * asin(r/2)).
    Returns the matrix and the symbol -> block label map.
    """
    rng = np.random.default_rng(seed)
    market = rng.standard_normal(rows)
    cols, symbols, labels = [], [], {}
    for b, size in enumerate(block_sizes):
        factor = rng.standard_normal(rows)
        for i in range(size):
            noise = rng.standard_normal(rows)
            col = (np.sqrt(across) * market + np.sqrt(within - across) * factor
                   + np.sqrt(1 - within) * noise)
            sym = f"{'abcdefghij'[b]}{i + 1}"
            cols.append(0.02 * col)
            symbols.append(sym)
            labels[sym] = f"block_{'abcdefghij'[b]}"
    dates = tuple(start + dt.timedelta(days=d) for d in range(rows))
    m = ReturnsMatrix(dates, tuple(AssetId(s) for s in symbols), np.column_stack(cols))
    return m, labels


def prices_from_returns(m: ReturnsMatrix, base: float = 100.0) -> list[PriceSeries]:
    """Invert returns into price paths starting one day before the first return."""
    out = []
    first = m.dates[0] - dt.timedelta(days=1)
    for j, asset in enumerate(m.assets):
        price = base
        pts = [PricePoint(first, price)]
        for d, r in zip(m.dates, m.values[:, j]):
            price = float(price * (1.0 + r))
            pts.append(PricePoint(d, price))
        out.append(PriceSeries(asset, tuple(pts)))
    return out
