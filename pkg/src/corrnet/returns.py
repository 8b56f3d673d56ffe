"""Daily percentage returns and date alignment across assets."""

from __future__ import annotations

import csv
import datetime as dt
import io
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import MalformedCsv, TooFewRows, TooShort
from .market_data import AssetId, DatasetWindow, PriceSeries

GAP_POLICIES = ("bridge", "strict")
MIN_ROWS = 3


@dataclass(frozen=True)
class ReturnSeries:
    asset: AssetId
    # None marks a return that is undefined under the strict gap policy
    points: tuple[tuple[dt.date, Optional[float]], ...]

    @property
    def dates(self):
        return [d for d, _ in self.points]

    @property
    def values(self):
        return [r for _, r in self.points]


def daily_returns(series: PriceSeries, gap_policy: str = "bridge") -> ReturnSeries:
    """Simple returns ``p(d) / p(prev) - 1`` as decimal fractions.

    With ``bridge`` the previous available observation is used across calendar
    gaps; with ``strict`` a return spanning more than one day is MISSING.
    """
    if gap_policy not in GAP_POLICIES:
        raise ValueError(f"unknown gap policy {gap_policy!r}")
    pts = series.points
    if len(pts) < 2:
        raise TooShort(f"{series.asset.symbol}: need at least 2 prices, got {len(pts)}")
    out = []
    for prev, cur in zip(pts, pts[1:]):
        if gap_policy == "strict" and (cur.date - prev.date).days > 1:
            out.append((cur.date, None))
        else:
            out.append((cur.date, cur.price_usd / prev.price_usd - 1.0))
    return ReturnSeries(series.asset, tuple(out))


@dataclass(eq=False)
class ReturnsMatrix:
    dates: tuple[dt.date, ...]
    assets: tuple[AssetId, ...]
    values: np.ndarray  # shape (len(dates), len(assets)); NaN marks MISSING

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.dates), len(self.assets)):
            raise ValueError(f"cells have shape {self.values.shape}, expected "
                             f"{(len(self.dates), len(self.assets))}")

    @property
    def symbols(self) -> list[str]:
        return [a.symbol for a in self.assets]

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.values)

    def counts(self) -> dict[str, int]:
        """Non-missing rows per asset."""
        present = (~self.missing).sum(axis=0)
        return {a.symbol: int(c) for a, c in zip(self.assets, present)}

    def column(self, symbol: str) -> np.ndarray:
        return self.values[:, self.symbols.index(symbol)]

    def subset(self, symbols: Sequence[str]) -> "ReturnsMatrix":
        idx = [self.symbols.index(s) for s in symbols]
        return ReturnsMatrix(self.dates, tuple(self.assets[i] for i in idx), self.values[:, idx])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["date", *self.symbols])
        for d, row in zip(self.dates, self.values):
            w.writerow([d.isoformat(), *("" if math.isnan(v) else repr(float(v)) for v in row)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ReturnsMatrix":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or not rows[0] or rows[0][0] != "date":
            raise MalformedCsv("returns CSV must start with a 'date' column")
        symbols = rows[0][1:]
        dates, cells = [], []
        for lineno, row in enumerate(rows[1:], start=2):
            if not row:
                continue
            if len(row) != len(symbols) + 1:
                raise MalformedCsv(f"line {lineno}: expected {len(symbols) + 1} fields")
            try:
                dates.append(dt.date.fromisoformat(row[0]))
                cells.append([float(v) if v.strip() else math.nan for v in row[1:]])
            except ValueError as exc:
                raise MalformedCsv(f"line {lineno}: {exc}") from None
        values = np.array(cells, dtype=float).reshape(len(dates), len(symbols))
        return cls(tuple(dates), tuple(AssetId(s) for s in symbols), values)


def align(series: Sequence[ReturnSeries], window: DatasetWindow | None = None) -> ReturnsMatrix:
    """Stack return series on the union of their dates (inside ``window``)."""
    if len(series) < 2:
        raise ValueError(f"need at least 2 return series, got {len(series)}")
    keep = (lambda d: d in window) if window is not None else (lambda d: True)
    dates = sorted({d for s in series for d in s.dates if keep(d)})
    row_of = {d: i for i, d in enumerate(dates)}

    values = np.full((len(dates), len(series)), np.nan)
    for j, s in enumerate(series):
        for d, r in s.points:
            if r is not None and d in row_of:
                values[row_of[d], j] = r

    m = ReturnsMatrix(tuple(dates), tuple(s.asset for s in series), values)
    short = {sym: c for sym, c in m.counts().items() if c < MIN_ROWS}
    if short:
        detail = ", ".join(f"{s} ({c})" for s, c in short.items())
        raise TooFewRows(f"assets with fewer than {MIN_ROWS} returns: {detail}")
    return m
