"""Daily price ingestion: CSV parsing, REST fetching with a disk cache,
windowing, and missing-date reporting."""

from __future__ import annotations

import csv
import datetime as dt
import io
import json
import math
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import requests

from .errors import (
    EmptySeries,
    HttpFailure,
    InsufficientCoverage,
    MalformedCsv,
    MalformedResponse,
    NonPositivePrice,
    TooFewAssets,
)

COINGECKO_HEADER = ["snapped_at", "price", "market_cap", "total_volume"]
GENERIC_HEADER = ["date", "price"]
FORMATS = ("coingecko_export", "generic_two_column")

CACHE_ENV = "CORRNET_CACHE_DIR"


@dataclass(frozen=True)
class AssetId:
    symbol: str
    display_name: str = ""
    # identifier used by the remote price source; defaults to the symbol
    source_id: str = ""

    def __post_init__(self):
        if not self.symbol:
            raise ValueError("asset symbol must be non-empty")


@dataclass(frozen=True)
class PricePoint:
    date: dt.date
    price_usd: float


@dataclass(frozen=True)
class PriceSeries:
    asset: AssetId
    points: tuple[PricePoint, ...]

    def __post_init__(self):
        for a, b in zip(self.points, self.points[1:]):
            if not a.date < b.date:
                raise ValueError(f"{self.asset.symbol}: dates not strictly increasing at {b.date}")

    @property
    def dates(self) -> list[dt.date]:
        return [p.date for p in self.points]

    @property
    def prices(self) -> list[float]:
        return [p.price_usd for p in self.points]

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class DatasetWindow:
    start: dt.date
    end: dt.date

    def __post_init__(self):
        if self.start > self.end:
            raise ValueError(f"window start {self.start} is after end {self.end}")

    @classmethod
    def parse(cls, start: str, end: str) -> "DatasetWindow":
        return cls(dt.date.fromisoformat(start), dt.date.fromisoformat(end))

    def days(self) -> list[dt.date]:
        n = (self.end - self.start).days + 1
        return [self.start + dt.timedelta(days=i) for i in range(n)]

    def __contains__(self, day: dt.date) -> bool:
        return self.start <= day <= self.end


@dataclass(frozen=True)
class Dataset:
    window: DatasetWindow
    series: tuple[PriceSeries, ...] = field(default_factory=tuple)

    @property
    def assets(self) -> list[AssetId]:
        return [s.asset for s in self.series]


def _to_utc_day(text: str) -> dt.date:
    s = text.strip()
    if s.endswith(" UTC"):
        s = s[:-4] + "+00:00"
    elif s.endswith("Z"):
        s = s[:-1] + "+00:00"
    if len(s) == 10:
        return dt.date.fromisoformat(s)
    stamp = dt.datetime.fromisoformat(s)
    if stamp.tzinfo is not None:
        stamp = stamp.astimezone(dt.timezone.utc)
    return stamp.date()


def _parse_price(text: str, lineno: int) -> float:
    try:
        price = float(text)
    except ValueError:
        raise MalformedCsv(f"line {lineno}: price {text!r} is not a number") from None
    if math.isnan(price) or math.isinf(price):
        raise MalformedCsv(f"line {lineno}: price {text!r} is not finite")
    if price <= 0:
        raise NonPositivePrice(f"line {lineno}: price {text!r} must be > 0")
    return price


def _dedupe_last(rows: Iterable[tuple[dt.date, float]]) -> list[PricePoint]:
    # later rows overwrite earlier ones for the same day
    by_day: dict[dt.date, float] = {}
    for day, price in rows:
        by_day[day] = price
    return [PricePoint(d, by_day[d]) for d in sorted(by_day)]


def parse_price_csv(text: str, format: str = "generic_two_column",
                    asset: AssetId | None = None) -> PriceSeries:
    """Parse one asset's price history.

    ``coingecko_export`` expects the header ``snapped_at,price,market_cap,total_volume``;
    ``generic_two_column`` expects ``date,price``. Timestamps are truncated to
    their UTC day and a repeated day keeps the last row.
    """
    if format not in FORMATS:
        raise ValueError(f"unknown CSV format {format!r}")
    expected = COINGECKO_HEADER if format == "coingecko_export" else GENERIC_HEADER
    asset = asset or AssetId("unknown")

    reader = csv.reader(io.StringIO(text.lstrip("﻿")))
    header = next(reader, None)
    if header is None:
        raise EmptySeries(f"{asset.symbol}: empty CSV")
    if [h.strip() for h in header] != expected:
        raise MalformedCsv(f"bad header {','.join(header)!r}, expected {','.join(expected)!r}")

    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(expected):
            raise MalformedCsv(f"line {lineno}: expected {len(expected)} fields, got {len(row)}")
        try:
            day = _to_utc_day(row[0])
        except ValueError:
            raise MalformedCsv(f"line {lineno}: unreadable date {row[0]!r}") from None
        rows.append((day, _parse_price(row[1], lineno)))

    if not rows:
        raise EmptySeries(f"{asset.symbol}: no price rows")
    return PriceSeries(asset, tuple(_dedupe_last(rows)))


def to_csv(series: PriceSeries) -> str:
    """Serialize in the generic ``date,price`` format (lossless for floats)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(GENERIC_HEADER)
    for p in series.points:
        w.writerow([p.date.isoformat(), repr(float(p.price_usd))])
    return buf.getvalue()


def restrict(series: PriceSeries, window: DatasetWindow) -> PriceSeries:
    return PriceSeries(series.asset, tuple(p for p in series.points if p.date in window))


def default_cache_dir() -> Path:
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "corrnet"


def cache_path(cache_dir: Path, asset: AssetId, window: DatasetWindow) -> Path:
    return Path(cache_dir) / f"{asset.symbol}_{window.start.isoformat()}_{window.end.isoformat()}.json"


def _build_url(endpoint: str, asset: AssetId, window: DatasetWindow) -> tuple[str, dict]:
    start_ts = int(dt.datetime.combine(window.start, dt.time(), dt.timezone.utc).timestamp())
    # end of the last day, inclusive
    end_ts = int(dt.datetime.combine(window.end + dt.timedelta(days=1), dt.time(),
                                     dt.timezone.utc).timestamp()) - 1
    fields = {
        "symbol": asset.symbol,
        "id": asset.source_id or asset.symbol,
        "start": window.start.isoformat(),
        "end": window.end.isoformat(),
        "from_ts": start_ts,
        "to_ts": end_ts,
    }
    if "{" in endpoint:
        return endpoint.format(**fields), {}
    return endpoint, {"symbol": fields["symbol"], "start": fields["start"], "end": fields["end"]}


def _pairs_from_payload(payload) -> list:
    # bare [[ms, price], ...] or coingecko's market_chart object
    if isinstance(payload, dict) and "prices" in payload:
        payload = payload["prices"]
    if not isinstance(payload, list):
        raise MalformedResponse("expected a JSON array of [epoch_millis, price] pairs")
    for item in payload:
        if (not isinstance(item, list) or len(item) != 2
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in item)):
            raise MalformedResponse(f"bad entry {item!r}")
    return payload


def series_from_pairs(pairs: Sequence, asset: AssetId, window: DatasetWindow) -> PriceSeries:
    rows = []
    for millis, price in sorted(_pairs_from_payload(list(pairs)), key=lambda it: it[0]):
        day = dt.datetime.fromtimestamp(millis / 1000, tz=dt.timezone.utc).date()
        if day not in window:
            continue
        if not math.isfinite(price) or price <= 0:
            raise NonPositivePrice(f"{asset.symbol}: price {price!r} on {day} must be > 0")
        rows.append((day, float(price)))
    if not rows:
        raise EmptySeries(f"{asset.symbol}: no prices inside {window.start}..{window.end}")
    return PriceSeries(asset, tuple(_dedupe_last(rows)))


def fetch_price_history(asset: AssetId, window: DatasetWindow, endpoint: str,
                        cache_dir: Path | str | None = None, timeout: float = 30.0,
                        session: requests.Session | None = None) -> PriceSeries:
    """GET a price history, caching the raw response per (symbol, window).

    ``endpoint`` may be a template with ``{symbol}``, ``{id}``, ``{start}``,
    ``{end}``, ``{from_ts}``, ``{to_ts}`` placeholders; without placeholders
    the symbol and window are sent as query parameters.
    """
    cache_dir = Path(cache_dir) if cache_dir is not None else default_cache_dir()
    path = cache_path(cache_dir, asset, window)
    if path.exists():
        return series_from_pairs(json.loads(path.read_text()), asset, window)

    url, params = _build_url(endpoint, asset, window)
    http = session or requests
    try:
        resp = http.get(url, params=params or None, timeout=timeout)
    except requests.RequestException as exc:
        raise HttpFailure(None, url) from exc
    if resp.status_code != 200:
        raise HttpFailure(resp.status_code, url)
    try:
        payload = resp.json()
    except ValueError:
        raise MalformedResponse(f"{url}: body is not JSON") from None
    pairs = _pairs_from_payload(payload)
    if not pairs:
        raise EmptySeries(f"{asset.symbol}: endpoint returned no prices")

    series = series_from_pairs(pairs, asset, window)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(pairs))
    os.replace(tmp, path)
    return series


def build_dataset(series: Sequence[PriceSeries], window: DatasetWindow) -> Dataset:
    if len(series) < 2:
        raise TooFewAssets(f"need at least 2 series, got {len(series)}")
    symbols = [s.asset.symbol for s in series]
    dupes = sorted({s for s in symbols if symbols.count(s) > 1})
    if dupes:
        raise TooFewAssets(f"duplicate asset symbols: {', '.join(dupes)}")

    for s in series:
        if not s.points:
            raise EmptySeries(f"{s.asset.symbol}: empty series")
    late = [(s.asset.symbol, s.points[0].date) for s in series
            if s.points[0].date > window.start]
    if late:
        raise InsufficientCoverage(late)

    out = []
    for s in series:
        r = restrict(s, window)
        if not r.points:
            raise EmptySeries(f"{s.asset.symbol}: no prices inside {window.start}..{window.end}")
        out.append(r)
    return Dataset(window, tuple(out))


def report_missing(dataset: Dataset) -> list[tuple[AssetId, list[dt.date]]]:
    days = dataset.window.days()
    report = []
    for s in dataset.series:
        seen = set(s.dates)
        report.append((s.asset, [d for d in days if d not in seen]))
    return report


def load_assets(path: str | Path | None = None) -> dict[str, AssetId]:
    """Symbol table (``symbol,display_name,source_id``); bundled list by default."""
    if path is None:
        text = resources.files("corrnet.data").joinpath("assets.csv").read_text()
    else:
        text = Path(path).read_text()
    out = {}
    for row in csv.DictReader(io.StringIO(text)):
        a = AssetId(row["symbol"], row.get("display_name", ""), row.get("source_id", ""))
        out[a.symbol] = a
    return out
