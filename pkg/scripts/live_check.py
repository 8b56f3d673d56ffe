"""Fetch the nine longer-history assets and report the aligned return row count.

    python3 scripts/live_check.py --endpoint \
      'https://api.coingecko.com/api/v3/coins/{id}/market_chart/range?vs_currency=usd&from={from_ts}&to={to_ts}'

Responses are cached under $CORRNET_CACHE_DIR (or ~/.cache/corrnet).
"""

import argparse

from corrnet import market_data as md
from corrnet.returns import align, daily_returns

SUBSET = ("eth", "etc", "usdt", "ltc", "btc", "neo", "xrp", "xlm", "xmr")
TARGET = 537


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--endpoint", required=True)
    ap.add_argument("--start", default="2016-09-09")
    ap.add_argument("--end", default="2018-03-06")
    ap.add_argument("--cache-dir")
    args = ap.parse_args()

    window = md.DatasetWindow.parse(args.start, args.end)
    known = md.load_assets()
    series = [md.fetch_price_history(known[s], window, args.endpoint, args.cache_dir) for s in SUBSET]
    ds = md.build_dataset(series, window)
    for asset, days in md.report_missing(ds):
        print(f"{asset.symbol:<5} {len(days)} missing days")
    rows = len(align([daily_returns(s) for s in ds.series], window).dates)
    ok = abs(rows - TARGET) <= 0.05 * TARGET
    print(f"{rows} return rows (target {TARGET} +/- 5%): {'ok' if ok else 'outside tolerance'}")


if __name__ == "__main__":
    main()
