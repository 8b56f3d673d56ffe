"""Command line entry point: one subcommand per pipeline stage plus pipeline.

Exit codes: 0 success, 2 usage/config error, 3 data error, 4 numeric error.
"""

from __future__ import annotations

import argparse
import contextlib
import dataclasses
import datetime as dt
import json
import logging
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import layout as layout_mod
from . import market_data as md
from . import network as nw
from . import rank_stats as rs
from . import render
from . import returns as rt
from .errors import CorrnetError, DataError, NumericError

log = logging.getLogger("corrnet")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4
ALL_STRATEGIES = ("all", "jump", "top_k", "split")


class ConfigError(ValueError):
    pass


class StageError(Exception):
    def __init__(self, stage: str, exc: BaseException):
        super().__init__(f"[{stage}] {exc}")
        self.stage = stage
        self.cause = exc


@contextlib.contextmanager
def stage(name: str):
    try:
        yield
    except (CorrnetError, OSError, ValueError) as exc:
        raise StageError(name, exc) from exc


def write_atomic(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise
    return path


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def read_text(path) -> str:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"no such file: {p}")
    return p.read_text(encoding="utf-8")


@dataclass
class PipelineConfig:
    assets: list[str] = field(default_factory=list)
    start: str = ""
    end: str = ""
    prices_dir: str | None = None
    format: str = "generic_two_column"
    endpoint: str | None = None
    cache_dir: str | None = None
    methods: list[str] = field(default_factory=lambda: ["spearman"])
    missing_policy: str = "pairwise_complete"
    gap_policy: str = "bridge"
    exact_n_max: int = rs.EXACT_N_MAX
    strategies: list[str] = field(default_factory=lambda: list(ALL_STRATEGIES))
    gap_index: int = 1
    top_k: int = 10
    absolute: bool = False
    step: float = 0.01
    count_isolated: bool = False
    seed: int = 42
    iterations: int = layout_mod.DEFAULT_ITERATIONS
    weight_exponent: float = 1.0
    labels: str | None = None
    permutations: int = 1000
    workers: int = 1
    out_dir: str = "out"

    def __post_init__(self):
        self.validate()

    def validate(self):
        if len(self.assets) < 2:
            raise ConfigError("need at least 2 assets")
        try:
            self.window = md.DatasetWindow.parse(self.start, self.end)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad window {self.start!r}..{self.end!r}: {exc}") from None
        if bool(self.prices_dir) == bool(self.endpoint):
            raise ConfigError("set exactly one of prices_dir or endpoint")
        checks = [
            ("format", [self.format], md.FORMATS),
            ("methods", self.methods, rs.METHODS),
            ("missing_policy", [self.missing_policy], rs.MISSING_POLICIES),
            ("gap_policy", [self.gap_policy], rt.GAP_POLICIES),
            ("strategies", self.strategies, ALL_STRATEGIES),
        ]
        for name, values, allowed in checks:
            bad = [v for v in values if v not in allowed]
            if bad or not values:
                raise ConfigError(f"{name}: invalid {bad or values}; allowed {list(allowed)}")
        if self.top_k < 1 or self.gap_index < 1 or self.step <= 0 or self.iterations < 1:
            raise ConfigError("top_k, gap_index, iterations must be >= 1 and step > 0")

    @classmethod
    def from_mapping(cls, data: dict) -> "PipelineConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        return cls(**data)


# -- stage helpers shared by subcommands and the pipeline -----------------

def asset_ids(symbols: Sequence[str]) -> list[md.AssetId]:
    known = md.load_assets()
    return [known.get(s, md.AssetId(s, s)) for s in symbols]


def load_prices(assets, window, prices_dir=None, fmt="generic_two_column",
                endpoint=None, cache_dir=None, workers=1) -> md.Dataset:
    if prices_dir:
        series = [md.parse_price_csv(read_text(Path(prices_dir) / f"{a.symbol}.csv"), fmt, a)
                  for a in assets]
    else:
        def fetch(a):
            return md.fetch_price_history(a, window, endpoint, cache_dir)
        with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
            series = list(pool.map(fetch, assets))
    return md.build_dataset(series, window)


def missing_csv(dataset: md.Dataset) -> str:
    lines = ["symbol,date"]
    for asset, days in md.report_missing(dataset):
        lines += [f"{asset.symbol},{d.isoformat()}" for d in days]
    return "\n".join(lines) + "\n"


def compute_returns(dataset: md.Dataset, gap_policy: str) -> rt.ReturnsMatrix:
    series = [rt.daily_returns(s, gap_policy) for s in dataset.series]
    return rt.align(series, dataset.window)


def apply_strategy(net: nw.CorrelationNetwork, strategy: str, cfg) -> nw.ThresholdResult:
    if strategy == "all":
        return nw.ThresholdResult("all", float("-inf"), len(net.edges), net)
    if strategy == "jump":
        return nw.threshold_jump(net, cfg.gap_index)
    if strategy == "top_k":
        return nw.threshold_top_k(net, cfg.top_k, cfg.absolute)
    return nw.threshold_split(net, cfg.step, cfg.count_isolated)


def network_document(result: nw.ThresholdResult) -> dict:
    doc = result.network.to_dict()
    info = result.to_dict()
    if info["threshold"] == float("-inf"):
        info["threshold"] = None
    doc["threshold"] = info
    doc["components"] = nw.active_components(result.network)
    return doc


def resolve_labels(spec: str | None) -> dict[str, nw.GroupLabeling]:
    if not spec:
        return {}
    return nw.load_group_labels(None if spec == "bundled" else spec)


def concordance_report(cm: rs.CorrelationMatrix, labels: dict[str, nw.GroupLabeling],
                       permutations: int, seed: int) -> dict:
    out = {}
    for dim, lab in sorted(labels.items()):
        usable = lab.without_singletons()
        keep = [s for s in cm.assets if s in usable.assignment]
        dropped = [s for s in cm.assets if s not in keep]
        sub_lab = nw.GroupLabeling(dim, {s: usable.assignment[s] for s in keep})
        try:
            res = nw.group_concordance(cm.subset(keep), sub_lab, permutations, seed)
            out[dim] = {**res.to_dict(), "dropped": dropped}
        except CorrnetError as exc:
            out[dim] = {"error": str(exc), "dropped": dropped}
    return out


def run_pipeline(cfg: PipelineConfig) -> list[Path]:
    out = Path(cfg.out_dir)
    written: list[Path] = []

    def emit(name: str, text: str):
        written.append(write_atomic(out / name, text))

    assets = asset_ids(cfg.assets)
    with stage("ingest"):
        dataset = load_prices(assets, cfg.window, cfg.prices_dir, cfg.format,
                              cfg.endpoint, cfg.cache_dir, cfg.workers)
        for s in dataset.series:
            emit(f"prices/{s.asset.symbol}.csv", md.to_csv(s))
        emit("missing.csv", missing_csv(dataset))
        emit("abbreviations.txt", render.render_abbreviations(dataset.assets))
    with stage("returns"):
        matrix = compute_returns(dataset, cfg.gap_policy)
        emit("returns.csv", matrix.to_csv())

    nets: dict[str, dict[str, nw.CorrelationNetwork]] = {}
    labels = resolve_labels(cfg.labels)
    for method in cfg.methods:
        with stage("corr"):
            cm = rs.corr_matrix(matrix, method, cfg.missing_policy, cfg.exact_n_max, cfg.workers)
            emit(f"corr_{method}.json", dump_json(cm.to_dict()))
        with stage("test"):
            emit(f"significance_{method}.csv", render.significance_report(cm))
        with stage("render"):
            text, csv_text = render.render_table(rs.rank_pairs(cm), significance=True, method=method)
            emit(f"table_{method}.txt", text)
            emit(f"table_{method}.csv", csv_text)
        with stage("network"):
            full = nw.build_network(cm, list(labels.values()))
            results = {s: apply_strategy(full, s, cfg) for s in cfg.strategies}
            nets[method] = {s: r.network for s, r in results.items()}
            for s, r in results.items():
                emit(f"network_{method}_{s}.json", dump_json(network_document(r)))
                emit(f"network_{method}_{s}.dot", render.to_dot(r.network))
        with stage("layout"):
            lay = layout_mod.fruchterman_reingold(full, cfg.seed, cfg.iterations, cfg.weight_exponent)
            emit(f"layout_{method}.json", lay.to_json())
        with stage("render"):
            label = render.METHOD_LABEL[method]
            for s, r in results.items():
                title = f"{label}: {s}" + ("" if s == "all" else f" (threshold {r.threshold:.4f})")
                emit(f"network_{method}_{s}.svg", render.to_svg(r.network, lay, title))
        if labels:
            with stage("concordance"):
                emit(f"concordance_{method}.json",
                     dump_json(concordance_report(cm, labels, cfg.permutations, cfg.seed)))

    if len(cfg.methods) > 1:
        with stage("network"):
            a, b = cfg.methods[0], cfg.methods[1]
            report = {"methods": [a, b],
                      "jaccard": {s: nw.network_agreement(nets[a][s], nets[b][s])
                                  for s in cfg.strategies}}
            emit("agreement.json", dump_json(report))
    return written


# -- argparse -------------------------------------------------------------

def _csv_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _add_window(p, required=True):
    p.add_argument("--start", required=required, help="first day, YYYY-MM-DD")
    p.add_argument("--end", required=required, help="last day, YYYY-MM-DD")


def _add_source(p):
    p.add_argument("--assets", type=_csv_list, required=True, help="comma-separated symbols")
    p.add_argument("--prices-dir", help="directory of <symbol>.csv files")
    p.add_argument("--format", choices=md.FORMATS, default="generic_two_column")
    p.add_argument("--endpoint", help="price endpoint URL or template")
    p.add_argument("--cache-dir", help=f"fetch cache (default ${md.CACHE_ENV} or ~/.cache/corrnet)")
    p.add_argument("--workers", type=int, default=1)


def _add_thresholds(p, defaults: bool):
    d = (lambda v: v) if defaults else (lambda v: None)
    p.add_argument("--gap-index", type=int, default=d(1))
    p.add_argument("--top-k", type=int, default=d(10))
    p.add_argument("--absolute", action="store_true", default=d(False) if defaults else None,
                   help="rank top-k edges by |weight|")
    p.add_argument("--step", type=float, default=d(0.01))
    p.add_argument("--count-isolated", action="store_true", default=d(False) if defaults else None,
                   help="count edgeless nodes as groups in the split search")


def _add_layout(p, defaults: bool):
    d = (lambda v: v) if defaults else (lambda v: None)
    p.add_argument("--seed", type=int, default=d(42))
    p.add_argument("--iterations", type=int, default=d(layout_mod.DEFAULT_ITERATIONS))
    p.add_argument("--weight-exponent", type=float, default=d(1.0))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="corrnet", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load or fetch prices, window them, report gaps")
    _add_source(p)
    _add_window(p)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("returns", help="daily returns matrix from price CSVs")
    p.add_argument("--assets", type=_csv_list, required=True)
    p.add_argument("--prices-dir", required=True)
    p.add_argument("--format", choices=md.FORMATS, default="generic_two_column")
    _add_window(p)
    p.add_argument("--gap-policy", choices=rt.GAP_POLICIES, default="bridge")
    p.add_argument("--out", required=True, help="returns CSV path")

    p = sub.add_parser("corr", help="rank-correlation matrix with per-pair tests")
    p.add_argument("--returns", required=True)
    p.add_argument("--method", choices=rs.METHODS, default="spearman")
    p.add_argument("--missing-policy", choices=rs.MISSING_POLICIES, default="pairwise_complete")
    p.add_argument("--exact-n-max", type=int, default=rs.EXACT_N_MAX)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, help="correlation JSON path")

    p = sub.add_parser("test", help="significance report and ranked table from a correlation JSON")
    p.add_argument("--corr", required=True)
    p.add_argument("--out", required=True, help="significance CSV path")
    p.add_argument("--table", help="also write <TABLE>.txt and <TABLE>.csv with p-values")

    p = sub.add_parser("network", help="build and threshold the correlation network")
    p.add_argument("--corr", required=True)
    p.add_argument("--strategy", choices=ALL_STRATEGIES, default="all")
    _add_thresholds(p, defaults=True)
    p.add_argument("--labels", help="group label CSV, or 'bundled'")
    p.add_argument("--out", required=True, help="network JSON path")
    p.add_argument("--dot", help="also write DOT here")

    p = sub.add_parser("layout", help="force-directed node positions")
    p.add_argument("--network", required=True)
    _add_layout(p, defaults=True)
    p.add_argument("--out", required=True, help="layout JSON path")

    p = sub.add_parser("render", help="SVG/DOT diagrams and ranked tables")
    p.add_argument("--network")
    p.add_argument("--layout")
    p.add_argument("--svg")
    p.add_argument("--dot")
    p.add_argument("--title")
    p.add_argument("--color-by", choices=nw.DIMENSIONS)
    p.add_argument("--corr")
    p.add_argument("--table", help="write <TABLE>.txt and <TABLE>.csv")
    p.add_argument("--significance", action="store_true", help="include n, p, p_kind columns")

    p = sub.add_parser("concordance", help="compare correlations against group labels")
    p.add_argument("--corr", required=True)
    p.add_argument("--labels", default="bundled")
    p.add_argument("--dimension", choices=nw.DIMENSIONS, action="append")
    p.add_argument("--permutations", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("pipeline", help="run every stage; JSON config, flags override")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--assets", type=_csv_list)
    _add_window(p, required=False)
    p.add_argument("--prices-dir")
    p.add_argument("--format", choices=md.FORMATS)
    p.add_argument("--endpoint")
    p.add_argument("--cache-dir")
    p.add_argument("--methods", type=_csv_list)
    p.add_argument("--missing-policy", choices=rs.MISSING_POLICIES)
    p.add_argument("--gap-policy", choices=rt.GAP_POLICIES)
    p.add_argument("--exact-n-max", type=int)
    p.add_argument("--strategies", type=_csv_list)
    _add_thresholds(p, defaults=False)
    _add_layout(p, defaults=False)
    p.add_argument("--labels")
    p.add_argument("--permutations", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out-dir")
    return parser


def _window(args) -> md.DatasetWindow:
    try:
        return md.DatasetWindow.parse(args.start, args.end)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def cmd_ingest(args):
    if bool(args.prices_dir) == bool(args.endpoint):
        raise ConfigError("give exactly one of --prices-dir or --endpoint")
    window = _window(args)
    out = Path(args.out)
    with stage("ingest"):
        ds = load_prices(asset_ids(args.assets), window, args.prices_dir, args.format,
                         args.endpoint, args.cache_dir, args.workers)
        for s in ds.series:
            write_atomic(out / f"{s.asset.symbol}.csv", md.to_csv(s))
        write_atomic(out / "missing.csv", missing_csv(ds))


def cmd_returns(args):
    window = _window(args)
    with stage("returns"):
        ds = load_prices(asset_ids(args.assets), window, args.prices_dir, args.format)
        write_atomic(Path(args.out), compute_returns(ds, args.gap_policy).to_csv())


def _load_corr(path) -> rs.CorrelationMatrix:
    return rs.CorrelationMatrix.from_dict(json.loads(read_text(path)))


def cmd_corr(args):
    with stage("corr"):
        m = rt.ReturnsMatrix.from_csv(read_text(args.returns))
        cm = rs.corr_matrix(m, args.method, args.missing_policy, args.exact_n_max, args.workers)
        write_atomic(Path(args.out), dump_json(cm.to_dict()))


def cmd_test(args):
    with stage("test"):
        cm = _load_corr(args.corr)
        write_atomic(Path(args.out), render.significance_report(cm))
        if args.table:
            text, csv_text = render.render_table(rs.rank_pairs(cm), True, cm.method)
            write_atomic(Path(args.table + ".txt"), text)
            write_atomic(Path(args.table + ".csv"), csv_text)


def cmd_network(args):
    with stage("network"):
        cm = _load_corr(args.corr)
        net = nw.build_network(cm, list(resolve_labels(args.labels).values()))
        result = apply_strategy(net, args.strategy, args)
        write_atomic(Path(args.out), dump_json(network_document(result)))
        if args.dot:
            write_atomic(Path(args.dot), render.to_dot(result.network))


def _load_network(path) -> nw.CorrelationNetwork:
    return nw.CorrelationNetwork.from_dict(json.loads(read_text(path)))


def cmd_layout(args):
    with stage("layout"):
        net = _load_network(args.network)
        lay = layout_mod.fruchterman_reingold(net, args.seed, args.iterations, args.weight_exponent)
        write_atomic(Path(args.out), lay.to_json())


def cmd_render(args):
    if not (args.svg or args.dot or args.table):
        raise ConfigError("nothing to render: give --svg, --dot or --table")
    with stage("render"):
        if args.svg or args.dot:
            if not args.network:
                raise ConfigError("--svg/--dot need --network")
            net = _load_network(args.network)
            if args.dot:
                write_atomic(Path(args.dot), render.to_dot(net))
            if args.svg:
                if not args.layout:
                    raise ConfigError("--svg needs --layout")
                lay = layout_mod.Layout.from_json(read_text(args.layout))
                write_atomic(Path(args.svg), render.to_svg(net, lay, args.title, args.color_by))
        if args.table:
            if not args.corr:
                raise ConfigError("--table needs --corr")
            cm = _load_corr(args.corr)
            text, csv_text = render.render_table(rs.rank_pairs(cm), args.significance, cm.method)
            write_atomic(Path(args.table + ".txt"), text)
            write_atomic(Path(args.table + ".csv"), csv_text)


def cmd_concordance(args):
    with stage("concordance"):
        cm = _load_corr(args.corr)
        labels = resolve_labels(args.labels)
        if args.dimension:
            labels = {d: labels[d] for d in args.dimension if d in labels}
        report = concordance_report(cm, labels, args.permutations, args.seed)
        write_atomic(Path(args.out), dump_json(report))


def cmd_pipeline(args):
    data = {}
    if args.config:
        try:
            data = json.loads(read_text(args.config))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: {exc}") from None
    for f in dataclasses.fields(PipelineConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            data[f.name] = v
    cfg = PipelineConfig.from_mapping(data)
    written = run_pipeline(cfg)
    log.info("wrote %d files to %s", len(written), cfg.out_dir)


COMMANDS = {
    "ingest": cmd_ingest, "returns": cmd_returns, "corr": cmd_corr, "test": cmd_test,
    "network": cmd_network, "layout": cmd_layout, "render": cmd_render,
    "concordance": cmd_concordance, "pipeline": cmd_pipeline,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"corrnet: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StageError as exc:
        cause = exc.cause
        print(f"corrnet: error {exc}", file=sys.stderr)
        if isinstance(cause, NumericError):
            return EXIT_NUMERIC
        if isinstance(cause, (DataError, OSError)):
            return EXIT_DATA
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
