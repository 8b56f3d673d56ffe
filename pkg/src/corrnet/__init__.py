"""Rank-correlation networks for daily asset returns."""

from .errors import CorrnetError, DataError, NumericError
from .layout import Layout, fruchterman_reingold
from .market_data import (AssetId, Dataset, DatasetWindow, PricePoint, PriceSeries,
                          build_dataset, fetch_price_history, parse_price_csv, report_missing)
from .network import (CorrelationNetwork, GroupLabeling, ThresholdResult, build_network,
                      connected_components, group_concordance, network_agreement,
                      threshold_jump, threshold_split, threshold_top_k)
from .rank_stats import (CorrEstimate, CorrelationMatrix, corr_matrix, kendall_tau_b, kt_test,
                         midranks, rank_pairs, spearman_rho, sr_test)
from .render import render_table, style_edge, to_dot, to_svg
from .returns import ReturnSeries, ReturnsMatrix, align, daily_returns

__version__ = "0.1.0"
