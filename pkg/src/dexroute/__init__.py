"""Swap routing for constant-product DEX pools: a line-graph label-correcting
router, the DFS baseline it is compared against, and a benchmark harness."""

from .amm import DEFAULT_FEE, FeeRate, ReservePair, SwapMode, apply_swap, swap_out
from .dfs_router import DfsConfig, DfsRouter, dfs_enumerate, dfs_route, evaluate_path, replay_path
from .exceptions import *  # noqa: F401,F403
from .graph import TokenGraph, build_graph
from .lg_router import LgConfig, LineGraphRouter, RouteLabel, relax_link, route, route_all, solve_labels
from .linegraph import LineGraph, build_line_graph, link_count_formula
from .oracle import ExhaustiveRouter, OracleConfig, best_route_exhaustive
from .result import Hop, LedgerStep, RouteResult
from .snapshot import (
    FilterConfig,
    PoolFilter,
    PoolRecord,
    filter_pools,
    load_prices,
    load_snapshot,
    usd_to_token_amount,
    write_prices,
    write_snapshot,
)

__version__ = "0.1.0"
