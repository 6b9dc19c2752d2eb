"""Depth-first-search baseline router and the shared path evaluator.

The enumeration keeps a single ``marked`` set for the whole search and never
clears it on backtrack, so which paths are found depends on neighbour order.
That is the behaviour of the baseline being benchmarked, not an oversight;
``backtrack=True`` restores classic simple-path enumeration for diagnostics.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .amm import DEFAULT_FEE, FeeLike, ModeLike, SwapMode, apply_swap, as_fee, as_mode
from .exceptions import BrokenPath, NoRoute
from .graph import TokenGraph
from .result import Hop, LedgerStep, RouteResult
from .validation import check_graph, check_queries

NEIGHBOR_ORDERS = ("snapshot", "lexicographic", "shuffle")


@dataclass(frozen=True)
class DfsConfig:
    neighbor_order: str = "snapshot"
    seed: Optional[int] = None
    max_hops: Optional[int] = None
    backtrack: bool = False

    def __post_init__(self):
        if self.neighbor_order not in NEIGHBOR_ORDERS:
            raise ValueError(f"neighbor_order must be one of {NEIGHBOR_ORDERS}")
        if (self.neighbor_order == "shuffle") != (self.seed is not None):
            raise ValueError("seed is required for, and only for, neighbor_order='shuffle'")
        if self.max_hops is not None and self.max_hops < 1:
            raise ValueError("max_hops must be >= 1")


def _adjacency(g: TokenGraph, cfg: DfsConfig) -> List[List[int]]:
    if cfg.neighbor_order == "snapshot":
        return g.out_edges
    if cfg.neighbor_order == "lexicographic":
        return [
            sorted(out, key=lambda e: (g.tokens[g.edge_head[e]], g.pool_ids[e >> 1]))
            for out in g.out_edges
        ]
    rng = random.Random(cfg.seed)
    adj = []
    for out in g.out_edges:
        out = list(out)
        rng.shuffle(out)
        adj.append(out)
    return adj


def _enumerate_edges(g: TokenGraph, source: int, target: int, cfg: DfsConfig) -> List[Tuple[int, ...]]:
    adj = _adjacency(g, cfg)
    head = g.edge_head
    max_hops = cfg.max_hops
    marked = {source}
    found: List[Tuple[int, ...]] = []
    stack_path: List[int] = []
    # explicit stack of (token, neighbour iterator) avoids recursion limits
    frames = [iter(adj[source])]
    while frames:
        e = next(frames[-1], None)
        if e is None:
            frames.pop()
            if stack_path:
                done = stack_path.pop()
                if cfg.backtrack:
                    marked.discard(head[done])
            continue
        w = head[e]
        depth = len(stack_path) + 1
        if w == target:
            if max_hops is None or depth <= max_hops:
                found.append(tuple(stack_path) + (e,))
            continue
        if w in marked:
            continue
        if max_hops is not None and depth >= max_hops:
            continue
        marked.add(w)
        stack_path.append(e)
        frames.append(iter(adj[w]))
    return found


def _hops(g: TokenGraph, edges: Sequence[int]) -> Tuple[Hop, ...]:
    return tuple(Hop(g.pool_ids[e >> 1], g.tokens[g.edge_tail[e]], g.tokens[g.edge_head[e]]) for e in edges)


def dfs_enumerate(g: TokenGraph, source: str, target: str, cfg: DfsConfig = DfsConfig()) -> List[Tuple[Hop, ...]]:
    """Paths from ``source`` to ``target`` that the baseline DFS discovers, in discovery order."""
    s, t = g.token_id(source), g.token_id(target)
    if s == t:
        raise ValueError("source and target must differ")
    return [_hops(g, p) for p in _enumerate_edges(g, s, t, cfg)]


def path_edges(g: TokenGraph, path) -> List[int]:
    """Resolve a path to directed edge ids.

    ``path`` is a sequence of hops ``(pool_id, token_in, token_out)`` or a
    sequence of token ids; for the latter, parallel pools resolve to the
    first one in snapshot order.
    """
    path = list(path)
    if not path:
        return []
    edges = []
    if all(isinstance(p, str) for p in path):
        for a, b in zip(path, path[1:]):
            between = g.edges_between(a, b)
            if not between:
                raise BrokenPath(f"no pool between {a!r} and {b!r}")
            edges.append(between[0])
        return edges
    prev_out = None
    for hop in path:
        pool_id, token_in, token_out = hop[:3]
        try:
            e = g.edge_id(pool_id, token_in)
        except KeyError as exc:
            raise BrokenPath(str(exc)) from None
        if g.tokens[g.edge_head[e]] != token_out:
            raise BrokenPath(f"pool {pool_id!r} does not pair {token_in!r} with {token_out!r}")
        if prev_out is not None and token_in != prev_out:
            raise BrokenPath(f"hop into pool {pool_id!r} starts at {token_in!r}, expected {prev_out!r}")
        prev_out = token_out
        edges.append(e)
    return edges


def replay_path(g: TokenGraph, path, epsilon_in, fee: FeeLike = DEFAULT_FEE, mode: ModeLike = SwapMode.REAL):
    """Trade ``epsilon_in`` along ``path`` and return ``(amount_out, ledger)``.

    A pool used twice is priced at its post-trade state from the earlier use.
    """
    fee, mode = as_fee(fee), as_mode(mode)
    state = {}
    amount = epsilon_in
    ledger = []
    for e in path_edges(g, path):
        pool = e >> 1
        if pool in state:
            last_edge, r = state[pool]
            reserves = r if last_edge == e else r.reversed()
        else:
            reserves = g.edge_reserves[e]
        after, out = apply_swap(reserves, amount, fee, mode)
        state[pool] = (e, after)
        ledger.append(
            LedgerStep(g.pool_ids[pool], g.tokens[g.edge_tail[e]], g.tokens[g.edge_head[e]], amount, out, after)
        )
        amount = out
    return amount, tuple(ledger)


def evaluate_path(g: TokenGraph, path, epsilon_in, fee: FeeLike = DEFAULT_FEE, mode: ModeLike = SwapMode.REAL):
    """Output amount of trading ``epsilon_in`` along ``path``; empty path is the identity."""
    return replay_path(g, path, epsilon_in, fee, mode)[0]


def _path_key(amount, hops):
    return (-amount, len(hops), tuple((h.token_in, h.token_out, h.pool_id) for h in hops))


def dfs_route(
    g: TokenGraph,
    source: str,
    target: str,
    epsilon_in,
    cfg: DfsConfig = DfsConfig(),
    fee: FeeLike = DEFAULT_FEE,
    mode: ModeLike = SwapMode.REAL,
) -> RouteResult:
    """Best of the DFS-discovered paths; ties go to fewer hops, then lexicographic order."""
    paths = dfs_enumerate(g, source, target, cfg)
    if not paths:
        raise NoRoute(f"DFS found no path from {source!r} to {target!r}")
    best = None
    for hops in paths:
        out, ledger = replay_path(g, hops, epsilon_in, fee, mode)
        key = _path_key(out, hops)
        if best is None or key < best[0]:
            best = (key, out, hops, ledger)
    _, out, hops, ledger = best
    return RouteResult(
        source=source,
        target=target,
        amount_in=epsilon_in,
        amount_out=out,
        path=hops,
        ledger=ledger,
        iterations_used=len(paths),
        router="dfs",
        extra={"paths_found": len(paths), "neighbor_order": cfg.neighbor_order},
    )


class DfsRouter(BaseEstimator):
    """Estimator front-end for the DFS baseline.

    ``fit`` takes pool records (or a TokenGraph / snapshot DataFrame);
    ``predict`` takes ``(source, target, amount_in)`` rows and returns the
    output amounts, NaN where no route exists.
    """

    def __init__(self, neighbor_order="snapshot", seed=None, max_hops=None, backtrack=False,
                 fee=0.003, mode="real"):
        self.neighbor_order = neighbor_order
        self.seed = seed
        self.max_hops = max_hops
        self.backtrack = backtrack
        self.fee = fee
        self.mode = mode

    def fit(self, X, y=None):
        self.config_ = DfsConfig(self.neighbor_order, self.seed, self.max_hops, self.backtrack)
        self.fee_ = as_fee(self.fee)
        self.mode_ = as_mode(self.mode)
        self.graph_ = check_graph(X)
        self.tokens_ = list(self.graph_.tokens)
        return self

    def route(self, source, target, amount_in) -> RouteResult:
        check_is_fitted(self, "graph_")
        return dfs_route(self.graph_, source, target, amount_in, self.config_, self.fee_, self.mode_)

    def predict(self, X):
        check_is_fitted(self, "graph_")
        out = []
        for s, t, amt in check_queries(X):
            try:
                out.append(float(self.route(s, t, amt).amount_out))
            except NoRoute:
                out.append(np.nan)
        return np.asarray(out, dtype=float)
