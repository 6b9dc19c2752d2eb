"""Exhaustive path search used as ground truth on small graphs."""
from __future__ import annotations

from dataclasses import dataclass

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .amm import DEFAULT_FEE, FeeLike, ModeLike, SwapMode, apply_swap, as_fee, as_mode
from .exceptions import NoRoute, TooLarge
from .graph import TokenGraph
from .result import Hop, LedgerStep, RouteResult
from .validation import check_graph

MAX_CANDIDATES = 10**7


@dataclass(frozen=True)
class OracleConfig:
    max_path_len: int = 6
    allow_pool_revisit: bool = False
    max_candidates: int = MAX_CANDIDATES

    def __post_init__(self):
        if self.max_path_len < 1:
            raise ValueError("max_path_len must be >= 1")


def best_route_exhaustive(
    g: TokenGraph,
    source: str,
    target: str,
    epsilon_in,
    cfg: OracleConfig = OracleConfig(),
    fee: FeeLike = DEFAULT_FEE,
    mode: ModeLike = SwapMode.REAL,
) -> RouteResult:
    """Best output over every candidate path up to ``cfg.max_path_len`` hops.

    Without pool revisits the candidates are the token-simple paths. With
    ``allow_pool_revisit`` they are all pool sequences that never step
    straight back through the pool just used; tokens (including the target)
    may repeat. Each prefix is priced once with reserves threaded through
    repeated pools, exactly as :func:`~dexroute.dfs_router.evaluate_path`
    does for a whole path.
    """
    fee, mode = as_fee(fee), as_mode(mode)
    s, t = g.token_id(source), g.token_id(target)
    if s == t:
        raise ValueError("source and target must differ")
    head, out_edges = g.edge_head, g.out_edges
    revisit = cfg.allow_pool_revisit
    limit = cfg.max_path_len

    state = {}  # pool -> (edge last used, reserves after)
    visited = {s}
    stack = []  # (edge, amount_in, amount_out, reserves_after)
    best = None
    candidates = 0

    def extend(token, amount):
        nonlocal best, candidates
        for e in out_edges[token]:
            w = head[e]
            pool = e >> 1
            if not revisit and w in visited:
                continue
            if revisit and stack and stack[-1][0] >> 1 == pool:
                continue
            prior = state.get(pool)
            if prior is None:
                reserves = g.edge_reserves[e]
            else:
                reserves = prior[1] if prior[0] == e else prior[1].reversed()
            after, out = apply_swap(reserves, amount, fee, mode)
            state[pool] = (e, after)
            stack.append((e, amount, out, after))
            if w == t:
                candidates += 1
                if candidates > cfg.max_candidates:
                    raise TooLarge(f"more than {cfg.max_candidates} candidate paths")
                key = (-out, len(stack), tuple(x[0] for x in stack))
                if best is None or key < best[0]:
                    best = (key, list(stack))
            if len(stack) < limit and (revisit or w != t):
                if not revisit:
                    visited.add(w)
                extend(w, out)
                if not revisit:
                    visited.discard(w)
            stack.pop()
            if prior is None:
                del state[pool]
            else:
                state[pool] = prior

    extend(s, epsilon_in)
    if best is None:
        raise NoRoute(f"no path from {source!r} to {target!r} within {limit} hops")
    steps = best[1]
    path, ledger = [], []
    for e, amt_in, amt_out, after in steps:
        pid, a, b = g.pool_ids[e >> 1], g.tokens[g.edge_tail[e]], g.tokens[head[e]]
        path.append(Hop(pid, a, b))
        ledger.append(LedgerStep(pid, a, b, amt_in, amt_out, after))
    return RouteResult(
        source=source,
        target=target,
        amount_in=epsilon_in,
        amount_out=steps[-1][2],
        path=tuple(path),
        ledger=tuple(ledger),
        iterations_used=candidates,
        router="oracle",
        extra={"candidates": candidates},
    )


class ExhaustiveRouter(BaseEstimator):
    """Estimator wrapper over :func:`best_route_exhaustive` (small graphs only)."""

    def __init__(self, max_path_len=6, allow_pool_revisit=False, fee=0.003, mode="real"):
        self.max_path_len = max_path_len
        self.allow_pool_revisit = allow_pool_revisit
        self.fee = fee
        self.mode = mode

    def fit(self, X, y=None):
        self.config_ = OracleConfig(self.max_path_len, self.allow_pool_revisit)
        self.graph_ = check_graph(X)
        return self

    def route(self, source, target, amount_in) -> RouteResult:
        check_is_fitted(self, "graph_")
        return best_route_exhaustive(self.graph_, source, target, amount_in, self.config_, self.fee, self.mode)


def compare_with_oracle(g: TokenGraph, amounts, cfg: OracleConfig = OracleConfig(),
                        fee: FeeLike = DEFAULT_FEE, rel_tol: float = 1e-9):
    """Line-graph router vs exhaustive search on every ordered pair.

    ``amounts`` maps a source token to the input amounts to try. Returns one
    dict per (source, target, amount) case with both outputs, whether they
    agree within ``rel_tol``, and both ledgers when they do not.
    """
    from .lg_router import LgConfig, solve_labels
    from .linegraph import LineGraph

    core = LineGraph.core(g)
    cases = []
    for s in g.tokens:
        if not g.out_edges[g.index[s]]:
            continue
        for eps in amounts(s):
            table = solve_labels(core.with_source(s), LgConfig(eps, fee=fee))
            for t in g.tokens:
                if t == s:
                    continue
                try:
                    lg = table.result(t)
                except NoRoute:
                    lg = None
                try:
                    orc = best_route_exhaustive(g, s, t, eps, cfg, fee)
                except NoRoute:
                    orc = None
                if lg is None and orc is None:
                    continue
                lg_out = lg.amount_out if lg else 0.0
                orc_out = orc.amount_out if orc else 0.0
                match = abs(lg_out - orc_out) <= rel_tol * max(abs(orc_out), abs(lg_out))
                case = {"source": s, "target": t, "amount_in": eps, "lg_out": lg_out,
                        "oracle_out": orc_out, "match": match}
                if not match:
                    case["lg_ledger"] = lg.to_dict()["ledger"] if lg else []
                    case["oracle_ledger"] = orc.to_dict()["ledger"] if orc else []
                cases.append(case)
    return cases
