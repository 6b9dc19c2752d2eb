"""Label-correcting router over the line graph.

Each line-graph vertex (a directed pool) holds one label: the best amount of
its output token reachable from the source so far, the vertex path that
produced it, and a ledger of post-trade reserves along that path. Sweeps
relax every link until no label improves. A pool already traded earlier in
a label's path is priced at its latest ledger state, in whichever direction
it was last used, so loops through the same pool never reuse stale
reserves.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import _kernel
from .amm import DEFAULT_FEE, _as_int, FeeRate, ReservePair, SwapMode, as_fee, as_mode
from .exceptions import NoRoute, RoundCapExceeded
from .linegraph import LineGraph
from .result import Hop, LedgerStep, RouteResult
from .validation import check_graph, check_queries


@dataclass(frozen=True)
class LgConfig:
    epsilon_in: float
    max_rounds: Optional[int] = None  # None means 10 * |line-graph vertices|
    improvement_tolerance: float = 1e-12
    fee: FeeRate = DEFAULT_FEE
    mode: SwapMode = SwapMode.REAL

    def __post_init__(self):
        if not (self.epsilon_in > 0 and math.isfinite(self.epsilon_in)):
            raise ValueError(f"epsilon_in must be positive and finite, got {self.epsilon_in!r}")
        if self.max_rounds is not None and self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")
        if not self.improvement_tolerance >= 0:
            raise ValueError("improvement_tolerance must be >= 0")
        object.__setattr__(self, "fee", as_fee(self.fee))
        object.__setattr__(self, "mode", as_mode(self.mode))
        if self.mode is SwapMode.EXACT and not isinstance(self.epsilon_in, int):
            if float(self.epsilon_in).is_integer():
                object.__setattr__(self, "epsilon_in", int(self.epsilon_in))
            else:
                raise ValueError("exact mode needs an integral epsilon_in")

    def rounds_for(self, lg: LineGraph) -> int:
        return self.max_rounds if self.max_rounds is not None else 10 * lg.n_vertices


@dataclass(frozen=True)
class RouteLabel:
    """Label held at one line-graph vertex.

    ``path`` starts with the source vertex; ``ledger`` has one
    ``(edge, reserve_in_after, reserve_out_after, amount_out)`` entry per
    pool vertex on the path.
    """

    amount: float
    path: Tuple[int, ...]
    ledger: Tuple[Tuple[int, float, float, float], ...]


def _swap_fn(cfg: LgConfig):
    if cfg.mode is SwapMode.EXACT:
        keep = cfg.fee.keep_fraction()
        k, d = keep.numerator, keep.denominator

        def swap(x, y, dx):
            return (y * k * dx) // (x * d + k * dx)

        return swap
    keep = cfg.fee.keep
    nextafter = math.nextafter

    def swap(x, y, dx):
        a = keep * dx
        out = y * a / (x + a)
        if out >= y:
            out = nextafter(y, 0.0)
        return out

    return swap


def _improves(cand, current, tol) -> bool:
    if current == 0:
        return cand > 0
    return cand > current + tol * current


def effective_reserves(ledger, edge: int, snapshot_reserves) -> Tuple[float, float]:
    """Latest reserves of ``edge``'s pool along ``ledger``, seen from ``edge``'s direction."""
    pool = edge >> 1
    for e, r_in, r_out, _ in reversed(ledger):
        if e >> 1 == pool:
            return (r_in, r_out) if e == edge else (r_out, r_in)
    return tuple(snapshot_reserves)


def relax_link(label: RouteLabel, head: int, snapshot_reserves, cfg: LgConfig,
               current: float = 0) -> Optional[RouteLabel]:
    """Candidate label for ``head`` extended from ``label``, or None if it does
    not beat ``current`` by more than the improvement tolerance."""
    if not label.amount > 0:
        return None
    x, y = effective_reserves(label.ledger, head, snapshot_reserves)
    out = _swap_fn(cfg)(x, y, label.amount)
    if not _improves(out, current, cfg.improvement_tolerance):
        return None
    return RouteLabel(out, label.path + (head,), label.ledger + ((head, x + label.amount, y - out, out),))


@dataclass
class LabelTable:
    """Fixpoint of the sweeps for one source and input amount."""

    lg: LineGraph
    cfg: LgConfig
    amount: List[float]
    nodes: List[Optional[tuple]]
    hops: List[int]
    rounds: int
    converged: bool
    relaxations: int
    backend: str = "python"

    def label(self, v: int) -> RouteLabel:
        s = self.lg.source_vertex
        if v == s:
            return RouteLabel(self.cfg.epsilon_in, (s,), ())
        if not self.amount[v] > 0:
            return RouteLabel(0, (), ())
        ledger = _unwind(self.nodes[v])
        return RouteLabel(self.amount[v], (s,) + tuple(step[0] for step in ledger), ledger)

    def best_vertex(self, target: int) -> Optional[int]:
        g = self.lg.graph
        best, best_key = None, None
        for v in range(g.n_edges):
            if g.edge_head[v] != target or not self.amount[v] > 0:
                continue
            key = (-self.amount[v], self.hops[v], v)
            if best_key is None or key < best_key:
                best, best_key = v, key
        return best

    def result(self, target: str) -> RouteResult:
        g = self.lg.graph
        t = g.token_id(target)
        source = self.lg.source_token
        if t == self.lg.source:
            raise ValueError("source and target must differ")
        v = self.best_vertex(t)
        if v is None:
            raise NoRoute(f"no route from {source!r} to {target!r}")
        amount_in = self.cfg.epsilon_in
        hops, ledger = [], []
        amt = amount_in
        for e, r_in, r_out, out in _unwind(self.nodes[v]):
            pid, a, b = g.pool_ids[e >> 1], g.tokens[g.edge_tail[e]], g.tokens[g.edge_head[e]]
            hops.append(Hop(pid, a, b))
            ledger.append(LedgerStep(pid, a, b, amt, out, ReservePair(r_in, r_out)))
            amt = out
        return RouteResult(
            source=source,
            target=target,
            amount_in=amount_in,
            amount_out=self.amount[v],
            path=tuple(hops),
            ledger=tuple(ledger),
            iterations_used=self.rounds,
            converged=self.converged,
            router="lg",
            extra={"relaxations": self.relaxations, "backend": self.backend},
        )


def _unwind(node) -> Tuple[Tuple[int, float, float, float], ...]:
    steps = []
    while node is not None:
        steps.append(node[:4])
        node = node[4]
    return tuple(reversed(steps))


def solve_labels(lg: LineGraph, cfg: LgConfig, trace: Optional[list] = None,
                 backend: str = "auto") -> LabelTable:
    """Run sweeps to a fixpoint (or the round cap) from ``lg``'s source vertex.

    Links are visited in fixed order, by tail vertex then head, with the
    source vertex last. A tail whose label has not changed since its links
    were last relaxed is skipped: re-relaxing it would produce the same
    candidates against labels that can only have grown, so the trace is the
    same as relaxing every link on every sweep.

    If ``trace`` is a list, a copy of all vertex amounts is appended after
    each sweep. ``backend`` picks ``"python"``, ``"numba"`` or ``"auto"``
    (numba in real mode without a trace, when installed); both backends give
    bit-identical tables.
    """
    if lg.source is None:
        raise ValueError("line graph has no source vertex; use LineGraph.with_source")
    if backend not in ("auto", "python", "numba"):
        raise ValueError(f"unknown backend {backend!r}")
    compiled_ok = cfg.mode is SwapMode.REAL and trace is None
    if backend == "numba" and not (compiled_ok and _kernel.available()):
        raise ValueError("numba backend needs numba installed, real mode and no trace")
    if backend == "numba" or (backend == "auto" and compiled_ok and _kernel.available()):
        max_rounds = cfg.rounds_for(lg)
        amount, nodes, hops, rounds, converged, relaxations = _kernel.sweep(
            lg, cfg.epsilon_in, cfg.fee.keep, cfg.improvement_tolerance, max_rounds)
        _warn_cap(converged, max_rounds)
        return LabelTable(lg, cfg, amount, nodes, hops, rounds, converged, relaxations, "numba")
    g = lg.graph
    n = g.n_edges
    succ = lg.succ
    snap = g.edge_reserves
    swap = _swap_fn(cfg)
    real = cfg.mode is SwapMode.REAL
    if not real:
        snap = [(_as_int(x, "reserve"), _as_int(y, "reserve")) for x, y in snap]
    keep = cfg.fee.keep
    nextafter = math.nextafter
    tol = cfg.improvement_tolerance
    max_rounds = cfg.rounds_for(lg)

    amount: List[float] = [0] * n
    # each label's ledger is a chain of (edge, r_in_after, r_out_after, out, parent)
    # nodes shared with the label it was extended from
    nodes: List[Optional[tuple]] = [None] * n
    hops: List[int] = [0] * n
    mask: List[int] = [0] * n  # bitset of pools on each label's path
    dirty = bytearray(n)

    eps = cfg.epsilon_in
    src_links = lg.source_links()
    src_dirty = True
    rounds = 0
    relaxations = 0
    updating = True

    while updating and rounds < max_rounds:
        rounds += 1
        updating = False
        for a in range(n):
            if not dirty[a]:
                continue
            dirty[a] = 0
            x_in = amount[a]
            a_mask = mask[a]
            a_node = nodes[a]
            a_hops = hops[a] + 1
            if real:
                fx = keep * x_in
            for b in succ[a]:
                p = b >> 1
                if a_mask >> p & 1:
                    node = a_node
                    while node[0] >> 1 != p:
                        node = node[4]
                    if node[0] == b:
                        x, y = node[1], node[2]
                    else:
                        x, y = node[2], node[1]
                else:
                    x, y = snap[b]
                if real:
                    # inlined real_swap_out with keep * x_in hoisted per tail
                    out = y * fx / (x + fx)
                    if out >= y:
                        out = nextafter(y, 0.0)
                else:
                    out = swap(x, y, x_in)
                relaxations += 1
                cur = amount[b]
                if out > cur + tol * cur if cur else out > 0:
                    amount[b] = out
                    nodes[b] = (b, x + x_in, y - out, out, a_node)
                    hops[b] = a_hops
                    mask[b] = a_mask | (1 << p)
                    dirty[b] = 1
                    updating = True
        if src_dirty:
            src_dirty = False
            for b in src_links:
                x, y = snap[b]
                out = swap(x, y, eps)
                relaxations += 1
                cur = amount[b]
                if out > cur + tol * cur if cur else out > 0:
                    amount[b] = out
                    nodes[b] = (b, x + eps, y - out, out, None)
                    hops[b] = 1
                    mask[b] = 1 << (b >> 1)
                    dirty[b] = 1
                    updating = True
        if trace is not None:
            trace.append(list(amount))

    converged = not updating
    _warn_cap(converged, max_rounds)
    return LabelTable(lg, cfg, amount, nodes, hops, rounds, converged, relaxations)


def _warn_cap(converged: bool, max_rounds: int) -> None:
    if not converged:
        warnings.warn(
            f"label sweeps hit max_rounds={max_rounds} while still improving; returning best so far",
            RoundCapExceeded,
            stacklevel=3,
        )


def route(lg: LineGraph, source: str, target: str, cfg: LgConfig, trace: Optional[list] = None) -> RouteResult:
    """Best linear route from ``source`` to ``target`` for ``cfg.epsilon_in`` units.

    ``lg`` may be the shared core or a view already attached to ``source``.
    """
    if lg.source_token != source:
        lg = lg.with_source(source)
    if lg.graph.token_id(target) == lg.source:
        raise ValueError("source and target must differ")
    return solve_labels(lg, cfg, trace).result(target)


def route_all(lg: LineGraph, source: str, cfg: LgConfig) -> Dict[str, RouteResult]:
    """Routes from ``source`` to every reachable token from one label fixpoint."""
    if lg.source_token != source:
        lg = lg.with_source(source)
    table = solve_labels(lg, cfg)
    out = {}
    for t in lg.graph.tokens:
        if t == source:
            continue
        try:
            out[t] = table.result(t)
        except NoRoute:
            pass
    return out


class LineGraphRouter(BaseEstimator):
    """Estimator front-end for the line-graph router.

    ``fit`` builds the token graph and the shared line-graph core from pool
    records (or a TokenGraph / snapshot DataFrame); every query afterwards
    only attaches a source vertex.

    >>> from dexroute.synthetic import path_records
    >>> r = LineGraphRouter().fit(path_records())
    >>> round(r.route("A", "C", 100).amount_out, 2)
    82.9
    """

    def __init__(self, fee=0.003, mode="real", max_rounds=None, improvement_tolerance=1e-12):
        self.fee = fee
        self.mode = mode
        self.max_rounds = max_rounds
        self.improvement_tolerance = improvement_tolerance

    def fit(self, X, y=None):
        self.fee_ = as_fee(self.fee)
        self.mode_ = as_mode(self.mode)
        self.graph_ = check_graph(X)
        self.line_graph_ = LineGraph.core(self.graph_)
        self.tokens_ = list(self.graph_.tokens)
        return self

    def _cfg(self, amount_in) -> LgConfig:
        return LgConfig(amount_in, self.max_rounds, self.improvement_tolerance, self.fee_, self.mode_)

    def route(self, source, target, amount_in, trace=None) -> RouteResult:
        check_is_fitted(self, "line_graph_")
        return route(self.line_graph_, source, target, self._cfg(amount_in), trace)

    def route_all(self, source, amount_in) -> Dict[str, RouteResult]:
        check_is_fitted(self, "line_graph_")
        return route_all(self.line_graph_, source, self._cfg(amount_in))

    def predict(self, X):
        check_is_fitted(self, "line_graph_")
        cache = {}
        out = []
        for s, t, amt in check_queries(X):
            key = (s, amt)
            if key not in cache:
                lg = self.line_graph_.with_source(s)
                cache[key] = solve_labels(lg, self._cfg(amt))
            try:
                out.append(float(cache[key].result(t).amount_out))
            except NoRoute:
                out.append(np.nan)
        return np.asarray(out, dtype=float)
