"""Directed token graph: one vertex per token, two directed edges per pool."""
from __future__ import annotations

from collections import Counter
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence

from .amm import ReservePair
from .exceptions import DuplicatePool, InvariantViolation, UnknownToken


class DirectedPool(NamedTuple):
    """One trade direction of a pool: sell ``token_in`` for ``token_out``."""

    pool_id: str
    token_in: str
    token_out: str
    reserves: ReservePair


class TokenGraph:
    """Immutable directed multigraph over tokens.

    Pool ``k`` owns directed edges ``2k`` (``token_a -> token_b``) and
    ``2k + 1`` (the reverse); reserve tuples of the two are mirror images.
    Tokens get dense indices in first-seen order.
    """

    def __init__(self, tokens: Sequence[str], pools: Sequence[tuple]):
        self.tokens: List[str] = list(tokens)
        self.index: Dict[str, int] = {t: i for i, t in enumerate(self.tokens)}
        self.pool_ids: List[str] = []
        tail, head, reserves = [], [], []
        self.pool_index: Dict[str, int] = {}
        for pid, a, b, ra, rb in pools:
            if pid in self.pool_index:
                raise DuplicatePool(f"pool {pid!r} appears twice")
            ia, ib = self.index[a], self.index[b]
            if ia == ib:
                raise InvariantViolation(f"pool {pid!r} is a self-loop on {a!r}")
            self.pool_index[pid] = len(self.pool_ids)
            self.pool_ids.append(pid)
            tail += [ia, ib]
            head += [ib, ia]
            reserves += [ReservePair(ra, rb), ReservePair(rb, ra)]
        self.edge_tail: List[int] = tail
        self.edge_head: List[int] = head
        self.edge_reserves: List[ReservePair] = reserves
        self.out_edges: List[List[int]] = [[] for _ in self.tokens]
        for e, t in enumerate(tail):
            self.out_edges[t].append(e)

    @property
    def n_tokens(self) -> int:
        return len(self.tokens)

    @property
    def n_pools(self) -> int:
        return len(self.pool_ids)

    @property
    def n_edges(self) -> int:
        return len(self.edge_tail)

    def token_id(self, token: str) -> int:
        try:
            return self.index[token]
        except KeyError:
            raise UnknownToken(f"unknown token {token!r}") from None

    def degree(self, token: str) -> int:
        """Number of pools the token participates in."""
        return len(self.out_edges[self.token_id(token)])

    def edge(self, e: int) -> DirectedPool:
        return DirectedPool(
            self.pool_ids[e >> 1],
            self.tokens[self.edge_tail[e]],
            self.tokens[self.edge_head[e]],
            self.edge_reserves[e],
        )

    def edges(self) -> List[DirectedPool]:
        return [self.edge(e) for e in range(self.n_edges)]

    def edge_id(self, pool_id: str, token_in: str) -> int:
        """Directed edge of ``pool_id`` that sells ``token_in``."""
        try:
            k = self.pool_index[pool_id]
        except KeyError:
            raise KeyError(f"unknown pool {pool_id!r}") from None
        t = self.token_id(token_in)
        if self.edge_tail[2 * k] == t:
            return 2 * k
        if self.edge_tail[2 * k + 1] == t:
            return 2 * k + 1
        raise KeyError(f"pool {pool_id!r} does not trade {token_in!r}")

    def edges_between(self, token_in: str, token_out: str) -> List[int]:
        t, h = self.token_id(token_in), self.token_id(token_out)
        return [e for e in self.out_edges[t] if self.edge_head[e] == h]

    def reversed(self) -> "TokenGraph":
        """Graph with every pool's token order flipped (same pools, same tokens)."""
        pools = []
        for k, pid in enumerate(self.pool_ids):
            e = 2 * k + 1
            r = self.edge_reserves[e]
            pools.append((pid, self.tokens[self.edge_tail[e]], self.tokens[self.edge_head[e]], r.r_in, r.r_out))
        return TokenGraph(self.tokens, pools)

    def summary(self) -> dict:
        degrees = [len(out) for out in self.out_edges]
        hist = Counter(degrees)
        return {
            "tokens": self.n_tokens,
            "pools": self.n_pools,
            "directed_edges": self.n_edges,
            "degree_histogram": {str(d): hist[d] for d in sorted(hist)},
            "max_degree": max(degrees, default=0),
            "sum_degree_squared": sum(d * d for d in degrees),
        }

    def __repr__(self):
        return f"TokenGraph(tokens={self.n_tokens}, pools={self.n_pools})"


def build_graph(records: Iterable, extra_tokens: Optional[Iterable[str]] = None) -> TokenGraph:
    """Build a :class:`TokenGraph` from pool records.

    ``records`` holds :class:`~dexroute.snapshot.PoolRecord` objects or plain
    ``(pool_id, token_a, token_b, reserve_a, reserve_b)`` tuples.
    ``extra_tokens`` adds vertices with no pools.
    """
    tokens: Dict[str, None] = {}
    pools = []
    for rec in records:
        if isinstance(rec, tuple):
            pid, a, b, ra, rb = rec[:5]
        else:
            pid, a, b, ra, rb = rec.pool_id, rec.token_a, rec.token_b, rec.reserve_a, rec.reserve_b
        if not (ra > 0 and rb > 0):
            raise InvariantViolation(f"pool {pid!r} has non-positive reserves")
        tokens.setdefault(a)
        tokens.setdefault(b)
        pools.append((str(pid), a, b, ra, rb))
    for t in extra_tokens or ():
        tokens.setdefault(t)
    return TokenGraph(list(tokens), pools)
