"""Line graph of a token graph, with reversal cuts and a per-query source vertex."""
from __future__ import annotations

from typing import Iterator, List, Optional, Tuple

from .exceptions import IsolatedSource
from .graph import TokenGraph

SOURCE_MARK = "O"


class LineGraph:
    """One vertex per directed pool, linked head-to-tail.

    Vertex ``v < n_edges`` is directed edge ``v`` of the token graph. A link
    ``a -> b`` exists when ``a`` ends at the token ``b`` starts from, unless
    ``b`` is ``a`` reversed through the same pool. When a source token is
    set, vertex ``n_edges`` is the synthetic source vertex fanning out to
    every directed pool that sells the source token.

    The pool-vertex core is shared between all :meth:`with_source` views.
    """

    def __init__(self, graph: TokenGraph, succ: List[Tuple[int, ...]], source: Optional[int] = None):
        self.graph = graph
        self.succ = succ
        self.source = source

    @classmethod
    def core(cls, graph: TokenGraph) -> "LineGraph":
        succ = []
        head = graph.edge_head
        out = graph.out_edges
        for a in range(graph.n_edges):
            pool = a >> 1
            succ.append(tuple(sorted(b for b in out[head[a]] if (b >> 1) != pool)))
        return cls(graph, succ)

    def with_source(self, token: str) -> "LineGraph":
        t = self.graph.token_id(token)
        if not self.graph.out_edges[t]:
            raise IsolatedSource(f"source token {token!r} has no pools")
        return LineGraph(self.graph, self.succ, t)

    @property
    def n_pool_vertices(self) -> int:
        return self.graph.n_edges

    @property
    def source_vertex(self) -> Optional[int]:
        return None if self.source is None else self.graph.n_edges

    @property
    def source_token(self) -> Optional[str]:
        return None if self.source is None else self.graph.tokens[self.source]

    @property
    def n_vertices(self) -> int:
        return self.graph.n_edges + (self.source is not None)

    def source_links(self) -> Tuple[int, ...]:
        if self.source is None:
            return ()
        return tuple(sorted(self.graph.out_edges[self.source]))

    def successors(self, v: int) -> Tuple[int, ...]:
        if v == self.source_vertex:
            return self.source_links()
        return self.succ[v]

    @property
    def n_pool_links(self) -> int:
        return sum(len(s) for s in self.succ)

    @property
    def n_links(self) -> int:
        return self.n_pool_links + len(self.source_links())

    def links(self) -> Iterator[Tuple[int, int]]:
        """All links in sweep order: by tail vertex, then head; source last."""
        for a, heads in enumerate(self.succ):
            for b in heads:
                yield a, b
        s = self.source_vertex
        for b in self.source_links():
            yield s, b

    def vertex(self, v: int) -> tuple:
        """Readable vertex label: ``(token_in, token_out, pool_id)`` or ``("O", source)``."""
        if v == self.source_vertex:
            return (SOURCE_MARK, self.source_token)
        e = self.graph.edge(v)
        return (e.token_in, e.token_out, e.pool_id)

    def vertex_reserves(self, v: int):
        return self.graph.edge_reserves[v]

    def summary(self) -> dict:
        return {
            "vertices": self.n_vertices,
            "pool_vertices": self.n_pool_vertices,
            "links": self.n_links,
            "pool_links": self.n_pool_links,
            "source_links": len(self.source_links()),
            "link_count_formula": link_count_formula(self.graph),
        }


def build_line_graph(g: TokenGraph, source_token: Optional[str] = None) -> LineGraph:
    """Line graph of ``g``; with ``source_token`` the source vertex is attached."""
    lg = LineGraph.core(g)
    return lg.with_source(source_token) if source_token is not None else lg


def link_count_formula(g: TokenGraph) -> int:
    """Sum of squared token degrees minus twice the pool count."""
    return sum(len(out) ** 2 for out in g.out_edges) - 2 * g.n_pools
