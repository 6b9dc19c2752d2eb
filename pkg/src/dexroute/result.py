from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Tuple

from .amm import ReservePair


class Hop(NamedTuple):
    pool_id: str
    token_in: str
    token_out: str


class LedgerStep(NamedTuple):
    """Trade through one pool and the pool's reserves right after it."""

    pool_id: str
    token_in: str
    token_out: str
    amount_in: float
    amount_out: float
    reserves_after: ReservePair


@dataclass(frozen=True)
class RouteResult:
    source: str
    target: str
    amount_in: float
    amount_out: float
    path: Tuple[Hop, ...]
    ledger: Tuple[LedgerStep, ...] = ()
    iterations_used: int = 0
    converged: bool = True
    router: str = ""
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def path_len(self) -> int:
        return len(self.path)

    @property
    def tokens(self) -> Tuple[str, ...]:
        if not self.path:
            return (self.source,)
        return (self.path[0].token_in,) + tuple(h.token_out for h in self.path)

    def to_dict(self) -> dict:
        return {
            "router": self.router,
            "source": self.source,
            "target": self.target,
            "amount_in": self.amount_in,
            "amount_out": self.amount_out,
            "path_len": self.path_len,
            "tokens": list(self.tokens),
            "iterations_used": self.iterations_used,
            "converged": self.converged,
            "ledger": [
                {
                    "pool_id": s.pool_id,
                    "token_in": s.token_in,
                    "token_out": s.token_out,
                    "amount_in": s.amount_in,
                    "amount_out": s.amount_out,
                    "reserve_in_after": s.reserves_after.r_in,
                    "reserve_out_after": s.reserves_after.r_out,
                }
                for s in self.ledger
            ],
            **self.extra,
        }

    def format(self) -> str:
        lines = [
            f"[{self.router or 'route'}] {self.amount_in:g} {self.source} -> "
            f"{self.amount_out!r} {self.target} in {self.path_len} hop(s)"
            + ("" if self.converged else " (round cap hit, best so far)")
        ]
        for i, s in enumerate(self.ledger, 1):
            lines.append(
                f"  {i}. pool {s.pool_id}: {s.amount_in!r} {s.token_in} -> {s.amount_out!r} {s.token_out}"
                f"  reserves after ({s.reserves_after.r_in!r}, {s.reserves_after.r_out!r})"
            )
        return "\n".join(lines)
