"""Input coercion shared by the estimator front-ends."""
from __future__ import annotations

import math
from typing import List, Tuple

from .graph import TokenGraph, build_graph
from .snapshot import PoolRecord, SNAPSHOT_COLUMNS


def check_graph(X) -> TokenGraph:
    """Accept a TokenGraph, a DataFrame in snapshot layout, or an iterable
    of PoolRecords / ``(pool_id, token_a, token_b, reserve_a, reserve_b)``
    tuples, and return a TokenGraph."""
    if isinstance(X, TokenGraph):
        return X
    if hasattr(X, "to_dict") and hasattr(X, "columns"):
        cols = list(X.columns)
        need = SNAPSHOT_COLUMNS[:5]
        if not set(need) <= set(cols):
            raise ValueError(f"DataFrame needs columns {need}, got {cols}")
        X = [tuple(row) for row in X[need].itertuples(index=False, name=None)]
    rows = []
    for rec in X:
        if not isinstance(rec, (PoolRecord, tuple, list)):
            raise TypeError(f"cannot interpret {type(rec).__name__} as a pool record")
        rows.append(tuple(rec) if isinstance(rec, list) else rec)
    return build_graph(rows)


def check_queries(X) -> List[Tuple[str, str, float]]:
    """Rows of ``(source, target, amount_in)``."""
    if hasattr(X, "itertuples"):
        X = X.itertuples(index=False, name=None)
    out = []
    for i, row in enumerate(X):
        if len(row) != 3:
            raise ValueError(f"query row {i} must be (source, target, amount_in), got {row!r}")
        s, t, amt = row
        amt = float(amt) if not isinstance(amt, int) else amt
        if not (amt > 0 and math.isfinite(amt)):
            raise ValueError(f"query row {i}: amount_in must be positive and finite")
        out.append((str(s), str(t), amt))
    return out
