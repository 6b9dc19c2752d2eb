"""Pool snapshot files, the activity/TVL/degree filter, and USD pricing."""
from __future__ import annotations

import csv
import datetime as dt
import json
import math
from collections import defaultdict
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import (
    DuplicatePool,
    EmptyResult,
    InvariantViolation,
    MissingPrice,
    ParseError,
)

SNAPSHOT_COLUMNS = [
    "pool_id",
    "token_a",
    "token_b",
    "reserve_a",
    "reserve_b",
    "tvl_usd",
    "created_at",
    "last_trade_at",
]
OPTIONAL_COLUMNS = ["decimals_a", "decimals_b"]

PriceTable = Dict[str, float]


@dataclass(frozen=True)
class PoolRecord:
    pool_id: str
    token_a: str
    token_b: str
    reserve_a: float
    reserve_b: float
    tvl_usd: float = 0.0
    created_at: Optional[dt.date] = None
    last_trade_at: Optional[dt.date] = None

    def __post_init__(self):
        problems = []
        if self.token_a == self.token_b:
            problems.append("token_a == token_b")
        for name in ("reserve_a", "reserve_b"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                problems.append(f"{name} must be finite and > 0 (got {v!r})")
        if not (math.isfinite(self.tvl_usd) and self.tvl_usd >= 0):
            problems.append(f"tvl_usd must be >= 0 (got {self.tvl_usd!r})")
        if (
            self.created_at is not None
            and self.last_trade_at is not None
            and self.last_trade_at < self.created_at
        ):
            problems.append("last_trade_at precedes created_at")
        if problems:
            raise InvariantViolation(f"pool {self.pool_id!r}: " + "; ".join(problems))

    @property
    def tokens(self):
        return self.token_a, self.token_b


def _parse_date(value, line):
    if value is None or value == "":
        return None
    if isinstance(value, dt.date):
        return value
    try:
        return dt.date.fromisoformat(str(value)[:10])
    except ValueError:
        raise ParseError(f"bad ISO date {value!r}", line) from None


def _parse_float(value, field, line):
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ParseError(f"field {field!r} is not a number: {value!r}", line) from None


def _record_from_row(row: dict, line: int) -> PoolRecord:
    missing = [c for c in SNAPSHOT_COLUMNS if c not in row]
    if missing:
        raise ParseError(f"missing fields {missing}", line)
    reserve_a = _parse_float(row["reserve_a"], "reserve_a", line)
    reserve_b = _parse_float(row["reserve_b"], "reserve_b", line)
    # raw on-chain integers are scaled to human units when decimals are given
    for side in ("a", "b"):
        dec = row.get(f"decimals_{side}")
        if dec not in (None, ""):
            try:
                scale = 10 ** int(dec)
            except (TypeError, ValueError):
                raise ParseError(f"bad decimals_{side} {dec!r}", line) from None
            if side == "a":
                reserve_a /= scale
            else:
                reserve_b /= scale
    return PoolRecord(
        pool_id=str(row["pool_id"]),
        token_a=str(row["token_a"]),
        token_b=str(row["token_b"]),
        reserve_a=reserve_a,
        reserve_b=reserve_b,
        tvl_usd=_parse_float(row["tvl_usd"], "tvl_usd", line),
        created_at=_parse_date(row["created_at"], line),
        last_trade_at=_parse_date(row["last_trade_at"], line),
    )


def _infer_format(path: Path, fmt: Optional[str]) -> str:
    if fmt:
        fmt = fmt.lower().replace("_", "-")
        if fmt in ("jsonl", "json-lines", "ndjson", "json"):
            return "json-lines"
        if fmt == "csv":
            return "csv"
        raise ValueError(f"unknown snapshot format {fmt!r}")
    return "json-lines" if path.suffix.lower() in (".jsonl", ".ndjson", ".json") else "csv"


def load_snapshot(path, format: Optional[str] = None) -> List[PoolRecord]:
    """Read pool records from a CSV or JSON-lines file.

    Raises :class:`ParseError` (with the 1-based line number) on malformed
    input and :class:`InvariantViolation` for records that parse but are
    not valid pools, including repeated ``pool_id``.
    """
    path = Path(path)
    fmt = _infer_format(path, format)
    records: List[PoolRecord] = []
    seen = {}
    with path.open(newline="") as fh:
        if fmt == "csv":
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                return []
            missing = [c for c in SNAPSHOT_COLUMNS if c not in reader.fieldnames]
            if missing:
                raise ParseError(f"header lacks columns {missing}", 1)
            rows = ((reader.line_num, row) for row in reader)
        else:
            rows = _jsonl_rows(fh)
        for line, row in rows:
            try:
                rec = _record_from_row(row, line)
            except InvariantViolation as exc:
                raise InvariantViolation(f"line {line}: {exc}") from None
            if rec.pool_id in seen:
                raise DuplicatePool(
                    f"line {line}: pool {rec.pool_id!r} already defined on line {seen[rec.pool_id]}"
                )
            seen[rec.pool_id] = line
            records.append(rec)
    return records


def _jsonl_rows(fh):
    for i, text in enumerate(fh, start=1):
        if not text.strip():
            continue
        try:
            row = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", i) from None
        if not isinstance(row, dict):
            raise ParseError("expected a JSON object", i)
        yield i, row


def _record_row(rec: PoolRecord) -> dict:
    row = asdict(rec)
    for key in ("created_at", "last_trade_at"):
        row[key] = row[key].isoformat() if row[key] is not None else ""
    return row


def write_snapshot(records: Iterable[PoolRecord], path, format: Optional[str] = None) -> None:
    path = Path(path)
    fmt = _infer_format(path, format)
    with path.open("w", newline="") as fh:
        if fmt == "csv":
            writer = csv.DictWriter(fh, fieldnames=SNAPSHOT_COLUMNS)
            writer.writeheader()
            for rec in records:
                writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in _record_row(rec).items()})
        else:
            for rec in records:
                fh.write(json.dumps(_record_row(rec)) + "\n")


def load_prices(path) -> PriceTable:
    """Read a ``token,usd_price`` CSV into a dict."""
    prices: PriceTable = {}
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"token", "usd_price"} <= set(reader.fieldnames):
            raise ParseError("price file needs a 'token,usd_price' header", 1)
        for row in reader:
            price = _parse_float(row["usd_price"], "usd_price", reader.line_num)
            if not (math.isfinite(price) and price > 0):
                raise InvariantViolation(
                    f"line {reader.line_num}: price of {row['token']!r} must be > 0"
                )
            prices[row["token"]] = price
    return prices


def write_prices(prices: PriceTable, path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["token", "usd_price"])
        for token, price in prices.items():
            writer.writerow([token, repr(float(price))])


def usd_to_token_amount(token: str, usd: float, prices: PriceTable) -> float:
    """Number of ``token`` units worth ``usd`` dollars."""
    if not usd > 0:
        raise ValueError(f"usd must be > 0, got {usd!r}")
    try:
        price = prices[token]
    except KeyError:
        raise MissingPrice(f"no USD price for token {token!r}") from None
    return usd / price


@dataclass(frozen=True)
class FilterConfig:
    as_of_date: Optional[dt.date] = None
    min_tvl_usd: float = 10_000.0
    max_tokens: int = 100
    min_degree: int = 2

    def __post_init__(self):
        if self.max_tokens < 2:
            raise ValueError("max_tokens must be >= 2")
        if self.min_degree < 1:
            raise ValueError("min_degree must be >= 1")


def _prune_low_degree(pools: Dict[str, PoolRecord], min_degree: int) -> None:
    while True:
        degree = defaultdict(int)
        for rec in pools.values():
            degree[rec.token_a] += 1
            degree[rec.token_b] += 1
        weak = {t for t, d in degree.items() if d < min_degree}
        if not weak:
            return
        for pid in [p for p, r in pools.items() if r.token_a in weak or r.token_b in weak]:
            del pools[pid]


def filter_pools(records: List[PoolRecord], config: FilterConfig = FilterConfig()) -> List[PoolRecord]:
    """Keep active, deep pools and shrink the token set to ``max_tokens``.

    Steps, in order: activity window around ``as_of_date`` (skipped when it
    is None), TVL floor, iterative removal of tokens below ``min_degree``,
    then repeatedly drop the token with the least incident TVL (ties go to
    the lexicographically smallest id) and re-prune degrees until at most
    ``max_tokens`` remain. Surviving records keep their input order.
    """
    if not records:
        raise EmptyResult("no pool records to filter")
    kept = list(records)
    if config.as_of_date is not None:
        day = config.as_of_date
        kept = [
            r
            for r in kept
            if r.created_at is not None
            and r.last_trade_at is not None
            and r.created_at < day <= r.last_trade_at
        ]
    kept = [r for r in kept if r.tvl_usd >= config.min_tvl_usd]

    pools = {r.pool_id: r for r in kept}
    _prune_low_degree(pools, config.min_degree)
    while True:
        token_tvl = defaultdict(float)
        for rec in pools.values():
            token_tvl[rec.token_a] += rec.tvl_usd
            token_tvl[rec.token_b] += rec.tvl_usd
        if len(token_tvl) <= config.max_tokens:
            break
        victim = min(token_tvl, key=lambda t: (token_tvl[t], t))
        for pid in [p for p, r in pools.items() if victim in (r.token_a, r.token_b)]:
            del pools[pid]
        _prune_low_degree(pools, config.min_degree)

    if not pools:
        raise EmptyResult("filtering removed every pool")
    return [r for r in kept if r.pool_id in pools]


class PoolFilter(TransformerMixin, BaseEstimator):
    """Transformer wrapper around :func:`filter_pools`.

    ``fit`` decides which pools survive; ``transform`` keeps only those, so
    a filter fitted on one snapshot can be applied to a later refresh of
    the same pools.
    """

    def __init__(self, as_of_date=None, min_tvl_usd=10_000.0, max_tokens=100, min_degree=2):
        self.as_of_date = as_of_date
        self.min_tvl_usd = min_tvl_usd
        self.max_tokens = max_tokens
        self.min_degree = min_degree

    def _config(self):
        day = self.as_of_date
        if isinstance(day, str):
            day = dt.date.fromisoformat(day)
        return FilterConfig(day, self.min_tvl_usd, self.max_tokens, self.min_degree)

    def fit(self, X, y=None):
        kept = filter_pools(list(X), self._config())
        self.pool_ids_ = frozenset(r.pool_id for r in kept)
        self.tokens_ = sorted({t for r in kept for t in r.tokens})
        return self

    def transform(self, X):
        check_is_fitted(self, "pool_ids_")
        return [r for r in X if r.pool_id in self.pool_ids_]
