"""All-pairs comparison of the line-graph router against the DFS baseline.

For every ordered token pair both routers sell the same USD value of the
source token; the discrepancy ratio ``(lg - dfs) / dfs`` and hop counts are
recorded per pair and aggregated per USD amount.
"""
from __future__ import annotations

import csv
import json
import math
import statistics
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence

from .amm import DEFAULT_FEE, FeeLike, ModeLike, SwapMode, as_fee, as_mode
from . import _kernel
from .dfs_router import DfsConfig, dfs_route
from .exceptions import DexRouteError, IsolatedSource, MissingPrice, NoRoute
from .graph import TokenGraph
from .lg_router import LgConfig, solve_labels
from .linegraph import LineGraph
from .snapshot import PriceTable, usd_to_token_amount

DEFAULT_THRESHOLD = 0.001
DOMINANCE_TOL = 1e-9

PAIRS_COLUMNS = [
    "source", "target", "usd_in", "lg_out", "dfs_out", "ratio",
    "lg_path_len", "dfs_path_len", "lg_time_us", "dfs_time_us", "status",
]
SUMMARY_COLUMNS = ["usd_in", "pairs", "prop_over_threshold", "mean_ratio", "median_ratio"]
HIST_COLUMNS = ["usd_in", "len_diff", "count"]

OK = "ok"
NO_ROUTE = "no_route"
DFS_NO_ROUTE = "dfs_no_route"
LG_NO_ROUTE = "lg_no_route"
MISSING_PRICE = "missing_price"


@dataclass
class ComparisonRecord:
    source: str
    target: str
    usd_in: float
    lg_out: Optional[float] = None
    dfs_out: Optional[float] = None
    ratio: Optional[float] = None  # +inf when only the line-graph router found a route
    lg_path_len: Optional[int] = None
    dfs_path_len: Optional[int] = None
    lg_time_us: Optional[float] = None
    dfs_time_us: Optional[float] = None
    status: str = OK

    @property
    def comparable(self) -> bool:
        return self.ratio is not None and math.isfinite(self.ratio)


@dataclass
class SweepSummary:
    usd_in: float
    pair_count: int
    prop_over_threshold: Optional[float]
    mean_ratio: Optional[float]
    median_ratio: Optional[float]
    path_len_diff_histogram: Dict[int, int] = field(default_factory=dict)
    threshold: float = DEFAULT_THRESHOLD
    total_records: int = 0
    dfs_missing: int = 0
    no_route: int = 0
    failures: int = 0
    min_ratio: Optional[float] = None
    dominance_violations: int = 0


@dataclass(frozen=True)
class BenchConfig:
    fee: FeeLike = DEFAULT_FEE
    mode: ModeLike = SwapMode.REAL
    max_rounds: Optional[int] = None
    improvement_tolerance: float = 1e-12
    dfs: DfsConfig = DfsConfig()


def _ratio(lg_out, dfs_out):
    return (lg_out - dfs_out) / dfs_out


def _source_records(g: TokenGraph, lg_core: LineGraph, source: str, amount, usd_in, cfg: BenchConfig):
    fee, mode = as_fee(cfg.fee), as_mode(cfg.mode)
    targets = [t for t in g.tokens if t != source]
    if amount is None:
        return [ComparisonRecord(source, t, usd_in, status=MISSING_PRICE) for t in targets]
    if mode is SwapMode.EXACT:
        amount = int(amount)
    table = None
    lg_time = None
    try:
        lg_cfg = LgConfig(amount, cfg.max_rounds, cfg.improvement_tolerance, fee, mode)
        start = time.perf_counter()
        table = solve_labels(lg_core.with_source(source), lg_cfg)
        lg_time = (time.perf_counter() - start) * 1e6
    except IsolatedSource:
        pass
    except (DexRouteError, ValueError) as exc:
        return [ComparisonRecord(source, t, usd_in, status=f"error: {exc}") for t in targets]

    out = []
    for t in targets:
        rec = ComparisonRecord(source, t, usd_in)
        if table is not None:
            start = time.perf_counter()
            try:
                res = table.result(t)
                rec.lg_out, rec.lg_path_len = res.amount_out, res.path_len
            except NoRoute:
                pass
            # the label fixpoint is shared by all targets of one source; a
            # standalone query pays for the whole solve
            rec.lg_time_us = lg_time + (time.perf_counter() - start) * 1e6
        start = time.perf_counter()
        try:
            res = dfs_route(g, source, t, amount, cfg.dfs, fee, mode)
            rec.dfs_out, rec.dfs_path_len = res.amount_out, res.path_len
        except NoRoute:
            pass
        except (DexRouteError, ValueError) as exc:
            rec.status = f"error: {exc}"
        rec.dfs_time_us = (time.perf_counter() - start) * 1e6
        if rec.status == OK:
            if rec.lg_out is None and rec.dfs_out is None:
                rec.status = NO_ROUTE
            elif rec.dfs_out is None or rec.dfs_out <= 0:
                rec.status, rec.ratio = DFS_NO_ROUTE, math.inf
            elif rec.lg_out is None:
                rec.status = LG_NO_ROUTE
            else:
                rec.ratio = _ratio(rec.lg_out, rec.dfs_out)
        out.append(rec)
    return out


def _worker(args):
    _kernel.warm()
    return _source_records(*args)


def compare_all_pairs(
    g: TokenGraph,
    prices: PriceTable,
    usd_in: float,
    cfg: BenchConfig = BenchConfig(),
    lg_core: Optional[LineGraph] = None,
    n_jobs: int = 1,
) -> List[ComparisonRecord]:
    """One record per ordered pair of distinct tokens, sorted by (source, target).

    Per-pair failures are recorded in ``status``; the sweep never aborts.
    ``lg_core`` lets callers reuse a line graph built once per snapshot.
    """
    lg_core = lg_core or LineGraph.core(g)
    jobs = []
    for s in g.tokens:
        try:
            amount = usd_to_token_amount(s, usd_in, prices)
        except MissingPrice:
            amount = None
        jobs.append((g, lg_core, s, amount, usd_in, cfg))
    if n_jobs == 1 or len(jobs) < 2:
        chunks = [_worker(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=None if n_jobs < 1 else n_jobs) as pool:
            chunks = list(pool.map(_worker, jobs, chunksize=max(1, len(jobs) // 32)))
    records = [r for chunk in chunks for r in chunk]
    records.sort(key=lambda r: (r.source, r.target))
    return records


def summarize(records: Sequence[ComparisonRecord], threshold: float = DEFAULT_THRESHOLD,
              usd_in: Optional[float] = None) -> SweepSummary:
    """Share of pairs where lg beats dfs by more than ``threshold``, the mean
    and median ratio over those pairs, and their ``dfs_len - lg_len`` histogram.

    Only pairs where both routers found a route enter the statistics.
    """
    if usd_in is None:
        usd_in = records[0].usd_in if records else math.nan
    comparable = [r for r in records if r.comparable]
    above = [r for r in comparable if r.ratio > threshold]
    ratios = [r.ratio for r in above]
    hist = Counter(r.dfs_path_len - r.lg_path_len for r in above)
    return SweepSummary(
        usd_in=usd_in,
        pair_count=len(comparable),
        prop_over_threshold=len(above) / len(comparable) if comparable else None,
        mean_ratio=statistics.fmean(ratios) if ratios else None,
        median_ratio=statistics.median(ratios) if ratios else None,
        path_len_diff_histogram=dict(sorted(hist.items())),
        threshold=threshold,
        total_records=len(records),
        dfs_missing=sum(r.status == DFS_NO_ROUTE for r in records),
        no_route=sum(r.status == NO_ROUTE for r in records),
        failures=sum(r.status not in (OK, NO_ROUTE, DFS_NO_ROUTE) for r in records),
        min_ratio=min((r.ratio for r in comparable), default=None),
        dominance_violations=sum(r.ratio < -DOMINANCE_TOL for r in comparable),
    )


def sweep_usd(
    g: TokenGraph,
    prices: PriceTable,
    usd_values: Iterable[float],
    cfg: BenchConfig = BenchConfig(),
    threshold: float = DEFAULT_THRESHOLD,
    n_jobs: int = 1,
    on_records: Optional[Callable[[float, List[ComparisonRecord]], None]] = None,
    lg_core: Optional[LineGraph] = None,
) -> List[SweepSummary]:
    """:func:`compare_all_pairs` then :func:`summarize` for each USD amount.

    ``on_records`` receives each amount's records as soon as they exist, so
    callers can write them out before the next amount starts.
    """
    lg_core = lg_core or LineGraph.core(g)
    out = []
    for usd in usd_values:
        records = compare_all_pairs(g, prices, usd, cfg, lg_core, n_jobs)
        if on_records is not None:
            on_records(usd, records)
        out.append(summarize(records, threshold, usd))
    return out


def parse_usd_grid(spec: str) -> List[float]:
    """``"lo:hi:step"`` (inclusive) or a comma list such as ``"10,100,1000"``."""
    if ":" in spec:
        try:
            lo, hi, step = (float(p) for p in spec.split(":"))
        except ValueError:
            raise ValueError(f"bad usd grid {spec!r}; expected lo:hi:step") from None
        if step <= 0 or hi < lo or lo <= 0:
            raise ValueError(f"bad usd grid {spec!r}; need 0 < lo <= hi and step > 0")
        n = int(math.floor((hi - lo) / step + 1e-9)) + 1
        return [lo + i * step for i in range(n)]
    try:
        values = [float(p) for p in spec.split(",") if p.strip()]
    except ValueError:
        raise ValueError(f"bad usd list {spec!r}") from None
    if not values or any(v <= 0 for v in values):
        raise ValueError(f"bad usd list {spec!r}")
    return values


# --- serialisation -------------------------------------------------------

def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def _num(text, cast=float):
    if text == "" or text is None:
        return None
    return cast(text)


def write_pairs_csv(records: Iterable[ComparisonRecord], path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(PAIRS_COLUMNS)
        for r in records:
            w.writerow([_cell(getattr(r, c)) for c in PAIRS_COLUMNS])


def read_pairs_csv(path) -> List[ComparisonRecord]:
    out = []
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(ComparisonRecord(
                source=row["source"],
                target=row["target"],
                usd_in=float(row["usd_in"]),
                lg_out=_num(row["lg_out"]),
                dfs_out=_num(row["dfs_out"]),
                ratio=_num(row["ratio"]),
                lg_path_len=_num(row["lg_path_len"], int),
                dfs_path_len=_num(row["dfs_path_len"], int),
                lg_time_us=_num(row["lg_time_us"]),
                dfs_time_us=_num(row["dfs_time_us"]),
                status=row["status"],
            ))
    return out


def _json_safe(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def write_pairs_json(records: Iterable[ComparisonRecord], path) -> None:
    rows = [{k: _json_safe(v) for k, v in asdict(r).items()} for r in records]
    Path(path).write_text(json.dumps(rows, indent=1))


def read_pairs_json(path) -> List[ComparisonRecord]:
    rows = json.loads(Path(path).read_text())
    names = {f.name for f in fields(ComparisonRecord)}
    out = []
    for row in rows:
        if isinstance(row.get("ratio"), str):
            row["ratio"] = float(row["ratio"])
        out.append(ComparisonRecord(**{k: v for k, v in row.items() if k in names}))
    return out


def write_summary_csv(summaries: Iterable[SweepSummary], path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_COLUMNS)
        for s in summaries:
            w.writerow([_cell(s.usd_in), s.pair_count, _cell(s.prop_over_threshold),
                        _cell(s.mean_ratio), _cell(s.median_ratio)])


def write_histogram_csv(summaries: Iterable[SweepSummary], path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(HIST_COLUMNS)
        for s in summaries:
            for diff, count in s.path_len_diff_histogram.items():
                w.writerow([_cell(s.usd_in), diff, count])


def summaries_to_json(summaries: Iterable[SweepSummary]) -> list:
    out = []
    for s in summaries:
        d = {k: _json_safe(v) for k, v in asdict(s).items()}
        d["path_len_diff_histogram"] = {str(k): v for k, v in s.path_len_diff_histogram.items()}
        out.append(d)
    return out


def histogram_to_json(summaries: Iterable[SweepSummary]) -> list:
    return [
        {"usd_in": s.usd_in, "len_diff": diff, "count": count}
        for s in summaries
        for diff, count in s.path_len_diff_histogram.items()
    ]
