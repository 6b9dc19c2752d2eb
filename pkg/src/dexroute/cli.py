"""Command-line entry point: ``dexroute <command> [options]``."""
from __future__ import annotations

import argparse
import datetime as dt
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import bench
from .amm import FeeRate
from .dfs_router import DfsConfig, dfs_route
from .exceptions import DexRouteError
from .graph import build_graph
from .lg_router import LgConfig, route
from .linegraph import LineGraph
from .oracle import OracleConfig, best_route_exhaustive, compare_with_oracle
from .snapshot import FilterConfig, filter_pools, load_prices, load_snapshot, usd_to_token_amount, write_prices, write_snapshot
from .synthetic import consistent_small_graph, synthetic_snapshot

log = logging.getLogger("dexroute")


def _add_snapshot(p, required=True):
    p.add_argument("--snapshot", required=required, help="pool snapshot (.csv or .jsonl)")


def _add_pricing(p):
    p.add_argument("--fee", type=float, default=0.003, help="pool fee rate (default 0.003)")
    p.add_argument("--mode", choices=["real", "exact"], default="real")


def _add_routing(p):
    p.add_argument("--dfs-order", choices=["snapshot", "lexicographic", "shuffle"], default="snapshot")
    p.add_argument("--seed", type=int, default=None, help="seed for --dfs-order shuffle")
    p.add_argument("--max-hops", type=int, default=None, help="DFS hop limit (default unlimited)")
    p.add_argument("--max-rounds", type=int, default=None, help="line-graph sweep cap (default 10*|V|)")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dexroute", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="filter a snapshot and write the surviving pools")
    _add_snapshot(p)
    p.add_argument("--as-of", type=dt.date.fromisoformat, default=None, help="activity date (ISO)")
    p.add_argument("--min-tvl", type=float, default=10_000.0)
    p.add_argument("--max-tokens", type=int, default=100)
    p.add_argument("--min-degree", type=int, default=2)
    p.add_argument("--out", required=True, help="output snapshot file")
    p.add_argument("--format", choices=["csv", "json"], default=None)

    p = sub.add_parser("graph-info", help="token/pool counts and degree histogram as JSON")
    _add_snapshot(p)
    p.add_argument("--source", default=None, help="also report line-graph counts with this source")
    p.add_argument("--out", default=None)

    p = sub.add_parser("route", help="route one pair and print the hop-by-hop ledger")
    _add_snapshot(p)
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    amt = p.add_mutually_exclusive_group(required=True)
    amt.add_argument("--amount", type=float, help="input in source-token units")
    amt.add_argument("--usd", type=float, help="input in USD (needs --prices)")
    p.add_argument("--prices", default=None)
    p.add_argument("--router", choices=["lg", "dfs", "both", "oracle"], default="both")
    p.add_argument("--format", choices=["text", "json"], default="text")
    _add_pricing(p)
    _add_routing(p)

    for name, helptext in (("compare", "all ordered pairs at one USD amount"),
                           ("sweep", "all ordered pairs over a grid of USD amounts")):
        p = sub.add_parser(name, help=helptext)
        _add_snapshot(p)
        p.add_argument("--prices", required=True)
        if name == "compare":
            p.add_argument("--usd", type=float, required=True)
        else:
            p.add_argument("--usd-grid", required=True, help="lo:hi:step or a comma list")
        p.add_argument("--threshold", type=float, default=bench.DEFAULT_THRESHOLD)
        p.add_argument("--jobs", type=int, default=1, help="worker processes (0 = all cores)")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--format", choices=["csv", "json"], default="csv")
        _add_pricing(p)
        _add_routing(p)

    p = sub.add_parser("oracle-check", help="line-graph router vs exhaustive search on small graphs")
    _add_snapshot(p, required=False)
    p.add_argument("--prices", default=None)
    p.add_argument("--usd", type=float, action="append", default=None,
                   help="USD input per source (repeatable; needs --prices)")
    p.add_argument("--amount", type=float, action="append", default=None,
                   help="input in source-token units (repeatable)")
    p.add_argument("--fixtures", type=int, default=20, help="generated graphs when no --snapshot")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-path-len", type=int, default=6)
    p.add_argument("--allow-revisit", action="store_true")
    p.add_argument("--min-match", type=float, default=0.95)
    p.add_argument("--fee", type=float, default=0.003)
    p.add_argument("--out", default=None, help="write every case as JSON lines")

    p = sub.add_parser("synth", help="write a seeded synthetic snapshot and price table")
    p.add_argument("--tokens", type=int, default=100)
    p.add_argument("--pools", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mispricing", type=float, default=0.002)
    p.add_argument("--out", required=True, help="output directory")
    return ap


def _dfs_cfg(args) -> DfsConfig:
    return DfsConfig(args.dfs_order, args.seed if args.dfs_order == "shuffle" else None, args.max_hops)


def _fee(args):
    return FeeRate(args.fee)


def _emit_json(obj, out):
    text = json.dumps(obj, indent=2)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def cmd_ingest(args):
    records = load_snapshot(args.snapshot)
    kept = filter_pools(records, FilterConfig(args.as_of, args.min_tvl, args.max_tokens, args.min_degree))
    fmt = {"json": "json-lines", "csv": "csv"}.get(args.format)
    write_snapshot(kept, args.out, fmt)
    tokens = {t for r in kept for t in r.tokens}
    log.info("kept %d of %d pools, %d tokens", len(kept), len(records), len(tokens))
    print(f"{len(kept)} pools, {len(tokens)} tokens -> {args.out}")


def cmd_graph_info(args):
    g = build_graph(load_snapshot(args.snapshot))
    info = g.summary()
    core = LineGraph.core(g)
    info["line_graph"] = (core.with_source(args.source) if args.source else core).summary()
    _emit_json(info, args.out)


def cmd_route(args):
    g = build_graph(load_snapshot(args.snapshot))
    if args.usd is not None:
        if not args.prices:
            raise ValueError("--usd needs --prices")
        amount = usd_to_token_amount(args.source, args.usd, load_prices(args.prices))
    else:
        amount = args.amount
    if args.mode == "exact":
        amount = int(amount)
    results = []
    if args.router in ("lg", "both"):
        cfg = LgConfig(amount, args.max_rounds, fee=_fee(args), mode=args.mode)
        results.append(route(LineGraph.core(g), args.source, args.target, cfg))
    if args.router in ("dfs", "both"):
        results.append(dfs_route(g, args.source, args.target, amount, _dfs_cfg(args), _fee(args), args.mode))
    if args.router == "oracle":
        results.append(best_route_exhaustive(g, args.source, args.target, amount, fee=_fee(args), mode=args.mode))
    if args.format == "json":
        _emit_json([r.to_dict() for r in results], None)
    else:
        print("\n".join(r.format() for r in results))


def _bench_cfg(args) -> bench.BenchConfig:
    return bench.BenchConfig(fee=_fee(args), mode=args.mode, max_rounds=args.max_rounds, dfs=_dfs_cfg(args))


def _usd_tag(usd: float) -> str:
    return f"{usd:g}".replace(".", "p")


def _write_records(out_dir: Path, fmt: str, usd: float, records, name=None):
    name = name or f"pairs_usd{_usd_tag(usd)}"
    if fmt == "json":
        bench.write_pairs_json(records, out_dir / f"{name}.json")
    else:
        bench.write_pairs_csv(records, out_dir / f"{name}.csv")


def _write_summaries(out_dir: Path, fmt: str, summaries):
    if fmt == "json":
        (out_dir / "summary.json").write_text(json.dumps(bench.summaries_to_json(summaries), indent=1))
        (out_dir / "pathlen_diff.json").write_text(json.dumps(bench.histogram_to_json(summaries), indent=1))
    else:
        bench.write_summary_csv(summaries, out_dir / "summary.csv")
        bench.write_histogram_csv(summaries, out_dir / "pathlen_diff.csv")


def _print_summary(s: bench.SweepSummary):
    prop = "n/a" if s.prop_over_threshold is None else f"{s.prop_over_threshold:.3f}"
    mean = "n/a" if s.mean_ratio is None else f"{s.mean_ratio:.4g}"
    med = "n/a" if s.median_ratio is None else f"{s.median_ratio:.4g}"
    print(f"usd={s.usd_in:g} pairs={s.pair_count} prop>{s.threshold:g}={prop} mean={mean} median={med} "
          f"dfs_missing={s.dfs_missing} no_route={s.no_route} violations={s.dominance_violations}")


def _build_timed(args, out_dir: Path):
    """Graph and line-graph construction, timed once and kept out of per-pair timings."""
    records = load_snapshot(args.snapshot)
    start = time.perf_counter()
    g = build_graph(records)
    mid = time.perf_counter()
    core = LineGraph.core(g)
    end = time.perf_counter()
    timing = {"graph_build_us": (mid - start) * 1e6, "line_graph_build_us": (end - mid) * 1e6,
              "tokens": g.n_tokens, "pools": g.n_pools}
    (out_dir / "timing.json").write_text(json.dumps(timing, indent=1) + "\n")
    print(f"graph build {timing['graph_build_us']:.0f} us, line graph {timing['line_graph_build_us']:.0f} us")
    return g, core


def cmd_compare(args):
    prices = load_prices(args.prices)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    g, core = _build_timed(args, out_dir)
    records = bench.compare_all_pairs(g, prices, args.usd, _bench_cfg(args), core, n_jobs=args.jobs)
    _write_records(out_dir, args.format, args.usd, records, name="pairs")
    summary = bench.summarize(records, args.threshold, args.usd)
    _write_summaries(out_dir, args.format, [summary])
    _print_summary(summary)


def cmd_sweep(args):
    prices = load_prices(args.prices)
    grid = bench.parse_usd_grid(args.usd_grid)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    g, core = _build_timed(args, out_dir)
    done = []

    def sink(usd, records):
        _write_records(out_dir, args.format, usd, records)
        done.append(bench.summarize(records, args.threshold, usd))
        _print_summary(done[-1])

    try:
        bench.sweep_usd(g, prices, grid, _bench_cfg(args), args.threshold, args.jobs, on_records=sink, lg_core=core)
    finally:
        # partial sweeps still leave a consistent summary behind
        _write_summaries(out_dir, args.format, done)


def cmd_oracle_check(args):
    fee = FeeRate(args.fee)
    cfg = OracleConfig(args.max_path_len, args.allow_revisit)
    graphs = []
    if args.snapshot:
        prices = load_prices(args.prices) if args.prices else None
        graphs.append((build_graph(load_snapshot(args.snapshot)), prices))
    else:
        rng = np.random.default_rng(args.seed)
        for _ in range(args.fixtures):
            n_tokens = int(rng.integers(3, 6))
            n_pools = int(rng.integers(n_tokens - 1, min(6, n_tokens * (n_tokens - 1) // 2) + 1))
            recs, prices = consistent_small_graph(rng, n_tokens, n_pools)
            graphs.append((build_graph(recs), prices))

    def amounts_for(prices):
        def amounts(token):
            out = list(args.amount or [])
            if args.usd:
                if prices is None:
                    raise ValueError("--usd needs --prices")
                out += [usd_to_token_amount(token, u, prices) for u in args.usd]
            if not out:
                out = [usd_to_token_amount(token, u, prices) for u in (10.0, 1e3, 1e5)] if prices else [1.0]
            return out
        return amounts

    cases = []
    for g, prices in graphs:
        cases += compare_with_oracle(g, amounts_for(prices), cfg, fee)
    matched = sum(c["match"] for c in cases)
    rate = matched / len(cases) if cases else 1.0
    if args.out:
        with open(args.out, "w") as fh:
            for c in cases:
                fh.write(json.dumps(c) + "\n")
    for c in cases:
        if not c["match"]:
            print(f"divergence {c['source']}->{c['target']} in={c['amount_in']!r}: "
                  f"lg={c['lg_out']!r} oracle={c['oracle_out']!r}")
    print(f"{matched}/{len(cases)} cases match ({rate:.1%}) over {len(graphs)} graph(s)")
    return 0 if rate >= args.min_match else 1


def cmd_synth(args):
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    records, prices = synthetic_snapshot(args.tokens, args.pools, args.seed, args.mispricing)
    write_snapshot(records, out_dir / "snapshot.csv")
    write_prices(prices, out_dir / "prices.csv")
    print(f"{len(records)} pools, {len(prices)} tokens -> {out_dir}")


COMMANDS = {
    "ingest": cmd_ingest,
    "graph-info": cmd_graph_info,
    "route": cmd_route,
    "compare": cmd_compare,
    "sweep": cmd_sweep,
    "oracle-check": cmd_oracle_check,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args) or 0
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        return 130
    except (DexRouteError, ValueError, KeyError, OSError) as exc:
        print(f"dexroute {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
