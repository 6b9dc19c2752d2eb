import math

import pytest

from dexroute import build_graph
from dexroute import bench
from dexroute.bench import ComparisonRecord, compare_all_pairs, parse_usd_grid, summarize, sweep_usd
from dexroute.synthetic import diamond_records, synthetic_snapshot

DIAMOND_PRICES = {"v1": 1.0, "v2": 0.5, "v3": 1.0, "v4": 1.0}


def rec(ratio, lg_len=2, dfs_len=2, status="ok"):
    lg = None if ratio is None else 1 + (0 if math.isinf(ratio) else ratio)
    return ComparisonRecord("A", "B", 10.0, lg, 1.0, ratio, lg_len, dfs_len, status=status)


def test_summarize_hand_example():
    recs = [rec(0.0), rec(0.5, 2, 3), rec(0.5, 1, 3), rec(2.0, 3, 3),
            rec(math.inf, status="dfs_no_route"), ComparisonRecord("A", "C", 10.0, status="no_route")]
    s = summarize(recs)
    assert s.pair_count == 4
    assert s.prop_over_threshold == 0.75
    assert s.mean_ratio == 1.0 and s.median_ratio == 0.5
    assert s.path_len_diff_histogram == {0: 1, 1: 1, 2: 1}
    assert (s.dfs_missing, s.no_route, s.total_records) == (1, 1, 6)


def test_summarize_threshold_strict_and_empty():
    assert summarize([rec(0.001)]).prop_over_threshold == 0.0
    s = summarize([])
    assert s.pair_count == 0 and s.prop_over_threshold is None and s.mean_ratio is None


def test_diamond_twelve_rows_against_manual_tally():
    g = build_graph(diamond_records())
    records = compare_all_pairs(g, DIAMOND_PRICES, 10.0)
    assert len(records) == 12
    assert [(r.source, r.target) for r in records] == sorted((s, t) for s in g.tokens for t in g.tokens if s != t)
    over, ratios, diffs = 0, [], {}
    for r in records:
        assert r.status == "ok"
        ratio = (r.lg_out - r.dfs_out) / r.dfs_out
        assert r.ratio == ratio and ratio >= -1e-9
        if ratio > 0.001:
            over += 1
            ratios.append(ratio)
            d = r.dfs_path_len - r.lg_path_len
            diffs[d] = diffs.get(d, 0) + 1
    s = summarize(records)
    assert s.pair_count == 12
    assert s.prop_over_threshold == over / 12
    assert s.mean_ratio == pytest.approx(sum(ratios) / len(ratios), rel=1e-15)
    srt, k = sorted(ratios), len(ratios) // 2
    assert s.median_ratio == (srt[k] if len(srt) % 2 else (srt[k - 1] + srt[k]) / 2)
    assert s.path_len_diff_histogram == dict(sorted(diffs.items()))
    assert s.dominance_violations == 0


def test_missing_price_rows():
    g = build_graph(diamond_records())
    prices = dict(DIAMOND_PRICES)
    del prices["v3"]
    records = compare_all_pairs(g, prices, 10.0)
    assert len(records) == 12
    assert sum(r.status == "missing_price" for r in records) == 3
    assert summarize(records).failures == 3


def test_csv_and_json_round_trip(tmp_path):
    g = build_graph(diamond_records())
    records = compare_all_pairs(g, DIAMOND_PRICES, 100.0)
    records.append(ComparisonRecord("x", "y", 100.0, 1.0, None, math.inf, 1, None, 1.0, 1.0, "dfs_no_route"))
    bench.write_pairs_csv(records, tmp_path / "p.csv")
    assert bench.read_pairs_csv(tmp_path / "p.csv") == records
    bench.write_pairs_json(records, tmp_path / "p.json")
    assert bench.read_pairs_json(tmp_path / "p.json") == records
    header = (tmp_path / "p.csv").read_text().splitlines()[0]
    assert header == "source,target,usd_in,lg_out,dfs_out,ratio,lg_path_len,dfs_path_len,lg_time_us,dfs_time_us,status"


def test_summary_and_histogram_csv(tmp_path):
    s = [summarize([rec(0.5, 1, 3)], usd_in=10.0), summarize([], usd_in=100.0)]
    bench.write_summary_csv(s, tmp_path / "s.csv")
    bench.write_histogram_csv(s, tmp_path / "h.csv")
    assert (tmp_path / "s.csv").read_text().splitlines() == [
        "usd_in,pairs,prop_over_threshold,mean_ratio,median_ratio", "10.0,1,1.0,0.5,0.5", "100.0,0,,,"]
    assert (tmp_path / "h.csv").read_text().splitlines() == ["usd_in,len_diff,count", "10.0,2,1"]


def test_parse_usd_grid():
    assert parse_usd_grid("10:40:10") == [10.0, 20.0, 30.0, 40.0]
    assert parse_usd_grid("10,100") == [10.0, 100.0]
    for bad in ("0:10:1", "10:1:1", "a,b", ""):
        with pytest.raises(ValueError):
            parse_usd_grid(bad)


def test_sweep_small_synthetic():
    records, prices = synthetic_snapshot(12, 24, seed=3)
    g = build_graph(records)
    seen = []
    out = sweep_usd(g, prices, [10.0, 1000.0], on_records=lambda usd, r: seen.append((usd, len(r))))
    assert [s.usd_in for s in out] == [10.0, 1000.0]
    assert seen == [(10.0, 132), (1000.0, 132)]
    assert all(s.dominance_violations == 0 for s in out)


def test_parallel_matches_serial():
    records, prices = synthetic_snapshot(10, 20, seed=4)
    g = build_graph(records)
    a = compare_all_pairs(g, prices, 100.0)
    b = compare_all_pairs(g, prices, 100.0, n_jobs=2)
    strip = lambda rs: [(r.source, r.target, r.lg_out, r.dfs_out, r.ratio, r.status) for r in rs]
    assert strip(a) == strip(b)


def test_unreachable_pairs_and_empty_sweep():
    g = build_graph([("p1", "A", "B", 1000.0, 1000.0), ("p2", "C", "D", 1000.0, 1000.0)])
    prices = {t: 1.0 for t in "ABCD"}
    records = compare_all_pairs(g, prices, 10.0)
    assert len(records) == 12
    assert sum(r.status == "no_route" for r in records) == 8
    assert all(r.ratio is None for r in records if r.status == "no_route")
    assert sweep_usd(g, prices, []) == []
    one = sweep_usd(g, prices, [10.0])[0]
    assert one == summarize(records, usd_in=10.0)
