"""Hand-built fixtures and seeded synthetic snapshots for tests and benchmarks."""
from __future__ import annotations

import datetime as dt
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .snapshot import PoolRecord

CREATED = dt.date(2021, 1, 1)
LAST_TRADE = dt.date(2023, 11, 30)

DIAMOND_POOLS = [("v1", "v2"), ("v1", "v3"), ("v2", "v3"), ("v2", "v4"), ("v3", "v4")]


def records_from_pairs(pairs: Sequence[Tuple[str, str]], reserves: Optional[Sequence[Tuple[float, float]]] = None,
                       prefix: str = "p") -> List[PoolRecord]:
    reserves = reserves or [(1000.0, 1000.0)] * len(pairs)
    return [
        PoolRecord(f"{prefix}{i}", a, b, float(ra), float(rb), 1e6, CREATED, LAST_TRADE)
        for i, ((a, b), (ra, rb)) in enumerate(zip(pairs, reserves), start=1)
    ]


def path_records() -> List[PoolRecord]:
    """A - B - C, both pools at (1000, 1000)."""
    return records_from_pairs([("A", "B"), ("B", "C")])


def triangle_records(reserves=None) -> List[PoolRecord]:
    return records_from_pairs([("A", "B"), ("B", "C"), ("A", "C")], reserves)


def diamond_records(reserves=None) -> List[PoolRecord]:
    """Four tokens, five pools; by default every pool is (1000, 1000) except
    ``{v1, v2}`` which holds (1000, 2000)."""
    if reserves is None:
        reserves = [(1000.0, 2000.0)] + [(1000.0, 1000.0)] * 4
    return records_from_pairs(DIAMOND_POOLS, reserves)


def random_pairs(rng: np.random.Generator, n_tokens: int, n_pools: int, connected: bool = True) -> List[Tuple[str, str]]:
    """Distinct unordered token pairs; a random spanning tree first when ``connected``."""
    max_pools = n_tokens * (n_tokens - 1) // 2
    if n_pools > max_pools:
        raise ValueError(f"{n_tokens} tokens admit at most {max_pools} pools")
    names = [f"T{i}" for i in range(n_tokens)]
    chosen = []
    seen = set()
    if connected:
        order = rng.permutation(n_tokens)
        for k in range(1, min(n_tokens, n_pools + 1)):
            i, j = int(order[k]), int(order[rng.integers(k)])
            seen.add(frozenset((i, j)))
            chosen.append((i, j))
    while len(chosen) < n_pools:
        i, j = (int(v) for v in rng.choice(n_tokens, size=2, replace=False))
        if frozenset((i, j)) in seen:
            continue
        seen.add(frozenset((i, j)))
        chosen.append((i, j))
    return [(names[i], names[j]) for i, j in chosen]


def random_small_graph(rng: np.random.Generator, n_tokens: int, n_pools: int,
                       reserve_range=(100.0, 10_000.0), connected: bool = True) -> List[PoolRecord]:
    """Pools with reserves drawn log-uniformly and independently per side.

    Independent sides mean price-inconsistent pools, so arbitrage cycles are
    common; these graphs stress ledger handling rather than mimic markets.
    """
    pairs = random_pairs(rng, n_tokens, n_pools, connected)
    lo, hi = math.log(reserve_range[0]), math.log(reserve_range[1])
    reserves = [tuple(np.exp(rng.uniform(lo, hi, size=2))) for _ in pairs]
    return records_from_pairs(pairs, reserves)


def synthetic_snapshot(n_tokens: int = 100, n_pools: int = 200, seed: int = 0,
                       mispricing: float = 0.002) -> Tuple[List[PoolRecord], Dict[str, float]]:
    """Hub-heavy snapshot resembling a filtered DEX graph, plus USD prices.

    Topology is preferential attachment (each new token joins two existing
    ones, weighted by degree) so a few hub tokens carry most pools and every
    token has degree >= 2. Pool TVL is log-normal and reserves match the
    token prices up to log-normal noise of scale ``mispricing``. The
    default sits below the 0.3% fee, so only a few cycles are profitable.
    """
    if n_tokens < 3 or n_pools < 2 * n_tokens - 3:
        raise ValueError("need n_tokens >= 3 and n_pools >= 2 * n_tokens - 3")
    rng = np.random.default_rng(seed)
    names = [f"TK{i:03d}" for i in range(n_tokens)]
    prices = {t: float(np.exp(rng.normal(0.0, 2.5))) for t in names}
    edges = [(0, 1), (1, 2), (0, 2)]
    seen = {frozenset(e) for e in edges}
    degree = np.zeros(n_tokens)
    degree[:3] = 2
    for new in range(3, n_tokens):
        w = degree[:new] ** 1.5
        picks = rng.choice(new, size=2, replace=False, p=w / w.sum())
        for old in picks:
            edges.append((int(old), new))
            seen.add(frozenset((int(old), new)))
            degree[old] += 1
            degree[new] += 1
    while len(edges) < n_pools:
        w = degree ** 1.5
        i, j = (int(v) for v in rng.choice(n_tokens, size=2, replace=False, p=w / w.sum()))
        if frozenset((i, j)) in seen:
            continue
        seen.add(frozenset((i, j)))
        edges.append((i, j))
        degree[i] += 1
        degree[j] += 1

    records = []
    for k, (i, j) in enumerate(edges[:n_pools]):
        a, b = names[i], names[j]
        tvl = float(np.clip(np.exp(rng.normal(math.log(2e6), 1.5)), 2e4, 5e8))
        noise = rng.normal(0.0, mispricing, size=2)
        ra = tvl / 2 / prices[a] * math.exp(noise[0])
        rb = tvl / 2 / prices[b] * math.exp(noise[1])
        records.append(PoolRecord(f"pool{k:04d}", a, b, ra, rb, tvl, CREATED, LAST_TRADE))
    return records, prices


def consistent_small_graph(rng: np.random.Generator, n_tokens: int, n_pools: int,
                           mispricing: float = 0.001, depth_usd=(1e3, 1e6)) -> Tuple[List[PoolRecord], Dict[str, float]]:
    """Small connected graph whose pools agree with a random price vector.

    Each side's reserve is perturbed by a factor in ``exp(+-mispricing)``;
    kept below the fee, no cycle is profitable, as in an arbitraged market.
    Pool depth is log-uniform over ``depth_usd``.
    """
    pairs = random_pairs(rng, n_tokens, n_pools)
    prices = {f"T{i}": float(np.exp(rng.normal(0.0, 1.5))) for i in range(n_tokens)}
    lo, hi = math.log(depth_usd[0]), math.log(depth_usd[1])
    reserves = []
    for a, b in pairs:
        usd = math.exp(rng.uniform(lo, hi))
        ja, jb = rng.uniform(-mispricing, mispricing, size=2)
        reserves.append((usd / prices[a] * math.exp(ja), usd / prices[b] * math.exp(jb)))
    return records_from_pairs(pairs, reserves), prices


def arbitrage_triangle(rate_product: float = 1.2, depth: float = 1000.0) -> List[PoolRecord]:
    """Three pools A-B, B-C, C-A whose fee-free cyclic rate A->B->C->A is ``rate_product``."""
    return records_from_pairs(
        [("A", "B"), ("B", "C"), ("C", "A")],
        [(depth, depth * rate_product), (depth, depth), (depth, depth)],
    )
