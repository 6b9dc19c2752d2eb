"""Optional compiled label sweep for real (float) mode.

Mirrors the pure-Python loop in :mod:`dexroute.lg_router` operation for
operation, so both produce bit-identical tables. Used only when numba is
importable.
"""
from __future__ import annotations

import numpy as np

try:  # pragma: no cover - exercised only when numba is installed
    import numba
except ImportError:  # pragma: no cover
    numba = None

_compiled = None


def available() -> bool:
    return numba is not None


def _sweep_impl(indptr, indices, rin, rout, src_links, n_pools, eps, keep, tol, max_rounds):
    n = rin.shape[0]
    words = (n_pools + 63) // 64
    amount = np.zeros(n)
    node = np.full(n, -1, np.int64)
    hops = np.zeros(n, np.int64)
    mask = np.zeros((n, words), np.uint64)
    dirty = np.zeros(n, np.bool_)

    cap = 1024
    ne = np.empty(cap, np.int64)
    nri = np.empty(cap)
    nro = np.empty(cap)
    nout = np.empty(cap)
    npar = np.empty(cap, np.int64)
    used = 0

    src_dirty = True
    rounds = 0
    relaxations = 0
    updating = True
    one = np.uint64(1)

    while updating and rounds < max_rounds:
        rounds += 1
        updating = False
        for a in range(n + 1):
            if a < n:
                if not dirty[a]:
                    continue
                dirty[a] = False
                x_in = amount[a]
                a_node = node[a]
                a_hops = hops[a] + 1
                lo, hi = indptr[a], indptr[a + 1]
            else:
                if not src_dirty:
                    continue
                src_dirty = False
                x_in = eps
                a_node = -1
                a_hops = 1
                lo, hi = 0, src_links.shape[0]
            fx = keep * x_in
            for j in range(lo, hi):
                b = indices[j] if a < n else src_links[j]
                p = b >> 1
                w, bit = p >> 6, one << np.uint64(p & 63)
                if a < n and mask[a, w] & bit:
                    k = a_node
                    while ne[k] >> 1 != p:
                        k = npar[k]
                    if ne[k] == b:
                        x, y = nri[k], nro[k]
                    else:
                        x, y = nro[k], nri[k]
                else:
                    x, y = rin[b], rout[b]
                out = y * fx / (x + fx)
                if out >= y:
                    out = np.nextafter(y, 0.0)
                relaxations += 1
                cur = amount[b]
                if cur != 0.0:
                    better = out > cur + tol * cur
                else:
                    better = out > 0.0
                if better:
                    if used == cap:
                        cap *= 2
                        ne2 = np.empty(cap, np.int64)
                        nri2 = np.empty(cap)
                        nro2 = np.empty(cap)
                        nout2 = np.empty(cap)
                        npar2 = np.empty(cap, np.int64)
                        ne2[:used] = ne[:used]
                        nri2[:used] = nri[:used]
                        nro2[:used] = nro[:used]
                        nout2[:used] = nout[:used]
                        npar2[:used] = npar[:used]
                        ne, nri, nro, nout, npar = ne2, nri2, nro2, nout2, npar2
                    ne[used] = b
                    nri[used] = x + x_in
                    nro[used] = y - out
                    nout[used] = out
                    npar[used] = a_node
                    amount[b] = out
                    node[b] = used
                    used += 1
                    hops[b] = a_hops
                    if a < n:
                        for q in range(words):
                            mask[b, q] = mask[a, q]
                    else:
                        for q in range(words):
                            mask[b, q] = 0
                    mask[b, w] |= bit
                    dirty[b] = True
                    updating = True
    return (amount, node, hops, ne[:used], nri[:used], nro[:used], nout[:used], npar[:used],
            rounds, not updating, relaxations)


_warm = False


def warm() -> None:
    """Compile (or load from cache) before anything is timed."""
    global _warm
    if _warm or numba is None:
        return
    indptr = np.array([0, 1, 2], np.int64)
    indices = np.array([1, 0], np.int64)
    ones = np.ones(2)
    _get()(indptr, indices, ones, ones, np.array([0], np.int64), 1, 1.0, 0.997, 1e-12, 5)
    _warm = True


def _get():
    global _compiled
    if _compiled is None:
        _compiled = numba.njit(cache=True, nogil=True)(_sweep_impl)
    return _compiled


def sweep(lg, eps: float, keep: float, tol: float, max_rounds: int):
    """Run the compiled sweep; returns the label table in tuple-chain form.

    Output is ``(amount, nodes, hops, rounds, converged, relaxations)`` where
    ``nodes[v]`` is ``None`` or a ``(edge, r_in_after, r_out_after, out,
    parent)`` chain, the same shape the Python loop builds.
    """
    g = lg.graph
    cached = getattr(g, "_csr_cache", None)
    if cached is None or cached[0] is not lg.succ:
        lengths = np.fromiter((len(s) for s in lg.succ), np.int64, g.n_edges)
        indptr = np.zeros(g.n_edges + 1, np.int64)
        np.cumsum(lengths, out=indptr[1:])
        indices = np.fromiter((b for s in lg.succ for b in s), np.int64, int(indptr[-1]))
        res = np.asarray(g.edge_reserves, dtype=float).reshape(g.n_edges, 2)
        cached = (lg.succ, indptr, indices, np.ascontiguousarray(res[:, 0]), np.ascontiguousarray(res[:, 1]))
        g._csr_cache = cached  # views from one core share succ, so one entry per graph
    _, indptr, indices, rin, rout = cached
    src = np.asarray(lg.source_links(), dtype=np.int64)
    (amount, node, hops, ne, nri, nro, nout, npar,
     rounds, converged, relaxations) = _get()(
        indptr, indices, rin, rout, src, g.n_pools, float(eps), float(keep), float(tol), int(max_rounds))

    ne, nri, nro, nout, npar = ne.tolist(), nri.tolist(), nro.tolist(), nout.tolist(), npar.tolist()
    built = {}

    def chain(k):
        todo = []
        while k >= 0 and k not in built:
            todo.append(k)
            k = npar[k]
        parent = built.get(k) if k >= 0 else None
        for j in reversed(todo):
            parent = built[j] = (ne[j], nri[j], nro[j], nout[j], parent)
        return parent

    nodes = [chain(k) if k >= 0 else None for k in node.tolist()]
    return amount.tolist(), nodes, hops.tolist(), int(rounds), bool(converged), int(relaxations)
