"""Exact k-nearest-neighbour search with deterministic tie-breaking.

A k-d tree proposes candidates; the final ranking always uses squared
Euclidean distances computed here, ordered by (distance, row index). Rows
whose k-th and (k+1)-th candidates are within float noise of each other are
re-queried with a radius search so that no tied point can be missed.
"""
from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

_REL = 1e-9
_ABS = 1e-12


def _sqdist(points: np.ndarray, q: np.ndarray) -> np.ndarray:
    diff = points - q
    return np.einsum("ij,ij->i", diff, diff)


def kneighbors(train, queries, k: int, exclude=None):
    """Return ``(sq_dist, index)`` arrays of shape (n_queries, k).

    Neighbours are sorted by squared distance, ties by lower training index.
    ``exclude`` optionally gives, per query, one training index that must not
    be returned (the query's own row).
    """
    train = np.ascontiguousarray(train, dtype=np.float64)
    queries = np.ascontiguousarray(queries, dtype=np.float64)
    n, nq = train.shape[0], queries.shape[0]
    avail = n - (exclude is not None)
    if not 1 <= k <= avail:
        raise ValueError(f"k={k} but only {avail} candidate rows")
    out_d = np.empty((nq, k))
    out_i = np.empty((nq, k), dtype=np.intp)
    if nq == 0:
        return out_d, out_i

    tree = cKDTree(train)
    extra = 1 + (exclude is not None)
    kk = min(k + extra, n)
    d, idx = tree.query(queries, k=kk)
    d = d.reshape(nq, kk)
    idx = idx.reshape(nq, kk)
    ex = None
    if exclude is not None:
        ex = np.asarray(exclude, dtype=np.intp)
        # move the excluded row to the end, keeping the rest in order
        order = np.argsort(idx == ex[:, None], axis=1, kind="stable")
        d = np.take_along_axis(d, order, axis=1)
        idx = np.take_along_axis(idx, order, axis=1)

    kd = d[:, k - 1]
    if k == avail:
        clear = np.ones(nq, dtype=bool)
    else:
        # at least k + 1 usable candidates were returned; the set is settled
        # when the next one is clearly farther than the k-th
        clear = d[:, k] > kd * (1 + _REL) + _ABS

    rows = np.flatnonzero(clear)
    if rows.size:
        cand = idx[rows, :k]
        diff = train[cand] - queries[rows, None, :]
        sq = np.einsum("ijk,ijk->ij", diff, diff)
        order = _rowwise_order(sq, cand)
        out_d[rows] = np.take_along_axis(sq, order, axis=1)
        out_i[rows] = np.take_along_axis(cand, order, axis=1)

    amb = np.flatnonzero(~clear)
    if amb.size:
        radii = kd[amb] * (1 + _REL) + _ABS
        balls = tree.query_ball_point(queries[amb], radii)
        for row, ball in zip(amb, balls):
            cand = np.asarray(ball, dtype=np.intp)
            if ex is not None:
                cand = cand[cand != ex[row]]
            sq = _sqdist(train[cand], queries[row])
            order = np.lexsort((cand, sq))[:k]
            out_d[row] = sq[order]
            out_i[row] = cand[order]
    return out_d, out_i


def _rowwise_order(sq: np.ndarray, cand: np.ndarray) -> np.ndarray:
    # sort each row by (sq, cand): sort by index first, then stable sort by distance
    o1 = np.argsort(cand, axis=1, kind="stable")
    sq1 = np.take_along_axis(sq, o1, axis=1)
    o2 = np.argsort(sq1, axis=1, kind="stable")
    return np.take_along_axis(o1, o2, axis=1)
