"""Signed boundary operators and incidence between chain spaces."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .model import CellTable
from .sparse import SignedSparseMatrix, from_triplets, multiply, transpose


class OperatorError(ValueError):
    pass


def boundary_1(edges, nverts: int) -> SignedSparseMatrix:
    """Vertices-by-edges operator: -1 at the first listed vertex, +1 at the second."""
    ev = np.asarray(edges.cells if isinstance(edges, CellTable) else edges, dtype=np.int64)
    ev = ev.reshape(-1, 2)
    bad = np.flatnonzero(ev[:, 0] == ev[:, 1])
    if len(bad):
        raise OperatorError(f"degenerate edge {int(bad[0])} ({ev[bad[0], 0]}, {ev[bad[0], 1]})")
    m = len(ev)
    rows = ev.ravel()
    cols = np.repeat(np.arange(m), 2)
    vals = np.tile([-1, 1], m)
    return from_triplets(rows, cols, vals, (nverts, m))


def boundary_2_from_cycles(
    face_cycles: Sequence[Sequence[tuple[int, int]]],
    nedges: int,
    boundary1: SignedSparseMatrix | None = None,
) -> SignedSparseMatrix:
    """Edges-by-faces operator from per-face lists of ``(edge, sign)`` pairs.

    With ``boundary1`` given, every column is checked to be a closed cycle.
    """
    rows, cols, vals = [], [], []
    for k, cycle in enumerate(face_cycles):
        for e, s in cycle:
            rows.append(int(e))
            cols.append(k)
            vals.append(int(s))
    d2 = from_triplets(rows, cols, vals, (nedges, len(face_cycles)))
    if boundary1 is not None:
        prod = multiply(boundary1, d2)
        if not prod.is_zero():
            k = int(prod.triplets()[1][0])
            raise OperatorError(f"face {k} is not a closed cycle")
    return d2


def coboundary(p_boundary: SignedSparseMatrix) -> SignedSparseMatrix:
    """delta_{p-1} as the transpose of the boundary map on p-cells."""
    return transpose(p_boundary)


def incidence(mp: SignedSparseMatrix, mq: SignedSparseMatrix, threshold: int = 1) -> SignedSparseMatrix:
    """Shared-vertex counts between p-cells and q-cells, below ``threshold`` zeroed."""
    if mp.ncols != mq.ncols:
        raise ValueError(f"characteristic matrices over {mp.ncols} and {mq.ncols} vertices")
    prod = (mp.to_scipy() @ mq.to_scipy().T).tocoo()
    keep = prod.data >= threshold
    # counts can exceed the int8 range for big cells; the pattern is what callers need
    vals = np.minimum(prod.data[keep], np.iinfo(np.int8).max)
    return from_triplets(prod.row[keep], prod.col[keep], vals, prod.shape)


def face_loops(column_rows, column_vals, edges) -> list[list[int]]:
    """Split an oriented edge cycle into closed vertex loops.

    Each loop is the ordered list of vertices met when walking the signed
    edges head to tail.  Pinch vertices (more than one outgoing edge) are
    resolved by taking the first unused edge.
    """
    ev = np.asarray(edges)
    out_edges: dict[int, list[tuple[int, int]]] = {}
    for e, s in zip(column_rows, column_vals):
        a, b = (ev[e, 0], ev[e, 1]) if s > 0 else (ev[e, 1], ev[e, 0])
        out_edges.setdefault(int(a), []).append((int(b), int(e)))
    used: set[int] = set()
    loops = []
    for start in sorted(out_edges):
        while any(e not in used for _, e in out_edges[start]):
            loop = [start]
            v = start
            while True:
                nxt = next(((w, e) for w, e in out_edges.get(v, []) if e not in used), None)
                if nxt is None:
                    raise OperatorError("edge chain is not a closed cycle")
                w, e = nxt
                used.add(e)
                if w == start:
                    break
                loop.append(w)
                v = w
            loops.append(loop)
    return loops
