"""Topological gift wrapping.

Extracts every d-cell of an arrangement as a minimal (d-1)-cycle of a closed
(d-1)-skeleton.  The same code runs for d=2 (hinges are vertices, petals are
edges) and d=3 (hinges are edges, petals are faces); only the angular
coordinate of a petal around its hinge depends on the dimension.

Orientation convention: a petal oriented with sign ``s`` whose hinge
coefficient is ``k = s * boundary[h, p]`` continues clockwise around the
hinge when ``k == +1`` and counter-clockwise when ``k == -1``.  With this
rule bounded cells come out with positive signed measure and each
component's exterior shell with negative measure.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .sparse import Chain, SignedSparseMatrix, from_scipy, from_triplets, transpose

log = logging.getLogger(__name__)


class TGWError(RuntimeError):
    """The skeleton is open or not a congruent (d-1)-complex."""


@dataclass(eq=False)
class Skeleton:
    """A (d-1)-skeleton in E^d.

    ``edges`` is the (m, 2) edge-vertex array.  In 3D ``faces`` is the
    edges-by-faces boundary matrix; in 2D it is ``None``.
    """

    coords: np.ndarray
    edges: np.ndarray
    faces: SignedSparseMatrix | None = None

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=np.float64)
        self.edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if self.dim == 3 and self.faces is None:
            raise ValueError("a 3D skeleton needs its edges-by-faces boundary")
        if self.faces is not None and self.faces.nrows != len(self.edges):
            raise ValueError("face boundary rows do not match the edge count")

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    @cached_property
    def boundary1(self) -> SignedSparseMatrix:
        from .operators import boundary_1

        return boundary_1(self.edges, len(self.coords))

    @property
    def boundary(self) -> SignedSparseMatrix:
        """The operator from petals to hinges."""
        return self.boundary1 if self.dim == 2 else self.faces

    @cached_property
    def coboundary(self) -> SignedSparseMatrix:
        return transpose(self.boundary)

    @property
    def n_petals(self) -> int:
        return self.boundary.ncols

    @property
    def n_hinges(self) -> int:
        return self.boundary.nrows

    # ------------------------------------------------------------ 3D geometry
    @cached_property
    def _face_geometry(self):
        """Newell area vectors and reference points of every face (3D)."""
        r, c, v = self.faces.triplets()
        tail = np.where(v > 0, self.edges[r, 0], self.edges[r, 1])
        head = np.where(v > 0, self.edges[r, 1], self.edges[r, 0])
        nf = self.faces.ncols
        # reference vertex per face: tail of its first stored edge
        first = self.faces.col_ptr[:-1]
        ref_v = tail[np.minimum(first, len(tail) - 1)] if len(tail) else np.zeros(nf, dtype=np.int64)
        ref = self.coords[ref_v]
        a = self.coords[tail] - ref[c]
        b = self.coords[head] - ref[c]
        area = np.zeros((nf, 3))
        np.add.at(area, c, 0.5 * np.cross(a, b))
        return area, ref, (c, tail, head)

    @property
    def face_area_vectors(self) -> np.ndarray:
        return self._face_geometry[0]

    @cached_property
    def face_normals(self) -> np.ndarray:
        area = self.face_area_vectors
        norm = np.linalg.norm(area, axis=1)
        bad = np.flatnonzero(norm <= 1e-300)
        if len(bad):
            raise TGWError(f"face {int(bad[0])} has zero area")
        return area / norm[:, None]

    # ------------------------------------------------------------------ fans
    @cached_property
    def _fans(self):
        bt = self.boundary.to_scipy().tocsr()
        bt.sort_indices()
        hinge = np.repeat(np.arange(bt.shape[0]), np.diff(bt.indptr))
        petal = bt.indices.astype(np.int64)
        sign = bt.data.astype(np.int64)
        angle = _petal_angles(self, hinge, petal, sign)
        order = np.lexsort((petal, angle, hinge))
        hinge, petal, sign, angle = hinge[order], petal[order], sign[order], angle[order]
        start = np.zeros(self.n_hinges + 1, dtype=np.int64)
        np.cumsum(np.bincount(hinge, minlength=self.n_hinges), out=start[1:])
        slot = {(int(h), int(p)): k for k, (h, p) in enumerate(zip(hinge, petal))}
        ties = np.flatnonzero((np.diff(angle) == 0) & (np.diff(hinge) == 0))
        for k in ties:
            log.warning(
                "angle tie at hinge %d between petals %d and %d", hinge[k], petal[k], petal[k + 1]
            )
        return hinge, petal, sign, angle, start, slot


def _petal_angles(skel: Skeleton, hinge, petal, sign) -> np.ndarray:
    x = skel.coords
    ev = skel.edges
    if skel.dim == 2:
        # direction of edge ``petal`` leaving vertex ``hinge``
        other = np.where(ev[petal, 0] == hinge, ev[petal, 1], ev[petal, 0])
        d = x[other] - x[hinge]
        return np.arctan2(d[:, 1], d[:, 0])
    u = x[ev[hinge, 1]] - x[ev[hinge, 0]]
    u /= np.linalg.norm(u, axis=1)[:, None]
    axis = np.argmin(np.abs(u), axis=1)
    e = np.zeros_like(u)
    e[np.arange(len(u)), axis] = 1.0
    v = e - np.sum(e * u, axis=1)[:, None] * u
    v /= np.linalg.norm(v, axis=1)[:, None]
    w = np.cross(u, v)
    # direction from the hinge into the face
    r = sign[:, None] * np.cross(skel.face_normals[petal], u)
    return np.arctan2(np.sum(r * w, axis=1), np.sum(r * v, axis=1))


@dataclass
class PetalFan:
    hinge: int
    petals: list[int]
    signs: list[int]
    angles: list[float]

    def __len__(self):
        return len(self.petals)

    def next(self, petal: int, orientation: int) -> tuple[int, int]:
        """Same rule as ``next_petal``, on an already built fan."""
        try:
            k = self.petals.index(int(petal))
        except ValueError:
            raise TGWError(f"petal {petal} is not in the fan of hinge {self.hinge}") from None
        kappa = orientation * self.signs[k]
        j = (k - 1) % len(self) if kappa > 0 else (k + 1) % len(self)
        return self.petals[j], -kappa * self.signs[j]


def petal_fan(skel: Skeleton, hinge: int) -> PetalFan:
    """Petals around ``hinge`` in increasing angular order."""
    h, p, s, a, start, _ = skel._fans
    lo, hi = start[hinge], start[hinge + 1]
    if hi - lo < 2:
        raise TGWError(f"hinge {hinge} has {hi - lo} petal(s); the skeleton is open there")
    return PetalFan(int(hinge), p[lo:hi].tolist(), s[lo:hi].tolist(), a[lo:hi].tolist())


def next_petal(skel: Skeleton, hinge: int, petal: int, orientation: int) -> tuple[int, int]:
    """The coherently oriented petal adjacent to ``(petal, orientation)`` at ``hinge``."""
    _, p, s, _, start, slot = skel._fans
    try:
        k = slot[(int(hinge), int(petal))]
    except KeyError:
        raise TGWError(f"petal {petal} is not incident to hinge {hinge}") from None
    lo, hi = start[hinge], start[hinge + 1]
    if hi - lo < 2:
        raise TGWError(f"hinge {hinge} has {hi - lo} petal(s); the skeleton is open there")
    kappa = orientation * s[k]
    n = hi - lo
    j = lo + ((k - lo - 1) % n if kappa > 0 else (k - lo + 1) % n)
    return int(p[j]), int(-kappa * s[j])


class UsageLedger:
    """Tracks which orientations of each petal have been consumed."""

    def __init__(self, n: int):
        self.used = np.zeros((n, 2), dtype=bool)

    @staticmethod
    def _col(orientation: int) -> int:
        return 0 if orientation > 0 else 1

    def is_used(self, petal: int, orientation: int) -> bool:
        return bool(self.used[petal, self._col(orientation)])

    def claim(self, petal: int, orientation: int) -> None:
        c = self._col(orientation)
        if self.used[petal, c]:
            raise TGWError(f"petal {petal} consumed twice with orientation {orientation:+d}")
        self.used[petal, c] = True

    @property
    def full(self) -> bool:
        return bool(self.used.all())

    def next_free(self) -> tuple[int, int] | None:
        free = np.argwhere(~self.used)
        if not len(free):
            return None
        p, c = free[0]
        return int(p), (1 if c == 0 else -1)


def extract_cycle(skel: Skeleton, seed: tuple[int, int], ledger: UsageLedger | None = None) -> Chain:
    """Grow a minimal (d-1)-cycle from the oriented petal ``seed``.

    Each open hinge of the current chain is closed with the adjacent petal
    of its fan, which is what repeated application of delta o boundary does.
    """
    bd = skel.boundary
    seed = (int(seed[0]), int(seed[1]))
    chain = {seed[0]: seed[1]}
    frontier = [seed]
    limit = skel.n_petals
    while frontier:
        p, s = frontier.pop()
        rows, _ = bd.column(p)
        for h in rows:
            q, t = next_petal(skel, int(h), p, s)
            prev = chain.get(q)
            if prev is None:
                chain[q] = t
                frontier.append((q, t))
                if len(chain) > limit:
                    raise TGWError("cycle growth exceeded the petal count")
            elif prev != t:
                raise TGWError(
                    f"petal {q} reached with both orientations from hinge {int(h)}; "
                    "the skeleton is not a congruent closed complex"
                )
    if ledger is not None:
        for q, t in chain.items():
            ledger.claim(q, t)
    return Chain.from_mapping(skel.dim - 1, skel.n_petals, chain)


def _petal_measures(skel: Skeleton) -> np.ndarray:
    """Contribution of each positively oriented petal to the enclosed measure."""
    x = skel.coords
    origin = x.mean(axis=0) if len(x) else 0.0
    if skel.dim == 2:
        a = x[skel.edges[:, 0]] - origin
        b = x[skel.edges[:, 1]] - origin
        return 0.5 * (a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])
    area, ref, _ = skel._face_geometry
    return np.einsum("ij,ij->i", ref - origin, area) / 3.0


def signed_measure(cycle: Chain, skel: Skeleton, check: bool = True) -> float:
    """Signed area (2D) or volume (3D) enclosed by an oriented cycle."""
    if check and not (skel.boundary @ cycle).is_zero():
        raise TGWError("signed measure of a chain that is not closed")
    return float(np.sum(cycle.coefs * _petal_measures(skel)[cycle.cells]))


@dataclass
class Extraction:
    """All minimal cycles of a skeleton.

    ``boundary`` holds one column per cycle, exterior shells included.
    ``component[j]`` labels the connected piece cycle ``j`` belongs to and
    ``exterior[k]`` is the exterior column of component ``k``.
    """

    boundary: SignedSparseMatrix
    measures: np.ndarray
    component: np.ndarray
    exterior: list[int]

    @property
    def n_components(self) -> int:
        return len(self.exterior)

    @property
    def interior(self) -> list[int]:
        ext = set(self.exterior)
        return [j for j in range(self.boundary.ncols) if j not in ext]


def extract_all_cells(skel: Skeleton) -> Extraction:
    """Run gift wrapping from every unconsumed oriented petal."""
    ledger = UsageLedger(skel.n_petals)
    cycles: list[Chain] = []
    for p in range(skel.n_petals):
        for s in (1, -1):
            if not ledger.is_used(p, s):
                cycles.append(extract_cycle(skel, (p, s), ledger))
    if not ledger.full:  # pragma: no cover - loop above visits every pair
        raise TGWError("usage ledger incomplete")
    rows = np.concatenate([c.cells for c in cycles]) if cycles else np.zeros(0, np.int64)
    cols = np.repeat(np.arange(len(cycles)), [len(c) for c in cycles])
    vals = np.concatenate([c.coefs for c in cycles]) if cycles else np.zeros(0, np.int64)
    boundary = from_triplets(rows, cols, vals, (skel.n_petals, len(cycles)))
    measures = boundary.to_scipy(np.float64).T @ _petal_measures(skel)
    component = _cycle_components(boundary)
    exterior = []
    for k in range(component.max() + 1 if len(component) else 0):
        members = np.flatnonzero(component == k)
        j = int(members[np.argmin(measures[members])])
        negatives = members[measures[members] < 0]
        if len(negatives) != 1:
            log.warning(
                "component %d has %d cycles with negative measure; exterior chosen by minimum",
                k,
                len(negatives),
            )
        exterior.append(j)
    return Extraction(boundary, measures, component, exterior)


def _cycle_components(boundary: SignedSparseMatrix) -> np.ndarray:
    """Label cycles connected through shared petals, in order of first cycle."""
    from scipy.sparse.csgraph import connected_components

    b = boundary.to_scipy()
    b.data[:] = 1
    adj = (b.T @ b).tocsr()
    _, labels = connected_components(adj, directed=False)
    # relabel by first appearance so component ids follow extraction order
    remap: dict[int, int] = {}
    return np.array([remap.setdefault(int(l), len(remap)) for l in labels], dtype=np.int64)


@dataclass
class ShellPoset:
    """Containment forest of isolated components.

    ``shells[k]`` is the exterior column of component ``k``; ``parent[k]`` is
    the component whose cell contains it (-1 for roots), ``container[k]`` that
    cell's column, and ``depth`` counts ancestors.
    """

    shells: list[int]
    parent: list[int]
    container: list[int]
    depth: list[int] = field(default_factory=list)

    @property
    def parity(self) -> list[int]:
        return [d % 2 for d in self.depth]


def fold_shells(
    ex: Extraction,
    contains: Callable[[int, int], int | None],
) -> tuple[SignedSparseMatrix, int, ShellPoset]:
    """Merge isolated components into one boundary matrix.

    ``contains(k, j)`` tells whether component ``k`` lies inside cycle ``j``
    (returns ``None`` when undecidable for the sampled point).  The exterior
    shell of each contained component is added to the smallest cycle that
    contains it; the shells of root components add up to the single
    exterior column, appended last.
    """
    ncomp = ex.n_components
    interior = ex.interior
    parent = [-1] * ncomp
    container = [-1] * ncomp
    if ncomp > 1:
        for k in range(ncomp):
            best = None
            for j in interior:
                if ex.component[j] == k:
                    continue
                if contains(k, j):
                    if best is None or abs(ex.measures[j]) < abs(ex.measures[best]):
                        best = j
            if best is not None:
                container[k] = best
                parent[k] = int(ex.component[best])
    depth = []
    for k in range(ncomp):
        d, q, seen = 0, parent[k], {k}
        while q >= 0:
            if q in seen:
                raise TGWError("containment relation between shells is cyclic")
            seen.add(q)
            d += 1
            q = parent[q]
        depth.append(d)
    # folding matrix: cycle j contributes to output column fold[j]
    nout = len(interior) + 1
    target = np.full(ex.boundary.ncols, nout - 1, dtype=np.int64)
    target[interior] = np.arange(len(interior))
    out_of = dict(zip(interior, range(len(interior))))
    for k in range(ncomp):
        if container[k] >= 0:
            target[ex.exterior[k]] = out_of[container[k]]
    fold = sp.csc_matrix(
        (np.ones(len(target), dtype=np.int64), (np.arange(len(target)), target)),
        shape=(len(target), nout),
    )
    merged = from_scipy(ex.boundary.to_scipy() @ fold)
    poset = ShellPoset(list(ex.exterior), parent, container, depth)
    return merged, merged.ncols - 1, poset
