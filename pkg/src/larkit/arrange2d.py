"""Regularised arrangement of line segments in the plane.

Pipeline: pairwise fragmentation, vertex merging, removal of dangling
edges and trees (biconnected filter), gift wrapping of the faces, and
folding of nested components into faces with holes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree
import scipy.sparse as sp

from .model import CellTable, ChainComplexResult, Geometry, cells_from_boundary
from .operators import boundary_1
from .sparse import Chain, SignedSparseMatrix, from_scipy, from_triplets
from .tgw import ShellPoset, Skeleton, extract_all_cells, fold_shells

log = logging.getLogger(__name__)

DEFAULT_EPS = 1e-8

INSIDE, OUTSIDE, ON = "inside", "outside", "on"


@dataclass(eq=False)
class SegmentSoup:
    """Segments ``coords[edges[k, 0]] -> coords[edges[k, 1]]``; not necessarily a complex."""

    coords: np.ndarray
    edges: np.ndarray

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=np.float64).reshape(-1, 2)
        self.edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)

    @classmethod
    def from_segments(cls, segments) -> "SegmentSoup":
        seg = np.asarray(segments, dtype=np.float64).reshape(-1, 2, 2)
        return cls(seg.reshape(-1, 2), np.arange(2 * len(seg)).reshape(-1, 2))

    def segments(self) -> np.ndarray:
        return self.coords[self.edges]

    def __len__(self):
        return len(self.edges)


@dataclass(eq=False)
class PlanarArrangement:
    """Faces of a planar arrangement.

    ``boundary2`` maps faces to edges; its last column (``exterior``) is the
    unbounded face.  ``faces`` lists the vertices of the bounded faces only.
    """

    coords: np.ndarray
    edges: np.ndarray
    boundary2: SignedSparseMatrix
    exterior: int | None
    faces: CellTable
    poset: ShellPoset | None = None
    n_components: int = 0
    component_counts: list[tuple[int, int, int]] = field(default_factory=list)

    @property
    def boundary1(self) -> SignedSparseMatrix:
        return boundary_1(self.edges, len(self.coords))

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def interior_columns(self) -> list[int]:
        return [j for j in range(self.boundary2.ncols) if j != self.exterior]

    def euler(self, exterior: bool = True) -> int:
        return len(self.coords) - len(self.edges) + self.n_faces + (1 if exterior and self.exterior is not None else 0)

    def to_result(self) -> ChainComplexResult:
        return ChainComplexResult(
            Geometry(self.coords if len(self.coords) else np.zeros((0, 2))),
            {1: CellTable(1, self.edges.tolist()), 2: self.faces},
            {1: self.boundary1, 2: self.boundary2},
            self.exterior,
        )


# --------------------------------------------------------------- utilities
def _point_segment(p, a, b):
    """Unclamped parameter of the projection of ``p`` on ``ab`` and distance to the segment."""
    d = b - a
    dd = np.einsum("...i,...i->...", d, d)
    t = np.einsum("...i,...i->...", p - a, d) / np.where(dd > 0, dd, 1.0)
    tc = np.clip(t, 0.0, 1.0)
    proj = a + tc[..., None] * d
    return t, np.linalg.norm(p - proj, axis=-1)


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def merge_vertices(coords, tables, eps: float = DEFAULT_EPS):
    """Identify vertices closer than ``eps`` in the max norm.

    ``tables`` is a list of integer arrays ``(k, p+1)`` or ``CellTable``.
    Each cluster is represented by its first vertex; cells left with fewer
    than ``p+1`` distinct vertices are dropped.  Returns
    ``(coords, tables, index_map)`` with ``index_map[old] = new``.
    """
    coords = np.asarray(coords, dtype=np.float64)
    n = len(coords)
    if n:
        pairs = cKDTree(coords).query_pairs(eps, p=np.inf, output_type="ndarray")
        g = sp.coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
        _, label = connected_components(g, directed=False)
        rep = np.full(label.max() + 1, n, dtype=np.int64)
        np.minimum.at(rep, label, np.arange(n))
        rep_of = rep[label]
        keep = np.flatnonzero(rep_of == np.arange(n))
        new_of_rep = np.full(n, -1, dtype=np.int64)
        new_of_rep[keep] = np.arange(len(keep))
        index_map = new_of_rep[rep_of]
        new_coords = coords[keep]
    else:
        index_map = np.zeros(0, dtype=np.int64)
        new_coords = coords
    out = []
    for t in tables:
        if isinstance(t, CellTable):
            cells = []
            for c in t.cells:
                mapped = list(dict.fromkeys(int(index_map[v]) for v in c))
                if len(mapped) >= t.dim + 1:
                    cells.append(mapped)
            out.append(CellTable(t.dim, cells))
        else:
            arr = index_map[np.asarray(t, dtype=np.int64)]
            if arr.ndim == 2 and arr.shape[1] == 2:
                arr = arr[arr[:, 0] != arr[:, 1]]
            out.append(arr)
    return new_coords, out, index_map


def _unique_edges(edges: np.ndarray) -> np.ndarray:
    """Drop degenerate and repeated edges, keeping first occurrences and their direction."""
    edges = edges[edges[:, 0] != edges[:, 1]]
    if not len(edges):
        return edges.reshape(0, 2)
    key = np.sort(edges, axis=1)
    _, first = np.unique(key, axis=0, return_index=True)
    return edges[np.sort(first)]


def fragment_segments(soup: SegmentSoup, eps: float = DEFAULT_EPS) -> SegmentSoup:
    """Split every segment at all its intersections with the others.

    Proper crossings create new vertices shared by both segments; endpoints
    lying on another segment (T-junctions, collinear overlaps) split that
    segment at the endpoint itself.  Vertices closer than ``eps`` are then
    merged and zero-length or repeated fragments dropped.
    """
    x = soup.coords
    ev = soup.edges
    if not len(ev):
        return SegmentSoup(np.zeros((0, 2)), np.zeros((0, 2), dtype=np.int64))
    a, b = x[ev[:, 0]], x[ev[:, 1]]
    n = len(ev)
    seg = [np.arange(n), np.arange(n)]
    par = [np.zeros(n), np.ones(n)]
    vid = [ev[:, 0], ev[:, 1]]
    new_points = np.zeros((0, 2))
    if n > 1:
        lo = np.minimum(a, b) - eps
        hi = np.maximum(a, b) + eps
        i, j = np.triu_indices(n, 1)
        ov = np.all((lo[i] <= hi[j]) & (lo[j] <= hi[i]), axis=1)
        i, j = i[ov], j[ov]
        # endpoints of one segment lying on the other
        for s, o in ((i, j), (j, i)):
            for end in (0, 1):
                t, dist = _point_segment(x[ev[o, end]], a[s], b[s])
                hit = dist <= eps
                seg.append(s[hit])
                par.append(t[hit])
                vid.append(ev[o[hit], end])
        # proper crossings
        d1, d2 = b[i] - a[i], b[j] - a[j]
        den = _cross(d1, d2)
        l1 = np.linalg.norm(d1, axis=1)
        l2 = np.linalg.norm(d2, axis=1)
        ok = np.abs(den) > 1e-14 * l1 * l2
        w = a[j] - a[i]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = _cross(w, d2) / den
            u = _cross(w, d1) / den
        et, eu = eps / np.maximum(l1, 1e-300), eps / np.maximum(l2, 1e-300)
        hit = ok & (t > et) & (t < 1 - et) & (u > eu) & (u < 1 - eu)
        new_points = a[i[hit]] + t[hit, None] * d1[hit]
        ids = len(x) + np.arange(int(hit.sum()))
        seg += [i[hit], j[hit]]
        par += [t[hit], u[hit]]
        vid += [ids, ids]
    coords = np.vstack([x, new_points])
    seg, par, vid = np.concatenate(seg), np.concatenate(par), np.concatenate(vid).astype(np.int64)
    order = np.lexsort((par, seg))
    seg, vid = seg[order], vid[order]
    same = seg[1:] == seg[:-1]
    out_edges = np.stack([vid[:-1][same], vid[1:][same]], axis=1)
    coords, (out_edges,), _ = merge_vertices(coords, [out_edges], eps)
    out_edges = _unique_edges(out_edges)
    used = np.unique(out_edges)
    remap = np.full(len(coords), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    return SegmentSoup(coords[used], remap[out_edges])


def biconnected_filter(nverts: int, edges) -> np.ndarray:
    """Indices of edges lying in a biconnected component with at least two edges.

    Iterative Hopcroft-Tarjan over the edge stack; bridges and dangling
    trees are the single-edge components and are dropped.
    """
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    adj: list[list[tuple[int, int]]] = [[] for _ in range(nverts)]
    for k, (u, v) in enumerate(edges):
        adj[u].append((v, k))
        adj[v].append((u, k))
    disc = [-1] * nverts
    low = [0] * nverts
    keep: list[int] = []
    timer = 0
    for root in range(nverts):
        if disc[root] >= 0 or not adj[root]:
            continue
        disc[root] = low[root] = timer
        timer += 1
        stack = [(root, -1, iter(adj[root]))]
        estack: list[int] = []
        while stack:
            u, pedge, it = stack[-1]
            advanced = False
            for v, k in it:
                if k == pedge:
                    continue
                if disc[v] < 0:
                    estack.append(k)
                    disc[v] = low[v] = timer
                    timer += 1
                    stack.append((v, k, iter(adj[v])))
                    advanced = True
                    break
                if disc[v] < disc[u]:
                    estack.append(k)
                    low[u] = min(low[u], disc[v])
            if advanced:
                continue
            stack.pop()
            if stack:
                p = stack[-1][0]
                low[p] = min(low[p], low[u])
                if low[u] >= disc[p]:
                    comp = []
                    while True:
                        k = estack.pop()
                        comp.append(k)
                        if k == pedge:
                            break
                    if len(comp) >= 2:
                        keep.extend(comp)
    return np.array(sorted(keep), dtype=np.int64)


# ------------------------------------------------------ point classification
def _winding(point, a, b, signs):
    """Signed crossing count of a horizontal ray from ``point`` (winding number)."""
    py = point[1]
    up = (a[:, 1] <= py) & (b[:, 1] > py)
    down = (b[:, 1] <= py) & (a[:, 1] > py)
    side = _cross(b - a, point - a)
    w = np.sum(signs * ((up & (side > 0)).astype(int) - (down & (side < 0)).astype(int)))
    crossings = np.sum((up & (side > 0)) | (down & (side < 0)))
    return int(w), int(crossings)


def classify_point(point, cycle, coords, edges, eps: float = DEFAULT_EPS, rule: str = "nonzero") -> str:
    """Classify ``point`` against an edge cycle as inside, outside or on.

    ``cycle`` is a ``Chain`` over ``edges``, a sequence of ``(edge, sign)``
    pairs, or ``None`` for all edges with positive sign.  ``rule`` is
    ``"nonzero"`` (oriented cycles) or ``"parity"`` (unoriented loops).
    """
    coords = np.asarray(coords, dtype=np.float64)
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if cycle is None:
        idx, sg = np.arange(len(edges)), np.ones(len(edges), dtype=np.int64)
    elif isinstance(cycle, Chain):
        idx, sg = cycle.cells, cycle.coefs.astype(np.int64)
    else:
        pairs = np.asarray(list(cycle), dtype=np.int64).reshape(-1, 2)
        idx, sg = pairs[:, 0], pairs[:, 1]
    p = np.asarray(point, dtype=np.float64)
    a = coords[edges[idx, 0]]
    b = coords[edges[idx, 1]]
    if len(idx) == 0:
        return OUTSIDE
    _, dist = _point_segment(p, a, b)
    if dist.min() <= eps:
        return ON
    a2 = np.where(sg[:, None] > 0, a, b)
    b2 = np.where(sg[:, None] > 0, b, a)
    w, c = _winding(p, a2, b2, np.ones(len(idx), dtype=np.int64))
    inside = (w != 0) if rule == "nonzero" else (c % 2 == 1)
    return INSIDE if inside else OUTSIDE


def interior_point(coords, edges, rows) -> np.ndarray:
    """A point strictly inside the region bounded by the given edges.

    A horizontal scanline is placed in the widest gap between vertex
    ordinates and the midpoint of its widest inside interval is returned;
    works for non-convex regions and regions with holes.
    """
    coords = np.asarray(coords)
    e = np.asarray(edges)[np.asarray(rows)]
    a, b = coords[e[:, 0]], coords[e[:, 1]]
    ys = np.unique(np.concatenate([a[:, 1], b[:, 1]]))
    if len(ys) < 2:
        raise ValueError("degenerate region")
    gaps = np.diff(ys)
    best = None
    for g in np.argsort(-gaps)[: min(len(gaps), 4)]:
        y0 = 0.5 * (ys[g] + ys[g + 1])
        cross = (a[:, 1] > y0) != (b[:, 1] > y0)
        if not np.any(cross) or np.count_nonzero(cross) % 2:
            continue
        aa, bb = a[cross], b[cross]
        xs = np.sort(aa[:, 0] + (y0 - aa[:, 1]) * (bb[:, 0] - aa[:, 0]) / (bb[:, 1] - aa[:, 1]))
        width = xs[1::2] - xs[0::2]
        k = int(np.argmax(width))
        cand = (min(gaps[g], width[k]), np.array([0.5 * (xs[2 * k] + xs[2 * k + 1]), y0]))
        if best is None or cand[0] > best[0]:
            best = cand
    if best is None:
        raise ValueError("no scanline crosses the region")
    return best[1]


# ------------------------------------------------------------- arrangement
def _empty_arrangement() -> PlanarArrangement:
    return PlanarArrangement(
        np.zeros((0, 2)),
        np.zeros((0, 2), dtype=np.int64),
        from_triplets([], [], [], (0, 0)),
        None,
        CellTable(2, []),
    )


def planar_arrangement(soup: SegmentSoup, eps: float = DEFAULT_EPS) -> PlanarArrangement:
    """Faces of the plane induced by a segment soup."""
    frag = fragment_segments(soup, eps)
    kept = biconnected_filter(len(frag.coords), frag.edges)
    if not len(kept):
        log.info("arrangement is empty after removing dangling edges")
        return _empty_arrangement()
    edges = frag.edges[kept]
    used = np.unique(edges)
    remap = np.full(len(frag.coords), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    coords = frag.coords[used]
    edges = remap[edges]
    return arrange_graph(coords, edges, eps)


def arrange_graph(coords, edges, eps: float = DEFAULT_EPS) -> PlanarArrangement:
    """Gift-wrap the faces of a planar graph whose edges meet only at vertices
    and whose every edge lies on a cycle."""
    skel = Skeleton(coords, edges)
    ex = extract_all_cells(skel)
    comp_vertices = _component_vertices(ex, edges)

    def contains(k, j):
        col = ex.boundary.column(j)
        for v in comp_vertices[k]:
            c = classify_point(coords[v], list(zip(*col)), coords, edges, eps)
            if c != ON:
                return c == INSIDE
        return False

    d2, ext, poset = fold_shells(ex, contains)
    interior = d2.select_columns(range(ext))
    faces = cells_from_boundary(interior, CellTable(1, edges.tolist()))
    counts = []
    for k, vs in enumerate(comp_vertices):
        petals = np.unique(np.concatenate([ex.boundary.column(j)[0] for j in np.flatnonzero(ex.component == k)]))
        counts.append((len(vs), len(petals), int(np.sum(ex.component == k))))
    return PlanarArrangement(coords, edges, d2, ext, faces, poset, ex.n_components, counts)


def _component_vertices(ex, edges) -> list[np.ndarray]:
    out = []
    for k in range(ex.n_components):
        cols = np.flatnonzero(ex.component == k)
        petals = np.unique(np.concatenate([ex.boundary.column(j)[0] for j in cols]))
        out.append(np.unique(edges[petals]))
    return out


def restrict_to_face(arr: PlanarArrangement, sigma_coords, sigma_edges, eps: float = DEFAULT_EPS) -> PlanarArrangement:
    """Keep only the faces of ``arr`` that lie inside the region bounded by
    ``sigma_edges`` (unoriented loops, parity rule).  Edges no longer on a
    kept face are dropped and the exterior becomes the negated sum of the
    kept faces."""
    sigma_coords = np.asarray(sigma_coords, dtype=np.float64)
    sigma_edges = np.asarray(sigma_edges, dtype=np.int64).reshape(-1, 2)
    if arr.exterior is None or arr.n_faces == 0:
        return arr
    keep = []
    for j in arr.interior_columns():
        rows, _ = arr.boundary2.column(j)
        p = interior_point(arr.coords, arr.edges, rows)
        if classify_point(p, None, sigma_coords, sigma_edges, eps, rule="parity") != OUTSIDE:
            keep.append(j)
    b = arr.boundary2.to_scipy()[:, keep]
    if not keep:
        return _empty_arrangement()
    used_edges = np.unique(b.indices)
    b = b[used_edges, :]
    ext = -b.sum(axis=1)
    d2 = from_scipy(sp.hstack([b, sp.csc_matrix(ext)], format="csc"))
    edges = arr.edges[used_edges]
    used_v = np.unique(edges)
    remap = np.full(len(arr.coords), -1, dtype=np.int64)
    remap[used_v] = np.arange(len(used_v))
    coords = arr.coords[used_v]
    edges = remap[edges]
    faces = cells_from_boundary(d2.select_columns(range(len(keep))), CellTable(1, edges.tolist()))
    return PlanarArrangement(coords, edges, d2, len(keep), faces)
