"""Arrangement of E^3 induced by a collection of 2-complexes (the Merge).

Stages: assemble the input faces into one soup, find candidate pairs with
per-axis interval trees, fragment every face in its own plane with the 2D
arrangement, glue the fragments into one congruent 2-skeleton, and extract
the 3-cells with gift wrapping.  Isolated components are nested with the
shell poset.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .arrange2d import (
    DEFAULT_EPS,
    OUTSIDE,
    SegmentSoup,
    classify_point,
    merge_vertices,
    planar_arrangement,
    restrict_to_face,
)
from .model import CellTable, ChainComplexResult, Complex, Geometry, cells_from_boundary, characteristic_matrix
from .operators import boundary_1, boundary_2_from_cycles, incidence
from .tgw import Extraction, Skeleton, extract_all_cells, fold_shells

log = logging.getLogger(__name__)

COPLANAR_ANGLE = 1e-7


class DegenerateFaceError(ValueError):
    pass


# ------------------------------------------------------------------ soup
@dataclass(eq=False)
class FacetSoup:
    """All input faces in one buffer; not a cellular complex."""

    coords: np.ndarray
    faces: CellTable
    edges: np.ndarray
    face_edges: list[np.ndarray]
    provenance: np.ndarray

    def __len__(self):
        return len(self.faces)

    def face_segments(self, f: int) -> np.ndarray:
        return self.edges[self.face_edges[f]]


def _convex_face_edges(coords, verts) -> list[tuple[int, int]]:
    """Boundary of a convex face given as an unordered vertex set."""
    pts = coords[list(verts)]
    c = pts.mean(axis=0)
    _, _, vt = np.linalg.svd(pts - c)
    e1, e2 = vt[0], vt[1]
    ang = np.arctan2((pts - c) @ e2, (pts - c) @ e1)
    ring = [verts[k] for k in np.argsort(ang)]
    return list(zip(ring, ring[1:] + ring[:1]))


def assemble(inputs: list[Complex]) -> FacetSoup:
    """Concatenate input 2-complexes in E^3 and re-index their vertices.

    Face boundaries come from the edges sharing two vertices with the face.
    Inputs without an edge table are read as convex faces, as in the
    usual LAR encoding of boxes.
    """
    coords, faces, edges, face_edges, prov = [], [], [], [], []
    voff = eoff = 0
    for k, cpx in enumerate(inputs):
        if cpx.dim != 3:
            raise ValueError(f"input {k} is embedded in E^{cpx.dim}, expected E^3")
        if 2 not in cpx.tables:
            raise ValueError(f"input {k} has no face table")
        x = cpx.geometry.coords
        fv = cpx.tables[2]
        if 1 in cpx.tables and len(cpx.tables[1]):
            ev = np.asarray(cpx.tables[1].cells, dtype=np.int64).reshape(-1, 2)
            fe = incidence(characteristic_matrix(fv, len(x)), characteristic_matrix(cpx.tables[1], len(x)), 2)
            fe = fe.to_scipy().tocsr()
            per_face = [fe.indices[fe.indptr[f] : fe.indptr[f + 1]] for f in range(len(fv))]
        else:
            pairs: dict[tuple[int, int], int] = {}
            per_face = []
            for cell in fv.cells:
                ids = []
                for a, b in _convex_face_edges(x, cell):
                    ids.append(pairs.setdefault((min(a, b), max(a, b)), len(pairs)))
                per_face.append(np.array(ids, dtype=np.int64))
            ev = np.array(list(pairs), dtype=np.int64).reshape(-1, 2)
        for f, ids in enumerate(per_face):
            deg = np.bincount(ev[ids].ravel(), minlength=len(x))
            if len(ids) < 3 or np.any(deg % 2):
                raise ValueError(f"face {f} of input {k} is not bounded by closed edge loops")
        coords.append(x)
        faces.extend(tuple(v + voff for v in c) for c in fv.cells)
        edges.append(ev + voff)
        face_edges.extend(np.asarray(ids, dtype=np.int64) + eoff for ids in per_face)
        prov.append(np.full(len(fv), k))
        voff += len(x)
        eoff += len(ev)
    return FacetSoup(
        np.vstack(coords) if coords else np.zeros((0, 3)),
        CellTable(2, faces),
        np.vstack(edges) if edges else np.zeros((0, 2), dtype=np.int64),
        face_edges,
        np.concatenate(prov) if prov else np.zeros(0, dtype=np.int64),
    )


# -------------------------------------------------------------- index
class IntervalTree:
    """Static centred interval tree over closed intervals ``[lo[i], hi[i]]``."""

    def __init__(self, lo, hi):
        self.lo = np.asarray(lo, dtype=np.float64)
        self.hi = np.asarray(hi, dtype=np.float64)
        self.root = self._build(np.arange(len(self.lo)))

    def _build(self, idx):
        if not len(idx):
            return None
        center = float(np.median(0.5 * (self.lo[idx] + self.hi[idx])))
        left = idx[self.hi[idx] < center]
        right = idx[self.lo[idx] > center]
        mid = idx[(self.hi[idx] >= center) & (self.lo[idx] <= center)]
        by_lo = mid[np.argsort(self.lo[mid], kind="stable")]
        by_hi = mid[np.argsort(-self.hi[mid], kind="stable")]
        return (
            center,
            by_lo,
            self.lo[by_lo],
            by_hi,
            -self.hi[by_hi],
            self._build(left),
            self._build(right),
        )

    def query(self, qlo: float, qhi: float) -> np.ndarray:
        out = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node is None:
                continue
            center, by_lo, los, by_hi, neg_his, left, right = node
            if qhi < center:
                out.append(by_lo[: np.searchsorted(los, qhi, side="right")])
                stack.append(left)
            elif qlo > center:
                out.append(by_hi[: np.searchsorted(neg_his, -qlo, side="right")])
                stack.append(right)
            else:
                out.append(by_lo)
                stack.append(left)
                stack.append(right)
        return np.sort(np.concatenate(out)) if out else np.zeros(0, dtype=np.int64)


@dataclass(eq=False)
class CandidateIndex:
    boxes: np.ndarray
    trees: list[IntervalTree]

    def query(self, f: int) -> np.ndarray:
        lo, hi = self.boxes[f]
        sets = [t.query(lo[k], hi[k]) for k, t in enumerate(self.trees)]
        out = sets[0]
        for s in sets[1:]:
            out = np.intersect1d(out, s, assume_unique=True)
        return out[out != f]


def face_boxes(soup: FacetSoup, pad: float = 0.0) -> np.ndarray:
    boxes = np.empty((len(soup), 2, 3))
    for f in range(len(soup)):
        pts = soup.coords[list(soup.faces[f])]
        boxes[f, 0] = pts.min(axis=0) - pad
        boxes[f, 1] = pts.max(axis=0) + pad
    return boxes


def build_index(soup: FacetSoup, eps: float = DEFAULT_EPS) -> CandidateIndex:
    """One interval tree per axis over the (eps-padded) face bounding boxes."""
    boxes = face_boxes(soup, eps)
    return CandidateIndex(boxes, [IntervalTree(boxes[:, 0, k], boxes[:, 1, k]) for k in range(3)])


def query(index: CandidateIndex, f: int) -> np.ndarray:
    return index.query(f)


# --------------------------------------------------------------- frames
def face_frame(points) -> tuple[np.ndarray, np.ndarray]:
    """Rigid maps between a face's supporting plane and z=0.

    Returns homogeneous 4x4 matrices ``(M, Minv)``.  The plane is the total
    least-squares fit of the points; the frame's x axis points from the
    first point towards the farthest one.
    """
    pts = np.asarray(points, dtype=np.float64)
    c = pts.mean(axis=0)
    _, s, vt = np.linalg.svd(pts - c)
    if len(s) < 2 or s[1] <= 1e-12 * max(s[0], 1e-300):
        raise DegenerateFaceError("face vertices are collinear")
    n = vt[2]
    if n[np.argmax(np.abs(n))] < 0:
        n = -n
    d = pts - pts[0]
    far = d[np.argmax(np.einsum("ij,ij->i", d, d))]
    e1 = far - (far @ n) * n
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    R = np.vstack([e1, e2, n])
    M = np.eye(4)
    M[:3, :3] = R
    M[:3, 3] = -R @ c
    Minv = np.eye(4)
    Minv[:3, :3] = R.T
    Minv[:3, 3] = c
    return M, Minv


def apply_frame(M, pts) -> np.ndarray:
    return np.asarray(pts) @ M[:3, :3].T + M[:3, 3]


@dataclass(eq=False)
class _FaceData:
    M: np.ndarray
    Minv: np.ndarray
    verts: np.ndarray
    local: np.ndarray
    segments: np.ndarray
    normal: np.ndarray


def _face_data(soup: FacetSoup) -> list[_FaceData]:
    out = []
    for f in range(len(soup)):
        verts = np.array(sorted(soup.faces[f]), dtype=np.int64)
        M, Minv = face_frame(soup.coords[verts])
        local = {int(v): k for k, v in enumerate(verts)}
        loc = apply_frame(M, soup.coords[verts])
        segs = np.array([[local[int(a)], local[int(b)]] for a, b in soup.face_segments(f)], dtype=np.int64)
        out.append(_FaceData(M, Minv, verts, loc, segs, M[2, :3].copy()))
    return out


# -------------------------------------------------------- fragmentation
@dataclass(eq=False)
class LiftedComplex:
    """Faces of one fragmented input face, in world coordinates."""

    coords: np.ndarray
    edges: np.ndarray
    faces: list[list[tuple[int, int]]]
    source: int = -1


def _section_segments(sig: _FaceData, tau: _FaceData, soup: FacetSoup, eps: float) -> list[np.ndarray]:
    """Pieces of ``tau`` lying in the plane of ``sig``, clipped to the closure of both faces."""
    X = apply_frame(sig.M, soup.coords[tau.verts])
    z = X[:, 2]
    ntau = sig.M[:3, :3] @ tau.normal
    if np.max(np.abs(z)) <= eps and np.linalg.norm(ntau[:2]) < COPLANAR_ANGLE:
        return [X[tau.segments][:, :, :2]]
    if np.all(z > eps) or np.all(z < -eps):
        return []
    pts = list(X[np.abs(z) <= eps, :2])
    for a, b in tau.segments:
        za, zb = z[a], z[b]
        if (za > eps and zb < -eps) or (za < -eps and zb > eps):
            t = za / (za - zb)
            pts.append((X[a] + t * (X[b] - X[a]))[:2])
    if len(pts) < 2:
        return []
    pts = np.array(pts)
    nxy = ntau[:2]
    if np.linalg.norm(nxy) > COPLANAR_ANGLE:
        dl = np.array([-nxy[1], nxy[0]]) / np.linalg.norm(nxy)
    else:
        spread = pts - pts.mean(axis=0)
        dl = np.linalg.svd(spread)[2][0]
    o = pts[0]
    ts = list((pts - o) @ dl)
    # crossings of the line with the boundary of sigma
    sl = sig.local[:, :2]
    P, Q = sl[sig.segments[:, 0]], sl[sig.segments[:, 1]]
    dp = (P - o) @ np.array([-dl[1], dl[0]])
    dq = (Q - o) @ np.array([-dl[1], dl[0]])
    ts += list(((P - o) @ dl)[np.abs(dp) <= eps])
    ts += list(((Q - o) @ dl)[np.abs(dq) <= eps])
    cross = ((dp > eps) & (dq < -eps)) | ((dp < -eps) & (dq > eps))
    if np.any(cross):
        r = dp[cross] / (dp[cross] - dq[cross])
        X2 = P[cross] + r[:, None] * (Q[cross] - P[cross])
        ts += list((X2 - o) @ dl)
    ts = np.sort(np.array(ts))
    ts = ts[np.concatenate([[True], np.diff(ts) > eps])]
    out = []
    tl = tau.local[:, :2]
    for t0, t1 in zip(ts[:-1], ts[1:]):
        mid = o + 0.5 * (t0 + t1) * dl
        if classify_point(mid, None, sl, sig.segments, eps, rule="parity") == OUTSIDE:
            continue
        w = apply_frame(sig.Minv, np.array([mid[0], mid[1], 0.0]))
        mt = apply_frame(tau.M, w)[:2]
        if classify_point(mt, None, tl, tau.segments, eps, rule="parity") == OUTSIDE:
            continue
        out.append(np.array([[o + t0 * dl, o + t1 * dl]]))
    return out


def fragment_face(f: int, sigma_set, soup: FacetSoup, data: list[_FaceData], eps: float = DEFAULT_EPS) -> LiftedComplex:
    """Planar arrangement of face ``f`` cut by the faces in ``sigma_set``."""
    sig = data[f]
    segs = [sig.local[sig.segments][:, :, :2]]
    for g in sigma_set:
        segs += _section_segments(sig, data[int(g)], soup, eps)
    arr = planar_arrangement(SegmentSoup.from_segments(np.concatenate(segs)), eps)
    arr = restrict_to_face(arr, sig.local[:, :2], sig.segments, eps)
    if arr.exterior is None:
        log.warning("face %d vanished during fragmentation", f)
        return LiftedComplex(np.zeros((0, 3)), np.zeros((0, 2), dtype=np.int64), [], f)
    coords = apply_frame(sig.Minv, np.column_stack([arr.coords, np.zeros(len(arr.coords))]))
    faces = []
    for j in arr.interior_columns():
        rows, vals = arr.boundary2.column(j)
        faces.append([(int(r), int(v)) for r, v in zip(rows, vals)])
    return LiftedComplex(coords, arr.edges.copy(), faces, f)


# -------------------------------------------------------------- skeleton
@dataclass(eq=False)
class MergedSkeleton:
    skeleton: Skeleton
    faces: CellTable
    source: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))


def _split_t_junctions(coords, edges, eps):
    """Sub-edge chains for edges that have other vertices lying on them."""
    tree = cKDTree(coords)
    a, b = coords[edges[:, 0]], coords[edges[:, 1]]
    mid = 0.5 * (a + b)
    rad = 0.5 * np.linalg.norm(b - a, axis=1) + eps
    splits = {}
    for k, cand in enumerate(tree.query_ball_point(mid, rad)):
        cand = [v for v in cand if v != edges[k, 0] and v != edges[k, 1]]
        if not cand:
            continue
        p = coords[cand]
        d = b[k] - a[k]
        t = (p - a[k]) @ d / (d @ d)
        dist = np.linalg.norm(a[k] + t[:, None] * d - p, axis=1)
        on = (dist <= eps) & (t > 0) & (t < 1)
        if np.any(on):
            order = np.argsort(t[on])
            chain = [int(edges[k, 0])] + [int(v) for v in np.asarray(cand)[on][order]] + [int(edges[k, 1])]
            splits[k] = chain
    return splits


def skeleton_merge(fragments: list[LiftedComplex], eps: float = DEFAULT_EPS) -> MergedSkeleton:
    """Glue fragment complexes into one congruent 2-skeleton.

    Close vertices are identified, edges and faces are deduplicated by
    canonical form (sorted vertex pair, sorted edge set), and vertices
    lying inside foreign edges split those edges.
    """
    coords, edges, cycles, source = [], [], [], []
    voff = eoff = 0
    for fr in fragments:
        coords.append(fr.coords)
        edges.append(fr.edges + voff)
        for face in fr.faces:
            cycles.append([(e + eoff, s) for e, s in face])
            source.append(fr.source)
        voff += len(fr.coords)
        eoff += len(fr.edges)
    if not cycles:
        raise ValueError("no faces to merge")
    coords, _, vmap = merge_vertices(np.vstack(coords), [], eps)
    raw = vmap[np.vstack(edges)]
    live = np.sort(raw[raw[:, 0] != raw[:, 1]], axis=1)
    live = np.unique(live, axis=0) if len(live) else live
    split_of: dict[tuple[int, int], list[int]] = {}
    for k, chain in _split_t_junctions(coords, live, eps).items():
        split_of[(int(live[k, 0]), int(live[k, 1]))] = chain
    canon: dict[tuple[int, int], int] = {}

    def edge_chain(u, v):
        """Canonical signed edges for the oriented segment u -> v."""
        chain = split_of.get((min(u, v), max(u, v)))
        verts = [u, v] if chain is None else (chain if chain[0] == u else chain[::-1])
        out = []
        for p, q in zip(verts[:-1], verts[1:]):
            e = canon.setdefault((min(p, q), max(p, q)), len(canon))
            out.append((e, 1 if p < q else -1))
        return out

    seen: dict[tuple[int, ...], int] = {}
    face_cycles = []
    face_source = []
    for cyc, src in zip(cycles, source):
        acc: dict[int, int] = {}
        for e, s in cyc:
            u, v = int(raw[e, 0]), int(raw[e, 1])
            if u == v:
                continue
            if s < 0:
                u, v = v, u
            for ce, cs in edge_chain(u, v):
                acc[ce] = acc.get(ce, 0) + cs
        acc = {e: s for e, s in acc.items() if s != 0}
        if len(acc) < 3:
            continue
        key = tuple(sorted(acc))
        if key in seen:
            continue
        seen[key] = len(face_cycles)
        face_cycles.append(sorted(acc.items()))
        face_source.append(src)
    ev = np.array(sorted(canon, key=canon.get), dtype=np.int64).reshape(-1, 2)
    # drop vertices and edges not on any face
    used_e = np.unique([e for cyc in face_cycles for e, _ in cyc])
    emap = np.full(len(ev), -1, dtype=np.int64)
    emap[used_e] = np.arange(len(used_e))
    ev = ev[used_e]
    used_v = np.unique(ev)
    vmap2 = np.full(len(coords), -1, dtype=np.int64)
    vmap2[used_v] = np.arange(len(used_v))
    coords = coords[used_v]
    ev = vmap2[ev]
    face_cycles = [[(int(emap[e]), s) for e, s in cyc] for cyc in face_cycles]
    d1 = boundary_1(ev, len(coords))
    d2 = boundary_2_from_cycles(face_cycles, len(ev), d1)
    fw = cells_from_boundary(d2, CellTable(1, ev.tolist()))
    return MergedSkeleton(Skeleton(coords, ev, d2), fw, np.array(face_source, dtype=np.int64))


# ------------------------------------------------------------- extraction
def _solid_angles(skel: Skeleton, x) -> np.ndarray:
    """Signed solid angle subtended by every face at point ``x``."""
    _, ref, (c, tail, head) = skel._face_geometry
    a = ref[c] - x
    b = skel.coords[tail] - x
    d = skel.coords[head] - x
    la, lb, ld = (np.linalg.norm(v, axis=1) for v in (a, b, d))
    num = np.einsum("ij,ij->i", a, np.cross(b, d))
    den = la * lb * ld + np.einsum("ij,ij->i", a, b) * ld + np.einsum("ij,ij->i", a, d) * lb + np.einsum("ij,ij->i", b, d) * la
    omega = 2.0 * np.arctan2(num, den)
    out = np.zeros(skel.faces.ncols)
    np.add.at(out, c, omega)
    return out


def winding_numbers(skel: Skeleton, boundary, x) -> np.ndarray:
    """Generalised winding number of every column cycle of ``boundary`` around ``x``."""
    omega = _solid_angles(skel, np.asarray(x, dtype=np.float64))
    return (boundary.to_scipy(np.float64).T @ omega) / (4 * np.pi)


def shell_poset(ex: Extraction, skel: Skeleton):
    """Nest isolated components; returns ``(boundary3, exterior, ShellPoset)``."""
    comp_vertices = []
    ev = skel.edges
    b2 = skel.faces.to_scipy().tocsc()
    for k in range(ex.n_components):
        faces = ex.boundary.column(ex.exterior[k])[0]
        es = np.unique(b2[:, faces].indices)
        comp_vertices.append(np.unique(ev[es]))
    cache: dict[int, np.ndarray | None] = {}

    def winding_for(k):
        if k not in cache:
            cache[k] = None
            for v in comp_vertices[k][: min(len(comp_vertices[k]), 16)]:
                w = winding_numbers(skel, ex.boundary, skel.coords[v])
                mine = ex.component == k
                frac = np.abs(w - np.round(w))[~mine]
                if not len(frac) or frac.max() < 0.1:
                    cache[k] = np.round(w)
                    break
            else:
                log.warning("no clean sample point for shell %d", k)
        return cache[k]

    def contains(k, j):
        w = winding_for(k)
        return w is not None and w[j] != 0

    return fold_shells(ex, contains)


def space_arrangement(merged: MergedSkeleton) -> ChainComplexResult:
    """3-cells of a congruent closed 2-skeleton."""
    skel = merged.skeleton
    ex = extract_all_cells(skel)
    d3, ext, poset = shell_poset(ex, skel) if ex.n_components > 1 else _single(ex)
    cw = cells_from_boundary(d3.select_columns(range(ext)), merged.faces)
    return ChainComplexResult(
        Geometry(skel.coords),
        {1: CellTable(1, skel.edges.tolist()), 2: merged.faces, 3: cw},
        {1: skel.boundary1, 2: skel.faces, 3: d3},
        ext,
        {"poset": poset, "components": ex.n_components},
    )


def _single(ex: Extraction):
    return fold_shells(ex, lambda k, j: False)


# ------------------------------------------------------------- driver
_WORKER: dict = {}


def _init_worker(soup, data, cands, eps):
    _WORKER.update(soup=soup, data=data, cands=cands, eps=eps)


def _fragment_worker(f):
    w = _WORKER
    return fragment_face(f, w["cands"][f], w["soup"], w["data"], w["eps"])


def fragment_all(soup: FacetSoup, index: CandidateIndex, eps: float = DEFAULT_EPS, workers: int = 1) -> list[LiftedComplex]:
    data = _face_data(soup)
    cands = [index.query(f) for f in range(len(soup))]
    if workers <= 1 or len(soup) < 2:
        return [fragment_face(f, cands[f], soup, data, eps) for f in range(len(soup))]
    with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(soup, data, cands, eps)) as pool:
        return list(pool.map(_fragment_worker, range(len(soup)), chunksize=max(1, len(soup) // (4 * workers))))


def merge_complexes(inputs: list[Complex], eps: float = DEFAULT_EPS, workers: int = 1) -> ChainComplexResult:
    """Full Merge: the arrangement of E^3 generated by the input complexes."""
    soup = assemble(inputs)
    index = build_index(soup, eps)
    fragments = fragment_all(soup, index, eps, workers)
    merged = skeleton_merge(fragments, eps)
    return space_arrangement(merged)
