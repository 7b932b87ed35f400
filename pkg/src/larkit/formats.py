"""File formats: LAR JSON documents, Matrix Market operators, Wavefront OBJ.

LAR JSON stores 1-based vertex indices; everything in memory is 0-based and
the shift happens here only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import CellTable, ChainComplexResult, Complex, Geometry, ModelError
from .operators import face_loops
from .sparse import SignedSparseMatrix, from_triplets


class FormatError(ValueError):
    pass


def _num(x: float) -> str:
    x = float(x)
    if not np.isfinite(x):
        raise FormatError(f"non-finite coordinate {x}")
    return format(x, ".17g")


# ------------------------------------------------------------ LAR JSON
@dataclass
class LarDocument:
    dim: int
    V: np.ndarray
    cells: dict[int, list[list[int]]]
    metadata: dict = field(default_factory=dict)

    def to_complex(self) -> Complex:
        return Complex(Geometry(self.V), {p: CellTable(p, c) for p, c in self.cells.items()})


def parse_lar(text: str) -> LarDocument:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"malformed JSON: {exc}") from None
    if not isinstance(doc, dict) or "V" not in doc:
        raise FormatError("document needs a 'V' array")
    V = np.asarray(doc["V"], dtype=np.float64)
    dim = int(doc.get("dim", V.shape[1] if V.ndim == 2 and len(V) else 0))
    if dim not in (2, 3):
        raise FormatError(f"dim must be 2 or 3, got {dim}")
    if len(V) == 0:
        V = V.reshape(0, dim)
    if V.ndim != 2 or V.shape[1] != dim:
        raise FormatError(f"V must be a list of {dim}-coordinate points")
    cells = {}
    for key, rows in (doc.get("cells") or {}).items():
        p = int(key)
        if not 1 <= p <= dim:
            raise FormatError(f"cell dimension {p} outside 1..{dim}")
        out = []
        for k, row in enumerate(rows):
            idx = [int(v) for v in row]
            bad = [v for v in idx if v < 1 or v > len(V)]
            if bad:
                raise FormatError(f"cells[{key}][{k}] has vertex index {bad[0]} outside 1..{len(V)}")
            out.append([v - 1 for v in idx])
        cells[p] = out
    return LarDocument(dim, V, cells, dict(doc.get("metadata") or {}))


def read_lar(path) -> LarDocument:
    return parse_lar(Path(path).read_text())


def load_lar(path) -> Complex:
    doc = read_lar(path)
    try:
        return doc.to_complex()
    except ModelError as exc:
        raise FormatError(str(exc)) from None


def dumps_lar(obj, metadata: dict | None = None) -> str:
    """Deterministic text: one point or cell per line, floats with 17 significant digits."""
    if isinstance(obj, ChainComplexResult):
        cpx = obj.as_complex()
        meta = {"exterior_cell": obj.exterior_cell + 1} if obj.exterior_cell is not None else {}
    elif isinstance(obj, LarDocument):
        cpx, meta = obj.to_complex(), dict(obj.metadata)
    else:
        cpx, meta = obj, {}
    meta.update(metadata or {})
    lines = ["{", f' "dim": {cpx.dim},', ' "V": [']
    pts = [" [" + ", ".join(_num(x) for x in row) + "]" for row in cpx.geometry.coords]
    lines += ["  " + p.strip() + ("," if k < len(pts) - 1 else "") for k, p in enumerate(pts)]
    lines.append(" ],")
    lines.append(' "cells": {')
    keys = sorted(p for p in cpx.tables if p >= 1)
    for n, p in enumerate(keys):
        rows = cpx.tables[p].cells
        lines.append(f'  "{p}": [')
        lines += ["   [" + ", ".join(str(v + 1) for v in c) + "]" + ("," if k < len(rows) - 1 else "") for k, c in enumerate(rows)]
        lines.append("  ]" + ("," if n < len(keys) - 1 else ""))
    lines.append(" }" + ("," if meta else ""))
    if meta:
        lines.append(' "metadata": ' + json.dumps(meta, sort_keys=True))
    lines.append("}")
    return "\n".join(lines) + "\n"


def save_lar(obj, path, metadata: dict | None = None) -> None:
    Path(path).write_text(dumps_lar(obj, metadata))


# -------------------------------------------------------- Matrix Market
def dumps_mtx(m: SignedSparseMatrix, exterior_column: int | None = None) -> str:
    """Integer coordinate format, 1-based, entries in column-major order."""
    rows, cols, vals = m.triplets()
    out = ["%%MatrixMarket matrix coordinate integer general"]
    if exterior_column is not None:
        out.append(f"% exterior_column {exterior_column + 1}")
    out.append(f"{m.nrows} {m.ncols} {m.nnz}")
    out += [f"{r + 1} {c + 1} {v}" for r, c, v in zip(rows, cols, vals)]
    return "\n".join(out) + "\n"


def write_mtx(m: SignedSparseMatrix, path, exterior_column: int | None = None) -> None:
    Path(path).write_text(dumps_mtx(m, exterior_column))


def read_mtx(path) -> tuple[SignedSparseMatrix, int | None]:
    """Returns the matrix and the 0-based exterior column, if recorded."""
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].lower().startswith("%%matrixmarket matrix coordinate"):
        raise FormatError(f"{path}: not a Matrix Market coordinate file")
    header = lines[0].lower().split()
    if header[3] not in ("integer", "real") or header[4] != "general":
        raise FormatError(f"{path}: unsupported field/symmetry {header[3:]}")
    ext = None
    body = []
    for ln in lines[1:]:
        if ln.startswith("%"):
            parts = ln[1:].split()
            if len(parts) == 2 and parts[0] == "exterior_column":
                ext = int(parts[1]) - 1
            continue
        if ln.strip():
            body.append(ln.split())
    try:
        nr, nc, nnz = (int(x) for x in body[0])
        trip = np.array([[int(float(x)) for x in row] for row in body[1:]], dtype=np.int64).reshape(-1, 3)
    except (ValueError, IndexError):
        raise FormatError(f"{path}: malformed size line or entries") from None
    if len(trip) != nnz:
        raise FormatError(f"{path}: header says {nnz} entries, found {len(trip)}")
    try:
        m = from_triplets(trip[:, 0] - 1, trip[:, 1] - 1, trip[:, 2], (nr, nc))
    except (IndexError, OverflowError) as exc:
        raise FormatError(f"{path}: {exc}") from None
    return m, ext


# ---------------------------------------------------------------- OBJ
_FREEFORM = {"vp", "cstype", "deg", "bmat", "step", "curv", "curv2", "surf", "parm", "trim", "hole", "scrv", "sp", "end", "con"}
_IGNORED = {"vt", "vn", "o", "g", "s", "usemtl", "mtllib", "l", "p"}


def import_obj(path) -> Complex:
    """Vertices and polygonal faces; edges are the distinct face sides."""
    verts, faces = [], []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        ln = raw.split("#", 1)[0].strip()
        if not ln:
            continue
        key, *args = ln.split()
        if key == "v":
            if len(args) < 3:
                raise FormatError(f"{path}:{lineno}: vertex needs 3 coordinates")
            verts.append([float(a) for a in args[:3]])
        elif key == "f":
            idx = []
            for a in args:
                k = int(a.split("/")[0])
                k = k - 1 if k > 0 else len(verts) + k
                if not 0 <= k < len(verts):
                    raise FormatError(f"{path}:{lineno}: vertex reference {a} out of range")
                idx.append(k)
            if len(idx) < 3:
                raise FormatError(f"{path}:{lineno}: face with fewer than 3 vertices")
            faces.append(idx)
        elif key in _FREEFORM:
            raise FormatError(f"{path}:{lineno}: free-form geometry ('{key}') is not supported")
        elif key not in _IGNORED:
            raise FormatError(f"{path}:{lineno}: unknown statement '{key}'")
    edges = {}
    for f in faces:
        for a, b in zip(f, f[1:] + f[:1]):
            edges.setdefault((min(a, b), max(a, b)), None)
    V = np.array(verts, dtype=np.float64).reshape(-1, 3)
    return Complex(Geometry(V), {1: CellTable(1, list(edges)), 2: CellTable(2, faces)})


@dataclass
class ExplodedCell:
    """One top-dimensional cell as a standalone polygon mesh."""

    cell: int
    coords: np.ndarray
    loops: list[list[int]]


def cell_meshes(result: ChainComplexResult) -> list[ExplodedCell]:
    """Interior top cells as meshes whose polygons are oriented outward."""
    d = result.dim
    top = result.boundary(d, exterior=False)
    W = result.geometry.coords
    ev = np.asarray(result.tables[1].cells, dtype=np.int64).reshape(-1, 2)
    out = []
    for j in range(top.ncols):
        rows, vals = top.column(j)
        if d == 2:
            loops = face_loops(rows, vals, ev)
        else:
            d2 = result.operators[2]
            loops = []
            for f, s in zip(rows, vals):
                fr, fv = d2.column(int(f))
                for loop in face_loops(fr, fv, ev):
                    loops.append(loop if s > 0 else loop[::-1])
        used = sorted({v for lp in loops for v in lp})
        local = {v: k for k, v in enumerate(used)}
        out.append(ExplodedCell(j, W[used], [[local[v] for v in lp] for lp in loops]))
    return out


def explode(result: ChainComplexResult, scale: float = 1.2) -> list[ExplodedCell]:
    """Push every cell away from the complex centroid by ``(scale-1)`` times its offset."""
    if scale < 1:
        raise ValueError("scale must be >= 1")
    center = result.geometry.coords.mean(axis=0)
    cells = cell_meshes(result)
    for c in cells:
        c.coords = c.coords + (scale - 1.0) * (c.coords.mean(axis=0) - center)
    return cells


def dumps_obj(obj) -> str:
    """OBJ text; results and exploded cells become one group per cell.

    Faces with holes are written as one polygon per boundary loop.
    """
    out = []
    if isinstance(obj, Complex):
        V = obj.geometry.coords
        out += ["v " + " ".join(_num(x) for x in _pad3(p)) for p in V]
        out += ["f " + " ".join(str(v + 1) for v in lp) for f in obj.table(2).cells for lp in _polygon_loops(obj, f)]
        return "\n".join(out) + "\n"
    cells = cell_meshes(obj) if isinstance(obj, ChainComplexResult) else list(obj)
    base = 0
    for c in cells:
        out.append(f"g cell{c.cell + 1}")
        out += ["v " + " ".join(_num(x) for x in _pad3(p)) for p in c.coords]
        out += ["f " + " ".join(str(base + v + 1) for v in lp) for lp in c.loops]
        base += len(c.coords)
    return "\n".join(out) + "\n"


def _polygon_loops(cpx: Complex, face) -> list[list[int]]:
    """Vertex loops of a face stored as a vertex set.

    Sides are the edges with both ends in the face; faces of complexes
    without an edge table are taken as convex and ordered by angle.
    """
    verts = set(face)
    adj: dict[int, list[int]] = {}
    if 1 in cpx.tables:
        for a, b in cpx.tables[1].cells:
            if a in verts and b in verts:
                adj.setdefault(a, []).append(b)
                adj.setdefault(b, []).append(a)
    if len(adj) != len(verts) or any(len(n) != 2 for n in adj.values()):
        pts = cpx.geometry.coords[list(face)]
        c = pts.mean(axis=0)
        if pts.shape[1] == 2:
            ang = np.arctan2(pts[:, 1] - c[1], pts[:, 0] - c[0])
        else:
            vt = np.linalg.svd(pts - c)[2]
            ang = np.arctan2((pts - c) @ vt[1], (pts - c) @ vt[0])
        return [[face[k] for k in np.argsort(ang)]]
    loops, seen = [], set()
    for start in sorted(verts):
        if start in seen:
            continue
        loop, prev, cur = [start], None, start
        seen.add(start)
        while True:
            a, b = adj[cur]
            nxt = b if a == prev else a
            if nxt == start:
                break
            loop.append(nxt)
            seen.add(nxt)
            prev, cur = cur, nxt
        loops.append(loop)
    return loops


def _pad3(p):
    return list(p) + [0.0] * (3 - len(p))


def export_obj(obj, path) -> None:
    Path(path).write_text(dumps_obj(obj))


# ----------------------------------------------------- operator folders
def save_operators(result: ChainComplexResult, outdir) -> list[Path]:
    """``d1.mtx``, ``d2.mtx``, ... with the exterior column recorded on the top one."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for p in sorted(result.operators):
        path = out / f"d{p}.mtx"
        write_mtx(result.operators[p], path, result.exterior_cell if p == result.dim else None)
        paths.append(path)
    return paths


def load_result(path, opdir) -> ChainComplexResult:
    """Rebuild an arrangement from its LAR document and operator folder."""
    doc = read_lar(path)
    ops, ext = {}, None
    for p in range(1, doc.dim + 1):
        f = Path(opdir) / f"d{p}.mtx"
        if not f.exists():
            break
        ops[p], e = read_mtx(f)
        if e is not None:
            ext = e
    if not ops:
        raise FormatError(f"no operator files d1.mtx.. in {opdir}")
    if ext is None and doc.metadata.get("exterior_cell") is not None:
        ext = int(doc.metadata["exterior_cell"]) - 1
    cpx = doc.to_complex()
    return ChainComplexResult(cpx.geometry, dict(cpx.tables), ops, ext, dict(doc.metadata))
