"""Deterministic test and benchmark complexes."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .arrange2d import SegmentSoup
from .model import CellTable, Complex, Geometry


@dataclass(frozen=True)
class GridSpec:
    shape: tuple[int, int, int]
    size: float = 1.0

    def __post_init__(self):
        if len(self.shape) != 3 or any(int(n) < 1 for n in self.shape):
            raise ValueError(f"grid shape must be three counts >= 1, got {self.shape}")


def cuboidal_grid(spec: GridSpec | tuple[int, int, int], size: float = 1.0) -> Complex:
    """Solid grid of ``nx * ny * nz`` axis-aligned cubes with all its skeletons.

    Vertices are numbered lexicographically with the last coordinate varying
    fastest.  Cells of each dimension are grouped by the set of axes they
    span, in product order (for faces: x-normal, y-normal, z-normal), and
    sorted by their lowest vertex inside a group; every cell lists its
    vertices in ascending order.
    """
    if not isinstance(spec, GridSpec):
        spec = GridSpec(tuple(int(n) for n in spec), size)
    nx, ny, nz = spec.shape
    dims = (nx + 1, ny + 1, nz + 1)
    ijk = np.array(list(itertools.product(*(range(d) for d in dims))), dtype=np.float64)
    coords = ijk * spec.size

    def vid(i, j, k):
        return (i * dims[1] + j) * dims[2] + k

    tables = {}
    counts = (nx, ny, nz)
    for p in (1, 2, 3):
        cells = []
        # spans[a] == 1 when the cell extends along axis a
        for spans in itertools.product((0, 1), repeat=3):
            if sum(spans) != p:
                continue
            ranges = [range(counts[a] if spans[a] else dims[a]) for a in range(3)]
            for base in itertools.product(*ranges):
                offsets = itertools.product(*[(0, 1) if s else (0,) for s in spans])
                verts = sorted(vid(*(b + o for b, o in zip(base, off))) for off in offsets)
                cells.append(verts)
        tables[p] = CellTable(p, cells)
    return Complex(Geometry(coords), tables)


def rotation_matrix(rotation) -> np.ndarray:
    """R = Rz @ Ry @ Rx: rotate about x first, then y, then z."""
    rx, ry, rz = (float(a) for a in rotation)
    cx, sx = np.cos(rx), np.sin(rx)
    cy, sy = np.cos(ry), np.sin(ry)
    cz, sz = np.cos(rz), np.sin(rz)
    Rx = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]])
    Ry = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    Rz = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]])
    return Rz @ Ry @ Rx


def transform(geometry, rotation=(0.0, 0.0, 0.0), translation=(0.0, 0.0, 0.0)):
    """Rotate (x, then y, then z) and translate points; accepts arrays, ``Geometry`` or ``Complex``."""
    if isinstance(geometry, Complex):
        return Complex(transform(geometry.geometry, rotation, translation), dict(geometry.tables))
    if isinstance(geometry, Geometry):
        return Geometry(transform(geometry.coords, rotation, translation))
    x = np.asarray(geometry, dtype=np.float64)
    return x @ rotation_matrix(rotation).T + np.asarray(translation, dtype=np.float64)


def centered(cpx: Complex) -> Complex:
    """Translate a complex so that the centroid of its vertices is the origin."""
    x = cpx.geometry.coords
    return Complex(Geometry(x - x.mean(axis=0)), dict(cpx.tables))


def rotated_grid_pair(n: int | tuple[int, int, int], rotation=(np.pi / 6, 0.0, np.pi / 6)) -> list[Complex]:
    """Two centroid-centred grids, the second one rotated."""
    shape = (n, n, n) if np.isscalar(n) else tuple(n)
    g = centered(cuboidal_grid(GridSpec(shape)))
    return [g, transform(g, rotation)]


def random_segments(n: int, bbox=(0.0, 0.0, 1.0, 1.0), seed: int = 0) -> SegmentSoup:
    """``n`` segments with endpoints uniform in ``bbox = (xmin, ymin, xmax, ymax)``."""
    if n < 1:
        raise ValueError("need at least one segment")
    x0, y0, x1, y1 = (float(v) for v in bbox)
    rng = np.random.default_rng(seed)
    pts = rng.random((n, 2, 2)) * [x1 - x0, y1 - y0] + [x0, y0]
    return SegmentSoup.from_segments(pts)


def simplicial_grid(nx: int, ny: int) -> Complex:
    """Triangulated ``nx * ny`` square grid (each square split along its diagonal)."""
    coords = np.array([(i, j) for i in range(nx + 1) for j in range(ny + 1)], dtype=np.float64)

    def vid(i, j):
        return i * (ny + 1) + j

    tris, edges = [], set()
    for i in range(nx):
        for j in range(ny):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            tris += [(a, b, c), (a, c, d)]
    for t in tris:
        for u, v in ((t[0], t[1]), (t[1], t[2]), (t[0], t[2])):
            edges.add((min(u, v), max(u, v)))
    return Complex(Geometry(coords), {1: CellTable(1, sorted(edges)), 2: CellTable(2, tris)})
