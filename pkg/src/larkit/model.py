"""LAR data model: geometry, cell tables, complexes and chain-complex results."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .sparse import SignedSparseMatrix, from_triplets, multiply


class ModelError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Geometry:
    """``n`` points with ``dim`` coordinates each."""

    coords: np.ndarray

    def __post_init__(self):
        c = np.array(self.coords, dtype=np.float64)
        if c.ndim != 2 or c.shape[1] not in (2, 3):
            raise ModelError(f"coordinates must be an (n, 2) or (n, 3) array, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ModelError("non-finite coordinate")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def __len__(self):
        return self.coords.shape[0]


@dataclass(frozen=True, eq=False)
class CellTable:
    """Cells of dimension ``dim`` as tuples of 0-based vertex indices."""

    dim: int
    cells: tuple[tuple[int, ...], ...]

    def __init__(self, dim: int, cells: Sequence[Sequence[int]] = ()):
        object.__setattr__(self, "dim", int(dim))
        object.__setattr__(self, "cells", tuple(tuple(int(v) for v in c) for c in cells))

    def __len__(self):
        return len(self.cells)

    def __iter__(self):
        return iter(self.cells)

    def __getitem__(self, k):
        return self.cells[k]

    def __eq__(self, other):
        if not isinstance(other, CellTable):
            return NotImplemented
        return self.dim == other.dim and self.cells == other.cells

    def __hash__(self):
        return hash((self.dim, self.cells))

    def validate(self, nverts: int) -> None:
        for k, c in enumerate(self.cells):
            if len(set(c)) < self.dim + 1:
                raise ModelError(f"{self.dim}-cell {k} has fewer than {self.dim + 1} distinct vertices")
            if min(c) < 0 or max(c) >= nverts:
                raise ModelError(f"{self.dim}-cell {k} references a vertex out of range")

    def max_index(self) -> int:
        return max((max(c) for c in self.cells if c), default=-1)


@dataclass(frozen=True, eq=False)
class Complex:
    geometry: Geometry
    tables: dict[int, CellTable] = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.geometry)
        for p, t in self.tables.items():
            if t.dim != p:
                raise ModelError(f"table stored under key {p} has dimension {t.dim}")
            if t.max_index() >= n:
                raise ModelError(f"{p}-cells reference vertex {t.max_index()} but only {n} exist")

    @property
    def dim(self) -> int:
        return self.geometry.dim

    @property
    def V(self) -> np.ndarray:
        return self.geometry.coords

    def table(self, p: int) -> CellTable:
        if p == 0:
            return CellTable(0, [(i,) for i in range(len(self.geometry))])
        try:
            return self.tables[p]
        except KeyError:
            raise ModelError(f"complex has no {p}-cell table") from None

    def counts(self) -> list[int]:
        return [len(self.geometry)] + [len(self.tables[p]) for p in sorted(self.tables) if p > 0]


@dataclass(frozen=True, eq=False)
class ChainComplexResult:
    """Output of an arrangement: geometry, tables, and boundary operators.

    ``operators[p]`` is the signed matrix of the boundary map from p-cells to
    (p-1)-cells.  The top operator keeps the exterior cycle as column
    ``exterior_cell``; the tables hold interior cells only.
    """

    geometry: Geometry
    tables: dict[int, CellTable]
    operators: dict[int, SignedSparseMatrix]
    exterior_cell: int | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return max(self.operators) if self.operators else 0

    @property
    def W(self) -> np.ndarray:
        return self.geometry.coords

    def boundary(self, p: int, exterior: bool = True) -> SignedSparseMatrix:
        m = self.operators[p]
        if exterior or p != self.dim or self.exterior_cell is None:
            return m
        keep = [j for j in range(m.ncols) if j != self.exterior_cell]
        return m.select_columns(keep)

    def coboundary(self, p: int, exterior: bool = True) -> SignedSparseMatrix:
        """delta_p, the transpose of the boundary map on (p+1)-cells."""
        return self.boundary(p + 1, exterior).T

    def counts(self, exterior: bool = False) -> list[int]:
        out = [len(self.geometry)]
        for p in range(1, self.dim + 1):
            out.append(self.operators[p].ncols)
        if not exterior and self.exterior_cell is not None:
            out[-1] -= 1
        return out

    def as_complex(self) -> Complex:
        return Complex(self.geometry, dict(self.tables))


def characteristic_matrix(table: CellTable, nverts: int) -> SignedSparseMatrix:
    """Binary cells-by-vertices matrix M_p."""
    rows, cols = [], []
    for k, cell in enumerate(table.cells):
        for v in sorted(set(cell)):
            if v < 0 or v >= nverts:
                raise IndexError(f"vertex {v} of cell {k} out of range for {nverts} vertices")
            rows.append(k)
            cols.append(v)
    return from_triplets(rows, cols, np.ones(len(rows), dtype=np.int64), (len(table), nverts))


def canonicalize(table: CellTable) -> tuple[CellTable, np.ndarray]:
    """Sort each cell, drop repeated vertices and repeated cells.

    Returns the canonical table and ``mapping`` with ``mapping[old] = new``.
    The first occurrence of each cell keeps its relative position.
    """
    seen: dict[tuple[int, ...], int] = {}
    cells = []
    mapping = np.empty(len(table), dtype=np.int64)
    for k, c in enumerate(table.cells):
        key = tuple(sorted(set(c)))
        j = seen.get(key)
        if j is None:
            j = seen[key] = len(cells)
            cells.append(key)
        mapping[k] = j
    return CellTable(table.dim, cells), mapping


def euler_characteristic(obj) -> int:
    """Alternating sum of cell counts.

    Accepts a ``Complex`` (all tables 1..d must be present), a
    ``ChainComplexResult`` (interior cells only), or a plain list of counts.
    """
    if isinstance(obj, ChainComplexResult):
        counts = obj.counts(exterior=False)
    elif isinstance(obj, Complex):
        counts = [len(obj.geometry)] + [len(obj.table(p)) for p in range(1, obj.dim + 1)]
    else:
        counts = list(obj)
    return int(sum((-1) ** p * c for p, c in enumerate(counts)))


def euler_both(result: ChainComplexResult) -> dict[str, int]:
    """Euler characteristic with and without the exterior cell."""
    return {
        "interior": euler_characteristic(result.counts(exterior=False)),
        "with_exterior": euler_characteristic(result.counts(exterior=True)),
    }


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ValidationReport:
    checks: list[Check] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def add(self, name, passed, detail=""):
        self.checks.append(Check(name, bool(passed), detail))

    def lines(self) -> list[str]:
        return [f"{'PASS' if c.passed else 'FAIL'}\t{c.name}\t{c.detail}" for c in self.checks]


def validate_operators(
    operators: dict[int, SignedSparseMatrix], exterior_included: bool = True
) -> ValidationReport:
    report = ValidationReport()
    dims = sorted(operators)
    for p in dims:
        m = operators[p]
        ok = bool(len(m.vals) == 0 or np.all(np.abs(m.vals) == 1))
        report.add(f"values_unit[{p}]", ok, f"{m.shape[0]}x{m.shape[1]} nnz={m.nnz}")
    for p in dims:
        if p - 1 in operators:
            a, b = operators[p - 1], operators[p]
            if a.ncols != b.nrows:
                report.add(f"shape[{p - 1},{p}]", False, f"{a.shape} vs {b.shape}")
                continue
            report.add(f"shape[{p - 1},{p}]", True, f"{a.shape} @ {b.shape}")
            prod = multiply(a, b)
            if prod.is_zero():
                report.add(f"boundary_boundary[{p - 1},{p}]", True, "zero")
            else:
                cols = sorted(set(prod.triplets()[1].tolist()))
                report.add(
                    f"boundary_boundary[{p - 1},{p}]",
                    False,
                    f"nonzero in columns {cols[:10]}{'...' if len(cols) > 10 else ''}",
                )
    if exterior_included and dims:
        top = operators[dims[-1]]
        deg = top.row_counts()
        bad = np.flatnonzero(deg != 2)
        sums = np.zeros(top.nrows, dtype=np.int64)
        r, _, v = top.triplets()
        np.add.at(sums, r, v.astype(np.int64))
        opp = np.flatnonzero(sums != 0)
        report.add(
            f"row_degree[{dims[-1]}]",
            len(bad) == 0,
            "every row has 2 nonzeros" if len(bad) == 0 else f"rows {bad[:10].tolist()} degree != 2",
        )
        report.add(
            f"row_opposite[{dims[-1]}]",
            len(opp) == 0,
            "every row sums to 0" if len(opp) == 0 else f"rows {opp[:10].tolist()} not opposite",
        )
    return report


def validate_chain_complex(result: ChainComplexResult) -> ValidationReport:
    """Check shapes, boundary-of-boundary and top-operator row structure."""
    report = validate_operators(result.operators, exterior_included=result.exterior_cell is not None)
    n = len(result.geometry)
    if 1 in result.operators:
        report.add("shape[0]", result.operators[1].nrows == n, f"{n} vertices")
    for p, t in result.tables.items():
        if p in result.operators:
            ncols = result.boundary(p, exterior=False).ncols
            report.add(f"table_count[{p}]", len(t) == ncols, f"{len(t)} cells vs {ncols} columns")
    return report


def cells_from_boundary(boundary: SignedSparseMatrix, lower_table: CellTable) -> CellTable:
    """Recover M_d: each column's cell is the union of its faces' vertices."""
    if boundary.nrows != len(lower_table):
        raise ValueError(
            f"boundary has {boundary.nrows} rows but lower table has {len(lower_table)} cells"
        )
    cells = []
    for rows, _ in boundary.columns():
        verts = set()
        for r in rows:
            verts.update(lower_table.cells[r])
        cells.append(tuple(sorted(verts)))
    return CellTable(lower_table.dim + 1, cells)
