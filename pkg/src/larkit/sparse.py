"""Signed sparse matrices in compressed-sparse-column form.

Boundary and coboundary operators, characteristic matrices and chains all
live in the same integer kernel: values are stored as ``int8`` and products
are accumulated in ``int64`` before being narrowed back.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp

VALUE_DTYPE = np.int8
INDEX_DTYPE = np.int64
_VMIN, _VMAX = np.iinfo(VALUE_DTYPE).min, np.iinfo(VALUE_DTYPE).max


class SparseFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SignedSparseMatrix:
    """Immutable CSC matrix with 8-bit signed values and no stored zeros."""

    nrows: int
    ncols: int
    col_ptr: np.ndarray
    row_idx: np.ndarray
    vals: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "col_ptr", np.asarray(self.col_ptr, dtype=INDEX_DTYPE))
        object.__setattr__(self, "row_idx", np.asarray(self.row_idx, dtype=INDEX_DTYPE))
        object.__setattr__(self, "vals", np.asarray(self.vals, dtype=VALUE_DTYPE))
        for a in (self.col_ptr, self.row_idx, self.vals):
            a.setflags(write=False)
        self._check()

    def _check(self):
        cp, ri, v = self.col_ptr, self.row_idx, self.vals
        if self.nrows < 0 or self.ncols < 0:
            raise SparseFormatError("negative shape")
        if cp.shape != (self.ncols + 1,) or cp[0] != 0:
            raise SparseFormatError("col_ptr must have length ncols+1 and start at 0")
        if np.any(np.diff(cp) < 0):
            raise SparseFormatError("col_ptr must be nondecreasing")
        if cp[-1] != len(ri) or len(ri) != len(v):
            raise SparseFormatError("col_ptr[ncols] must equal the number of stored entries")
        if len(ri) and (ri.min() < 0 or ri.max() >= self.nrows):
            raise SparseFormatError("row index out of range")
        if np.any(v == 0):
            raise SparseFormatError("stored zero value")
        if len(ri) > 1:
            # strictly increasing rows inside each column
            inc = np.diff(ri) > 0
            starts = np.zeros(len(ri), dtype=bool)
            starts[cp[:-1][np.diff(cp) > 0]] = True
            if not np.all(inc | starts[1:]):
                raise SparseFormatError("row indices must be strictly increasing within a column")

    # ------------------------------------------------------------------ views
    @property
    def shape(self) -> tuple[int, int]:
        return (self.nrows, self.ncols)

    @property
    def nnz(self) -> int:
        return len(self.vals)

    @property
    def T(self) -> "SignedSparseMatrix":
        return transpose(self)

    def column(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        """Row indices and values stored in column ``j``."""
        a, b = self.col_ptr[j], self.col_ptr[j + 1]
        return self.row_idx[a:b], self.vals[a:b]

    def columns(self):
        for j in range(self.ncols):
            yield self.column(j)

    def col_counts(self) -> np.ndarray:
        return np.diff(self.col_ptr)

    def row_counts(self) -> np.ndarray:
        return np.bincount(self.row_idx, minlength=self.nrows)

    def triplets(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        cols = np.repeat(np.arange(self.ncols, dtype=INDEX_DTYPE), self.col_counts())
        return self.row_idx.copy(), cols, self.vals.copy()

    def toarray(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=np.int64)
        r, c, v = self.triplets()
        out[r, c] = v
        return out

    def to_scipy(self, dtype=np.int64) -> sp.csc_matrix:
        return sp.csc_matrix(
            (self.vals.astype(dtype), self.row_idx, self.col_ptr), shape=self.shape
        )

    def select_columns(self, cols: Iterable[int]) -> "SignedSparseMatrix":
        cols = np.asarray(list(cols), dtype=INDEX_DTYPE)
        return from_scipy(self.to_scipy()[:, cols])

    def is_zero(self) -> bool:
        return self.nnz == 0

    # -------------------------------------------------------------- operators
    def __matmul__(self, other):
        if isinstance(other, SignedSparseMatrix):
            return multiply(self, other)
        if isinstance(other, Chain):
            return apply(self, other)
        return NotImplemented

    def __neg__(self):
        return SignedSparseMatrix(self.nrows, self.ncols, self.col_ptr, self.row_idx, -self.vals)

    def __eq__(self, other):
        if not isinstance(other, SignedSparseMatrix):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.col_ptr, other.col_ptr)
            and np.array_equal(self.row_idx, other.row_idx)
            and np.array_equal(self.vals, other.vals)
        )

    def __hash__(self):
        return hash((self.shape, self.row_idx.tobytes(), self.col_ptr.tobytes(), self.vals.tobytes()))

    def __repr__(self):
        return f"SignedSparseMatrix({self.nrows}x{self.ncols}, nnz={self.nnz})"


def _narrow(values: np.ndarray) -> np.ndarray:
    if len(values) and (values.min() < _VMIN or values.max() > _VMAX):
        raise OverflowError(
            f"entry outside int8 range [{_VMIN}, {_VMAX}]: "
            f"min={values.min()}, max={values.max()}"
        )
    return values.astype(VALUE_DTYPE)


def from_scipy(m) -> SignedSparseMatrix:
    """Canonicalise any scipy sparse matrix (duplicates summed, zeros pruned)."""
    m = sp.csc_matrix(m, dtype=np.int64)
    m.sum_duplicates()
    m.eliminate_zeros()
    m.sort_indices()
    return SignedSparseMatrix(m.shape[0], m.shape[1], m.indptr, m.indices, _narrow(m.data))


def from_triplets(rows, cols, vals, shape) -> SignedSparseMatrix:
    """Build a matrix from coordinate triplets.

    Duplicate ``(row, col)`` pairs are summed and the zeros that result are
    pruned, so ``from_triplets([0, 0], [0, 0], [1, -1], (1, 1))`` is empty.
    """
    rows = np.asarray(rows, dtype=INDEX_DTYPE).ravel()
    cols = np.asarray(cols, dtype=INDEX_DTYPE).ravel()
    vals = np.asarray(vals, dtype=np.int64).ravel()
    if not (len(rows) == len(cols) == len(vals)):
        raise ValueError("rows, cols and vals must have equal length")
    nrows, ncols = int(shape[0]), int(shape[1])
    if len(rows):
        if rows.min() < 0 or rows.max() >= nrows:
            raise IndexError("row index out of range")
        if cols.min() < 0 or cols.max() >= ncols:
            raise IndexError("column index out of range")
    return from_scipy(sp.coo_matrix((vals, (rows, cols)), shape=(nrows, ncols)))


def from_dense(a) -> SignedSparseMatrix:
    a = np.asarray(a, dtype=np.int64)
    return from_scipy(sp.csc_matrix(a))


def zeros(shape) -> SignedSparseMatrix:
    return SignedSparseMatrix(int(shape[0]), int(shape[1]), np.zeros(int(shape[1]) + 1), [], [])


def identity(n: int) -> SignedSparseMatrix:
    return SignedSparseMatrix(n, n, np.arange(n + 1), np.arange(n), np.ones(n))


def transpose(m: SignedSparseMatrix) -> SignedSparseMatrix:
    return from_scipy(m.to_scipy().T)


def multiply(a: SignedSparseMatrix, b: SignedSparseMatrix) -> SignedSparseMatrix:
    """Exact integer product; raises ``OverflowError`` instead of wrapping."""
    if a.ncols != b.nrows:
        raise ValueError(f"dimension mismatch: {a.shape} @ {b.shape}")
    return from_scipy(a.to_scipy() @ b.to_scipy())


def hstack(blocks: list[SignedSparseMatrix]) -> SignedSparseMatrix:
    return from_scipy(sp.hstack([b.to_scipy() for b in blocks], format="csc"))


@dataclass(frozen=True, eq=False)
class Chain:
    """A sparse p-chain: signed combination of p-cells out of ``length``."""

    dim: int
    length: int
    cells: np.ndarray
    coefs: np.ndarray

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=INDEX_DTYPE).ravel()
        coefs = np.asarray(self.coefs, dtype=np.int64).ravel()
        if len(cells) != len(coefs):
            raise ValueError("cells and coefs must have equal length")
        if len(cells):
            if cells.min() < 0 or cells.max() >= self.length:
                raise IndexError("cell index out of range")
            if len(np.unique(cells)) != len(cells):
                raise ValueError("duplicate cell index in chain")
            if np.any(coefs == 0):
                raise ValueError("zero coefficient in chain")
        order = np.argsort(cells, kind="stable")
        object.__setattr__(self, "cells", cells[order])
        object.__setattr__(self, "coefs", _narrow(coefs[order]))

    @classmethod
    def from_mapping(cls, dim: int, length: int, entries: Mapping[int, int]) -> "Chain":
        items = [(k, v) for k, v in entries.items() if v != 0]
        return cls(dim, length, [k for k, _ in items], [v for _, v in items])

    @classmethod
    def from_dense(cls, dim: int, vector) -> "Chain":
        vector = np.asarray(vector, dtype=np.int64)
        nz = np.flatnonzero(vector)
        return cls(dim, len(vector), nz, vector[nz])

    def as_dict(self) -> dict[int, int]:
        return {int(c): int(v) for c, v in zip(self.cells, self.coefs)}

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.length, dtype=np.int64)
        out[self.cells] = self.coefs
        return out

    def is_zero(self) -> bool:
        return len(self.cells) == 0

    def __neg__(self):
        return Chain(self.dim, self.length, self.cells, -self.coefs.astype(np.int64))

    def __len__(self):
        return len(self.cells)

    def __eq__(self, other):
        if not isinstance(other, Chain):
            return NotImplemented
        return (
            self.dim == other.dim
            and self.length == other.length
            and np.array_equal(self.cells, other.cells)
            and np.array_equal(self.coefs, other.coefs)
        )

    def __repr__(self):
        return f"Chain(dim={self.dim}, {self.as_dict()})"


def apply(m: SignedSparseMatrix, c: Chain, dim: int | None = None) -> Chain:
    """Sparse matrix-chain product; the result has dimension ``c.dim - 1`` by default."""
    if c.length != m.ncols:
        raise ValueError(f"chain length {c.length} does not match {m.ncols} columns")
    acc = np.zeros(m.nrows, dtype=np.int64)
    for j, v in zip(c.cells, c.coefs):
        rows, vals = m.column(j)
        acc[rows] += int(v) * vals.astype(np.int64)
    return Chain.from_dense(c.dim - 1 if dim is None else dim, acc)
