import numpy as np
import pytest

from larkit.generators import cuboidal_grid, simplicial_grid
from larkit.model import (
    CellTable,
    ChainComplexResult,
    Complex,
    Geometry,
    ModelError,
    canonicalize,
    cells_from_boundary,
    characteristic_matrix,
    euler_both,
    euler_characteristic,
    validate_chain_complex,
)
from larkit.operators import boundary_1, boundary_2_from_cycles
from larkit.sparse import from_dense, from_scipy


def test_geometry_validation():
    with pytest.raises(ModelError):
        Geometry(np.zeros((3, 4)))
    with pytest.raises(ModelError):
        Geometry(np.array([[0.0, np.nan]]))
    assert Geometry(np.zeros((2, 3))).dim == 3


def test_cell_table_validation():
    t = CellTable(2, [[0, 1, 5]])
    with pytest.raises(ModelError):
        t.validate(3)
    with pytest.raises(ModelError):
        CellTable(2, [[0, 1]]).validate(3)


def test_characteristic_matrix_triangle():
    m = characteristic_matrix(CellTable(2, [[0, 1, 2]]), 3)
    assert m.toarray().tolist() == [[1, 1, 1]]
    with pytest.raises(IndexError):
        characteristic_matrix(CellTable(2, [[0, 1, 3]]), 3)


def test_characteristic_matrix_two_cubes(two_cubes_input):
    m = characteristic_matrix(two_cubes_input.tables[2], 16)
    assert m.shape == (12, 16)
    assert m.nnz == 48


def test_characteristic_matrix_grid_sums():
    g = cuboidal_grid((3, 3, 3))
    m = characteristic_matrix(g.tables[2], len(g.geometry)).toarray()
    assert m.shape == (108, 64)
    assert set(m.sum(axis=1)) == {4}
    counts = np.zeros(64, dtype=int)
    for f in g.tables[2]:
        counts[list(f)] += 1
    assert np.array_equal(m.sum(axis=0), counts)


def test_canonicalize():
    t, mp = canonicalize(CellTable(2, [[3, 1, 2], [2, 1, 3]]))
    assert t.cells == ((1, 2, 3),)
    assert mp.tolist() == [0, 0]
    t2, mp2 = canonicalize(t)
    assert t2 == t and mp2.tolist() == [0]
    rot, _ = canonicalize(CellTable(2, [[0, 1, 2, 3], [2, 3, 0, 1], [4, 5, 6]]))
    assert len(rot) == 2


def test_euler():
    tri = Complex(Geometry(np.eye(3)[:, :2]), {1: CellTable(1, [[0, 1], [1, 2], [0, 2]]), 2: CellTable(2, [[0, 1, 2]])})
    assert euler_characteristic(tri) == 1
    assert euler_characteristic([11361, 20813, 9454]) == 2
    assert euler_characteristic([8787, 26732, 26600, 8655]) == 0
    with pytest.raises(ModelError):
        euler_characteristic(Complex(Geometry(np.zeros((1, 2))), {2: CellTable(2, [])}))


def _square_result():
    V = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
    ev = [[0, 1], [1, 2], [3, 2], [0, 3]]
    d1 = boundary_1(ev, 4)
    d2 = boundary_2_from_cycles([[(0, 1), (1, 1), (2, -1), (3, -1)], [(0, -1), (1, -1), (2, 1), (3, 1)]], 4, d1)
    return ChainComplexResult(Geometry(V), {1: CellTable(1, ev), 2: CellTable(2, [[0, 1, 2, 3]])}, {1: d1, 2: d2}, 1)


def test_validate_pass_and_counts():
    r = _square_result()
    rep = validate_chain_complex(r)
    assert rep.ok, rep.lines()
    assert r.counts() == [4, 4, 1]
    assert r.counts(exterior=True) == [4, 4, 2]
    assert euler_both(r) == {"interior": 1, "with_exterior": 2}


def test_validate_detects_sign_flip():
    r = _square_result()
    d2 = r.operators[2].to_scipy().tolil()
    d2[1, 0] = -d2[1, 0]
    r.operators[2] = from_scipy(d2.tocsc())
    rep = validate_chain_complex(r)
    assert not rep.ok
    names = {c.name for c in rep.failures()}
    assert any(n.startswith("boundary_boundary") for n in names)
    assert any("columns [0" in c.detail for c in rep.failures() if c.name.startswith("boundary_boundary"))


def test_validate_two_cubes(two_cubes_result):
    assert validate_chain_complex(two_cubes_result).ok


def test_simplicial_grid_validates():
    cpx = simplicial_grid(3, 2)
    ev = cpx.tables[1]
    index = {tuple(e): k for k, e in enumerate(ev.cells)}
    cycles = []
    for t in cpx.tables[2]:
        cyc = []
        # oriented simplex rule: boundary of [a,b,c] = [b,c] - [a,c] + [a,b]
        for (u, v), s in (((t[1], t[2]), 1), ((t[0], t[2]), -1), ((t[0], t[1]), 1)):
            e = index[(min(u, v), max(u, v))]
            cyc.append((e, s if u < v else -s))
        cycles.append(cyc)
    d1 = boundary_1(ev, len(cpx.geometry))
    d2 = boundary_2_from_cycles(cycles, len(ev), d1)
    r = ChainComplexResult(cpx.geometry, dict(cpx.tables), {1: d1, 2: d2}, None)
    assert validate_chain_complex(r).ok


def test_cells_from_boundary():
    faces = CellTable(2, [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]])
    b = from_dense([[1], [-1], [1], [-1]])
    assert cells_from_boundary(b, faces).cells == ((0, 1, 2, 3),)
    g = cuboidal_grid((1, 1, 1))
    b = from_dense(np.ones((6, 1), dtype=int))
    assert cells_from_boundary(b, g.tables[2]).cells == (tuple(range(8)),)
    with pytest.raises(ValueError):
        cells_from_boundary(from_dense(np.ones((5, 1), dtype=int)), g.tables[2])


def test_cells_from_boundary_two_cubes(two_cubes_result, two_cubes_expected):
    sizes = sorted(len(c) for c in two_cubes_result.tables[3].cells)
    assert sizes == sorted(len(c) for c in two_cubes_expected["CW"])
