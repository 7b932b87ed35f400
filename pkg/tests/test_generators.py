import numpy as np
import pytest

from larkit.arrange2d import planar_arrangement
from larkit.generators import GridSpec, cuboidal_grid, random_segments, rotated_grid_pair, transform
from larkit.model import CellTable, ChainComplexResult, Geometry, validate_chain_complex
from larkit.operators import boundary_1, boundary_2_from_cycles

# first and last cells of the reference 3x3x3 face and cell tables, 1-based
FV_HEAD = [[1, 2, 5, 6], [2, 3, 6, 7], [3, 4, 7, 8], [5, 6, 9, 10]]
FV_TAIL = [[44, 48, 60, 64]]
CV_HEAD = [[1, 2, 5, 6, 17, 18, 21, 22], [2, 3, 6, 7, 18, 19, 22, 23]]
CV_TAIL = [[43, 44, 47, 48, 59, 60, 63, 64]]


@pytest.mark.parametrize(
    "shape,counts",
    [
        ((1, 1, 1), [8, 12, 6, 1]),
        ((3, 3, 3), [64, 144, 108, 27]),
        ((10, 10, 10), [1331, 3630, 3300, 1000]),
        ((2, 3, 1), [24, 46, 29, 6]),
    ],
)
def test_grid_counts(shape, counts):
    g = cuboidal_grid(shape)
    assert [len(g.geometry)] + [len(g.tables[p]) for p in (1, 2, 3)] == counts
    assert {len(c) for c in g.tables[2].cells} == {4}
    assert {len(c) for c in g.tables[3].cells} == {8}


def test_grid_cell_order():
    g = cuboidal_grid((3, 3, 3))
    fv = [[v + 1 for v in c] for c in g.tables[2].cells]
    cv = [[v + 1 for v in c] for c in g.tables[3].cells]
    assert fv[: len(FV_HEAD)] == FV_HEAD
    assert fv[-1:] == FV_TAIL
    assert cv[: len(CV_HEAD)] == CV_HEAD
    assert cv[-1:] == CV_TAIL


def test_grid_spec_rejects_zero():
    with pytest.raises(ValueError):
        GridSpec((0, 1, 1))


def test_grid_validates():
    g = cuboidal_grid((2, 2, 1))
    ev = np.array(g.tables[1].cells)
    index = {tuple(e): k for k, e in enumerate(ev.tolist())}
    X = g.geometry.coords
    cycles = []
    for f in g.tables[2].cells:
        pts = X[list(f)]
        c = pts.mean(axis=0)
        frame = np.linalg.svd(pts - c)[2][:2]
        ang = np.arctan2(*((pts - c) @ frame.T).T[::-1])
        loop = [f[k] for k in np.argsort(ang)]
        cyc = []
        for a, b in zip(loop, loop[1:] + loop[:1]):
            cyc.append((index[(min(a, b), max(a, b))], 1 if a < b else -1))
        cycles.append(cyc)
    d1 = boundary_1(ev, len(X))
    d2 = boundary_2_from_cycles(cycles, len(ev), d1)
    r = ChainComplexResult(Geometry(X), {1: CellTable(1, ev.tolist()), 2: g.tables[2]}, {1: d1, 2: d2}, None)
    assert validate_chain_complex(r).ok


def test_transform_identity_and_quarter_turn():
    x = np.random.default_rng(0).random((5, 3))
    assert np.array_equal(transform(x), x)
    assert np.allclose(transform([[1, 0, 0]], (0, 0, np.pi / 2)), [[0, 1, 0]], atol=1e-12)
    assert np.allclose(transform([[0, 0, 0]], translation=(1, 2, 3)), [[1, 2, 3]])


def test_transform_rigidity():
    a, b = rotated_grid_pair(3)
    x, y = a.geometry.coords, b.geometry.coords
    assert np.allclose(x.mean(axis=0), 0, atol=1e-12)
    dx = np.linalg.norm(x[:, None] - x[None], axis=-1)
    dy = np.linalg.norm(y[:, None] - y[None], axis=-1)
    assert np.abs(dx - dy).max() < 1e-12


def test_transform_order_x_then_z():
    # x first maps y to z, then z leaves it alone
    out = transform([[0, 1, 0]], (np.pi / 2, 0, np.pi / 2))
    assert np.allclose(out, [[0, 0, 1]], atol=1e-12)


def test_random_segments_deterministic():
    a = random_segments(4, seed=3)
    b = random_segments(4, seed=3)
    assert np.array_equal(a.coords, b.coords) and np.array_equal(a.edges, b.edges)
    assert not np.array_equal(a.coords, random_segments(4, seed=4).coords)
    s = random_segments(50, bbox=(-2, 1, 3, 4), seed=1)
    assert s.coords[:, 0].min() >= -2 and s.coords[:, 0].max() <= 3
    assert s.coords[:, 1].min() >= 1 and s.coords[:, 1].max() <= 4


def test_single_segment_is_empty():
    arr = planar_arrangement(random_segments(1, seed=0))
    assert arr.n_faces == 0 and len(arr.edges) == 0


def test_two_hundred_segments_euler():
    arr = planar_arrangement(random_segments(200, seed=0))
    assert arr.n_faces > 1000
    # one connected component with overwhelming probability
    assert arr.n_components == 1
    assert arr.euler() == 2
