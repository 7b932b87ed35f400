import numpy as np
import pytest

from conftest import cell_volumes, cube_complex
from larkit.arrange3d import (
    DegenerateFaceError,
    IntervalTree,
    _face_data,
    apply_frame,
    assemble,
    build_index,
    face_boxes,
    face_frame,
    fragment_face,
    merge_complexes,
)
from larkit.generators import cuboidal_grid, rotated_grid_pair, transform
from larkit.model import CellTable, Complex, Geometry, validate_chain_complex
from oracles import box_overlaps


def test_assemble_two_cubes(two_cubes_input):
    soup = assemble([two_cubes_input])
    assert len(soup) == 12 and len(soup.coords) == 16
    for f in range(len(soup)):
        segs = soup.face_segments(f)
        assert len(segs) == len(soup.faces[f])
        # every vertex of a face has degree two in its own loop
        _, deg = np.unique(segs, return_counts=True)
        assert set(deg) == {2}


def test_assemble_two_grids():
    soup = assemble(rotated_grid_pair(3))
    assert len(soup) == 216 and len(soup.coords) == 128
    assert set(np.asarray(soup.provenance).ravel().tolist()) >= {0, 1}


def test_assemble_rejects_planar_input():
    flat = Complex(Geometry(np.zeros((3, 2))), {2: CellTable(2, [[0, 1, 2]])})
    with pytest.raises(ValueError):
        assemble([flat])


def test_interval_tree_vs_pairwise():
    rng = np.random.default_rng(4)
    lo = rng.random((200, 3)) * 10
    boxes = np.stack([lo, lo + rng.random((200, 3)) * 2], axis=1)
    expected = box_overlaps(boxes)
    trees = [IntervalTree(boxes[:, 0, k], boxes[:, 1, k]) for k in range(3)]
    got = set()
    for i in range(200):
        hits = trees[0].query(boxes[i, 0, 0], boxes[i, 1, 0])
        for k in (1, 2):
            hits = np.intersect1d(hits, trees[k].query(boxes[i, 0, k], boxes[i, 1, k]))
        got |= {(i, int(j)) for j in hits if j != i}
    assert got == expected


def test_build_index_two_cubes(two_cubes_input):
    soup = assemble([two_cubes_input])
    index = build_index(soup)
    boxes = face_boxes(soup, 1e-8)
    expected = box_overlaps(boxes)
    got = {(f, int(g)) for f in range(len(soup)) for g in index.query(f)}
    assert got == expected


def test_face_frame_is_rigid():
    rng = np.random.default_rng(9)
    for _ in range(20):
        u, v = rng.normal(size=(2, 3))
        c = rng.normal(size=3)
        pts = c + rng.random((6, 1)) * u + rng.random((6, 1)) * v
        M, Minv = face_frame(pts)
        R = M[:3, :3]
        assert np.allclose(R @ R.T, np.eye(3), atol=1e-12)
        assert np.isclose(np.linalg.det(R), 1.0)
        assert np.allclose(M @ Minv, np.eye(4), atol=1e-12)
        loc = apply_frame(M, pts)
        assert np.abs(loc[:, 2]).max() < 1e-12
        d = np.linalg.norm(pts[:, None] - pts[None], axis=-1)
        dl = np.linalg.norm(loc[:, None] - loc[None], axis=-1)
        assert np.allclose(d, dl, atol=1e-12)


def test_face_frame_degenerate():
    with pytest.raises(DegenerateFaceError):
        face_frame([[0, 0, 0], [1, 1, 1], [2, 2, 2]])


def test_fragment_face_split_in_two():
    # a square in z=0 crossed by a vertical square through x=0.5
    base = Complex(Geometry(np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], dtype=float)), {2: CellTable(2, [[0, 1, 2, 3]])})
    wall = Complex(
        Geometry(np.array([[0.5, -1, -1], [0.5, 2, -1], [0.5, 2, 1], [0.5, -1, 1]], dtype=float)),
        {2: CellTable(2, [[0, 1, 2, 3]])},
    )
    soup = assemble([base, wall])
    data = _face_data(soup)
    lifted = fragment_face(0, [1], soup, data)
    assert len(lifted.faces) == 2
    assert np.abs(lifted.coords[:, 2]).max() < 1e-12
    assert sorted(np.round(lifted.coords[:, 0], 12).tolist()).count(0.5) == 2


def test_abutting_cubes_share_face():
    r = merge_complexes([cube_complex(), cube_complex((1, 0, 0))])
    assert r.counts() == [12, 20, 11, 2]
    assert validate_chain_complex(r).ok
    vol = cell_volumes(r)
    assert np.allclose(sorted(vol[: r.exterior_cell]), [1, 1])
    assert np.isclose(vol[r.exterior_cell], -2)


def test_disjoint_cubes_two_roots():
    r = merge_complexes([cube_complex(), cube_complex((3, 0, 0))])
    assert r.counts() == [16, 24, 12, 2]
    poset = r.metadata["poset"]
    assert r.metadata["components"] == 2
    assert poset.parent == [-1, -1] and poset.depth == [0, 0]
    assert validate_chain_complex(r).ok
    # the single exterior column is the sum of both outer shells
    d3 = r.operators[3].toarray()
    assert np.count_nonzero(d3[:, r.exterior_cell]) == 12


def test_nested_cube_cavity():
    r = merge_complexes([cube_complex((0, 0, 0), 3.0), cube_complex((1, 1, 1), 1.0)])
    assert r.counts()[3] == 2
    vol = cell_volumes(r)
    inner = sorted(vol[: r.exterior_cell])
    assert np.allclose(inner, [1, 26])
    assert np.isclose(vol[r.exterior_cell], -27)
    poset = r.metadata["poset"]
    assert sorted(poset.depth) == [0, 1]
    assert validate_chain_complex(r).ok


def test_three_level_nesting():
    cubes = [cube_complex((0, 0, 0), 7.0), cube_complex((1, 1, 1), 5.0), cube_complex((3, 3, 3), 1.0)]
    r = merge_complexes(cubes)
    assert r.counts()[3] == 3
    poset = r.metadata["poset"]
    assert sorted(poset.depth) == [0, 1, 2]
    vol = cell_volumes(r)
    assert np.allclose(sorted(vol[: r.exterior_cell]), [1, 124, 218])
    assert np.isclose(vol.sum(), 0)


def test_merge_of_a_single_grid_is_itself():
    g = cuboidal_grid((2, 2, 2))
    r = merge_complexes([g])
    assert r.counts() == [27, 54, 36, 8]
    assert np.allclose(sorted(cell_volumes(r)[:8]), np.ones(8))


def test_merged_complex_is_clean(rubik_result):
    r = rubik_result
    X = r.geometry.coords
    from scipy.spatial import cKDTree

    assert not cKDTree(X).query_pairs(1e-8, p=np.inf)
    keys = {tuple(sorted(f)) for f in r.tables[2].cells}
    assert len(keys) == len(r.tables[2])
    assert validate_chain_complex(r).ok


def test_rotated_cube_pair_conserves_volume():
    a = cube_complex()
    b = transform(cube_complex((-0.5, -0.5, -0.5)), rotation=(0.3, 0.2, 0.5), translation=(0.9, 0.6, 0.4))
    r = merge_complexes([a, b])
    vol = cell_volumes(r)
    assert np.all(vol[: r.exterior_cell] > 0)
    assert np.isclose(vol.sum(), 0, atol=1e-9)
    assert validate_chain_complex(r).ok
