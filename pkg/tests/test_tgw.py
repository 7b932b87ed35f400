import numpy as np
import pytest

from conftest import polyhedron_skeleton, unit_cube_loops
from larkit.sparse import Chain
from larkit.tgw import (
    Skeleton,
    TGWError,
    UsageLedger,
    extract_all_cells,
    extract_cycle,
    next_petal,
    petal_fan,
    signed_measure,
)
from oracles import enumerate_cells, hull_loops


def square_skeleton():
    V = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
    return Skeleton(V, [[0, 1], [1, 2], [3, 2], [0, 3]])


def star_skeleton():
    """Four axis edges leaving the origin, closed by a diamond."""
    V = np.array([[0, 0], [1, 0], [0, 1], [-1, 0], [0, -1]], dtype=float)
    ev = [[0, 1], [0, 2], [0, 3], [0, 4], [1, 2], [2, 3], [3, 4], [4, 1]]
    return Skeleton(V, ev)


def test_fan_2d_axis_order():
    fan = petal_fan(star_skeleton(), 0)
    k = fan.petals.index(0)
    order = fan.petals[k:] + fan.petals[:k]
    assert order == [0, 1, 2, 3]  # E, N, W, S counter-clockwise
    ang = np.mod(np.roll(fan.angles, -k), 2 * np.pi)
    assert np.allclose(ang, [0, np.pi / 2, np.pi, 3 * np.pi / 2])


def test_next_petal_2d():
    sk = star_skeleton()
    fan = petal_fan(sk, 0)
    # E leaving the hinge, traversed with +1: turn counter-clockwise to N
    assert next_petal(sk, 0, 0, 1) == (1, -1)
    assert fan.next(0, 1) == (1, -1)
    p, s = 0, 1
    seen = []
    for _ in range(len(fan)):
        p, s = fan.next(p, -s)
        seen.append(p)
    assert sorted(seen) == [0, 1, 2, 3] and seen[-1] == 0
    with pytest.raises(TGWError):
        next_petal(sk, 0, 5, 1)


def test_two_petal_fan():
    sk = square_skeleton()
    fan = petal_fan(sk, 0)
    assert len(fan) == 2
    q, t = fan.next(fan.petals[0], 1)
    assert q == fan.petals[1]
    # the hinge cancels
    b = sk.boundary.toarray()
    assert b[0, fan.petals[0]] * 1 + b[0, q] * t == 0


def test_open_hinge():
    sk = Skeleton(np.array([[0, 0], [1, 0], [1, 1]], dtype=float), [[0, 1], [1, 2]])
    with pytest.raises(TGWError):
        petal_fan(sk, 0)


def test_fan_3d_2x1x1_grid():
    # two cubes side by side: the edge x=1, y=0 is shared by three faces
    V0, L0 = unit_cube_loops()
    V1, L1 = unit_cube_loops((1, 0, 0), start=8)
    V = np.vstack([V0, V1])
    # merge shared vertices of the x=1 wall
    remap = {8: 4, 9: 5, 10: 6, 11: 7}
    L1 = [[remap.get(v, v) for v in lp] for lp in L1]
    L1 = [lp for lp in L1 if sorted(lp) != [4, 5, 6, 7]]
    sk, _ = polyhedron_skeleton(V, L0 + L1)
    # edge from (1,0,0) to (1,0,1): vertices 4 and 5
    h = int(np.flatnonzero((sk.edges == [4, 5]).all(axis=1))[0])
    fan = petal_fan(sk, h)
    assert len(fan) == 3
    # dihedral directions into the faces: -x (y=0 face of cube 0), +y (wall), +x (y=0 face of cube 1)
    ang = np.mod(np.array(fan.angles) - fan.angles[0], 2 * np.pi)
    assert np.allclose(sorted(ang), [0, np.pi / 2, np.pi])


def test_coplanar_petals_straight_angle():
    V0, L0 = unit_cube_loops()
    V1, L1 = unit_cube_loops((1, 0, 0), start=8)
    remap = {8: 4, 9: 5, 10: 6, 11: 7}
    L1 = [[remap.get(v, v) for v in lp] for lp in L1 if sorted(remap.get(v, v) for v in lp) != [4, 5, 6, 7]]
    sk, _ = polyhedron_skeleton(np.vstack([V0, V1]), L0 + L1)
    h = int(np.flatnonzero((sk.edges == [4, 5]).all(axis=1))[0])
    fan = petal_fan(sk, h)
    coplanar = [k for k, p in enumerate(fan.petals) if abs(sk.face_normals[p][1]) > 0.5]
    d = abs(fan.angles[coplanar[0]] - fan.angles[coplanar[1]])
    assert np.isclose(d, np.pi)


def test_square_extraction():
    sk = square_skeleton()
    ex = extract_all_cells(sk)
    assert ex.boundary.ncols == 2
    assert sorted(np.round(ex.measures, 12).tolist()) == [-1.0, 1.0]
    assert ex.exterior == [int(np.argmin(ex.measures))]
    c = extract_cycle(sk, (0, 1))
    assert len(c) == 4 and (sk.boundary @ c).is_zero()


def test_signed_measure_square_and_cube():
    sk = square_skeleton()
    ccw = Chain.from_mapping(1, 4, {0: 1, 1: 1, 2: -1, 3: -1})
    assert signed_measure(ccw, sk) == pytest.approx(1.0)
    assert signed_measure(-ccw, sk) == pytest.approx(-1.0)
    V, L = unit_cube_loops()
    cube, _ = polyhedron_skeleton(V, L)
    outward = Chain.from_mapping(2, 6, {f: 1 for f in range(6)})
    assert signed_measure(outward, cube) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(TGWError):
        signed_measure(Chain.from_mapping(2, 6, {0: 1}), cube)


def test_ledger():
    led = UsageLedger(2)
    led.claim(0, 1)
    with pytest.raises(TGWError):
        led.claim(0, 1)
    assert led.next_free() == (0, -1)
    for p, s in ((0, -1), (1, 1), (1, -1)):
        led.claim(p, s)
    assert led.full and led.next_free() is None


def _columns(ex):
    b = ex.boundary.toarray()
    return {tuple(int(x) for x in b[:, j]) for j in range(b.shape[1])}


@pytest.mark.parametrize("seed", range(12))
def test_tgw_matches_enumeration_random_hulls(seed):
    rng = np.random.default_rng(seed)
    pts = rng.random((int(rng.integers(4, 7)), 3))
    loops = hull_loops(pts)
    if len(loops) > 8:
        pytest.skip("more than 8 facets")
    sk, b2 = polyhedron_skeleton(pts, loops)
    ex = extract_all_cells(sk)
    assert _columns(ex) == enumerate_cells(pts, loops, b2)
    # each facet consumed exactly twice, with opposite signs
    b = ex.boundary.toarray()
    assert np.all(np.abs(b).sum(axis=1) == 2) and np.all(b.sum(axis=1) == 0)


def test_tgw_matches_enumeration_bipyramid():
    pts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0.3, 0.3, 1], [0.3, 0.3, -1]], dtype=float)
    loops = [[0, 2, 1], [0, 1, 3], [1, 2, 3], [2, 0, 3], [0, 1, 4], [1, 2, 4], [2, 0, 4]]
    sk, b2 = polyhedron_skeleton(pts, loops)
    ex = extract_all_cells(sk)
    cells = enumerate_cells(pts, loops, b2)
    assert len(cells) == 3
    assert _columns(ex) == cells
    assert len(ex.exterior) == 1


def test_tgw_matches_enumeration_two_tetrahedra():
    tet = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float)
    pts = np.vstack([tet, tet + 3])
    loops = [[0, 2, 1], [0, 1, 3], [1, 2, 3], [2, 0, 3]]
    loops = loops + [[v + 4 for v in lp] for lp in loops]
    sk, b2 = polyhedron_skeleton(pts, loops)
    ex = extract_all_cells(sk)
    assert _columns(ex) == enumerate_cells(pts, loops, b2)
    assert ex.n_components == 2


def test_tgw_minimal_total_support_cube():
    V, L = unit_cube_loops()
    sk, b2 = polyhedron_skeleton(V, L)
    ex = extract_all_cells(sk)
    assert ex.boundary.nnz == 12
    assert _columns(ex) == enumerate_cells(V, L, b2)
