import json
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from larkit.model import CellTable, Complex, Geometry  # noqa: E402
from larkit.operators import boundary_1, boundary_2_from_cycles  # noqa: E402
from larkit.tgw import Skeleton  # noqa: E402

DATA = Path(__file__).parent / "data"

# filled by test_acceptance: criterion -> [(check, ok, detail)], printed at the end of the session
ACCEPTANCE: dict[str, list[tuple[str, bool, str]]] = {}
CRITERIA = [str(k) for k in range(1, 9)]


def record(criterion: str, check: str, ok: bool, detail: str = "") -> bool:
    ACCEPTANCE.setdefault(criterion, []).append((check, bool(ok), detail))
    return bool(ok)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in CRITERIA:
        checks = ACCEPTANCE.get(key)
        if not checks:
            terminalreporter.write_line(f"criterion {key}: NOT RUN")
            continue
        ok = all(c[1] for c in checks)
        detail = "; ".join(f"{name} {'ok' if good else 'FAILED'}" + (f" ({d})" if d else "") for name, good, d in checks)
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def two_cubes_input():
    d = json.loads((DATA / "two_cubes_input.json").read_text())
    return Complex(Geometry(np.array(d["V"], dtype=float)), {2: CellTable(2, [[v - 1 for v in c] for c in d["cells"]["2"]])})


@pytest.fixture(scope="session")
def two_cubes_expected():
    return json.loads((DATA / "two_cubes_expected.json").read_text())


@pytest.fixture(scope="session")
def two_cubes_result(two_cubes_input):
    from larkit.arrange3d import merge_complexes

    return merge_complexes([two_cubes_input])


@pytest.fixture(scope="session")
def rubik_result():
    from larkit.arrange3d import merge_complexes
    from larkit.generators import rotated_grid_pair

    return merge_complexes(rotated_grid_pair(3))


def polyhedron_skeleton(coords, loops):
    """3D skeleton from oriented vertex loops; returns (Skeleton, dense boundary2)."""
    coords = np.asarray(coords, dtype=float)
    index: dict[tuple[int, int], int] = {}
    cycles = []
    for lp in loops:
        cyc = []
        for a, b in zip(lp, lp[1:] + lp[:1]):
            e = index.setdefault((min(a, b), max(a, b)), len(index))
            cyc.append((e, 1 if a < b else -1))
        cycles.append(cyc)
    ev = np.array(list(index), dtype=np.int64)
    d1 = boundary_1(ev, len(coords))
    d2 = boundary_2_from_cycles(cycles, len(ev), d1)
    return Skeleton(coords, ev, d2), d2.toarray()


def unit_cube_loops(offset=(0, 0, 0), size=1.0, start=0):
    """Vertices and outward loops of an axis-aligned cube."""
    o = np.asarray(offset, dtype=float)
    V = np.array([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)], dtype=float) * size + o
    loops = [
        [0, 1, 3, 2],  # x = 0
        [4, 6, 7, 5],  # x = 1
        [0, 4, 5, 1],  # y = 0
        [2, 3, 7, 6],  # y = 1
        [0, 2, 6, 4],  # z = 0
        [1, 5, 7, 3],  # z = 1
    ]
    return V, [[v + start for v in lp] for lp in loops]


def cube_complex(offset=(0, 0, 0), size=1.0):
    V, loops = unit_cube_loops(offset, size)
    return Complex(Geometry(V), {2: CellTable(2, loops)})


def cell_volumes(result):
    """Signed measure of every column of the top boundary operator."""
    from larkit.sparse import Chain
    from larkit.tgw import signed_measure

    p = result.dim
    skel = Skeleton(result.geometry.coords, np.asarray(result.tables[1].cells), result.operators[2] if p == 3 else None)
    top = result.operators[p]
    out = []
    for j in range(top.ncols):
        rows, vals = top.column(j)
        out.append(signed_measure(Chain(p - 1, top.nrows, np.asarray(rows), np.asarray(vals)), skel))
    return np.array(out)
