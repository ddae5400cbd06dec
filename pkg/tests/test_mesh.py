import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polyprion.mesh import (MaterialLabel, MeshError, MeshFormatError, agglomerate, closure_defect,
                            identity_polymesh, load_partition, load_trimesh, partition_to_polymesh, summary,
                            validate_trimesh, write_partition, write_trimesh)
from polyprion.meshgen import rectangle_trimesh, two_triangle_square, unit_square_trimesh

SQUARE_FILE = """polyprion-tri v1
4
0 0
1 0
1 1
0 1
2
0 1 2 1 1 0
0 2 3 0 0 0
"""


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_load_two_triangle_square(tmp_path):
    tri = load_trimesh(write(tmp_path, "sq.tri", SQUARE_FILE))
    assert tri.n_nodes == 4 and tri.n_triangles == 2
    assert tri.measure == pytest.approx(1.0)
    assert list(tri.tri_label) == [MaterialLabel.WHITE, MaterialLabel.GREY]


def test_clockwise_triangle_repaired(tmp_path):
    text = SQUARE_FILE.replace("0 1 2 1 1 0", "0 2 1 1 1 0")
    with pytest.warns(UserWarning, match="clockwise"):
        tri = load_trimesh(write(tmp_path, "cw.tri", text))
    assert np.all(tri.signed_areas > 0)


def test_edge_shared_by_three_triangles():
    nodes = [[0, 0], [1, 0], [0.5, 1], [0.5, -1], [0.2, 0.4]]
    tris = [[0, 1, 2], [1, 0, 3], [0, 1, 4]]
    with pytest.raises(MeshError, match="non-conforming"):
        validate_trimesh(nodes, tris, [1, 1, 1], np.zeros((3, 2)))


def test_format_errors_name_line(tmp_path):
    bad = SQUARE_FILE.replace("1 1\n0 1", "1 x\n0 1")
    with pytest.raises(MeshFormatError) as exc:
        load_trimesh(write(tmp_path, "bad.tri", bad))
    assert exc.value.lineno == 5
    with pytest.raises(MeshFormatError, match="header"):
        load_trimesh(write(tmp_path, "hdr.tri", "tri v0\n"))
    with pytest.raises(MeshFormatError, match="end of file"):
        load_trimesh(write(tmp_path, "short.tri", SQUARE_FILE.rsplit("\n", 2)[0]))


def test_invalid_label_and_axon():
    nodes = [[0, 0], [1, 0], [0, 1]]
    with pytest.raises(MeshError, match="label"):
        validate_trimesh(nodes, [[0, 1, 2]], [3], [[0, 0]])
    with pytest.raises(MeshError, match="unit length"):
        validate_trimesh(nodes, [[0, 1, 2]], [1], [[0.5, 0]])
    tri = validate_trimesh(nodes, [[0, 1, 2]], [1], [[1.0005, 0]])
    assert np.linalg.norm(tri.tri_axon[0]) == pytest.approx(1.0)


def test_trimesh_round_trip(tmp_path):
    tri = rectangle_trimesh(0, 2, 0, 1, 3, 2, axon=(0.6, 0.8))
    write_trimesh(tri, tmp_path / "r.tri")
    back = load_trimesh(tmp_path / "r.tri")
    assert np.array_equal(back.nodes, tri.nodes)
    assert np.array_equal(back.triangles, tri.triangles)
    assert np.array_equal(back.tri_axon, tri.tri_axon)


def test_partition_examples(tmp_path):
    tri = two_triangle_square()
    one = partition_to_polymesh(tri, [0, 0])
    assert one.n_elements == 1
    assert len(one.interior_faces) == 0 and len(one.boundary_faces) == 4
    two = partition_to_polymesh(tri, [0, 1])
    assert two.n_elements == 2
    assert len(two.interior_faces) == 1 and len(two.boundary_faces) == 4
    assert two.interior_faces[0].length == pytest.approx(np.sqrt(2))
    ident = identity_polymesh(tri)
    assert np.array_equal(ident.elem_of_tri, two.elem_of_tri)


def test_partition_file_gaps_and_split(tmp_path):
    tri = rectangle_trimesh(0, 3, 0, 1, 3, 1)
    # id 5 covers the first and last cells of a 3 x 1 row, id 9 the middle one
    ids = np.array([5, 5, 9, 9, 5, 5])
    p = tmp_path / "m.part"
    p.write_text("polyprion-part v1\n" + "\n".join(map(str, ids)) + "\n")
    with pytest.warns(UserWarning, match="disconnected"):
        poly = load_partition(tri, p)
    assert poly.n_elements == 3
    assert summary(poly)["advisories"]
    write_partition(poly, tmp_path / "out.part")
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        again = load_partition(tri, tmp_path / "out.part")
    assert np.array_equal(again.elem_of_tri, poly.elem_of_tri)


def test_partition_errors(tmp_path):
    tri = two_triangle_square()
    with pytest.raises(MeshError):
        partition_to_polymesh(tri, [0])
    with pytest.raises(MeshError):
        partition_to_polymesh(tri, [0, -1])
    p = write(tmp_path, "x.part", "polyprion-part v1\n0\nz\n")
    with pytest.raises(MeshFormatError):
        load_partition(tri, p)


def test_agglomerate_square_16():
    tri = unit_square_trimesh(8)
    poly = agglomerate(tri, 16)
    assert poly.n_elements == 16
    assert poly.measure == pytest.approx(1.0, abs=1e-10)
    assert np.sum(poly.elem_measure) == pytest.approx(1.0, abs=1e-10)
    assert np.max(closure_defect(poly)) < 1e-12
    # brute-force connectivity audit: every element is edge-connected
    et = tri.edge_tris
    for k, e in enumerate(poly.elements):
        members = set(e.tolist())
        seen, stack = {e[0]}, [e[0]]
        while stack:
            t = stack.pop()
            for row in et[(et[:, 0] == t) | (et[:, 1] == t)]:
                for s in row:
                    if s >= 0 and s in members and s not in seen:
                        seen.add(s)
                        stack.append(s)
        assert seen == members


def test_agglomerate_identity_and_range():
    tri = unit_square_trimesh(3)
    assert agglomerate(tri, tri.n_triangles).n_elements == tri.n_triangles
    for bad in (0, tri.n_triangles + 1):
        with pytest.raises(MeshError):
            agglomerate(tri, bad)


def test_agglomerate_infeasible_labels_advisory():
    tri = unit_square_trimesh(8)
    # checkerboard of grey cells: 32 disconnected grey regions
    i, j = np.divmod(np.arange(64), 8)
    grey = np.repeat((i + j) % 2 == 0, 2)
    tri = validate_trimesh(tri.nodes, tri.triangles, np.where(grey, 0, 1), tri.tri_axon)
    with pytest.warns(UserWarning, match="label-preserving"):
        poly = agglomerate(tri, 8)
    info = summary(poly)
    assert info["advisories"] and info["labels_pure"]
    assert poly.n_elements > 1.2 * 8


@given(st.integers(2, 40), st.integers(0, 5))
def test_agglomerate_properties(n_target, seed):
    tri = unit_square_trimesh(6, alternate=True)
    a = agglomerate(tri, n_target, seed=seed)
    b = agglomerate(tri, n_target, seed=seed)
    assert a.canonical_bytes() == b.canonical_bytes()
    assert sum(len(e) for e in a.elements) == tri.n_triangles
    assert a.n_elements >= 1
    assert np.sum(a.elem_measure) == pytest.approx(1.0, abs=1e-12)
    assert np.max(closure_defect(a)) < 1e-12
    # labels of a label-pure mesh are pure
    assert summary(a)["labels_pure"]
