import numpy as np
import pytest

from cutdarcy.fespace import DofLayout, evaluate, interpolate_velocity
from cutdarcy.geometry import Circle
from cutdarcy.macro import (OrphanSmallElement, build_macro_partition, classify_large, dump_macro,
                            extend_polynomial)
from cutdarcy.mesh import build_background_mesh, extract_active_mesh


@pytest.fixture(scope="module")
def circle():
    return extract_active_mesh(build_background_mesh(16, 16), Circle((0.5, 0.5), 0.45))


def test_large_elements_are_their_own_roots(circle):
    part = build_macro_partition(circle, 0.3)
    large = classify_large(circle, 0.3)
    np.testing.assert_array_equal(part.roots, np.sort(large))
    np.testing.assert_array_equal(part.assignment[large], large)
    assert np.all(part.distance[large] == 0)


def test_partition_is_total_and_single_valued(circle):
    part = build_macro_partition(circle, 0.3)
    act = circle.active_elements
    assert np.all(part.assignment[act] >= 0)
    inactive = np.setdiff1d(np.arange(circle.background.n_elements), act)
    assert np.all(part.assignment[inactive] == -1)
    members = np.concatenate(list(part.macroelements().values()))
    assert sorted(members.tolist()) == sorted(act.tolist())


def test_small_elements_reach_root_through_macro_faces(circle):
    part = build_macro_partition(circle, 0.3)
    fe = circle.background.face_elements
    adj = {}
    for f in part.macro_faces:
        a, b = fe[f]
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    for root, members in part.macroelements().items():
        seen, stack = {root}, [root]
        while stack:
            for n in adj.get(stack.pop(), ()):
                if n not in seen and part.assignment[n] == root:
                    seen.add(n)
                    stack.append(n)
        assert seen == set(members.tolist())


def test_macro_faces_are_interior_stabilized_faces(circle):
    part = build_macro_partition(circle, 0.3)
    fe = circle.background.face_elements
    assert set(part.macro_faces.tolist()) <= set(circle.stabilized_faces().tolist())
    np.testing.assert_array_equal(part.assignment[fe[part.macro_faces, 0]],
                                  part.assignment[fe[part.macro_faces, 1]])


def test_no_large_element_raises_orphan(circle):
    with pytest.raises(OrphanSmallElement):
        build_macro_partition(circle, 1.5)


def test_extension_agrees_inside_own_element(circle):
    lay = DofLayout.build(circle)
    fe = interpolate_velocity(lay, lambda x: np.stack([x[..., 1], -x[..., 0] ** 2], -1))
    t = int(circle.cut_elements[0])
    pts = circle.background.element_vertices(t)
    np.testing.assert_array_equal(extend_polynomial(fe, t, pts), evaluate(fe, t, pts))
    # RT0 on one element is affine: the extension to a far point is the affine formula
    far = np.array([[2.0, -1.0]])
    mid = pts.mean(axis=0, keepdims=True)
    lin = 2 * extend_polynomial(fe, t, mid) - extend_polynomial(fe, t, 2 * mid - far)
    np.testing.assert_allclose(extend_polynomial(fe, t, far), lin, atol=1e-12)


def test_dump_macro(tmp_path, circle):
    part = build_macro_partition(circle, 0.3)
    path = tmp_path / "macro.csv"
    dump_macro(part, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "element,root,distance"
    assert len(lines) == 1 + len(circle.active_elements)
