from __future__ import annotations

import importlib.util
from pathlib import Path

import pytest
from conftest import fixture_path, triangulation
from hypothesis import given
from hypothesis import strategies as st

from dehnfill.equations import build_system, check_system
from dehnfill.polyhedral import (
    FacePairing,
    PolyhedralComplex,
    Polyhedron,
    fan,
    flat_sequence,
    subdivide_polyhedral,
    validate_bigons,
)
from dehnfill.solver import solve
from dehnfill.triangulation import TriangulationError, serialize_triangulation

ROOT = Path(__file__).resolve().parent.parent


def _load_script():
    spec = importlib.util.spec_from_file_location("make_whitehead_flat", ROOT / "scripts" / "make_whitehead_flat.py")
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    return mod


wh = _load_script()


def stack(polygon, w, w2):
    """Apply the flats to fan(w); each must sit on two exposed triangles."""
    exposed = {frozenset(t) for t in fan(polygon, w)}
    for quad in flat_sequence(polygon, w, w2):
        faces = [frozenset(x for x in quad if x != y) for y in quad]
        bottom = [f for f in faces if f in exposed]
        assert len(bottom) == 2, (quad, exposed)
        for f in faces:
            exposed ^= {f}
    return exposed


class TestFlatSequence:
    def test_pentagon(self):
        # fan from A1 on one side, from A5 on the other
        flats = flat_sequence([1, 2, 3, 4, 5], 1, 5)
        assert [set(q) for q in flats] == [{1, 3, 4, 5}, {1, 2, 3, 5}]
        assert flats == [(1, 5, 4, 3), (1, 5, 3, 2)]

    def test_square(self):
        assert len(flat_sequence([0, 1, 2, 3], 0, 1)) == 1

    def test_matching(self):
        assert flat_sequence([0, 1, 2, 3, 4], 2, 2) == []

    def test_opposite_square_corners_agree(self):
        # fans from opposite corners use the same diagonal
        assert flat_sequence([0, 1, 2, 3], 0, 2) == []

    def test_hexagon_splits(self):
        flats = flat_sequence([1, 2, 3, 4, 5, 6], 1, 4)
        assert [set(q) for q in flats] == [{1, 2, 3, 4}, {1, 4, 5, 6}]

    @given(st.integers(3, 10), st.data())
    def test_stacking_reaches_target_fan(self, n, data):
        poly = list(range(n))
        w = data.draw(st.sampled_from(poly))
        w2 = data.draw(st.sampled_from(poly))
        assert stack(poly, w, w2) == {frozenset(t) for t in fan(poly, w2)}

    @given(st.integers(3, 10), st.data())
    def test_flat_count(self, n, data):
        # every flip changes one diagonal
        poly = list(range(n))
        w = data.draw(st.sampled_from(poly))
        w2 = data.draw(st.sampled_from(poly))
        d1 = {frozenset((w, x)) for x in poly if x != w} - {frozenset(e) for e in zip(poly, poly[1:] + poly[:1])}
        d2 = {frozenset((w2, x)) for x in poly if x != w2} - {frozenset(e) for e in zip(poly, poly[1:] + poly[:1])}
        assert len(flat_sequence(poly, w, w2)) == len(d1 - d2)


class TestSubdivide:
    def test_regenerates_fixture(self):
        T = subdivide_polyhedral(wh.octahedron_complex())
        assert serialize_triangulation(T) == fixture_path("whitehead_flat").read_text()

    def test_one_flat(self):
        T, labels = subdivide_polyhedral(wh.octahedron_complex(), with_labels=True)
        assert T.n == 5
        assert T.flat_labels == frozenset({4})
        assert len(labels) == 5

    def test_matching_fans_no_flats(self):
        C = wh.octahedron_complex()
        top, bottom = C.polyhedra
        bottom = Polyhedron(bottom.faces, bottom.cone_vertex, (None,) * 4 + (2,))
        T = subdivide_polyhedral(PolyhedralComplex((top, bottom), C.pairings))
        assert T.n == 4
        assert T.flat_labels == frozenset()
        assert check_system(build_system(T))["ok"]

    def test_regular_shapes_solve(self):
        T, labels = subdivide_polyhedral(wh.octahedron_complex(), with_labels=True)
        z0 = wh.regular_shapes(labels)
        assert abs(z0[4] - 2) < 1e-15
        assert all(w.imag > 0.4 for w in z0[:4])
        _, res, _ = solve(T, initial=z0)
        assert res.converged
        assert res.census == (4, 1, 0)
        assert res.volume == pytest.approx(3.663862376708876, abs=1e-12)

    def test_flat_touches_fat(self):
        T = triangulation("whitehead_flat")
        for j in T.flat_labels:
            assert any(T.tetrahedra[j].neighbors[f] not in T.flat_labels for f in range(4))

    def test_invalid_cone_vertex(self):
        C = wh.octahedron_complex()
        top, bottom = C.polyhedra
        bad = Polyhedron(top.faces, top.cone_vertex, (None,) * 4 + (1,))
        with pytest.raises(TriangulationError, match="invalid cone-vertex"):
            subdivide_polyhedral(PolyhedralComplex((bad, bottom), C.pairings))

    def test_face_paired_twice(self):
        C = wh.octahedron_complex()
        pairs = list(C.pairings)
        pairs[1] = FacePairing(pairs[0].poly_a, pairs[0].face_a, pairs[1].poly_b, pairs[1].face_b, pairs[1].vertex_map)
        with pytest.raises(TriangulationError, match="paired twice"):
            PolyhedralComplex(C.polyhedra, tuple(pairs)).validate()

    def test_orientation_preserving_pairing(self):
        C = wh.octahedron_complex()
        pairs = list(C.pairings)
        last = pairs[-1]
        # a reflection of the square composed with the gluing keeps orientation
        pairs[-1] = FacePairing(last.poly_a, last.face_a, last.poly_b, last.face_b, ((2, 2), (3, 5), (4, 4), (5, 3)))
        with pytest.raises(TriangulationError, match="orientation"):
            PolyhedralComplex(C.polyhedra, tuple(pairs)).validate()


class TestBigons:
    def test_subdivision_output(self):
        rep = validate_bigons(triangulation("whitehead_flat"))
        assert rep["ok"]
        assert rep["violation"] is None
        assert sum(len(c["corners"]) for c in rep["chains"]) == 4

    def test_no_flats(self):
        rep = validate_bigons(triangulation("figure_eight"))
        assert rep == {"ok": True, "chains": [], "violation": None}

    def test_annular_chain(self):
        # every tetrahedron around an edge flat
        T = triangulation("figure_eight")
        around = {t for t, _ in T.edge_classes[0].incidences}
        rep = validate_bigons(T, around)
        assert not rep["ok"]
        assert rep["violation"]["reason"] in ("closed annular chain", "branching chain")

    def test_around_axis_of_octahedron(self):
        T = triangulation("whitehead")
        axis = next(e for e in T.edge_classes if e.valence == 4)
        rep = validate_bigons(T, {t for t, _ in axis.incidences})
        assert not rep["ok"]
