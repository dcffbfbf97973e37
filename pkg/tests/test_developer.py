from __future__ import annotations

import cmath
import math

import mpmath
import numpy as np
import pytest
from conftest import FIXTURES, complete
from hypothesis import given, settings
from hypothesis import strategies as st

from dehnfill.developer import (
    AffineMap,
    cone_metric,
    cross_ratio,
    cusp_dev_map,
    develop_tetrahedra,
    develop_torus,
    lobachevsky,
    moduli_triple,
    tetra_volume,
    torus_dev_map,
    total_volume,
    tube_cosh_distance,
)
from dehnfill.solver import GeneralizedCoefficient as G
from dehnfill.solver import make_target, solve

OMEGA = cmath.exp(1j * math.pi / 3)
REGULAR_IDEAL_TET = 1.0149416064096536

# filled and cone cells with positive, negative and flat tetrahedra
CELLS = [
    ("figure_eight", {}),
    ("figure_eight", {0: G(5, 1)}),
    ("figure_eight", {0: G(1, 0)}),
    ("figure_eight", {0: G(5, 1, 3.0)}),
    ("whitehead", {0: G(3, 2)}),
    ("whitehead_flat", {}),
    ("whitehead_flat", {1: G(5, 1)}),
]


def mp_lobachevsky(theta):
    return -mpmath.quad(lambda t: mpmath.log(abs(2 * mpmath.sin(t))), [0, theta])


@pytest.fixture(scope="module", params=CELLS, ids=lambda c: f"{c[0]}-{c[1]}")
def cell(request):
    name, fills = request.param
    based, _ = complete(name)
    _, _, res = solve(based, make_target(based.k, fills))
    assert res.converged
    return based, res


class TestLobachevsky:
    @pytest.mark.parametrize("theta", [0.01, 0.3, math.pi / 6, 1.0, 1.5, 2.5, 3.1])
    def test_quadrature(self, theta):
        assert lobachevsky(theta) == pytest.approx(float(mp_lobachevsky(theta)), abs=1e-12)

    @given(st.floats(-20, 20))
    def test_odd_and_periodic(self, x):
        assert lobachevsky(-x) == pytest.approx(-lobachevsky(x), abs=1e-13)
        assert lobachevsky(x + math.pi) == pytest.approx(lobachevsky(x), abs=1e-12)

    @given(st.floats(0.001, 3.14))
    def test_duplication(self, x):
        lhs = lobachevsky(2 * x)
        rhs = 2 * (lobachevsky(x) + lobachevsky(x + math.pi / 2))
        assert lhs == pytest.approx(rhs, abs=1e-11)

    def test_zeros(self):
        assert lobachevsky(0.0) == 0
        assert abs(lobachevsky(math.pi / 2)) < 1e-15

    def test_maximum(self):
        xs = np.linspace(0.3, 0.7, 4001)
        vals = [lobachevsky(x) for x in xs]
        assert xs[int(np.argmax(vals))] == pytest.approx(math.pi / 6, abs=1e-4)


class TestVolume:
    def test_regular(self):
        assert tetra_volume(OMEGA) == pytest.approx(REGULAR_IDEAL_TET, abs=1e-15)
        assert total_volume([OMEGA, OMEGA]) == pytest.approx(2 * REGULAR_IDEAL_TET, abs=1e-14)

    @given(st.complex_numbers(max_magnitude=1e3).filter(lambda z: abs(z) > 1e-3 and abs(z - 1) > 1e-3))
    def test_conjugate_negates(self, z):
        assert tetra_volume(z.conjugate()) == pytest.approx(-tetra_volume(z), abs=1e-12)

    @given(st.complex_numbers(max_magnitude=1e3).filter(lambda z: abs(z) > 1e-3 and abs(z - 1) > 1e-3))
    def test_same_on_all_edges(self, z):
        vols = [tetra_volume(w) for w in moduli_triple(z)]
        assert max(vols) - min(vols) < 1e-11

    @pytest.mark.parametrize("z", [2.0, -1.0, 0.5])
    def test_flat_zero(self, z):
        assert tetra_volume(z) == 0

    def test_moduli_triple(self):
        z = 0.3 + 0.8j
        a, b, c = moduli_triple(z)
        assert a * b * c == pytest.approx(-1)
        with pytest.raises(ValueError):
            moduli_triple(1)


class TestTorus:
    def test_affine_algebra(self):
        f = AffineMap(2j, 1 + 1j)
        g = AffineMap(0.5, -3)
        w = 0.7 - 0.2j
        assert f.compose(g)(w) == pytest.approx(f(g(w)))
        assert f.inverse()(f(w)) == pytest.approx(w)

    @given(
        st.floats(-2, 2),
        st.floats(-2, 2),
        st.complex_numbers(max_magnitude=1).filter(lambda u: abs(u) > 1e-2),
        st.complex_numbers(min_magnitude=0.5, max_magnitude=2),
    )
    def test_dev_map_equivariance(self, x, y, u, a):
        # v and b tied by the commutation relation
        v = 1.3 * u
        b = a * (cmath.exp(v) - 1) / (cmath.exp(u) - 1)
        D = lambda x, y: torus_dev_map(x, y, u, v, a, b)  # noqa: E731
        assert D(x + 1, y) == pytest.approx(cmath.exp(u) * D(x, y) + a, abs=1e-9)
        assert D(x, y + 1) == pytest.approx(cmath.exp(v) * D(x, y) + b, abs=1e-9)

    def test_dev_map_complete(self):
        assert torus_dev_map(0.5, 2.0, 0, 0, 1, 2j) == 0.5 + 4j

    def test_fig8_tau(self):
        based, res = complete("figure_eight")
        D = develop_torus(based.triangulation, 0, res.z)
        assert D.tau == pytest.approx(1 + 2j * math.sqrt(3), abs=1e-12)
        assert D.holonomy_lambda.alpha == pytest.approx(1, abs=1e-12)

    def test_residuals(self, cell):
        based, res = cell
        for i in range(based.k):
            D = develop_torus(based.triangulation, i, res.z)
            assert D.edge_residual < 1e-12
            assert D.vertex_residual < 1e-10
            assert D.commutation_residual() < 1e-10

    def test_linear_part_is_product(self, cell):
        based, res = cell
        for i in range(based.k):
            D = develop_torus(based.triangulation, i, res.z)
            lam, mu = based.cusp_rows[i]
            assert abs(D.holonomy_lambda.alpha - lam.product(res.z)) < 1e-12
            assert abs(D.holonomy_mu.alpha - mu.product(res.z)) < 1e-12


class TestTetrahedra:
    def test_cross_ratio_standard(self):
        inf, zero, one = (1, 0), (0, 1), (1, 1)
        z = 0.4 + 0.9j
        assert cross_ratio(inf, zero, one, (z, 1)) == pytest.approx(z)

    def test_residuals(self, cell):
        based, res = cell
        dev = develop_tetrahedra(based.triangulation, res.z)
        assert dev.max_residual < 1e-9

    def test_distinct_vertices(self, cell):
        based, res = cell
        dev = develop_tetrahedra(based.triangulation, res.z)
        for t in range(based.n):
            pts = dev.vertices[t]
            for i in range(4):
                for j in range(i + 1, 4):
                    d = pts[i][0] * pts[j][1] - pts[i][1] * pts[j][0]
                    assert abs(d) > 1e-12

    def test_pairings_unimodular(self):
        based, res = complete("whitehead")
        dev = develop_tetrahedra(based.triangulation, res.z)
        for g in dev.pairings.values():
            assert abs(np.linalg.det(g) - 1) < 1e-12

    @pytest.mark.parametrize("name", FIXTURES)
    def test_tree_spans(self, name):
        based, res = complete(name)
        dev = develop_tetrahedra(based.triangulation, res.z)
        assert len(dev.tree) == 2 * (based.n - 1)
        assert len(dev.pairings) == 4 * based.n - len(dev.tree)


class TestFilledCusp:
    def test_cosh_distance(self):
        for t in (-2.0, 0.0, 1.5):
            assert tube_cosh_distance(t) == pytest.approx(math.sqrt(1 + math.exp(-2 * t)))

    def test_origin(self):
        w, h = cusp_dev_map(0, 0, 0, 0.1 + 1j, 0.3 - 0.2j)
        assert (w, h) == (1, 1)

    def test_distance_from_axis(self):
        # the point (w, h) has cosh d = |(w, h)| / h from the axis 0-inf
        u, v = 0.2 + 1.1j, -0.4 + 0.3j
        for x, y, t in [(0.1, 0.7, 0.0), (0.5, -0.2, 1.0), (0.9, 0.9, -0.5)]:
            w, h = cusp_dev_map(x, y, t, u, v)
            assert math.hypot(abs(w), h) / h == pytest.approx(tube_cosh_distance(t))

    def test_complete_rejected(self):
        with pytest.raises(ValueError):
            cusp_dev_map(0, 0, 0, 0, 0)

    def test_cone_metric(self):
        s = cone_metric(1.0, 0.0, 0.0, math.pi)
        assert s.g_thth == pytest.approx(0.25 * math.sinh(1.0) ** 2)
        assert s.g_hh == pytest.approx(math.cosh(1.0) ** 2)
        assert s.circumference == pytest.approx(math.pi * math.sinh(1.0))
        with pytest.raises(ValueError):
            cone_metric(0.0, 0.0, 0.0, 1.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 3.0))
def test_volume_tracks_cone_angle(r):
    # smaller cone angle, smaller volume
    based, base = complete("figure_eight")
    _, _, res = solve(based, (G(5, 1, r),))
    if res.converged and res.census[1:] == (0, 0):
        assert res.volume < base.volume
