"""Developing maps: cusp tori in C, tetrahedra in upper half-space, volumes."""

from __future__ import annotations

import cmath
import math
from collections import deque
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from . import kernels
from .cusps import based_steps, vertex_walks
from .triangulation import CCW, IdealTriangulation

__all__ = [
    "AffineMap",
    "DevelopedTorus",
    "DevelopedTetrahedra",
    "ConeMetricSample",
    "moduli_triple",
    "corner_modulus",
    "develop_torus",
    "develop_curve",
    "torus_dev_map",
    "develop_tetrahedra",
    "cross_ratio",
    "cusp_dev_map",
    "tube_cosh_distance",
    "lobachevsky",
    "tetra_volume",
    "total_volume",
    "cone_metric",
]

lobachevsky = kernels.lobachevsky


def moduli_triple(z: complex) -> tuple[complex, complex, complex]:
    """The moduli z, 1/(1-z), 1-1/z on the three edge pairs."""
    z = complex(z)
    if z == 0 or z == 1:
        raise ValueError(f"degenerate shape {z}")
    return z, 1 / (1 - z), 1 - 1 / z


def corner_modulus(T: IdealTriangulation, z, t: int, v: int, w: int) -> complex:
    """Modulus of tetrahedron ``t`` at its edge ``{v, w}``."""
    return moduli_triple(z[t])[T.tetrahedra[t].form_at(v, w)]


# ---------------------------------------------------------------------------
# cusp tori


@dataclass(frozen=True)
class AffineMap:
    alpha: complex
    beta: complex

    def __call__(self, w: complex) -> complex:
        return self.alpha * w + self.beta

    def compose(self, other: "AffineMap") -> "AffineMap":
        """self o other."""
        return AffineMap(self.alpha * other.alpha, self.alpha * other.beta + self.beta)

    def inverse(self) -> "AffineMap":
        return AffineMap(1 / self.alpha, -self.beta / self.alpha)

    @staticmethod
    def identity() -> "AffineMap":
        return AffineMap(1 + 0j, 0j)


@dataclass(frozen=True)
class DevelopedTorus:
    cusp: int
    # corner (tet, v) -> {label w: position}
    positions: dict
    root: tuple[int, int]
    holonomy_lambda: AffineMap
    holonomy_mu: AffineMap
    # max deviation of a placed triangle from its modulus
    edge_residual: float
    # max deviation of vertex-walk holonomies from the identity
    vertex_residual: float

    @property
    def a(self) -> complex:
        return self.holonomy_lambda.beta

    @property
    def b(self) -> complex:
        return self.holonomy_mu.beta

    @property
    def tau(self) -> complex:
        return self.b / self.a

    def commutation_residual(self) -> float:
        u_lin, v_lin = self.holonomy_lambda.alpha, self.holonomy_mu.alpha
        return abs(self.a * (v_lin - 1) - self.b * (u_lin - 1))


def _place_third(T, z, corner, pos: dict) -> dict:
    """Fill in the missing vertex of a corner triangle from the other two."""
    t, v = corner
    labels = CCW[v]
    missing = [w for w in labels if w not in pos]
    if len(missing) != 1:
        raise ValueError("exactly two vertices must be known")
    i = labels.index(missing[0])
    a, b = labels[(i + 1) % 3], labels[(i + 2) % 3]
    # ccw order (a, b, missing): modulus at a is (P_missing - P_a) / (P_b - P_a)
    m = corner_modulus(T, z, t, v, a)
    out = dict(pos)
    out[missing[0]] = pos[a] + m * (pos[b] - pos[a])
    return out


def _cross(T, z, corner, pos, face):
    """Positions in the neighbouring corner across side ``face``."""
    t, v = corner
    nb, p = T.glue(t, face)
    shared = {p[w]: pos[w] for w in pos if w != face}
    return (nb, p[v]), _place_third(T, z, (nb, p[v]), shared)


def _triangle_residual(T, z, corner, pos) -> float:
    t, v = corner
    A, B, C = CCW[v]
    dev = 0.0
    for a, b, c in ((A, B, C), (B, C, A), (C, A, B)):
        m = corner_modulus(T, z, t, v, a)
        scale = max(abs(pos[b] - pos[a]), 1e-300)
        dev = max(dev, abs(pos[c] - pos[a] - m * (pos[b] - pos[a])) / scale)
    return dev


def develop_curve(T, z, steps, start_pos: dict) -> AffineMap:
    """Affine map carrying the start placement to its image after the walk."""
    corner = (steps[0][0], steps[0][1])
    pos = start_pos
    for t, v, f in steps:
        if (t, v) != corner:
            raise ValueError("walk is not connected")
        corner, pos = _cross(T, z, corner, pos, f)
    A, B, _ = CCW[steps[0][1]]
    denom = start_pos[B] - start_pos[A]
    if abs(denom) < 1e-300:
        raise ValueError("degenerate base edge")
    alpha = (pos[B] - pos[A]) / denom
    return AffineMap(alpha, pos[A] - alpha * start_pos[A])


def develop_torus(T: IdealTriangulation, cusp: int, z) -> DevelopedTorus:
    """Breadth-first development of the corner triangles of one cusp.

    The root corner has its first two counterclockwise vertices at 0 and 1.
    """
    z = [complex(w) for w in z]
    torus = T.cusps[cusp]
    root = torus.root
    A, B, _ = CCW[root[1]]
    positions = {root: _place_third(T, z, root, {A: 0j, B: 1 + 0j})}
    queue = deque([root])
    while queue:
        c = queue.popleft()
        for f in sorted(x for x in range(4) if x != c[1]):
            d, pos = _cross(T, z, c, positions[c], f)
            if d not in positions:
                positions[d] = pos
                queue.append(d)
    edge_res = max(_triangle_residual(T, z, c, p) for c, p in positions.items())
    lam, mu = T.peripheral_basis(cusp)
    rho = []
    for curve in (lam, mu):
        steps = based_steps(T, curve)
        rho.append(develop_curve(T, z, steps, positions[root]))
    vres = 0.0
    for walk in vertex_walks(T, cusp):
        start = (walk.steps[0][0], walk.steps[0][1])
        g = develop_curve(T, z, list(walk.steps), positions[start])
        vres = max(vres, abs(g.alpha - 1), abs(g.beta))
    return DevelopedTorus(cusp, positions, root, rho[0], rho[1], edge_res, vres)


def torus_dev_map(x: float, y: float, u: complex, v: complex, a: complex, b: complex) -> complex:
    """Developing map of the torus for holonomy (e^u, a), (e^v, b)."""
    if u == 0:
        return a * x + b * y
    return a * (cmath.exp(u * x + v * y) - 1) / (cmath.exp(u) - 1)


# ---------------------------------------------------------------------------
# tetrahedra in upper half-space; points of CP^1 as homogeneous pairs


def _det(p, q) -> complex:
    return p[0] * q[1] - p[1] * q[0]


def _normalize(p):
    s = math.hypot(abs(p[0]), abs(p[1]))
    return (p[0] / s, p[1] / s)


def cross_ratio(Pi, Pj, Pk, Pl) -> complex:
    """Modulus at edge (i, j) when (i, j, k, l) is an even permutation."""
    return _det(Pl, Pj) * _det(Pk, Pi) / (_det(Pk, Pj) * _det(Pl, Pi))


_EVEN = [
    p
    for p in permutations(range(4))
    if sum(1 for i in range(4) for j in range(i + 1, 4) if p[i] > p[j]) % 2 == 0
]


def _even_completion(i: int, j: int) -> tuple[int, int]:
    for p in _EVEN:
        if p[0] == i and p[1] == j:
            return p[2], p[3]
    raise AssertionError


def _solve_fourth(T, z, t, known: dict):
    """Homogeneous position of the missing vertex of tetrahedron ``t``."""
    missing = next(x for x in range(4) if x not in known)
    for i in known:
        for j in known:
            if i != j:
                k, l = _even_completion(i, j)
                if l == missing:
                    w = corner_modulus(T, z, t, i, j)
                    Pi, Pj, Pk = known[i], known[j], known[k]
                    c1 = _det(Pk, Pi)
                    c2 = w * _det(Pk, Pj)
                    P = (c1 * Pj[0] - c2 * Pi[0], c1 * Pj[1] - c2 * Pi[1])
                    return missing, _normalize(P)
    raise AssertionError("no even completion")


def _mobius_from_triples(src, dst) -> np.ndarray:
    """SL(2, C) matrix taking the three points ``src`` to ``dst``."""

    def frame(p1, p2, p3):
        # columns l*p1, m*p2 with l*p1 + m*p2 = p3: sends 0, inf, 1 to p1, p2, p3
        M = np.array([[p1[0], p2[0]], [p1[1], p2[1]]], dtype=complex)
        lm = np.linalg.solve(M, np.array([p3[0], p3[1]], dtype=complex))
        return M * lm[None, :]

    S, D = frame(*src), frame(*dst)
    g = D @ np.linalg.inv(S)
    return g / cmath.sqrt(np.linalg.det(g))


def _distance_to_identity(g: np.ndarray) -> float:
    g = g / cmath.sqrt(np.linalg.det(g))
    eye = np.eye(2)
    return float(min(np.abs(g - eye).max(), np.abs(g + eye).max()))


@dataclass(frozen=True)
class DevelopedTetrahedra:
    # per tetrahedron: 4 homogeneous points (x, y) meaning x/y, y = 0 for infinity
    vertices: tuple
    tree: tuple  # (tet, face) pairings used by the spanning tree
    # (tet, face) -> SL(2, C) matrix for each non-tree pairing
    pairings: dict
    # per edge class: distance of the composed pairings from +-identity
    edge_residuals: tuple[float, ...]
    # per tetrahedron: |cross ratio - modulus|
    shape_residuals: tuple[float, ...]

    @property
    def max_residual(self) -> float:
        return max(max(self.edge_residuals), max(self.shape_residuals))

    def points(self, t: int) -> list:
        """Vertices of tetrahedron ``t`` as complex numbers or ``inf``."""
        out = []
        for x, y in self.vertices[t]:
            out.append(complex("inf") if abs(y) < 1e-300 * max(abs(x), 1) else x / y)
        return out


def develop_tetrahedra(T: IdealTriangulation, z) -> DevelopedTetrahedra:
    """Breadth-first development from tetrahedron 0 along face pairings."""
    z = [complex(w) for w in z]
    n = T.n
    verts: list = [None] * n
    w01 = corner_modulus(T, z, 0, 0, 1)
    verts[0] = {0: (1 + 0j, 0j), 1: (0j, 1 + 0j), 2: _normalize((1 + 0j, 1 + 0j)), 3: _normalize((w01, 1 + 0j))}
    tree = []
    queue = deque([0])
    while queue:
        t = queue.popleft()
        for f in range(4):
            nb, p = T.glue(t, f)
            if verts[nb] is not None:
                continue
            known = {p[x]: verts[t][x] for x in range(4) if x != f}
            miss, P = _solve_fourth(T, z, nb, known)
            known[miss] = P
            verts[nb] = known
            tree.append((t, f))
            tree.append((nb, p[f]))
            queue.append(nb)
    tree_set = set(tree)
    pairings = {}
    for t in range(n):
        for f in range(4):
            if (t, f) in tree_set:
                continue
            nb, p = T.glue(t, f)
            xs = [x for x in range(4) if x != f]
            pairings[(t, f)] = _mobius_from_triples(
                [verts[t][x] for x in xs], [verts[nb][p[x]] for x in xs]
            )
    edge_res = []
    for ec in T.edge_classes:
        g = np.eye(2, dtype=complex)
        for t, face in _edge_walk_faces(T, ec):
            if (t, face) in pairings:
                g = g @ np.linalg.inv(pairings[(t, face)])
        edge_res.append(_distance_to_identity(g))
    shape_res = []
    for t in range(n):
        P = verts[t]
        cr = cross_ratio(P[0], P[1], P[2], P[3])
        shape_res.append(abs(cr - corner_modulus(T, z, t, 0, 1)) / max(1.0, abs(cr)))
    return DevelopedTetrahedra(
        tuple(tuple(verts[t][x] for x in range(4)) for t in range(n)),
        tuple(tree),
        pairings,
        tuple(edge_res),
        tuple(shape_res),
    )


def _edge_walk_faces(T, ec) -> list:
    """(tet, exit face) for each step of the walk around an edge class."""
    t, (a, b) = ec.incidences[0]
    c, d = (x for x in range(4) if x not in (a, b))
    out = []
    for _ in ec.incidences:
        out.append((t, d))
        nb, p = T.glue(t, d)
        t, a, b, c, d = nb, p[a], p[b], p[d], p[c]
    return out


# ---------------------------------------------------------------------------
# filled cusps


def cusp_dev_map(x: float, y: float, t: float, u: complex, v: complex) -> tuple[complex, float]:
    """Point of upper half-space (w, height) for an incomplete cusp."""
    if u == 0:
        raise ValueError("complete cusp: use (a x + b y, exp t)")
    s = u * x + v * y
    return cmath.exp(s), math.exp(t + s.real)


def tube_cosh_distance(t: float) -> float:
    """cosh of the distance from the axis 0-inf of the level-t surface."""
    return math.sqrt(1.0 + math.exp(-2.0 * t))


@dataclass(frozen=True)
class ConeMetricSample:
    r: float
    theta: float
    h: float
    g_rr: float
    g_thth: float
    g_hh: float
    alpha: float

    @property
    def circumference(self) -> float:
        return self.alpha * math.sinh(self.r)


def cone_metric(r: float, theta: float, h: float, alpha: float) -> ConeMetricSample:
    if r <= 0 or alpha <= 0:
        raise ValueError("need r > 0 and alpha > 0")
    return ConeMetricSample(
        r, theta, h, 1.0, (alpha / (2 * math.pi)) ** 2 * math.sinh(r) ** 2, math.cosh(r) ** 2, alpha
    )


# ---------------------------------------------------------------------------
# volume


def tetra_volume(z: complex) -> float:
    """Signed volume; negative when Im z < 0, zero for flat shapes."""
    return float(kernels.tetra_volume(complex(z)))


def total_volume(z) -> float:
    return float(np.sum(kernels.tetra_volumes(np.asarray(z, dtype=complex))))
