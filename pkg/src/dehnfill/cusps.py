"""Cusp cross-section tori and peripheral curves.

The torus at a cusp is triangulated by corner triangles ``(tet, v)``, one per
ideal vertex of each tetrahedron.  The vertices of corner ``(tet, v)`` carry
the labels ``w != v`` (the end at ``v`` of edge ``{v, w}``) and its side ``f``
(``f != v``) lies in face ``f`` of the tetrahedron, opposite vertex ``f``.

Curves are normal curves: closed walks through corner triangles, stored as
steps ``(tet, v, exit_face)``.  Each step cuts off one corner of the triangle
it crosses, and the linear holonomy of the curve is the product of the moduli
of those corners, inverted when the corner lies on the right of the curve.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .triangulation import CCW, IdealTriangulation, TriangulationError, _UnionFind

__all__ = [
    "CuspTorus",
    "CuspCurve",
    "compute_cusp_tori",
    "compute_peripheral_basis",
    "intersection_number",
    "curve_from_steps",
    "curves_from_document",
    "concatenate",
    "reverse",
    "vertex_walks",
]

Corner = tuple[int, int]
Step = tuple[int, int, int]


@dataclass(frozen=True)
class CuspTorus:
    index: int
    corners: tuple[Corner, ...]
    # (tet, v, side) -> (tet', v', side')
    adjacency: dict
    # vertex classes of the cusp triangulation: representative (tet, v, w)
    vertices: tuple[tuple[int, int, int], ...]
    euler_characteristic: int

    @property
    def root(self) -> Corner:
        return self.corners[0]


@dataclass(frozen=True)
class CuspCurve:
    cusp: int
    steps: tuple[Step, ...]
    tag: str = ""

    def __len__(self):
        return len(self.steps)


def _ccw_position(v: int, w: int) -> int:
    return CCW[v].index(w)


def is_left(v: int, w: int, exit_face: int, enter_face: int) -> bool:
    """True if the cut-off corner ``w`` lies on the left of the curve."""
    i = _ccw_position(v, w)
    return CCW[v][(i + 1) % 3] == exit_face and CCW[v][(i + 2) % 3] == enter_face


def compute_cusp_tori(T: IdealTriangulation) -> list[CuspTorus]:
    """Triangulated cusp tori, numbered by their smallest corner."""
    uf = _UnionFind()
    vf = _UnionFind()
    adjacency = {}
    for t, tet in enumerate(T.tetrahedra):
        for v in range(4):
            uf.find((t, v))
            for f in range(4):
                if f == v:
                    continue
                nb, p = tet.neighbors[f], tet.gluings[f]
                adjacency[(t, v, f)] = (nb, p[v], p[f])
                uf.union((t, v), (nb, p[v]))
                for w in range(4):
                    if w not in (v, f):
                        vf.union((t, v, w), (nb, p[v], p[w]))
    groups: dict = {}
    for t in range(T.n):
        for v in range(4):
            groups.setdefault(uf.find((t, v)), []).append((t, v))
    vclasses: dict = {}
    for t in range(T.n):
        for v in range(4):
            for w in range(4):
                if w != v:
                    vclasses.setdefault(vf.find((t, v, w)), (t, v, w))
    tori = []
    for idx, root in enumerate(sorted(groups, key=lambda r: min(groups[r]))):
        corners = tuple(sorted(groups[root]))
        cs = set(corners)
        verts = tuple(sorted(rep for rep in vclasses.values() if (rep[0], rep[1]) in cs))
        chi = len(verts) - len(corners) * 3 // 2 + len(corners)
        if chi != 0:
            raise TriangulationError(
                f"cusp link not a torus: cusp {idx} has Euler characteristic {chi}"
            )
        adj = {key: val for key, val in adjacency.items() if (key[0], key[1]) in cs}
        tori.append(CuspTorus(idx, corners, adj, verts, chi))
    return tori


def edge_ends(T: IdealTriangulation) -> list[list[int]]:
    """For each edge class, the cusp index of each of its two ends."""
    ends: list[list[int]] = [[] for _ in range(T.n)]
    for cusp in T.cusps:
        for t, v, w in cusp.vertices:
            ends[T.edge_of[(t, (min(v, w), max(v, w)))]].append(cusp.index)
    return ends


# ---------------------------------------------------------------------------
# walks


def _enter_faces(T: IdealTriangulation, steps) -> list[int]:
    """Entering side of every step; validates that the walk closes up."""
    m = len(steps)
    if m == 0:
        raise TriangulationError("curve not closed: empty curve")
    enters = [0] * m
    for i, (t, v, f) in enumerate(steps):
        if f == v or not (0 <= f < 4):
            raise TriangulationError(f"step {i}: face {f} is not a side of corner ({t}, {v})")
        nb, p = T.glue(t, f)
        nt, nv, _ = steps[(i + 1) % m]
        if (nb, p[v]) != (nt, nv):
            raise TriangulationError(
                f"curve not closed: step {i} leaves corner ({t}, {v}) through side {f} "
                f"into ({nb}, {p[v]}), but the next step is in ({nt}, {nv})"
            )
        enters[(i + 1) % m] = p[f]
    return enters


def curve_from_steps(T: IdealTriangulation, steps, tag: str = "") -> CuspCurve:
    steps = tuple(tuple(s) for s in steps)
    _enter_faces(T, steps)
    cusp = T.cusp_of_corner[(steps[0][0], steps[0][1])]
    return CuspCurve(cusp, steps, tag)


def cut_corners(T: IdealTriangulation, curve: CuspCurve):
    """Yield ``(tet, v, w, left)`` for each corner the curve cuts off."""
    enters = _enter_faces(T, curve.steps)
    for (t, v, f), e in zip(curve.steps, enters):
        if e == f:
            raise TriangulationError("curve backtracks; reduce it before use")
        w = next(x for x in range(4) if x not in (v, f, e))
        yield t, v, w, is_left(v, w, f, e)


def _reduce(T: IdealTriangulation, steps: list, cyclic: bool = True) -> list:
    """Cancel immediate backtracking; across the wrap-around too if ``cyclic``."""
    steps = list(steps)
    changed = True
    while changed and len(steps) > 1:
        changed = False
        enters = _enter_faces(T, steps)
        for i in range(0 if cyclic else 1, len(steps)):
            if enters[i] == steps[i][2]:
                j = (i - 1) % len(steps)
                steps = [s for idx, s in enumerate(steps) if idx not in (i, j)]
                changed = True
                break
    return steps


def reverse(T: IdealTriangulation, curve: CuspCurve) -> CuspCurve:
    enters = _enter_faces(T, curve.steps)
    rev = [(t, v, e) for (t, v, _), e in zip(curve.steps, enters)]
    rev.reverse()
    return CuspCurve(curve.cusp, tuple(rev), curve.tag + "^-1" if curve.tag else "")


def _tree_path(T: IdealTriangulation, cusp: int, corner: Corner) -> list:
    parent = _bfs_tree(T, T.cusps[cusp])[0]
    steps = []
    while parent[corner] is not None:
        step = parent[corner]
        steps.append(step)
        corner = (step[0], step[1])
    steps.reverse()
    return steps


def _reverse_steps(T: IdealTriangulation, steps: list) -> list:
    """Walk an open path backwards."""
    out = []
    for t, v, f in reversed(steps):
        nb, p = T.glue(t, f)
        out.append((nb, p[v], p[f]))
    return out


def based_steps(T: IdealTriangulation, curve: CuspCurve) -> list:
    """Steps of a loop at the root corner freely homotopic to ``curve``."""
    root = T.cusps[curve.cusp].root
    steps = list(curve.steps)
    for i, s in enumerate(steps):
        if (s[0], s[1]) == root:
            return steps[i:] + steps[:i]
    stem = _tree_path(T, curve.cusp, (steps[0][0], steps[0][1]))
    return stem + steps + _reverse_steps(T, stem)


def concatenate(T: IdealTriangulation, curves, coefficients, tag: str = "") -> CuspCurve:
    """Closed walk representing sum(c_i * curve_i), cyclically reduced."""
    curves = list(curves)
    steps: list = []
    for c, n in zip(curves, coefficients):
        piece = c if n >= 0 else reverse(T, c)
        steps.extend(based_steps(T, piece) * abs(n))
    if not steps:
        raise ValueError("empty combination")
    steps = _reduce(T, steps)
    if not steps:
        raise ValueError("combination is null-homotopic as a walk")
    return CuspCurve(curves[0].cusp, tuple(steps), tag)


def vertex_walks(T: IdealTriangulation, cusp: int):
    """Closed walks around each vertex of the cusp triangulation."""
    walks = []
    for t0, v0, w0 in T.cusps[cusp].vertices:
        a, b = (x for x in range(4) if x not in (v0, w0))
        steps = []
        state = (t0, v0, w0, a, b)
        for _ in range(6 * T.n + 1):
            t, v, w, x, y = state
            steps.append((t, v, y))
            nb, p = T.glue(t, y)
            state = (nb, p[v], p[w], p[y], p[x])
            if state == (t0, v0, w0, a, b):
                break
        else:  # pragma: no cover - closure is guaranteed for validated input
            raise TriangulationError("vertex walk does not close")
        walks.append(CuspCurve(cusp, tuple(steps), f"vertex {t0}:{v0}{w0}"))
    return walks


# ---------------------------------------------------------------------------
# homology


def _push_left(T: IdealTriangulation, curve: CuspCurve) -> dict:
    """Edge-path cycle homotopic to the curve, as signed counts on sides.

    The cycle is recorded on oriented sides: the key ``(tet, v, face, a, b)``
    denotes the side of corner ``(tet, v)`` in ``face``, traversed from vertex
    ``a`` to vertex ``b``; it is canonicalised to one of the two corners
    sharing the side.
    """
    cycle: dict = {}
    for (t, v, f), e, (_, _, w, left) in zip(
        curve.steps, _enter_faces(T, curve.steps), cut_corners(T, curve)
    ):
        if left:
            continue
        # corner w on the right: push across the side opposite w, from the left
        # endpoint of the entering side to the left endpoint of the exit side
        key, sign = _side_key(T, t, v, w, f, e)
        cycle[key] = cycle.get(key, 0) + sign
    return {k: c for k, c in cycle.items() if c}


def _side_key(T, t, v, side, a, b):
    """Canonical oriented side: side ``side`` of corner (t, v) run from a to b."""
    nb, p = T.glue(t, side)
    here = (t, v, side)
    there = (nb, p[v], p[side])
    if here <= there:
        return (here, a, b), 1
    pa, pb = p[a], p[b]
    # express in the partner's labels, keep canonical orientation a<b
    if pa < pb:
        return (there, pa, pb), 1
    return (there, pb, pa), -1


def _normalize_key(key, sign):
    side, a, b = key
    if a < b:
        return (side, a, b), sign
    return (side, b, a), -sign


def _crossings(T: IdealTriangulation, curve: CuspCurve) -> dict:
    """Signed crossings of the curve with oriented sides.

    Crossing a side that runs left-to-right relative to the direction of travel
    counts -1, right-to-left +1.
    """
    out: dict = {}
    for (t, v, f), _ in zip(curve.steps, range(len(curve.steps))):
        # the exit side f has endpoints l (left) and r (right)
        x, y = (q for q in range(4) if q not in (v, f))
        # the curve leaves through side f; the vertex of the triangle off that
        # side is f itself, which lies behind the curve.  Looking forward, the
        # side's endpoints in CCW order after f are (right, left).
        i = CCW[v].index(f)
        right, left = CCW[v][(i + 1) % 3], CCW[v][(i + 2) % 3]
        key, sign = _side_key(T, t, v, f, left, right)
        key, sign = _normalize_key(key, sign)
        out[key] = out.get(key, 0) - sign
    return out


def intersection_number(T: IdealTriangulation, c1: CuspCurve, c2: CuspCurve) -> int:
    """Algebraic intersection number of two curves on the same cusp torus."""
    if c1.cusp != c2.cusp:
        raise ValueError("curves lie on different cusps")
    c1 = CuspCurve(c1.cusp, tuple(_reduce(T, c1.steps)))
    c2 = CuspCurve(c2.cusp, tuple(_reduce(T, c2.steps)))
    if not c1.steps or not c2.steps:
        return 0
    cross = _crossings(T, c1)
    path = _push_left(T, c2)
    total = 0
    for key, c in path.items():
        nkey, s = _normalize_key(key, c)
        total += cross.get(nkey, 0) * s
    return total


def _bfs_tree(T: IdealTriangulation, cusp: CuspTorus):
    root = cusp.root
    parent = {root: None}
    order = [root]
    queue = deque([root])
    non_tree = []
    while queue:
        c = queue.popleft()
        t, v = c
        for f in sorted(x for x in range(4) if x != v):
            nb, p = T.glue(t, f)
            d = (nb, p[v])
            if d not in parent:
                parent[d] = (t, v, f)
                order.append(d)
                queue.append(d)
            elif parent[c] is None or parent[c] != (nb, p[v], p[f]):
                non_tree.append((t, v, f))
    return parent, order, non_tree


def _fundamental_cycles(T: IdealTriangulation, cusp: CuspTorus) -> list[CuspCurve]:
    """One loop at the root per non-tree side of the spanning tree."""
    _, _, non_tree = _bfs_tree(T, cusp)
    seen = set()
    cycles = []
    for t, v, f in non_tree:
        nb, p = T.glue(t, f)
        key = min((t, v, f), (nb, p[v], p[f]))
        if key in seen:
            continue
        seen.add(key)
        there = _tree_path(T, cusp.index, (nb, p[v]))
        steps = _tree_path(T, cusp.index, (t, v)) + [(t, v, f)] + _reverse_steps(T, there)
        steps = _reduce(T, steps, cyclic=False)
        if steps:
            cycles.append(CuspCurve(cusp.index, tuple(steps)))
    return cycles


def _hermite_2(rows: list[tuple[int, int]]):
    """Integer basis of the lattice spanned by 2-vectors, with the unimodular
    combinations expressing it.  Returns [(vector, coefficients), ...]."""
    m = len(rows)
    vecs = [(list(r), [1 if i == j else 0 for j in range(m)]) for i, r in enumerate(rows)]

    def combine(x, y, a, b):
        return (
            [a * x[0][0] + b * y[0][0], a * x[0][1] + b * y[0][1]],
            [a * xi + b * yi for xi, yi in zip(x[1], y[1])],
        )

    # column 0 gcd via Euclid on pairs
    basis = []
    for col in (0, 1):
        live = [v for v in vecs if v[0][col] != 0]
        rest = [v for v in vecs if v[0][col] == 0]
        while len(live) > 1:
            live.sort(key=lambda v: (abs(v[0][col]), v[1]))
            piv = live[0]
            new_live = [piv]
            for v in live[1:]:
                q = v[0][col] // piv[0][col]
                w = combine(v, piv, 1, -q)
                if w[0][col] != 0:
                    new_live.append(w)
                else:
                    rest.append(w)
            live = new_live
        if live:
            basis.append(live[0])
        vecs = rest
    return basis


def compute_peripheral_basis(T: IdealTriangulation, cusp: int) -> tuple[CuspCurve, CuspCurve]:
    """Curves (lambda, mu) generating H1 of the cusp torus, intersection +1.

    Explicit curves stored with the triangulation take precedence.  Otherwise
    the basis is built from the fundamental cycles of a breadth-first spanning
    tree of corner triangles rooted at the smallest corner: pick the first pair
    of cycles with nonzero intersection, express every cycle in that pair's
    rational coordinates and take an integral basis of the resulting lattice.
    """
    for entry in T.peripheral_curves:
        if entry[0] == cusp:
            return entry[1], entry[2]
    torus = T.cusps[cusp]
    cycles = _fundamental_cycles(T, torus)
    m = len(cycles)
    pair = None
    for i in range(m):
        for j in range(i + 1, m):
            q = intersection_number(T, cycles[i], cycles[j])
            if q != 0:
                pair = (i, j, q)
                break
        if pair:
            break
    if pair is None:
        raise TriangulationError(f"cusp {cusp}: could not find a homology basis")
    i, j, q = pair
    a, b = cycles[i], cycles[j]
    # c = (I(c,b)/q) a + (I(a,c)/q) b ; scaled coordinates are integral
    coords = [(intersection_number(T, c, b), intersection_number(T, a, c)) for c in cycles]
    basis = _hermite_2(coords)
    if len(basis) != 2:
        raise TriangulationError(f"cusp {cusp}: degenerate homology basis")
    (v1, k1), (v2, k2) = basis
    lam = concatenate(T, cycles, k1, "lambda")
    mu = concatenate(T, cycles, k2, "mu")
    sign = intersection_number(T, lam, mu)
    if abs(sign) != 1:
        raise TriangulationError(f"cusp {cusp}: basis has intersection {sign}")
    if sign < 0:
        mu = CuspCurve(mu.cusp, reverse(T, mu).steps, "mu")
    return lam, mu


def curves_from_document(T: IdealTriangulation, raw) -> tuple:
    """Explicit peripheral curves from the file: a list of
    ``{"cusp": i, "lambda": [[tet, v, face], ...], "mu": [...]}``."""
    out = []
    for entry in raw:
        i = entry["cusp"]
        lam = curve_from_steps(T, entry["lambda"], "lambda")
        mu = curve_from_steps(T, entry["mu"], "mu")
        if lam.cusp != i or mu.cusp != i:
            raise TriangulationError(f"explicit curves for cusp {i} lie on another cusp")
        if abs(intersection_number(T, lam, mu)) != 1:
            raise TriangulationError(f"explicit curves for cusp {i} do not form a basis")
        out.append((i, lam, mu))
    return tuple(out)


def homology_coordinates(T: IdealTriangulation, curve: CuspCurve) -> tuple[int, int]:
    """Coordinates (p, q) of a curve in the peripheral basis: curve ~ p*lambda + q*mu."""
    lam, mu = compute_peripheral_basis(T, curve.cusp)
    # I(lam, mu) = 1: p = I(curve, mu), q = I(lam, curve)
    return intersection_number(T, curve, mu), intersection_number(T, lam, curve)
