"""Partially flat triangulations from ideal polyhedral decompositions.

Each polyhedron is coned from a chosen vertex over the fan triangulations of
its faces; where paired faces carry different fans, flat tetrahedra realize
the diagonal flips between them.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .triangulation import IdealTriangulation, TetGluing, TriangulationError, _perm_parity

__all__ = [
    "Polyhedron",
    "FacePairing",
    "PolyhedralComplex",
    "fan",
    "flat_sequence",
    "subdivide_polyhedral",
    "validate_bigons",
]


@dataclass(frozen=True)
class Polyhedron:
    """Faces as vertex cycles, counterclockwise seen from outside."""

    faces: tuple[tuple[int, ...], ...]
    cone_vertex: int
    # per face: vertex to fan from; None means the cone vertex (which must lie on it)
    face_cone_vertices: tuple = ()

    @property
    def vertices(self) -> set:
        return {v for f in self.faces for v in f}

    def fan_vertex(self, f: int) -> int:
        face = self.faces[f]
        if self.cone_vertex in face:
            return self.cone_vertex
        w = self.face_cone_vertices[f] if self.face_cone_vertices else None
        return face[0] if w is None else w


@dataclass(frozen=True)
class FacePairing:
    """Face ``(poly_a, face_a)`` glued to ``(poly_b, face_b)``; ``vertex_map``
    lists ``(vertex of a, vertex of b)`` pairs."""

    poly_a: int
    face_a: int
    poly_b: int
    face_b: int
    vertex_map: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class PolyhedralComplex:
    polyhedra: tuple[Polyhedron, ...]
    pairings: tuple[FacePairing, ...]
    name: str = ""

    def validate(self) -> None:
        used = set()
        for i, pr in enumerate(self.pairings):
            for side in ((pr.poly_a, pr.face_a), (pr.poly_b, pr.face_b)):
                if side in used:
                    raise TriangulationError(f"pairing {i}: face {side} paired twice")
                used.add(side)
            if (pr.poly_a, pr.face_a) == (pr.poly_b, pr.face_b):
                raise TriangulationError(f"pairing {i}: face paired with itself")
            fa = self.polyhedra[pr.poly_a].faces[pr.face_a]
            fb = self.polyhedra[pr.poly_b].faces[pr.face_b]
            m = dict(pr.vertex_map)
            if sorted(m) != sorted(fa) or sorted(m.values()) != sorted(fb):
                raise TriangulationError(f"pairing {i}: vertex map is not a bijection of the faces")
            image = [m[v] for v in fa]
            # orientation reversing: the image runs around fb backwards
            k = fb.index(image[0])
            backwards = [fb[(k - j) % len(fb)] for j in range(len(fb))]
            if image != backwards:
                raise TriangulationError(f"pairing {i}: face pairing does not reverse orientation")
        for a, P in enumerate(self.polyhedra):
            if P.cone_vertex not in P.vertices:
                raise TriangulationError(f"polyhedron {a}: cone vertex {P.cone_vertex} not a vertex")
            for f, face in enumerate(P.faces):
                if (a, f) not in used:
                    raise TriangulationError(f"polyhedron {a} face {f} is not paired")
                w = P.face_cone_vertices[f] if P.face_cone_vertices else None
                if w is not None and w not in face:
                    raise TriangulationError(
                        f"invalid cone-vertex choice: vertex {w} is not on face {f} of polyhedron {a}"
                    )
                if w is not None and P.cone_vertex in face and w != P.cone_vertex:
                    raise TriangulationError(
                        f"invalid cone-vertex choice: face {f} of polyhedron {a} contains the "
                        f"polyhedron's cone vertex {P.cone_vertex}, which must be its fan vertex"
                    )


def fan(polygon, w) -> list[tuple[int, int, int]]:
    """Triangles of the fan triangulation of a polygon from its vertex ``w``."""
    n = len(polygon)
    k = polygon.index(w)
    cyc = [polygon[(k + j) % n] for j in range(n)]
    return [(cyc[0], cyc[j], cyc[j + 1]) for j in range(1, n - 1)]


def flat_sequence(polygon, w, w2) -> list[tuple[int, int, int, int]]:
    """Flat tetrahedra turning fan(w) into fan(w2), in order from fan(w).

    Each entry is ``(a, b, c, d)``: the join of the edge ``(a, b)`` with
    ``(c, d)``.
    """
    polygon = list(polygon)
    n = len(polygon)
    if w == w2:
        return []
    i, j = polygon.index(w), polygon.index(w2)
    if (i - j) % n in (1, n - 1):
        # walk from w away from w2 until w2
        step = 1 if (j - i) % n == n - 1 else -1
        chain = [polygon[(i + step * s) % n] for s in range(n)]
        assert chain[-1] == w2
        inner = chain[1:-1]
        return [(w, w2, inner[k + 1], inner[k]) for k in range(len(inner) - 2, -1, -1)]
    lo, hi = sorted((i, j))
    half1 = polygon[lo : hi + 1]
    half2 = polygon[hi:] + polygon[: lo + 1]
    return flat_sequence(half1, w, w2) + flat_sequence(half2, w, w2)


class _Builder:
    def __init__(self):
        self.tets: list[list] = []  # vertex labels per tetrahedron
        self.flat: list[int] = []
        # (context, frozenset of keys) -> list of (tet, {key: local index})
        self.slots: dict = {}

    def add_tet(self, labels, flat=False) -> int:
        self.tets.append(list(labels))
        if flat:
            self.flat.append(len(self.tets) - 1)
        return len(self.tets) - 1

    def offer(self, context, tet: int, keyed: dict):
        self.slots.setdefault((context, frozenset(keyed)), []).append((tet, keyed))


def subdivide_polyhedral(C: PolyhedralComplex, with_labels: bool = False):
    """Fat tetrahedra from coning each polyhedron, flat ones across mismatched fans.

    With ``with_labels`` also returns, per tetrahedron, its four vertices as
    ``(polyhedron, vertex)`` pairs in local order.
    """
    C.validate()
    B = _Builder()
    face_slots: dict = {}  # (poly, face) -> list of (tet, {vertex: local index})
    for a, P in enumerate(C.polyhedra):
        v = P.cone_vertex
        for f, face in enumerate(P.faces):
            if v in face:
                continue
            for tri in fan(face, P.fan_vertex(f)):
                # outward ccw triangle; reversed so the cone is positively oriented
                tri = (tri[0], tri[2], tri[1])
                t = B.add_tet([(a, v)] + [(a, x) for x in tri])
                face_slots.setdefault((a, f), []).append((t, {x: i + 1 for i, x in enumerate(tri)}))
                for i, j in ((0, 1), (1, 2), (0, 2)):
                    B.offer(("poly", a), t, {v: 0, tri[i]: i + 1, tri[j]: j + 1})
        # faces through the cone vertex are unions of side triangles of fat tets
        for f, face in enumerate(P.faces):
            if v not in face:
                continue
            for tri in fan(face, v):
                key = frozenset(tri)
                hits = B.slots.get((("poly", a), key), [])
                if len(hits) != 1:
                    raise TriangulationError(
                        f"polyhedron {a} face {f}: triangle {tri} met {len(hits)} times"
                    )
                face_slots[(a, f)] = face_slots.get((a, f), []) + hits
                del B.slots[(("poly", a), key)]
    for idx, pr in enumerate(C.pairings):
        Pa, Pb = C.polyhedra[pr.poly_a], C.polyhedra[pr.poly_b]
        face = Pa.faces[pr.face_a]
        inv = {y: x for x, y in pr.vertex_map}
        ctx = ("pair", idx)
        # side a in its own labels; side b translated into side-a labels
        exposed = {}
        for t, keyed in face_slots[(pr.poly_a, pr.face_a)]:
            exposed[frozenset(keyed)] = (t, keyed)
        w = Pa.fan_vertex(pr.face_a)
        w2 = inv[Pb.fan_vertex(pr.face_b)]
        for quad in flat_sequence(face, w, w2):
            t = B.add_tet([(pr.poly_a, x) for x in quad], flat=True)
            local = {x: i for i, x in enumerate(quad)}
            faces = [frozenset(x for x in quad if x != y) for y in quad]
            bottom = [k for k in faces if k in exposed]
            if len(bottom) != 2:
                raise TriangulationError(f"pairing {idx}: flat tetrahedron {quad} misplaced")
            for k in faces:
                keyed = {x: local[x] for x in k}
                if k in exposed:
                    B.offer(ctx, *exposed.pop(k))
                    B.offer(ctx, t, keyed)
                else:
                    exposed[k] = (t, keyed)
        other = {}
        for t, keyed in face_slots[(pr.poly_b, pr.face_b)]:
            kk = {inv[x]: i for x, i in keyed.items()}
            other[frozenset(kk)] = (t, kk)
        if set(other) != set(exposed):
            raise TriangulationError(f"pairing {idx}: facets do not match after flips")
        for k, slot in exposed.items():
            B.offer(ctx, *slot)
            B.offer(ctx, *other[k])
    T, labels = _assemble(B, C.name)
    return (T, labels) if with_labels else T


def _assemble(B: _Builder, name: str):
    n = len(B.tets)
    neighbors = [[None] * 4 for _ in range(n)]
    perms = [[None] * 4 for _ in range(n)]
    for key, hits in B.slots.items():
        if len(hits) != 2:
            raise TriangulationError(f"facet {sorted(key[1], key=str)} met {len(hits)} times")
        (t1, k1), (t2, k2) = hits
        f1 = next(i for i in range(4) if i not in k1.values())
        f2 = next(i for i in range(4) if i not in k2.values())
        sigma = [0] * 4
        sigma[f1] = f2
        for x, i in k1.items():
            sigma[i] = k2[x]
        neighbors[t1][f1], perms[t1][f1] = t2, tuple(sigma)
        inv = [0] * 4
        for i, s in enumerate(sigma):
            inv[s] = i
        neighbors[t2][f2], perms[t2][f2] = t1, tuple(inv)
    # orient: flip tetrahedra (swap local vertices 2 and 3) so every pairing is odd
    flip = [None] * n
    flip[0] = False
    queue = deque([0])
    while queue:
        t = queue.popleft()
        for f in range(4):
            nb = neighbors[t][f]
            want = (_perm_parity(perms[t][f]) + flip[t]) % 2 == 0
            if flip[nb] is None:
                flip[nb] = want
                queue.append(nb)
            elif flip[nb] != want:
                raise TriangulationError("polyhedral complex is not orientable")
    swap = (0, 1, 3, 2)
    new_nb = [[None] * 4 for _ in range(n)]
    new_p = [[None] * 4 for _ in range(n)]
    for t in range(n):
        st = swap if flip[t] else (0, 1, 2, 3)
        for f in range(4):
            nb = neighbors[t][f]
            sn = swap if flip[nb] else (0, 1, 2, 3)
            p = perms[t][f]
            # relabel: new index st[i] holds old vertex i
            q = [0] * 4
            for i in range(4):
                q[st[i]] = sn[p[i]]
            new_nb[t][st[f]] = nb
            new_p[t][st[f]] = tuple(q)
    tets = tuple(TetGluing(tuple(new_nb[t]), tuple(new_p[t])) for t in range(n))
    labels = []
    for t, lab in enumerate(B.tets):
        lab = list(lab)
        if flip[t]:
            lab[2], lab[3] = lab[3], lab[2]
        labels.append(tuple(lab))
    return IdealTriangulation(tets, name, frozenset(B.flat)), labels


def validate_bigons(T: IdealTriangulation, flat_labels=None) -> dict:
    """Check that flat corner triangles form disjoint chains on every cusp torus.

    Returns ``{"ok": bool, "chains": [...], "violation": None | {...}}``; each
    chain lists its corner triangles in order.
    """
    flat = set(T.flat_labels if flat_labels is None else flat_labels)
    chains = []
    for cusp in T.cusps:
        nodes = [c for c in cusp.corners if c[0] in flat]
        nodeset = set(nodes)
        adj = {c: [] for c in nodes}
        for (t, v, f), (nb, nv, _) in cusp.adjacency.items():
            if (t, v) in nodeset and (nb, nv) in nodeset:
                adj[(t, v)].append((nb, nv))
        seen = set()
        for c in nodes:
            if c in seen:
                continue
            comp, queue = [], deque([c])
            seen.add(c)
            while queue:
                x = queue.popleft()
                comp.append(x)
                for y in adj[x]:
                    if y not in seen:
                        seen.add(y)
                        queue.append(y)
            n_edges = sum(len(adj[x]) for x in comp) // 2
            degree = max(len(adj[x]) for x in comp)
            if n_edges >= len(comp) or degree > 2:
                reason = "closed annular chain" if n_edges >= len(comp) else "branching chain"
                return {
                    "ok": False,
                    "chains": chains,
                    "violation": {
                        "cusp": cusp.index,
                        "reason": reason,
                        "corners": sorted(comp),
                    },
                }
            ends = [x for x in comp if len(adj[x]) <= 1]
            order, prev, cur = [], None, min(ends)
            while cur is not None:
                order.append(cur)
                nxt = [y for y in adj[cur] if y != prev]
                prev, cur = cur, (nxt[0] if nxt else None)
            chains.append({"cusp": cusp.index, "corners": order})
    return {"ok": True, "chains": chains, "violation": None}
