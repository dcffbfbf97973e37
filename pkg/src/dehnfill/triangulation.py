"""Combinatorics of ideal triangulations.

A triangulation is a list of tetrahedra with vertices 0..3.  Face ``f`` of a
tetrahedron is the face opposite vertex ``f``.  ``neighbors[f]`` is the
tetrahedron glued to face ``f`` and ``gluings[f]`` is the vertex bijection
``sigma`` (digit ``k`` of the string is ``sigma(k)``), so face ``f`` is glued to
face ``sigma(f)`` of the neighbour.

Tetrahedra are assumed to be consistently oriented, so an orientation-reversing
face pairing is an odd permutation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

__all__ = [
    "EDGES",
    "EDGE_PAIRS",
    "CCW",
    "ParseError",
    "TriangulationError",
    "TetGluing",
    "EdgeClass",
    "IdealTriangulation",
    "parse_triangulation",
    "load_triangulation",
    "serialize_triangulation",
    "normalize_text",
    "compute_edge_classes",
    "check_euler",
    "edge_pair_index",
    "modulus_form",
]

EDGES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
EDGE_PAIRS = ("01|23", "02|13", "03|12")

# Vertices of the link of vertex v in counterclockwise order, seen from v.
CCW = {0: (1, 2, 3), 1: (0, 3, 2), 2: (3, 0, 1), 3: (2, 1, 0)}

Perm = tuple[int, int, int, int]


class ParseError(ValueError):
    """Malformed triangulation text.  Carries 1-based line/column when known."""

    def __init__(self, msg: str, line: int | None = None, col: int | None = None):
        self.line = line
        self.col = col
        where = f" (line {line}, column {col})" if line is not None else ""
        super().__init__(f"{msg}{where}")


class TriangulationError(ValueError):
    """Gluing data that does not describe a supported ideal triangulation."""


def edge_pair_index(a: int, b: int) -> int:
    """Index 0, 1, 2 of the opposite-edge pair containing edge {a, b}."""
    if a > b:
        a, b = b, a
    if (a, b) in ((0, 1), (2, 3)):
        return 0
    if (a, b) in ((0, 2), (1, 3)):
        return 1
    return 2


def modulus_form(edge_pair: int, labelled_pair: int) -> int:
    """Which of z, 1/(1-z), 1-1/z (0, 1, 2) sits on ``edge_pair``.

    ``labelled_pair`` is the pair carrying the modulus z itself.  Moving
    counterclockwise around a vertex cycles the forms z -> 1/(1-z) -> 1-1/z.
    """
    return (edge_pair - labelled_pair) % 3


def _perm_parity(p: Perm) -> int:
    inversions = sum(1 for i in range(4) for j in range(i + 1, 4) if p[i] > p[j])
    return inversions % 2


def _inverse(p: Perm) -> Perm:
    inv = [0] * 4
    for i, pi in enumerate(p):
        inv[pi] = i
    return tuple(inv)  # type: ignore[return-value]


@dataclass(frozen=True)
class TetGluing:
    neighbors: tuple[int, int, int, int]
    gluings: tuple[Perm, Perm, Perm, Perm]
    edge_pair: int = 0

    def pair_label(self) -> str:
        return EDGE_PAIRS[self.edge_pair]

    def form_at(self, a: int, b: int) -> int:
        return modulus_form(edge_pair_index(a, b), self.edge_pair)


@dataclass(frozen=True)
class EdgeClass:
    """An edge of the triangulation.

    ``incidences`` lists ``(tet, (a, b))`` in the cyclic order met when walking
    around the edge; ``ends`` holds the cusp index of each of its two ends.
    """

    index: int
    incidences: tuple[tuple[int, tuple[int, int]], ...]
    ends: tuple[int, int] = (-1, -1)

    @property
    def valence(self) -> int:
        return len(self.incidences)


class _UnionFind:
    def __init__(self):
        self.parent: dict = {}

    def find(self, x):
        self.parent.setdefault(x, x)
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # keep the smaller key as root so class representatives are canonical
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


@dataclass(frozen=True, eq=False)
class IdealTriangulation:
    """Validated gluing data plus lazily derived edge classes and cusps.

    Instances are immutable; derived structures are cached on first access.
    """

    tetrahedra: tuple[TetGluing, ...]
    name: str = ""
    flat_labels: frozenset[int] = frozenset()
    peripheral_curves: tuple = ()
    # raw explicit curves as read from a file, kept for round-tripping
    raw_curves: tuple = field(default=(), repr=False)

    def __post_init__(self):
        _validate(self)

    @property
    def n(self) -> int:
        return len(self.tetrahedra)

    @property
    def k(self) -> int:
        return len(self.cusps)

    def glue(self, tet: int, face: int) -> tuple[int, Perm]:
        t = self.tetrahedra[tet]
        return t.neighbors[face], t.gluings[face]

    @cached_property
    def edge_classes(self) -> tuple[EdgeClass, ...]:
        return tuple(compute_edge_classes(self))

    @cached_property
    def edge_of(self) -> dict[tuple[int, tuple[int, int]], int]:
        """Map ``(tet, (a, b))`` with a < b to its edge class index."""
        out = {}
        for ec in self.edge_classes:
            for t, (a, b) in ec.incidences:
                out[(t, (min(a, b), max(a, b)))] = ec.index
        return out

    @cached_property
    def cusps(self):
        from .cusps import compute_cusp_tori

        return tuple(compute_cusp_tori(self))

    @cached_property
    def cusp_of_corner(self) -> dict[tuple[int, int], int]:
        return {c: cusp.index for cusp in self.cusps for c in cusp.corners}

    def peripheral_basis(self, cusp: int):
        from .cusps import compute_peripheral_basis

        return compute_peripheral_basis(self, cusp)


def _validate(T: IdealTriangulation) -> None:
    n = len(T.tetrahedra)
    if n == 0:
        raise TriangulationError("triangulation has no tetrahedra")
    for t, tet in enumerate(T.tetrahedra):
        for f in range(4):
            nb, p = tet.neighbors[f], tet.gluings[f]
            if nb is None or nb < 0:
                raise TriangulationError(f"unglued face: tetrahedron {t} face {f}")
            if nb >= n:
                raise TriangulationError(
                    f"tetrahedron {t} face {f}: neighbour {nb} out of range"
                )
            if sorted(p) != [0, 1, 2, 3]:
                raise TriangulationError(f"tetrahedron {t} face {f}: {p} is not a permutation")
            if _perm_parity(p) != 1:
                raise TriangulationError(
                    f"tetrahedron {t} face {f}: gluing {''.join(map(str, p))} is an even "
                    "permutation; faces must be paired by orientation-reversing maps "
                    "(odd permutations of consistently oriented tetrahedra)"
                )
            g = p[f]
            back_nb, back_p = T.tetrahedra[nb].neighbors[g], T.tetrahedra[nb].gluings[g]
            if back_nb != t or back_p != _inverse(p):
                raise TriangulationError(
                    f"non-involutive gluing: tetrahedron {t} face {f} -> tetrahedron {nb} "
                    f"face {g}, which does not glue back by the inverse permutation"
                )
            if nb == t and g == f:
                raise TriangulationError(f"tetrahedron {t} face {f} glued to itself")
    for j in T.flat_labels:
        if not 0 <= j < n:
            raise TriangulationError(f"flat label {j} out of range")
    edges = compute_edge_classes(T)
    if len(edges) != n:
        raise TriangulationError(
            f"corrupt gluing: {len(edges)} edge classes for {n} tetrahedra "
            "(an ideal triangulation with torus cusps has exactly n edges)"
        )
    # cusp links are checked when the cusps are built
    T.cusps  # noqa: B018


def compute_edge_classes(T: IdealTriangulation) -> list[EdgeClass]:
    """Orbits of tetrahedron edges under the face pairings, in cyclic order.

    Classes are numbered by first appearance scanning tetrahedra in order and
    edges in ``EDGES`` order.
    """
    seen: set[tuple[int, tuple[int, int]]] = set()
    classes = []
    for t in range(len(T.tetrahedra)):
        for a, b in EDGES:
            if (t, (a, b)) in seen:
                continue
            c, d = (x for x in range(4) if x not in (a, b))
            incidences = []
            state = (t, a, b, c, d)
            for _ in range(6 * len(T.tetrahedra) + 1):
                tt, aa, bb, cc, dd = state
                key = (tt, (min(aa, bb), max(aa, bb)))
                incidences.append((tt, (aa, bb)))
                seen.add(key)
                nb, p = T.tetrahedra[tt].neighbors[dd], T.tetrahedra[tt].gluings[dd]
                # leave through the face opposite dd; the next exit face is opposite p[cc]
                state = (nb, p[aa], p[bb], p[dd], p[cc])
                if state == (t, a, b, c, d):
                    break
            else:
                raise TriangulationError(
                    f"internal inconsistency: edge orbit of tetrahedron {t} edge {a}{b} "
                    "does not close"
                )
            classes.append(EdgeClass(len(classes), tuple(incidences)))
    return classes


def check_euler(T: IdealTriangulation) -> dict:
    """Cell counts of the collapsed complex; edges must equal tetrahedra."""
    edges = len(T.edge_classes)
    report = {
        "vertices": T.k,
        "edges": edges,
        "faces": 2 * T.n,
        "tets": T.n,
    }
    report["euler_characteristic"] = report["vertices"] - edges + report["faces"] - T.n
    report["ok"] = edges == T.n and report["euler_characteristic"] == T.k
    if not report["ok"]:
        raise TriangulationError(f"Euler count mismatch: {report}")
    return report


# ---------------------------------------------------------------------------
# file format


def _parse_perm(s, where: str) -> Perm:
    if not isinstance(s, str) or len(s) != 4 or not s.isdigit():
        raise ParseError(f"{where}: permutation must be a 4-digit string, got {s!r}")
    p = tuple(int(ch) for ch in s)
    if sorted(p) != [0, 1, 2, 3]:
        raise ParseError(f"{where}: {s!r} is not a permutation of 0123")
    return p  # type: ignore[return-value]


def _from_document(doc) -> IdealTriangulation:
    if not isinstance(doc, dict):
        raise ParseError("top level must be a JSON object")
    unknown = set(doc) - {"name", "tetrahedra", "flat_labels", "peripheral_curves"}
    if unknown:
        raise ParseError(f"unknown top-level keys: {sorted(unknown)}")
    raw_tets = doc.get("tetrahedra")
    if not isinstance(raw_tets, list) or not raw_tets:
        raise ParseError("'tetrahedra' must be a non-empty list")
    tets = []
    for t, raw in enumerate(raw_tets):
        where = f"tetrahedron {t}"
        if not isinstance(raw, dict):
            raise ParseError(f"{where}: expected an object")
        nbs = raw.get("neighbors")
        gls = raw.get("gluings")
        if not isinstance(nbs, list) or len(nbs) != 4:
            raise ParseError(f"{where}: 'neighbors' must list 4 entries")
        if not isinstance(gls, list) or len(gls) != 4:
            raise ParseError(f"{where}: 'gluings' must list 4 entries")
        for f, nb in enumerate(nbs):
            if nb is None or (isinstance(nb, int) and nb < 0):
                raise TriangulationError(f"unglued face: tetrahedron {t} face {f}")
            if not isinstance(nb, int) or isinstance(nb, bool):
                raise ParseError(f"{where}: neighbour {nb!r} is not an integer")
        pair = raw.get("edge_pair", EDGE_PAIRS[0])
        if pair not in EDGE_PAIRS:
            raise ParseError(f"{where}: edge_pair must be one of {EDGE_PAIRS}, got {pair!r}")
        tets.append(
            TetGluing(
                tuple(nbs),
                tuple(_parse_perm(g, f"{where} face {f}") for f, g in enumerate(gls)),
                EDGE_PAIRS.index(pair),
            )
        )
    flats = doc.get("flat_labels", [])
    if not isinstance(flats, list) or not all(isinstance(j, int) for j in flats):
        raise ParseError("'flat_labels' must be a list of integers")
    name = doc.get("name", "")
    if not isinstance(name, str):
        raise ParseError("'name' must be a string")
    raw_curves = doc.get("peripheral_curves") or []
    T = IdealTriangulation(tuple(tets), name, frozenset(flats), raw_curves=_freeze(raw_curves))
    if raw_curves:
        from .cusps import curves_from_document

        object.__setattr__(T, "peripheral_curves", curves_from_document(T, raw_curves))
    return T


def _freeze(obj):
    if isinstance(obj, list):
        return tuple(_freeze(x) for x in obj)
    if isinstance(obj, dict):
        return tuple(sorted((k, _freeze(v)) for k, v in obj.items()))
    return obj


def _thaw(obj):
    if isinstance(obj, tuple) and obj and all(
        isinstance(x, tuple) and len(x) == 2 and isinstance(x[0], str) for x in obj
    ):
        return {k: _thaw(v) for k, v in obj}
    if isinstance(obj, tuple):
        return [_thaw(x) for x in obj]
    return obj


def parse_triangulation(text: str) -> IdealTriangulation:
    """Parse and validate the JSON triangulation format."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"syntax error: {exc.msg}", exc.lineno, exc.colno) from exc
    return _from_document(doc)


def load_triangulation(path) -> IdealTriangulation:
    with open(path, encoding="utf-8") as fh:
        return parse_triangulation(fh.read())


def to_document(T: IdealTriangulation) -> dict:
    doc = {
        "name": T.name,
        "tetrahedra": [
            {
                "neighbors": list(t.neighbors),
                "gluings": ["".join(map(str, p)) for p in t.gluings],
                "edge_pair": t.pair_label(),
            }
            for t in T.tetrahedra
        ],
        "flat_labels": sorted(T.flat_labels),
    }
    if T.raw_curves:
        doc["peripheral_curves"] = _thaw(T.raw_curves)
    return doc


def _dump(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def serialize_triangulation(T: IdealTriangulation) -> str:
    return _dump(to_document(T))


def normalize_text(text: str) -> str:
    """Canonical form of a triangulation file: defaults filled, keys sorted."""
    doc = json.loads(text)
    doc.setdefault("name", "")
    doc.setdefault("flat_labels", [])
    doc["flat_labels"] = sorted(doc["flat_labels"])
    for tet in doc["tetrahedra"]:
        tet.setdefault("edge_pair", EDGE_PAIRS[0])
    if not doc.get("peripheral_curves"):
        doc.pop("peripheral_curves", None)
    return _dump(doc)


def triangulation_from_gluings(
    neighbors: Iterable, gluings: Iterable, name: str = "", flat_labels=()
) -> IdealTriangulation:
    """Build from Python lists; permutations may be strings or 4-sequences."""
    tets = []
    for nbs, gls in zip(neighbors, gluings):
        perms = tuple(
            tuple(int(c) for c in g) if isinstance(g, str) else tuple(g) for g in gls
        )
        tets.append(TetGluing(tuple(nbs), perms))
    return IdealTriangulation(tuple(tets), name, frozenset(flat_labels))
