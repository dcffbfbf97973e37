"""Regenerate fixtures/whitehead_flat.json.

The Whitehead link complement is one regular ideal octahedron.  Cutting it
along its equatorial square gives two square pyramids; coning each from its
apex with the square fanned from adjacent corners yields four fat tetrahedra
and one flat tetrahedron.  Prints the shapes of the regular structure.
"""

from __future__ import annotations

import sys
from pathlib import Path

from dehnfill import load_triangulation
from dehnfill.developer import cross_ratio
from dehnfill.polyhedral import FacePairing, PolyhedralComplex, Polyhedron, subdivide_polyhedral
from dehnfill.triangulation import CCW, serialize_triangulation

FIXTURES = Path(__file__).resolve().parent.parent / "src" / "dehnfill" / "fixtures"
N, S = 0, 1  # apexes; equator is 2..5


def octahedron_complex():
    T = load_triangulation(FIXTURES / "whitehead.json")
    axis = next(e for e in T.edge_classes if e.valence == 4)
    t, (a, b) = axis.incidences[0]
    c, d = (x for x in range(4) if x not in (a, b))
    lab = {}
    state = (t, a, b, c, d)
    for i in range(4):
        tt, aa, bb, cc, dd = state
        lab[tt] = {aa: N, bb: S, dd: 2 + i, cc: 2 + (i + 1) % 4}
        nb, p = T.glue(tt, dd)
        state = (nb, p[aa], p[bb], p[dd], p[cc])

    faces = {}
    for t in sorted(lab):
        for f in range(4):
            if lab[t][f] in (N, S):
                faces[(t, f)] = tuple(lab[t][x] for x in reversed(CCW[f]))
    top = [faces[k] for k in sorted(faces) if N in faces[k]] + [(5, 4, 3, 2)]
    bottom = [faces[k] for k in sorted(faces) if S in faces[k]] + [(2, 3, 4, 5)]
    polys = (
        Polyhedron(tuple(top), N, (None,) * 4 + (2,)),
        Polyhedron(tuple(bottom), S, (None,) * 4 + (3,)),
    )

    def locate(face):
        for pi, P in enumerate(polys):
            for fi, F in enumerate(P.faces):
                if sorted(F) == sorted(face):
                    return pi, fi
        raise LookupError(face)

    pairings, done = [], set()
    for (t, f), face in sorted(faces.items()):
        if (t, f) in done:
            continue
        nb, p = T.glue(t, f)
        done |= {(t, f), (nb, p[f])}
        vmap = tuple((lab[t][x], lab[nb][p[x]]) for x in range(4) if x != f)
        pairings.append(FacePairing(*locate(face), *locate(faces[(nb, p[f])]), vmap))
    pairings.append(FacePairing(0, 4, 1, 4, tuple((e, e) for e in (2, 3, 4, 5))))
    return PolyhedralComplex(polys, tuple(pairings), "whitehead (octahedron, one flat)")


def regular_shapes(labels):
    pos = {N: (1, 0), S: (0, 1), 2: (1, 1), 3: (1j, 1), 4: (-1, 1), 5: (-1j, 1)}
    pos = {k: (complex(x), complex(y)) for k, (x, y) in pos.items()}
    return [cross_ratio(*(pos[v] for _, v in lab)) for lab in labels]


def main():
    T, labels = subdivide_polyhedral(octahedron_complex(), with_labels=True)
    text = serialize_triangulation(T)
    if "--check" in sys.argv:
        return 0 if (FIXTURES / "whitehead_flat.json").read_text() == text else 1
    (FIXTURES / "whitehead_flat.json").write_text(text)
    for z in regular_shapes(labels):
        print(z)
    return 0


if __name__ == "__main__":
    sys.exit(main())
