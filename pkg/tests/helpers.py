"""Shared builders for tests."""

from __future__ import annotations

from dehnfill.triangulation import EDGE_PAIRS, IdealTriangulation, TetGluing, edge_pair_index


def relabel(T: IdealTriangulation, tet_perm, vert_perms) -> IdealTriangulation:
    """Renumber tetrahedra by ``tet_perm`` and vertices of tet t by ``vert_perms[t]``.

    Vertex relabelings must be even to keep the gluings orientation reversing.
    The modulus stays on the image of the original edge pair.
    """
    n = T.n
    new = [None] * n
    for t, tet in enumerate(T.tetrahedra):
        s = vert_perms[t]
        nbs, gls = [None] * 4, [None] * 4
        for f in range(4):
            nb, p = tet.neighbors[f], tet.gluings[f]
            q = [0] * 4
            for x in range(4):
                q[s[x]] = vert_perms[nb][p[x]]
            nbs[s[f]] = tet_perm[nb]
            gls[s[f]] = tuple(q)
        a, b = (int(c) for c in EDGE_PAIRS[tet.edge_pair][:2])
        new[tet_perm[t]] = TetGluing(tuple(nbs), tuple(gls), edge_pair_index(s[a], s[b]))
    flats = frozenset(tet_perm[t] for t in T.flat_labels)
    return IdealTriangulation(tuple(new), T.name, flats)


def with_gluing(T: IdealTriangulation, t: int, f: int, perm) -> IdealTriangulation:
    """Copy of ``T`` with one gluing permutation replaced (no validation of intent)."""
    tets = list(T.tetrahedra)
    g = list(tets[t].gluings)
    g[f] = tuple(perm)
    tets[t] = TetGluing(tets[t].neighbors, tuple(g), tets[t].edge_pair)
    return IdealTriangulation(tuple(tets), T.name, T.flat_labels)
