"""Integer data of the edge and cusp equations.

Each tetrahedron edge carries one of the three moduli ``z``, ``1/(1-z)`` or
``1-1/z``, written as ``delta0 * z**d1 * (1-z)**d2`` with ``(d1, d2)`` equal to
``(1, 0)``, ``(0, -1)`` or ``(-1, 1)`` and ``delta0 = -1`` only for the last.

In logarithmic form every equation reads

    sum_j A1[j] log z_j + A2[j] log(1 - z_j) = i*pi*K

with integer ``K``.  For an edge equation ``K = 2 r_m + (1 - eps_m)/2``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace

from . import exact
from .cusps import CuspCurve, cut_corners, edge_ends
from .triangulation import IdealTriangulation

__all__ = [
    "FORM_EXPONENTS",
    "ExponentMatrix",
    "CuspRow",
    "GluingSystem",
    "build_edge_rows",
    "build_incidence_X",
    "check_XTheta_zero",
    "select_independent_edge_rows",
    "build_cusp_rows",
    "build_cusp_row",
    "build_system",
    "compute_log_constants",
    "base_logs",
    "check_system",
]

FORM_EXPONENTS = ((1, 0), (0, -1), (-1, 1))
ROUND_TOL = 1e-6


@dataclass(frozen=True)
class ExponentMatrix:
    theta1: tuple[tuple[int, ...], ...]
    theta2: tuple[tuple[int, ...], ...]
    epsilon: tuple[int, ...]
    # number of 1-1/z incidences per edge
    n3: tuple[int, ...]

    @property
    def theta(self) -> list[list[int]]:
        """The n x 2n matrix [theta1 | theta2]."""
        return [list(a) + list(b) for a, b in zip(self.theta1, self.theta2)]


@dataclass(frozen=True)
class CuspRow:
    """Holonomy of a peripheral curve: ``sign * prod z**a (1-z)**b``.

    ``const`` is the integer K with ``log h = sum a log z + b log(1-z) + i*pi*K``
    on the tracked branch; ``sign == (-1)**const``.
    """

    cusp: int
    tag: str
    a: tuple[int, ...]
    b: tuple[int, ...]
    const: int

    @property
    def sign(self) -> int:
        return -1 if self.const % 2 else 1

    def negated(self) -> "CuspRow":
        return CuspRow(
            self.cusp,
            self.tag,
            tuple(-x for x in self.a),
            tuple(-x for x in self.b),
            -self.const,
        )

    def product(self, z) -> complex:
        h = complex(self.sign)
        for zj, aj, bj in zip(z, self.a, self.b):
            h *= complex(zj) ** aj * (1 - complex(zj)) ** bj
        return h


@dataclass(frozen=True)
class GluingSystem:
    triangulation: IdealTriangulation = field(repr=False)
    exponents: ExponentMatrix
    X: tuple[tuple[int, ...], ...]
    selected: tuple[int, ...]
    # right-hand sides K_m of every edge equation (i*pi*K_m)
    edge_const: tuple[int, ...]
    # (lambda_i, mu_i) per cusp
    cusp_rows: tuple[tuple[CuspRow, CuspRow], ...]
    rank_deficient: bool = False
    # True once cusp constants have been fixed from a base solution
    based: bool = False

    @property
    def n(self) -> int:
        return len(self.exponents.epsilon)

    @property
    def k(self) -> int:
        return len(self.X)

    @property
    def dropped(self) -> tuple[int, ...]:
        return tuple(m for m in range(self.n) if m not in self.selected)

    @property
    def r(self) -> tuple[int, ...]:
        """Log-branch integers r_m with K_m = 2 r_m + (1 - eps_m)/2."""
        return tuple(
            (K - (1 - e) // 2) // 2 for K, e in zip(self.edge_const, self.exponents.epsilon)
        )


def build_edge_rows(T: IdealTriangulation) -> ExponentMatrix:
    n = T.n
    th1, th2, eps, n3 = [], [], [], []
    for ec in T.edge_classes:
        r1, r2 = [0] * n, [0] * n
        count3 = 0
        for t, (a, b) in ec.incidences:
            form = T.tetrahedra[t].form_at(a, b)
            d1, d2 = FORM_EXPONENTS[form]
            r1[t] += d1
            r2[t] += d2
            count3 += form == 2
        th1.append(tuple(r1))
        th2.append(tuple(r2))
        eps.append(-1 if count3 % 2 else 1)
        n3.append(count3)
    return ExponentMatrix(tuple(th1), tuple(th2), tuple(eps), tuple(n3))


def build_incidence_X(T: IdealTriangulation) -> list[list[int]]:
    X = [[0] * T.n for _ in range(T.k)]
    for m, ends in enumerate(edge_ends(T)):
        for i in ends:
            X[i][m] += 1
    return X


def check_XTheta_zero(X, exponents: ExponentMatrix) -> dict:
    """Exact product X . [theta1 | theta2]; reports the first nonzero entry."""
    prod = exact.matmul(X, exponents.theta)
    witness = None
    for i, row in enumerate(prod):
        for c, x in enumerate(row):
            if x:
                n = len(exponents.epsilon)
                part, j = ("theta1", c) if c < n else ("theta2", c - n)
                witness = {"cusp": i, "matrix": part, "tetrahedron": j, "value": x}
                break
        if witness:
            break
    return {"ok": witness is None, "product": prod, "witness": witness}


def select_independent_edge_rows(exponents: ExponentMatrix, k: int) -> tuple[list[int], bool]:
    """Lexicographically smallest maximal independent set of edge rows.

    Returns the indices and a flag that is True when rank < n - k.
    """
    rows = exponents.theta
    sel = exact.independent_rows(rows)
    return sel, len(sel) < len(rows) - k


def build_cusp_row(T: IdealTriangulation, curve: CuspCurve, tag: str = "") -> CuspRow:
    a, b = [0] * T.n, [0] * T.n
    const = 0
    for t, v, w, left in cut_corners(T, curve):
        s = 1 if left else -1
        form = T.tetrahedra[t].form_at(v, w)
        d1, d2 = FORM_EXPONENTS[form]
        a[t] += s * d1
        b[t] += s * d2
        if form == 2:
            const += s
    return CuspRow(curve.cusp, tag or curve.tag, tuple(a), tuple(b), const)


def build_cusp_rows(T: IdealTriangulation) -> tuple[tuple[CuspRow, CuspRow], ...]:
    out = []
    for i in range(T.k):
        lam, mu = T.peripheral_basis(i)
        out.append((build_cusp_row(T, lam, "lambda"), build_cusp_row(T, mu, "mu")))
    return tuple(out)


def build_system(T: IdealTriangulation) -> GluingSystem:
    """Assemble all integer data.

    Edge constants are the angle-sum values ``K_m = 2 - N3_m`` (total angle 2 pi
    around each edge).  Cusp constants are provisional until fixed from a base
    solution with :func:`compute_log_constants`.
    """
    ex = build_edge_rows(T)
    X = build_incidence_X(T)
    sel, deficient = select_independent_edge_rows(ex, T.k)
    edge_const = tuple(2 - c for c in ex.n3)
    return GluingSystem(
        T,
        ex,
        tuple(tuple(r) for r in X),
        tuple(sel),
        edge_const,
        build_cusp_rows(T),
        deficient,
    )


def base_logs(z) -> tuple[list[complex], list[complex]]:
    """Principal logs with the flat convention arg = pi on the negative axis.

    For real ``z > 1`` the value ``log(1 - z)`` is taken with argument ``-pi``,
    its limit from the upper half plane, so that flat shapes sit on the boundary
    of the positively oriented region.
    """
    L1, L2 = [], []
    for zj in z:
        zj = complex(zj)
        L1.append(_log_flat(zj))
        w = 1 - zj
        if w.imag == 0 and w.real < 0:
            L2.append(complex(math.log(-w.real), -math.pi))
        else:
            L2.append(_log_flat(w))
    return L1, L2


def _log_flat(w: complex) -> complex:
    if w.imag == 0 and w.real < 0:
        return complex(math.log(-w.real), math.pi)
    return cmath.log(w)


def _round_const(value: complex, what: str) -> int:
    k = value.imag / math.pi
    K = round(k)
    if abs(k - K) > ROUND_TOL or abs(value.real) > ROUND_TOL:
        raise ValueError(
            f"{what}: log-form constant {value!r} is not i*pi times an integer; "
            "the base solution or branch choice is invalid"
        )
    return K


def compute_log_constants(system: GluingSystem, z0, logs=None) -> GluingSystem:
    """Fix every log constant from the base solution ``z0``.

    ``logs`` may carry tracked branches ``(L1, L2)``; the default is the base
    branch of :func:`base_logs`.  Raises if a constant is not integral.
    """
    L1, L2 = logs if logs is not None else base_logs(z0)
    ex = system.exponents
    consts = []
    for m in range(system.n):
        val = sum(a * l1 + b * l2 for a, b, l1, l2 in zip(ex.theta1[m], ex.theta2[m], L1, L2))
        consts.append(_round_const(val, f"edge {m}"))
    rows = []
    for lam, mu in system.cusp_rows:
        pair = []
        for row in (lam, mu):
            val = sum(a * l1 + b * l2 for a, b, l1, l2 in zip(row.a, row.b, L1, L2))
            pair.append(replace(row, const=-_round_const(val, f"cusp {row.cusp} {row.tag}")))
        rows.append(tuple(pair))
    return replace(system, edge_const=tuple(consts), cusp_rows=tuple(rows), based=True)


def check_system(system: GluingSystem) -> dict:
    """Exact lemma checks on the assembled data."""
    T = system.triangulation
    ex = system.exponents
    th = ex.theta
    xt = check_XTheta_zero(system.X, ex)
    rank_x = exact.rank(system.X)
    rank_t = exact.rank(th)
    theta_cols = exact.column_sums(th)
    x_cols = exact.column_sums(system.X)
    report = {
        "n": T.n,
        "k": T.k,
        "edges": len(T.edge_classes),
        "edges_equal_n": len(T.edge_classes) == T.n,
        "X": [list(r) for r in system.X],
        "X_theta_zero": xt["ok"],
        "X_theta_witness": xt["witness"],
        "rank_X": rank_x,
        "rank_X_equals_k": rank_x == T.k,
        "rank_theta": rank_t,
        "rank_theta_at_most_n_minus_k": rank_t <= T.n - T.k,
        "rank_theta_deficient": rank_t < T.n - T.k,
        "theta_column_sums_zero": all(c == 0 for c in theta_cols),
        "X_column_sums_two": all(c == 2 for c in x_cols),
        "selected_rows": list(system.selected),
        "epsilon": list(ex.epsilon),
    }
    report["ok"] = all(
        report[key]
        for key in (
            "edges_equal_n",
            "X_theta_zero",
            "rank_X_equals_k",
            "rank_theta_at_most_n_minus_k",
            "theta_column_sums_zero",
            "X_column_sums_two",
        )
    )
    return report
