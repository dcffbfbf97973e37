"""Newton solver for the edge and cusp equations with tracked log branches."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from math import gcd

import numpy as np

from . import kernels
from .developer import develop_torus, moduli_triple, total_volume
from .equations import GluingSystem, base_logs, build_system, compute_log_constants
from .triangulation import IdealTriangulation

__all__ = [
    "BranchError",
    "ShapeVector",
    "GeneralizedCoefficient",
    "SolveResult",
    "SweepRow",
    "moduli_triple",
    "make_target",
    "row_matrices",
    "eval_residuals",
    "jacobian",
    "holonomy_uv",
    "newton_solve",
    "continue_solution",
    "solve_complete",
    "solve",
    "cusp_shape_tau",
    "filling_map_g",
    "phi_map",
    "sweep_cells",
    "sweep",
]

TOL = 1e-12
FLAT_TOL = 1e-9
U_ZERO_TOL = 1e-9
FLAT_SNAP = 1e-12
MAX_HALVINGS = 30
DEGENERATE_RADIUS = 1e-8
MAX_WIND = 0.5 * math.pi
TWO_PI_I = 2j * math.pi


class BranchError(ValueError):
    """A step would move a logarithm by too much to track its branch."""


@dataclass(frozen=True)
class ShapeVector:
    z: np.ndarray
    log_z: np.ndarray
    log_1mz: np.ndarray

    def __post_init__(self):
        for name in ("z", "log_z", "log_1mz"):
            a = np.array(getattr(self, name), dtype=complex)
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @classmethod
    def from_base(cls, z) -> "ShapeVector":
        """Base branch: principal logs, argument pi on the negative real axis."""
        z = np.asarray(z, dtype=complex)
        L1, L2 = base_logs(z)
        return cls(z, np.array(L1), np.array(L2))

    principal = from_base

    @property
    def n(self) -> int:
        return len(self.z)

    def advance(self, z_new) -> "ShapeVector":
        """Move to nearby shapes, continuing both logs through the step."""
        z_new = np.asarray(z_new, dtype=complex)
        d1 = np.log(z_new / self.z)
        d2 = np.log((1 - z_new) / (1 - self.z))
        wind = max(np.abs(d1.imag).max(), np.abs(d2.imag).max())
        if wind > MAX_WIND:
            raise BranchError(f"branch step of {wind:.3g} rad exceeds {MAX_WIND:.3g}")
        return ShapeVector(z_new, self.log_z + d1, self.log_1mz + d2)

    def branch_defect(self) -> float:
        """Deviation of exp(log) from the shapes."""
        e1 = np.abs(np.exp(self.log_z) - self.z).max()
        e2 = np.abs(np.exp(self.log_1mz) - (1 - self.z)).max()
        return float(max(e1, e2))


@dataclass(frozen=True, order=True)
class GeneralizedCoefficient:
    """g = r * (p, q) with (p, q) coprime and cone angle 2 pi / r."""

    p: int
    q: int
    r: float = 1.0

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError(f"r must be positive, got {self.r}")
        if (self.p, self.q) == (0, 0):
            raise ValueError("(p, q) = (0, 0) is not a filling coefficient")
        if gcd(self.p, self.q) != 1:
            raise ValueError(f"({self.p}, {self.q}) is not coprime; use normalized()")

    @classmethod
    def normalized(cls, p: int, q: int, r: float = 1.0) -> "GeneralizedCoefficient":
        """Accept non-coprime integers as the cone structure gcd * (p/g, q/g)."""
        g = gcd(int(p), int(q))
        if g > 1:
            warnings.warn(
                f"({p}, {q}) is not coprime; interpreted as {g * r:g} * ({p // g}, {q // g})",
                stacklevel=2,
            )
            return cls(int(p) // g, int(q) // g, float(r) * g)
        return cls(int(p), int(q), float(r))

    @property
    def real_pair(self) -> tuple[float, float]:
        return self.r * self.p, self.r * self.q

    @property
    def cone_angle(self) -> float:
        return 2 * math.pi / self.r

    def __str__(self):
        return f"{self.p},{self.q}" + ("" if self.r == 1 else f",{self.r:g}")


def make_target(k: int, fills: dict | None = None) -> tuple:
    """Filling target: ``None`` (complete) or a coefficient per cusp."""
    fills = fills or {}
    for i in fills:
        if not 0 <= i < k:
            raise ValueError(f"cusp index {i} out of range 0..{k - 1}")
    return tuple(fills.get(i) for i in range(k))


@dataclass(frozen=True)
class SolveResult:
    shape: ShapeVector
    target: tuple
    converged: bool
    residual: float
    iterations: int
    u: tuple = ()
    v: tuple = ()
    census: tuple[int, int, int] = (0, 0, 0)
    volume: float = float("nan")
    dropped_residual: float = float("nan")
    message: str = ""
    flags: tuple[str, ...] = ()

    @property
    def z(self) -> np.ndarray:
        return self.shape.z


@dataclass(frozen=True)
class _Rows:
    A1: np.ndarray
    A2: np.ndarray
    C: np.ndarray
    # rows whose residual is reduced modulo 2 pi i (cusp rows of an unbased system)
    wrap: np.ndarray


def row_matrices(system: GluingSystem, target) -> _Rows:
    """Rows ``A1 log z + A2 log(1-z) - C`` of the reduced system."""
    ex = system.exponents
    A1, A2, C, wrap = [], [], [], []
    for m in system.selected:
        A1.append(ex.theta1[m])
        A2.append(ex.theta2[m])
        C.append(1j * math.pi * system.edge_const[m])
        wrap.append(False)
    if len(target) != system.k:
        raise ValueError(f"target has {len(target)} entries for {system.k} cusps")
    for (lam, mu), g in zip(system.cusp_rows, target):
        if g is None:
            A1.append(lam.a)
            A2.append(lam.b)
            C.append(-1j * math.pi * lam.const)
        else:
            p, q = g.p, g.q
            A1.append(tuple(p * x + q * y for x, y in zip(lam.a, mu.a)))
            A2.append(tuple(p * x + q * y for x, y in zip(lam.b, mu.b)))
            C.append(-1j * math.pi * (p * lam.const + q * mu.const) + TWO_PI_I / g.r)
        wrap.append(not system.based)
    return _Rows(
        np.array(A1, dtype=float),
        np.array(A2, dtype=float),
        np.array(C, dtype=complex),
        np.array(wrap, dtype=bool),
    )


def _evaluate(rows: _Rows, shape: ShapeVector):
    F, J = kernels.residual_jacobian(rows.A1, rows.A2, rows.C, shape.log_z, shape.log_1mz, shape.z)
    F = np.asarray(F)
    if rows.wrap.any():
        F = F.copy()
        F[rows.wrap] -= TWO_PI_I * np.round(F[rows.wrap].imag / (2 * math.pi))
    return F, np.asarray(J)


def eval_residuals(shape: ShapeVector, system: GluingSystem, target) -> np.ndarray:
    return _evaluate(row_matrices(system, target), shape)[0]


def jacobian(shape: ShapeVector, system: GluingSystem, target) -> np.ndarray:
    return _evaluate(row_matrices(system, target), shape)[1]


def holonomy_uv(shape: ShapeVector, system: GluingSystem, cusp: int) -> tuple[complex, complex]:
    """(u, v) = logs of the holonomies of (lambda, mu) on the tracked branch."""
    out = []
    for row in system.cusp_rows[cusp]:
        val = (
            np.dot(row.a, shape.log_z) + np.dot(row.b, shape.log_1mz) + 1j * math.pi * row.const
        )
        if not system.based:
            val -= TWO_PI_I * round(val.imag / (2 * math.pi))
        out.append(complex(val))
    return out[0], out[1]


def _census(z) -> tuple[int, int, int]:
    im = np.asarray(z).imag
    pos = int(np.sum(im > FLAT_TOL))
    neg = int(np.sum(im < -FLAT_TOL))
    return pos, len(im) - pos - neg, neg


def _dropped_residual(system: GluingSystem, shape: ShapeVector) -> float:
    ex = system.exponents
    worst = 0.0
    for m in system.dropped:
        val = (
            np.dot(ex.theta1[m], shape.log_z)
            + np.dot(ex.theta2[m], shape.log_1mz)
            - 1j * math.pi * system.edge_const[m]
        )
        worst = max(worst, abs(val))
    return float(worst)


def _norm(F) -> float:
    return float(np.abs(F).max()) if len(F) else 0.0


def _newton(rows: _Rows, shape: ShapeVector, tol: float, max_iter: int, offset=None):
    """Damped Newton.  Returns (shape, residual, iterations, ok, message)."""
    F, J = _evaluate(rows, shape)
    if offset is not None:
        F = F - offset
    res = _norm(F)
    merit = float(np.linalg.norm(F))
    polished = False
    for it in range(max_iter + 1):
        if res <= tol and (polished or res == 0.0):
            return shape, res, it, True, ""
        if res <= tol:
            # one more step to land well inside the tolerance
            polished = True
        elif it == max_iter:
            break
        try:
            dz = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            cond = np.linalg.cond(J)
            return shape, res, it, False, f"singular Jacobian (condition {cond:.3g})"
        if not np.all(np.isfinite(dz)):
            return shape, res, it, False, "singular Jacobian (non-finite step)"
        t = 1.0
        for _ in range(MAX_HALVINGS + 1):
            z_new = shape.z + t * dz
            if np.all(np.abs(z_new) > DEGENERATE_RADIUS) and np.all(
                np.abs(1 - z_new) > DEGENERATE_RADIUS
            ):
                try:
                    trial = shape.advance(z_new)
                except BranchError:
                    trial = None
                if trial is not None:
                    F_new, J_new = _evaluate(rows, trial)
                    if offset is not None:
                        F_new = F_new - offset
                    merit_new = float(np.linalg.norm(F_new))
                    if merit_new < merit or _norm(F_new) <= tol:
                        shape, F, J = trial, F_new, J_new
                        res, merit = _norm(F_new), merit_new
                        break
            if polished:
                break
            t *= 0.5
        else:
            return shape, res, it, False, "damping exhausted (step rejected at every scale)"
    if res <= tol:
        return shape, res, max_iter, True, ""
    return shape, res, max_iter, False, f"no convergence in {max_iter} iterations"


def _finish(system, shape, target, res, iters, ok, msg, flags=()) -> SolveResult:
    uv = [holonomy_uv(shape, system, i) for i in range(system.k)]
    return SolveResult(
        shape=shape,
        target=tuple(target),
        converged=ok,
        residual=res,
        iterations=iters,
        u=tuple(x[0] for x in uv),
        v=tuple(x[1] for x in uv),
        census=_census(shape.z),
        volume=total_volume(shape.z),
        dropped_residual=_dropped_residual(system, shape),
        message=msg,
        flags=tuple(flags),
    )


def newton_solve(
    initial: ShapeVector,
    system: GluingSystem,
    target,
    tol: float = TOL,
    max_iter: int = 50,
) -> SolveResult:
    rows = row_matrices(system, target)
    shape, res, iters, ok, msg = _newton(rows, initial, tol, max_iter)
    return _finish(system, shape, target, res, iters, ok, msg)


def continue_solution(
    seed: ShapeVector,
    system: GluingSystem,
    target,
    tol: float = TOL,
    max_iter: int = 50,
    min_step: float = 1.0 / 1024,
) -> SolveResult:
    """Newton homotopy from ``seed``: solve F(z) = (1 - s) F(seed), s: 0 -> 1."""
    rows = row_matrices(system, target)
    F0 = _evaluate(rows, seed)[0]
    s, ds = 0.0, 1.0
    shape = seed
    total = 0
    while s < 1.0:
        s1 = min(1.0, s + ds)
        last = s1 >= 1.0
        trial, res, iters, ok, msg = _newton(
            rows,
            shape,
            tol if last else 1e-9,
            max_iter if last else 12,
            offset=None if last else (1 - s1) * F0,
        )
        total += iters
        if ok:
            shape, s = trial, s1
            ds = min(1.0, 2 * ds)
        else:
            ds *= 0.5
            if ds < min_step:
                return _finish(
                    system, shape, target, res, total, False,
                    f"continuation stalled at s={s:.4g}: {msg}",
                )
    res = _norm(_evaluate(rows, shape)[0])
    return _finish(system, shape, target, res, total, True, "")


def solve_complete(
    system: GluingSystem,
    initial=None,
    tol: float = TOL,
    max_iter: int = 50,
) -> tuple[GluingSystem, SolveResult]:
    """Solve for the complete structure and fix the log constants there.

    Until a base solution is known the cusp rows are matched modulo 2 pi i.
    After convergence the shapes are re-read on the base branch, the edge
    constants are checked against the angle-sum values and every cusp
    constant is fixed so that u = v = 0.
    """
    n = system.n
    z_init = np.full(n, 1j) if initial is None else np.asarray(initial, dtype=complex)
    unbased = replace(system, based=False)
    target = (None,) * system.k
    res = newton_solve(ShapeVector.from_base(z_init), unbased, target, tol, max_iter)
    if not res.converged:
        return system, res
    # flat shapes sit on the real axis; roundoff must not pick the other branch
    z0 = np.asarray(res.z, dtype=complex).copy()
    near = np.abs(z0.imag) <= FLAT_SNAP * np.maximum(1.0, np.abs(z0))
    z0[near] = z0[near].real
    based = compute_log_constants(unbased, z0)
    if based.edge_const != system.edge_const:
        return system, replace(
            res,
            converged=False,
            message="solution is not geometric: edge angle sums differ from 2 pi",
        )
    shape, final, iters, ok, msg = _newton(
        row_matrices(based, target), ShapeVector.from_base(z0), tol, max_iter
    )
    return based, _finish(based, shape, target, final, res.iterations + iters, ok, msg)


def solve(
    T: IdealTriangulation | GluingSystem,
    target=None,
    initial=None,
    tol: float = TOL,
    max_iter: int = 50,
) -> tuple[GluingSystem, SolveResult, SolveResult]:
    """Complete solve followed by continuation to ``target``.

    Returns (based system, complete result, target result).
    """
    system = build_system(T) if isinstance(T, IdealTriangulation) else T
    based, complete = solve_complete(system, initial, tol, max_iter)
    if target is None or all(g is None for g in target) or not complete.converged:
        return based, complete, complete
    res = continue_solution(complete.shape, based, target, tol, max_iter)
    if not res.converged:
        direct = newton_solve(complete.shape, based, target, tol, max_iter)
        if direct.converged:
            res = replace(direct, flags=direct.flags + ("unverified branch",))
    return based, complete, res


def cusp_shape_tau(system: GluingSystem, shape, cusp: int) -> complex:
    """tau = b / a from the developed cusp torus at a complete cusp."""
    z = shape.z if isinstance(shape, ShapeVector) else shape
    dev = develop_torus(system.triangulation, cusp, z)
    if abs(dev.a) < 1e-12:
        raise ValueError("degenerate development: translation part of lambda vanishes")
    return dev.tau


def filling_map_g(result: SolveResult, cusp: int, tol: float = U_ZERO_TOL):
    """Real pair (P, Q) with P u + Q v = 2 pi i, or None for a complete cusp."""
    u, v = result.u[cusp], result.v[cusp]
    if abs(u) <= tol:
        return None
    # P u + Q v = 2 pi i, real and imaginary parts
    M = np.array([[u.real, v.real], [u.imag, v.imag]])
    det = np.linalg.det(M)
    if abs(det) < 1e-300:
        raise ValueError("u and v are real-dependent")
    P, Q = np.linalg.solve(M, np.array([0.0, 2 * math.pi]))
    return float(P), float(Q)


def phi_map(tau: complex, g) -> complex:
    """2 pi i / (P + tau Q) for g = r (p, q); 0 for the complete cusp."""
    if g is None:
        return 0j
    P, Q = g.real_pair if isinstance(g, GeneralizedCoefficient) else g
    return TWO_PI_I / (P + tau * Q)


# ---------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class SweepRow:
    coefficient: GeneralizedCoefficient | None
    result: SolveResult
    seed: GeneralizedCoefficient | None = None

    @property
    def converged(self) -> bool:
        return self.result.converged


def sweep_cells(pq_range: tuple[int, int] | None, r_values=(1.0,), direction=None) -> list:
    """Coprime pairs in a box (or one direction), times each cone parameter r."""
    pairs = []
    if pq_range is not None:
        a, b = pq_range
        for p in range(a, b + 1):
            for q in range(a, b + 1):
                if (p, q) != (0, 0) and gcd(p, q) == 1:
                    pairs.append((p, q))
    if direction is not None:
        pairs.append(tuple(direction))
    cells = []
    for p, q in sorted(set(pairs)):
        for r in r_values:
            cells.append(GeneralizedCoefficient(p, q, float(r)))
    return cells


def _solve_cell(args):
    system, seed_shape, target, tol, max_iter = args
    res = continue_solution(seed_shape, system, target, tol, max_iter)
    if not res.converged:
        direct = newton_solve(seed_shape, system, target, tol, max_iter)
        if direct.converged:
            res = replace(direct, flags=direct.flags + ("unverified branch",))
    return res


BATCH = 8


def sweep(
    system: GluingSystem,
    base: SolveResult,
    cusp: int,
    cells,
    fixed=None,
    tol: float = TOL,
    max_iter: int = 50,
    jobs: int = 1,
) -> list[SweepRow]:
    """Solve each cell, seeding from the nearest solved cell.

    ``base`` solves the target with ``cusp`` complete and the other cusps as in
    ``fixed``.  Cells are visited in order of increasing |phi(g)| (nearest to
    the complete structure first) in batches of fixed size; every cell in a
    batch is seeded from cells of earlier batches only, so the result does not
    depend on ``jobs``.
    """
    if not system.based:
        raise ValueError("sweep needs constants fixed at a complete solution")
    tau = cusp_shape_tau(system, base.shape, cusp)
    fixed = dict(fixed or {})
    fixed.pop(cusp, None)

    def target_for(g):
        t = dict(fixed)
        t[cusp] = g
        return make_target(system.k, t)

    order = sorted(cells, key=lambda g: (abs(phi_map(tau, g)), g.p, g.q, g.r))
    solved: list[tuple[complex, GeneralizedCoefficient | None, ShapeVector]] = [
        (0j, None, base.shape)
    ]
    results: dict = {}
    executor = ProcessPoolExecutor(max_workers=jobs) if jobs > 1 else None
    try:
        for start in range(0, len(order), BATCH):
            batch = order[start : start + BATCH]
            tasks, seeds = [], []
            for g in batch:
                w = phi_map(tau, g)
                _, seed_g, seed_shape = min(
                    solved, key=lambda s: (abs(s[0] - w), s[1] is not None)
                )
                seeds.append(seed_g)
                tasks.append((system, seed_shape, target_for(g), tol, max_iter))
            if executor is not None:
                outs = list(executor.map(_solve_cell, tasks))
            else:
                outs = [_solve_cell(t) for t in tasks]
            for g, seed_g, res in zip(batch, seeds, outs):
                results[g] = SweepRow(g, res, seed_g)
                if res.converged and "unverified branch" not in res.flags:
                    solved.append((phi_map(tau, g), g, res.shape))
    finally:
        if executor is not None:
            executor.shutdown()
    rows = [SweepRow(None, base, None)]
    rows.extend(results[g] for g in sorted(cells, key=lambda g: (g.p, g.q, g.r)))
    return rows
