"""Max-entropy programs over product measures and their Lagrangian duals.

A program maximizes ``sum_i H((1+x_i)/2) + f.x`` over ``x in [-1, 1]^n``
subject to ``A x <= b``.  The linear term ``f`` is an optional external field
(zero in the plain cut programs).  With multipliers ``y >= 0`` the inner
supremum is explicit:

    x(y)  = tanh(f - A^T y)
    g(y)  = sum_i log(2 cosh(u_i)) + b.y,      u = f - A^T y
    dg/dy = b - A x(y)

so the dual is a smooth convex problem on the orthant (or a box).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.optimize import linprog, minimize

from .errors import GridTooLarge
from .model import binary_entropy_of_mean
from .regularity import CutDecomposition, CutMatrix

LOG2 = math.log(2.0)


@dataclass(frozen=True, eq=False)
class MaxEntProgram:
    A: np.ndarray
    b: np.ndarray
    gamma: float = 0.0
    # how b moves per unit of gamma (n for every row of a cut program)
    slack_unit: np.ndarray = None
    field: np.ndarray = None
    meta: dict = None

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        b = np.asarray(self.b, dtype=float).ravel()
        if A.ndim != 2:
            raise ValueError("A must be a 2-d array (use shape (0, n) for no constraints)")
        if A.shape[0] != b.size:
            raise ValueError("A and b disagree on the number of constraints")
        n = A.shape[1]
        su = np.zeros(b.size) if self.slack_unit is None else np.asarray(self.slack_unit, float).ravel()
        f = np.zeros(n) if self.field is None else np.asarray(self.field, float).ravel()
        if su.size != b.size or f.size != n:
            raise ValueError("slack_unit or field has the wrong length")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "slack_unit", su)
        object.__setattr__(self, "field", f)
        object.__setattr__(self, "meta", dict(self.meta or {}))

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @classmethod
    def unconstrained(cls, n: int, field=None) -> "MaxEntProgram":
        return cls(np.zeros((0, n)), np.zeros(0), field=field)

    def with_gamma(self, gamma: float) -> "MaxEntProgram":
        return replace(self, b=self.b + (gamma - self.gamma) * self.slack_unit, gamma=float(gamma))

    def to_json(self) -> str:
        return json.dumps(
            {
                "n": self.n,
                "constraints": [{"a": list(map(float, a)), "b": float(bj)} for a, bj in zip(self.A, self.b)],
                "gamma": self.gamma,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "MaxEntProgram":
        d = json.loads(text)
        n = int(d["n"])
        A = np.array([c["a"] for c in d["constraints"]], dtype=float).reshape(-1, n)
        b = np.array([c["b"] for c in d["constraints"]], dtype=float)
        return cls(A, b, float(d.get("gamma", 0.0)))


@dataclass(frozen=True)
class DualPoint:
    y: np.ndarray
    box_bound: float = math.inf

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).ravel()
        if np.any(y < 0) or np.any(y > self.box_bound):
            raise ValueError("dual point outside [0, box_bound]")
        object.__setattr__(self, "y", y)


@dataclass(frozen=True)
class ProgramValue:
    primal_value: float
    dual_value: float
    primal_point: np.ndarray | None
    status: str
    converged: bool = True
    y: np.ndarray | None = None
    iterations: int = 0


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-8
    max_iter: int = 100_000
    armijo: float = 1e-4
    # stand-in for an unbounded box when recovering the primal
    y_max: float = 1e6
    repair_tol: float = 1e-7


def _y(program: MaxEntProgram, y) -> np.ndarray:
    y = y.y if isinstance(y, DualPoint) else np.asarray(y, dtype=float).ravel()
    if y.size != program.m:
        raise ValueError(f"expected {program.m} multipliers, got {y.size}")
    return y


def _u(program, y):
    return program.field - program.A.T @ y


def primal_x_of_y(program: MaxEntProgram, y) -> np.ndarray:
    """Unique maximizer over the cube of ``L(x, y)``."""
    return np.tanh(_u(program, _y(program, y)))


def _log2cosh(u):
    return np.logaddexp(u, -u)


def dual_objective(program: MaxEntProgram, y) -> float:
    y = _y(program, y)
    return float(_log2cosh(_u(program, y)).sum() + program.b @ y)


def dual_gradient(program: MaxEntProgram, y) -> np.ndarray:
    y = _y(program, y)
    return program.b - program.A @ np.tanh(_u(program, y))


def lagrangian(program: MaxEntProgram, x, y) -> float:
    x, y = np.asarray(x, float), _y(program, y)
    return float(
        binary_entropy_of_mean(x).sum() + program.field @ x - y @ (program.A @ x - program.b)
    )


def primal_objective(program: MaxEntProgram, x) -> float:
    x = np.asarray(x, float)
    return float(binary_entropy_of_mean(x).sum() + program.field @ x)


def _minimize_box(program: MaxEntProgram, ub: float, config: SolverConfig):
    """Projected gradient with Barzilai-Borwein steps and Armijo backtracking."""
    m = program.m
    y = np.zeros(m)
    if m == 0:
        return y, dual_objective(program, y), True, 0
    A, b, f = program.A, program.b, program.field

    def evaluate(y):
        u = f - A.T @ y
        return float(_log2cosh(u).sum() + b @ y), b - A @ np.tanh(u)

    g, grad = evaluate(y)
    step = 1.0
    for it in range(config.max_iter):
        pg = y - np.clip(y - grad, 0.0, ub)
        if np.max(np.abs(pg)) < config.tol:
            return y, g, True, it
        t = step
        while True:
            y_new = np.clip(y - t * grad, 0.0, ub)
            d = y_new - y
            g_new, grad_new = evaluate(y_new)
            if g_new <= g + config.armijo * (grad @ d) or t < 1e-20:
                break
            t *= 0.5
        s, dy = y_new - y, grad_new - grad
        if not np.any(s):
            return y, g, False, it
        sy = s @ dy
        step = float(np.clip((s @ s) / sy, 1e-12, 1e12)) if sy > 0 else min(2.0 * t, 1e12)
        y, g, grad = y_new, g_new, grad_new
    return y, g, False, config.max_iter


def solve_dual_bounded(program: MaxEntProgram, K: float, config: SolverConfig | None = None, seed=0) -> ProgramValue:
    """Minimize ``g`` over the box ``[0, K/gamma]^m``.

    A value at or below ``-(K-1) n`` certifies that the program with doubled
    slack is infeasible.  Otherwise the status is ``"feasible"``, meaning no
    infeasibility was certified.  ``primal_value`` is not computed here.
    """
    config = config or SolverConfig()
    if not K > 1:
        raise ValueError("K must exceed 1")
    if not program.gamma > 0 and program.m > 0:
        raise ValueError("the bounded dual needs gamma > 0")
    ub = K / program.gamma if program.gamma > 0 else math.inf
    y, g, conv, it = _minimize_box(program, ub, config)
    n = program.n
    status = "infeasible-certified" if g <= -(K - 1) * n * (1 - 1e-9) else "feasible"
    return ProgramValue(math.nan, g, primal_x_of_y(program, y), status, conv, y, it)


def feasibility_margin(program: MaxEntProgram) -> float | None:
    """Largest ``t`` with ``A x + t <= b`` and ``|x_i| <= 1 - t``; ``None`` if infeasible."""
    n, m = program.n, program.m
    if m == 0:
        return 1.0
    # variables (x, t); maximize t
    c = np.zeros(n + 1)
    c[-1] = -1.0
    A_ub = np.hstack([program.A, np.ones((m, 1))])
    box = np.vstack(
        [np.hstack([np.eye(n), np.ones((n, 1))]), np.hstack([-np.eye(n), np.ones((n, 1))])]
    )
    res = linprog(
        c,
        A_ub=np.vstack([A_ub, box]),
        b_ub=np.concatenate([program.b, np.ones(2 * n)]),
        bounds=[(None, None)] * n + [(None, 1.0)],
        method="highs",
    )
    if res.status == 2:
        return None
    if res.status != 0:
        raise RuntimeError(f"feasibility LP failed: {res.message}")
    t = -res.fun
    return None if t < -1e-9 else float(t)


def _violation(program, x):
    if program.m == 0:
        return 0.0
    return float(max(0.0, np.max(program.A @ x - program.b)))


def _repair(program: MaxEntProgram, x0: np.ndarray) -> np.ndarray:
    # nearest feasible point, then a short entropy polish inside the polytope
    cons = [{"type": "ineq", "fun": lambda x: program.b - program.A @ x, "jac": lambda x: -program.A}]
    bounds = [(-1.0, 1.0)] * program.n
    res = minimize(
        lambda x: 0.5 * np.sum((x - x0) ** 2),
        np.clip(x0, -1, 1),
        jac=lambda x: x - x0,
        bounds=bounds,
        constraints=cons,
        method="SLSQP",
        options={"ftol": 1e-14, "maxiter": 500},
    )
    x = np.clip(res.x, -1.0, 1.0)
    return x


def solve_primal(program: MaxEntProgram, config: SolverConfig | None = None, seed=0) -> ProgramValue:
    """Entropy maximizer of the program, or ``-inf`` with status ``"infeasible"``.

    Feasibility is decided by a linear program first.  The maximizer is then
    recovered from a dual solve on a large box as ``x(y*)``, and projected back
    onto the constraints when it violates them by more than ``repair_tol``.
    Status ``"boundary"`` means the feasible set has no interior point.
    """
    config = config or SolverConfig()
    margin = feasibility_margin(program)
    if margin is None:
        return ProgramValue(-math.inf, -math.inf, None, "infeasible", True)
    y, g, conv, it = _minimize_box(program, config.y_max, config)
    x = primal_x_of_y(program, y)
    if _violation(program, x) > config.repair_tol:
        x = _repair(program, x)
        # a repaired point can violate by round-off only
        if _violation(program, x) > 1e-6:
            conv = False
    status = "boundary" if margin < 1e-9 else "feasible"
    return ProgramValue(primal_objective(program, x), g, x, status, conv, y, it)


# ---------------------------------------------------------------------------
# programs derived from cut decompositions


def cut_program(cuts: Sequence[CutMatrix], n: int, r, c, gamma: float, field=None) -> MaxEntProgram:
    """Rows ``|sum_{R_t} x - r_t| <= gamma n`` and ``|sum_{C_t} x - c_t| <= gamma n``.

    Row order is ``(+R_t, -R_t, +C_t, -C_t)`` in blocks of ``s``.
    """
    s = len(cuts)
    r = np.asarray(r, dtype=float).ravel()
    c = np.asarray(c, dtype=float).ravel()
    if r.size != s or c.size != s:
        raise ValueError("r and c need one entry per cut")
    R = np.array([cut.row_indicator(n) for cut in cuts]).reshape(s, n)
    C = np.array([cut.col_indicator(n) for cut in cuts]).reshape(s, n)
    A = np.vstack([R, -R, C, -C])
    b = np.concatenate([r, -r, c, -c]) + gamma * n
    meta = {"s": s, "r": r.tolist(), "c": c.tolist()}
    return MaxEntProgram(A, b, float(gamma), np.full(4 * s, float(n)), field, meta)


@dataclass(frozen=True)
class GridIndex:
    gamma: float
    points: np.ndarray
    ell: float = 1.0


def grid_points(n: int, gamma: float) -> np.ndarray:
    """A covering of ``[-n, n]`` at radius ``gamma n`` with at most ``1/gamma + 1`` points.

    Uses ``-n, -n + 2 gamma n, ...`` plus the endpoint ``n`` when the last gap
    is too wide, and otherwise the centered grid ``-n + gamma n (2k+1)``.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    count = int(math.floor(1.0 / gamma + 1e-12)) + 1
    pts = -n + 2.0 * gamma * n * np.arange(count)
    pts = pts[pts <= n + 1e-12]
    if n - pts[-1] > gamma * n + 1e-12:
        if pts.size + 1 <= 1.0 / gamma + 1 + 1e-12:
            pts = np.append(pts, float(n))
        else:
            k = int(math.ceil(1.0 / gamma - 1e-12))
            pts = np.minimum(-n + gamma * n * (2 * np.arange(k) + 1), n)
    return np.unique(np.clip(pts, -n, n))


def cut_free_energy_terms(
    decomp: CutDecomposition, r, c, gamma: float, ell: float = 1.0, field=None, config=None
) -> float:
    """``sum_t r_t c_t d_t + O`` for the cut program at slack ``ell * gamma``."""
    n = decomp.source_dims[0]
    prog = cut_program(decomp.cuts, n, r, c, ell * gamma, field)
    pv = solve_primal(prog, config)
    if pv.status == "infeasible":
        return -math.inf
    return float(np.dot(np.asarray(r) * np.asarray(c), decomp.values) + pv.primal_value)


@dataclass(frozen=True)
class GridResult:
    r: np.ndarray | None
    c: np.ndarray | None
    value: float
    cells: int
    members: int
    grid: GridIndex


def grid_maximize(
    decomp: CutDecomposition,
    gamma: float,
    ell: float = 1.0,
    field=None,
    max_cells: int = 20_000,
    config: SolverConfig | None = None,
) -> GridResult:
    """Maximize the cut free-energy terms over all grid pairs ``(r, c)``.

    Only pairs whose program has non-negative entropy optimum (up to 1e-9)
    take part.  Ties go to the lexicographically smallest ``(r, c)``.
    """
    m, n = decomp.source_dims
    if m != n:
        raise ValueError("grid maximization needs a square decomposition")
    s = decomp.width
    pts = grid_points(n, gamma)
    grid = GridIndex(float(gamma), pts, float(ell))
    cells = pts.size ** (2 * s)
    if cells > max_cells:
        raise GridTooLarge(f"{cells} grid cells exceed the budget of {max_cells} (width {s})")
    f = np.zeros(n) if field is None else np.asarray(field, dtype=float)
    d = decomp.values
    best_val, best_r, best_c, members = -math.inf, None, None, 0
    for combo in itertools.product(pts, repeat=2 * s):
        r, c = np.array(combo[:s]), np.array(combo[s:])
        prog = cut_program(decomp.cuts, n, r, c, ell * gamma, f)
        pv = solve_primal(prog, config)
        if pv.status == "infeasible":
            continue
        if pv.primal_value - f @ pv.primal_point < -1e-9:
            continue
        members += 1
        val = float(np.dot(r * c, d) + pv.primal_value)
        if val > best_val:
            best_val, best_r, best_c = val, r, c
    return GridResult(best_r, best_c, best_val, cells, members, grid)


def lipschitz_cut_gap_bound(alpha: float, gamma: float, n: int, s: int) -> float:
    """``2 alpha gamma n sqrt(s)``: the change of ``sum d_t r_t c_t`` within one grid cell."""
    return 2.0 * alpha * gamma * n * math.sqrt(s)
