"""Mean-field (product-measure) variational free energy.

Maximizes ``phi(x) = x^T S x + h.x + sum_i H((1+x_i)/2)`` over the cube
``[-1, 1]^n`` by cyclic coordinate ascent with several starting points.
``S`` is the interaction matrix; a general (possibly non-symmetric, nonzero
diagonal) matrix is accepted through ``variational_free_energy_matrix`` since
only its symmetric part enters the quadratic form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import OutOfRange
from .model import IsingModel, binary_entropy_of_mean, product_objective
from .rng import substream

_CLAMP = 1e-12


@dataclass(frozen=True)
class MeanFieldConfig:
    restarts: int = 16
    tol: float = 1e-8
    max_sweeps: int = 10_000

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be >= 1")


@dataclass(frozen=True)
class MeanFieldResult:
    value: float
    argmax: np.ndarray
    restarts_used: int
    converged: bool
    residual: float


def entropy_term(x) -> float:
    """``sum_i H((1+x_i)/2)`` with natural logarithms."""
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0):
        raise OutOfRange("entries must lie in [-1, 1]")
    return float(binary_entropy_of_mean(x).sum())


def objective(S: np.ndarray, h: np.ndarray, x: np.ndarray) -> float:
    return float(x @ S @ x + h @ x + binary_entropy_of_mean(x).sum())


def _coordinate_max(a: float, b: float) -> float:
    """Maximizer over ``[-1, 1]`` of ``a t^2 + b t + H((1+t)/2)``."""
    if a == 0.0:
        return math.tanh(b)

    def dphi(t):
        return 2.0 * a * t + b - math.atanh(t)

    lo, hi = -1.0 + _CLAMP, 1.0 - _CLAMP
    if 2.0 * a < 1.0:
        # strictly concave: unique root of the derivative
        if dphi(lo) <= 0.0:
            return lo
        if dphi(hi) >= 0.0:
            return hi
        return brentq(dphi, lo, hi, xtol=1e-15)
    # possibly bimodal; bracket every sign change of the derivative
    grid = np.tanh(np.linspace(-20.0, 20.0, 801))
    grid = np.clip(grid, lo, hi)
    d = 2.0 * a * grid + b - np.arctanh(grid)
    cands = [lo, hi]
    for k in np.nonzero(np.sign(d[:-1]) != np.sign(d[1:]))[0]:
        if d[k] == 0.0:
            cands.append(float(grid[k]))
        else:
            cands.append(brentq(dphi, grid[k], grid[k + 1], xtol=1e-15))

    def phi(t):
        return a * t * t + b * t + float(binary_entropy_of_mean(np.array(t)))

    return max(cands, key=phi)


def _ascend(S, h, x, tol, max_sweeps, trace=None):
    n = len(h)
    diag = np.diag(S).copy()
    off = S - np.diag(diag)
    # local field excluding self-interaction: b_i = 2 sum_{j != i} S_ij x_j + h_i
    field = 2.0 * off @ x + h
    converged = False
    for _ in range(max_sweeps):
        biggest = 0.0
        for i in range(n):
            new = _coordinate_max(diag[i], field[i])
            step = new - x[i]
            if step != 0.0:
                field += 2.0 * off[:, i] * step
                x[i] = new
                biggest = max(biggest, abs(step))
            if trace is not None:
                trace.append(objective(S, h, x))
        if biggest < tol:
            converged = True
            break
        # refresh to keep round-off from accumulating in the running field
        field = 2.0 * off @ x + h
    return x, converged


def _starts(n: int, restarts: int, seed):
    fixed = [np.zeros(n), np.full(n, 0.9), np.full(n, -0.9)]
    out = fixed[:restarts]
    if restarts > 3:
        rng = substream(0 if seed is None else seed, "meanfield-starts")
        out += list(rng.uniform(-1.0, 1.0, size=(restarts - 3, n)))
    return out


def fixed_point_residual(S: np.ndarray, h: np.ndarray, x: np.ndarray) -> float:
    """``max_i |x_i - tanh(2 sum_j S_ij x_j + h_i)|`` (zero-diagonal form)."""
    if len(h) == 0:
        return 0.0
    return float(np.max(np.abs(x - np.tanh(2.0 * S @ x + h))))


def _solve(S, h, config: MeanFieldConfig, seed) -> MeanFieldResult:
    best = None
    for x0 in _starts(len(h), config.restarts, seed):
        x, conv = _ascend(S, h, np.array(x0, dtype=float), config.tol, config.max_sweeps)
        val = objective(S, h, x)
        if best is None or val > best[0]:
            best = (val, x, conv)
    val, x, conv = best
    if np.any(np.diag(S) != 0):
        # first-order condition with self-interaction included
        resid = float(np.max(np.abs(x - np.tanh(np.clip(2.0 * S @ x + h, -700, 700))), initial=0.0))
    else:
        resid = fixed_point_residual(S, h, x)
    return MeanFieldResult(val, x, config.restarts, conv, resid)


def variational_free_energy(model: IsingModel, config: MeanFieldConfig | None = None, seed=0) -> MeanFieldResult:
    """Best local maximum of the mean-field objective over multiple starts."""
    return _solve(np.asarray(model.J), np.asarray(model.h), config or MeanFieldConfig(), seed)


def variational_free_energy_matrix(A, h=None, config: MeanFieldConfig | None = None, seed=0) -> MeanFieldResult:
    """Same as ``variational_free_energy`` for an arbitrary square matrix."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A must be square")
    S = 0.5 * (A + A.T)
    h = np.zeros(A.shape[0]) if h is None else np.asarray(h, dtype=float)
    return _solve(S, h, config or MeanFieldConfig(), seed)


def coordinate_ascent(model: IsingModel, x0, *, tol=1e-8, max_sweeps=10_000, trace=False):
    """Single run from ``x0``.  With ``trace`` also returns the objective after every update."""
    S, h = np.asarray(model.J), np.asarray(model.h)
    log = [objective(S, h, np.asarray(x0, float))] if trace else None
    x, conv = _ascend(S, h, np.array(x0, dtype=float), tol, max_sweeps, log)
    if trace:
        return x, conv, log
    return x, conv


def sharp_gap_bound(n: int, frob: float) -> float:
    """``200 n^{2/3} ||J||_F^{2/3} log^{1/3}(n ||J||_F + e)``."""
    if frob == 0.0:
        return 0.0
    return 200.0 * n ** (2 / 3) * frob ** (2 / 3) * math.log(n * frob + math.e) ** (1 / 3)


def epsilon_gap_bound(n: int, frob: float, epsilon: float) -> float:
    """``eps n ||J||_F + 1e5 log(e + 1/eps) / eps^2``."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    return epsilon * n * frob + 1e5 * math.log(math.e + 1.0 / epsilon) / epsilon**2


def mean_field_gap_bound(model: IsingModel, epsilon: float) -> float:
    """Upper bound on ``F - F*``: the smaller of the two known bounds."""
    frob = float(np.linalg.norm(model.J))
    return min(sharp_gap_bound(model.n, frob), epsilon_gap_bound(model.n, frob, epsilon))


__all__ = [
    "MeanFieldConfig",
    "MeanFieldResult",
    "coordinate_ascent",
    "entropy_term",
    "epsilon_gap_bound",
    "fixed_point_residual",
    "mean_field_gap_bound",
    "objective",
    "product_objective",
    "sharp_gap_bound",
    "variational_free_energy",
    "variational_free_energy_matrix",
]
