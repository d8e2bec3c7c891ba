"""Free-energy estimation from random vertex samples.

Each repeat draws ``Q`` uniformly among size-``q`` subsets, computes the free
energy ``F_Q`` of the ``n/q``-rescaled induced model with a pluggable backend
and reports ``(n/q) F_Q``.  The estimate is the median over repeats.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import EstimatorFailure, IsingSampleError
from .maxent import grid_maximize
from .meanfield import MeanFieldConfig, variational_free_energy, variational_free_energy_matrix
from .model import IsingModel, Model, Mrf, free_energy_exact, norms, restrict_scaled
from .regularity import CutDecomposition, fk_decompose, restrict_cuts
from .rng import substream

BACKENDS = ("exact", "meanfield", "maxent-grid")


@dataclass(frozen=True)
class EstimatorConfig:
    q: int
    repeats: int = 11
    backend: str = "exact"
    epsilon: float = 0.5
    seed: int = 0
    field_scaling: str = "mrf"
    threads: int = 1
    meanfield: MeanFieldConfig = field(default_factory=MeanFieldConfig)
    # maxent-grid backend settings
    grid_gamma: float = 0.25
    grid_ell: float = 1.0
    grid_max_cells: int = 20_000

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("q must be >= 1")
        if self.repeats < 1 or self.repeats % 2 == 0:
            raise ValueError("repeats must be a positive odd number")
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")


@dataclass(frozen=True)
class RepeatResult:
    index: int
    Q: tuple[int, ...]
    value: float  # F_Q of the rescaled induced model
    rescaled: float  # (n/q) F_Q
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class SampleEstimate:
    estimate: float
    per_repeat: tuple[RepeatResult, ...]
    error_envelope: float
    n: int
    q: int
    seed: int
    backend: str

    @property
    def values(self) -> np.ndarray:
        return np.array([r.rescaled for r in self.per_repeat if r.ok])


def draw_subset(n: int, q: int, rng: np.random.Generator) -> np.ndarray:
    """First ``q`` entries of a Fisher-Yates shuffle of ``range(n)``, sorted."""
    if not 1 <= q <= n:
        raise ValueError(f"need 1 <= q <= n, got q={q}, n={n}")
    perm = np.arange(n)
    for i in range(q):
        j = int(rng.integers(i, n))
        perm[i], perm[j] = perm[j], perm[i]
    return np.sort(perm[:q])


def repeat_subset(n: int, q: int, seed: int, index: int) -> np.ndarray:
    return draw_subset(n, q, substream(seed, "estimator", index))


def ising_error_envelope(model: IsingModel, epsilon: float, q: int) -> float:
    """``4000 eps n (||J||_F + eps n ||vec J||_inf + omega/q)``, ``omega = log(1/eps)/eps^8``."""
    nm = norms(model)
    omega = math.log(1.0 / epsilon) / epsilon**8
    return 4000.0 * epsilon * model.n * (nm.frobenius + epsilon * model.n * nm.max_entry + omega / q)


def mrf_error_envelope(model: Mrf, epsilon: float, q: int) -> float:
    """MRF version with per-degree Frobenius norms and ``omega = r^7 log(1/eps)/eps^8``."""
    nm = norms(model)
    r, n = model.r, model.n
    omega = r**7 * math.log(1.0 / epsilon) / epsilon**8
    total = sum(
        n ** (d / 2) * (nm.frobenius[d - 1] + epsilon * n ** (d / 2) * nm.max_entry + omega / q)
        for d in range(1, r + 1)
    )
    return 1e5 * epsilon * r**3 * total


def _maxent_grid_value(sub: IsingModel, config: EstimatorConfig, seed) -> float:
    decomp = fk_decompose(sub.J, min(config.epsilon, 0.99), seed=seed)
    res = grid_maximize(decomp, config.grid_gamma, config.grid_ell, field=sub.h, max_cells=config.grid_max_cells)
    return res.value


def backend_free_energy(sub: Model, config: EstimatorConfig, index: int) -> float:
    if config.backend == "exact":
        return free_energy_exact(sub)
    if isinstance(sub, Mrf):
        raise ValueError("MRF estimation supports only the exact backend")
    if config.backend == "meanfield":
        return variational_free_energy(sub, config.meanfield, seed=config.seed + 7919 * index).value
    return _maxent_grid_value(sub, config, config.seed + 7919 * index)


def _run_repeat(model: Model, config: EstimatorConfig, index: int) -> RepeatResult:
    n = model.n
    Q = repeat_subset(n, config.q, config.seed, index)
    try:
        sub = restrict_scaled(model, Q, field_scaling=config.field_scaling)
        val = backend_free_energy(sub, config, index)
        return RepeatResult(index, tuple(int(i) for i in Q), float(val), float(n / config.q * val))
    except (IsingSampleError, ValueError, RuntimeError) as exc:
        return RepeatResult(index, tuple(int(i) for i in Q), math.nan, math.nan, f"{type(exc).__name__}: {exc}")


def _estimate(model: Model, config: EstimatorConfig, envelope: float) -> SampleEstimate:
    if config.q > model.n:
        raise ValueError(f"q={config.q} exceeds n={model.n}")
    idx = range(config.repeats)
    if config.threads > 1:
        with ThreadPoolExecutor(config.threads) as pool:
            results = tuple(pool.map(lambda i: _run_repeat(model, config, i), idx))
    else:
        results = tuple(_run_repeat(model, config, i) for i in idx)
    good = [r.rescaled for r in results if r.ok]
    if len(good) < math.ceil(config.repeats / 2):
        first = next((r.error for r in results if not r.ok), "")
        raise EstimatorFailure(f"only {len(good)} of {config.repeats} repeats succeeded; first error: {first}")
    return SampleEstimate(
        float(np.median(good)), results, envelope, model.n, config.q, config.seed, config.backend
    )


def estimate_free_energy(model: Model, config: EstimatorConfig) -> SampleEstimate:
    """Median over repeats of ``(n/q) F_Q``."""
    if isinstance(model, Mrf):
        return estimate_free_energy_mrf(model, config)
    return _estimate(model, config, ising_error_envelope(model, config.epsilon, config.q))


def estimate_free_energy_mrf(model: Mrf, config: EstimatorConfig) -> SampleEstimate:
    if config.backend != "exact":
        raise ValueError("MRF estimation supports only the exact backend")
    return _estimate(model, config, mrf_error_envelope(model, config.epsilon, config.q))


# ---------------------------------------------------------------------------
# diagnostics for the variational pipeline


@dataclass(frozen=True)
class SampleGapLegs:
    decomposition_leg: float  # |F*(J) - F*(D)|
    sample_leg: float  # (n/q) |F*(D_Q) - F*(J_Q)|
    cut_leg: float  # |F*(D) - (n/q) F*(D_Q)|
    total: float  # |F*(J) - (n/q) F*(J_Q)|

    @property
    def leg_sum(self) -> float:
        return self.decomposition_leg + self.sample_leg + self.cut_leg


def _fstar(A, h, seed) -> float:
    return variational_free_energy_matrix(A, h, MeanFieldConfig(), seed=seed).value


def variational_sample_gap(model: IsingModel, decomp: CutDecomposition, Q, seed=0) -> SampleGapLegs:
    """The three legs of the triangle inequality linking ``F*`` to ``(n/q) F*_Q``."""
    n = model.n
    Q = np.asarray(Q, dtype=np.int64)
    q = Q.size
    ratio = n / q
    D = decomp.to_dense()
    sub = restrict_scaled(model, Q)
    DQ = restrict_cuts(decomp, Q).to_dense()
    f_j = _fstar(model.J, model.h, seed)
    f_d = _fstar(D, model.h, seed)
    f_jq = _fstar(sub.J, sub.h, seed)
    f_dq = _fstar(DQ, sub.h, seed)
    return SampleGapLegs(
        abs(f_j - f_d), ratio * abs(f_dq - f_jq), abs(f_d - ratio * f_dq), abs(f_j - ratio * f_jq)
    )


def easy_direction_margin(decomp: CutDecomposition, Q, gamma: float, alpha: float, field=None, seed=0) -> float:
    """``(n/q) F*(D_Q) - (F*(D) - 3 alpha gamma n sqrt(s))``; non-negative when the check passes."""
    n = decomp.source_dims[0]
    Q = np.asarray(Q, dtype=np.int64)
    q = Q.size
    h = np.zeros(n) if field is None else np.asarray(field, dtype=float)
    f_d = _fstar(decomp.to_dense(), h, seed)
    f_dq = _fstar(restrict_cuts(decomp, Q).to_dense(), h[Q], seed)
    slack = 3.0 * alpha * gamma * n * math.sqrt(decomp.width)
    return n / q * f_dq - (f_d - slack)


def easy_direction_check(decomp: CutDecomposition, Q, gamma: float, alpha: float, field=None, seed=0) -> bool:
    """Whether ``(n/q) F*(D_Q) >= F*(D) - 3 alpha gamma n sqrt(s)`` for this ``Q``."""
    return easy_direction_margin(decomp, Q, gamma, alpha, field, seed) >= -1e-9


def easy_direction_failure_bound(alpha: float, gamma: float, s: int, q: int) -> float:
    """``min(1, exp(-2 alpha^2 gamma^2 s q) + 4 s exp(-2 gamma^2 q))``."""
    return min(1.0, math.exp(-2 * alpha**2 * gamma**2 * s * q) + 4 * s * math.exp(-2 * gamma**2 * q))
