"""Dense instance pairs that no few-probe algorithm can tell apart.

``J_M`` is the complete graph with weight ``M`` on every edge except
``round(eps * Delta * C(n,2))`` random heavy edges of weight ``M/Delta``;
``J'_M`` has weight ``M`` everywhere.  Their free energies differ by about
``eps ||vec J'_M||_1 / 2`` for large ``M``, yet a probe of ``k`` entries
sees a heavy edge only with probability about ``k eps Delta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterOutOfRange
from .model import IsingModel, free_energy_exact, norms
from .rng import substream


@dataclass(frozen=True, eq=False)
class LowerBoundInstance:
    n: int
    epsilon: float
    delta: float
    M: float
    heavy_edges: tuple[tuple[int, int], ...]
    which_model: str  # "perturbed" (J_M) or "uniform" (J'_M)
    model: IsingModel

    @property
    def J(self) -> np.ndarray:
        return self.model.J


def heavy_edge_count(n: int, epsilon: float, delta: float) -> int:
    return int(round(epsilon * delta * n * (n - 1) / 2))


def is_delta_dense(J, delta: float) -> bool:
    """``Delta ||vec J||_inf <= ||vec J||_1 / n^2``."""
    J = np.asarray(J, dtype=float)
    n = J.shape[0]
    return bool(delta * np.abs(J).max() <= np.abs(J).sum() / n**2 * (1 + 1e-12))


def _edge_pairs(n: int) -> np.ndarray:
    iu, ju = np.triu_indices(n, 1)
    return np.stack([iu, ju], axis=1)


def _matrix(n: int, M: float, delta: float, heavy: np.ndarray) -> np.ndarray:
    J = np.full((n, n), float(M))
    np.fill_diagonal(J, 0.0)
    if heavy.size:
        J[heavy[:, 0], heavy[:, 1]] = M / delta
        J[heavy[:, 1], heavy[:, 0]] = M / delta
    return J


def generate_pair(n: int, epsilon: float, delta: float, M: float, seed: int = 0):
    """Return ``(J_M, J'_M)`` as :class:`LowerBoundInstance` objects."""
    if not (0.0 <= epsilon < 0.25 and 0.0 < delta < 0.25):
        raise ParameterOutOfRange("need 0 <= epsilon < 1/4 and 0 < delta < 1/4")
    if not M > 0:
        raise ParameterOutOfRange("M must be positive")
    if n < 2:
        raise ParameterOutOfRange("n must be at least 2")
    pairs = _edge_pairs(n)
    count = heavy_edge_count(n, epsilon, delta)
    rng = substream(seed, "lowerbound-heavy")
    heavy = pairs[np.sort(rng.choice(len(pairs), size=count, replace=False))] if count else pairs[:0]
    J = _matrix(n, M, delta, heavy)
    Jp = _matrix(n, M, delta, pairs[:0])
    for mat in (J, Jp):
        if not is_delta_dense(mat, delta):
            raise ParameterOutOfRange(f"instance is not {delta}-dense at n={n}; increase n")
    hv = tuple((int(i), int(j)) for i, j in heavy)
    return (
        LowerBoundInstance(n, epsilon, delta, M, hv, "perturbed", IsingModel(J)),
        LowerBoundInstance(n, epsilon, delta, M, (), "uniform", IsingModel(Jp)),
    )


def perturbed_l1_formula(n: int, epsilon: float, delta: float, M: float) -> float:
    """``2 (1 + eps (1 - Delta)) M C(n,2)``, exact when the heavy count is not rounded."""
    return 2.0 * (1.0 + epsilon * (1.0 - delta)) * M * n * (n - 1) / 2


@dataclass(frozen=True)
class SeparationRow:
    M: float
    F: float
    F_uniform: float
    ratio: float  # F_M / M
    ratio_uniform: float  # F'_M / M
    separation: float  # F_M - F'_M
    target: float  # (eps/2) ||vec J'_M||_1


@dataclass(frozen=True)
class SeparationReport:
    n: int
    epsilon: float
    delta: float
    rows: tuple[SeparationRow, ...]
    limit: float  # ||vec J_M||_1 / M for the drawn heavy set
    limit_uniform: float  # 2 C(n,2)
    first_separating_M: float | None


def free_energy_separation(n: int, epsilon: float, delta: float, M_schedule, seed: int = 0) -> SeparationReport:
    """Exact ``F_M`` and ``F'_M`` along ``M_schedule`` with their ``F/M`` ratios."""
    pert, unif = generate_pair(n, epsilon, delta, 1.0, seed)
    rows = []
    first = None
    for M in M_schedule:
        M = float(M)
        F = free_energy_exact(pert.model.scaled(M))
        Fp = free_energy_exact(unif.model.scaled(M))
        target = 0.5 * epsilon * M * norms(unif.model).l1
        ratio = F / M if M > 0 else math.nan
        ratio_p = Fp / M if M > 0 else math.nan
        rows.append(SeparationRow(M, F, Fp, ratio, ratio_p, F - Fp, target))
        if first is None and M > 0 and F - Fp >= target:
            first = M
    return SeparationReport(
        n, epsilon, delta, tuple(rows), norms(pert.model).l1, float(n * (n - 1)), first
    )


@dataclass(frozen=True)
class ProbeResult:
    failure_rate: float
    sigma: float
    bound: float  # (1/2)(1 - 2 k eps Delta)
    k: int
    trials: int


def probe_failure_bound(k: int, epsilon: float, delta: float) -> float:
    return 0.5 * (1.0 - 2.0 * k * epsilon * delta)


def probe_experiment(n: int, epsilon: float, delta: float, M: float, k: int, trials: int, seed: int = 0) -> ProbeResult:
    """Failure rate of the all-``M`` test against a fair coin between ``J_M`` and ``J'_M``.

    Each trial draws the truth, a fresh heavy set and ``k`` distinct probed
    edges.  The test answers ``J'_M`` exactly when every probed weight is
    ``M``, so it errs only when the truth is ``J_M`` and no heavy edge was hit.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    E = n * (n - 1) // 2
    if not 0 <= k <= E:
        raise ValueError(f"k must lie in [0, {E}]")
    count = heavy_edge_count(n, epsilon, delta)
    rng = substream(seed, "lowerbound-probe")
    failures = 0
    for _ in range(trials):
        perturbed = rng.random() < 0.5
        heavy = rng.choice(E, size=count, replace=False) if perturbed and count else np.empty(0, int)
        probes = rng.choice(E, size=k, replace=False) if k else np.empty(0, int)
        # weights seen at the probes: M/Delta on heavy edges, M elsewhere
        saw_heavy = bool(np.intersect1d(heavy, probes, assume_unique=True).size)
        guess_uniform = not saw_heavy
        failures += int(guess_uniform == perturbed)
    p = failures / trials
    return ProbeResult(p, math.sqrt(max(p * (1 - p), 1e-12) / trials), probe_failure_bound(k, epsilon, delta), k, trials)
