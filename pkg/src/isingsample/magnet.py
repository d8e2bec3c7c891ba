"""Magnetization from three free-energy queries.

``log Z`` is convex in a uniform field shift ``t`` and its derivative is the
expected total magnetization ``m_t = E_t[sum_i x_i]``.  Querying the
free energy at ``t in {-nu, 0, nu}`` gives the left and right difference
quotients, which sandwich ``m_t`` for some ``|t| < nu``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import OracleFailure
from .model import IsingModel, Model, exact_total_magnetization, free_energy_exact, shift_field
from .rng import substream
from .sampler import EstimatorConfig, estimate_free_energy

Oracle = Callable[[Model], float]


@dataclass(frozen=True)
class MagnetizationEstimate:
    value: float
    h_window: float
    oracle_calls: int
    bracket: tuple[float, float]
    epsilon: float
    # 2 eps: the distance from value to m_{h'} allowed by oracle error eps*nu per call
    slack: float


class CountingOracle:
    """Wraps a free-energy oracle and counts its calls."""

    def __init__(self, fn: Oracle):
        self.fn = fn
        self.calls = 0

    def __call__(self, model: Model) -> float:
        self.calls += 1
        return self.fn(model)


def exact_oracle(model: Model) -> float:
    return free_energy_exact(model)


def sampler_oracle(config: EstimatorConfig) -> Oracle:
    # reuse the same seed for every query so the differences see common samples
    def oracle(model: Model) -> float:
        return estimate_free_energy(model, config).estimate

    return oracle


def estimate_magnetization(model: Model, oracle: Oracle, nu: float, epsilon: float = 0.0) -> MagnetizationEstimate:
    """Midpoint of the difference quotients at step ``nu`` around the model's field."""
    if not nu > 0:
        raise ValueError("nu must be positive")
    counted = oracle if isinstance(oracle, CountingOracle) else CountingOracle(oracle)
    start = counted.calls
    values = []
    for t in (-nu, 0.0, nu):
        try:
            v = float(counted(shift_field(model, t)))
        except Exception as exc:
            raise OracleFailure(f"oracle failed at shift {t}: {exc}") from exc
        if not np.isfinite(v):
            raise OracleFailure(f"oracle returned {v} at shift {t}")
        values.append(v)
    lo, mid, hi = values
    left, right = (mid - lo) / nu, (hi - mid) / nu
    return MagnetizationEstimate(
        0.5 * (left + right), float(nu), counted.calls - start, (left, right), float(epsilon), 2.0 * epsilon
    )


def exact_magnetization(model: Model, h_shift: float = 0.0) -> float:
    """``E[sum_i x_i]`` after adding ``h_shift`` to every field, by enumeration."""
    return exact_total_magnetization(shift_field(model, h_shift))


@dataclass(frozen=True)
class AdversarialReport:
    n: int
    C: float
    site: int
    magnetizations: dict
    separation: float


def adversarial_instance(n: int, C: float, site: int, X: float) -> IsingModel:
    """Clique of weight ``C`` on the first ``2n`` of ``4n`` spins, opposing fields on the rest.

    The clique spins carry no field except ``h_site = X``.
    """
    N = 4 * n
    J = np.zeros((N, N))
    J[: 2 * n, : 2 * n] = C
    np.fill_diagonal(J, 0.0)
    h = np.zeros(N)
    h[2 * n : 3 * n] = 1.0
    h[3 * n :] = -1.0
    h[site] = X
    return IsingModel(J, h)


def adversarial_instance_demo(n: int, C: float = 5.0, seed: int = 0) -> AdversarialReport:
    """Exact magnetizations of the three instances ``X in {0, +1, -1}``.

    Flipping one field on the strongly coupled block moves the total
    magnetization by about ``2n``, while the instances differ in one entry.
    """
    site = int(substream(seed, "adversarial-site").integers(0, 2 * n))
    mags = {X: exact_magnetization(adversarial_instance(n, C, site, X)) for X in (0.0, 1.0, -1.0)}
    sep = min(abs(a - b) for a, b in itertools.combinations(mags.values(), 2))
    return AdversarialReport(n, float(C), site, mags, float(sep))
