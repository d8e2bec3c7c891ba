"""Instance generators: uniform-weight graphs and hypergraphs, graphons, file input."""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .errors import SpecInvalid
from .lowerbound import generate_pair
from .model import IsingModel, Model, Mrf
from .model_io import load_model
from .rng import substream

KINDS = (
    "complete",
    "curie-weiss",
    "erdos-renyi-uniform-weight",
    "hypergraph-uniform",
    "step-graphon",
    "lowerbound-pair",
    "file",
)


@dataclass(frozen=True)
class InstanceSpec:
    kind: str
    n: int = 0
    beta: float = 1.0
    m: int | None = None  # edge or hyperedge count target
    r: int = 2
    W: tuple[tuple[float, ...], ...] | None = None  # step-graphon block values
    field: float = 0.0  # uniform external field
    epsilon: float = 0.1
    delta: float = 0.1
    M: float = 1.0
    which: str = "perturbed"
    path: str | None = None
    seed: int = 0

    @classmethod
    def from_dict(cls, d: dict) -> "InstanceSpec":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise SpecInvalid(f"unknown instance fields: {sorted(unknown)}")
        d = dict(d)
        if d.get("W") is not None:
            d["W"] = tuple(tuple(float(v) for v in row) for row in d["W"])
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


def _check(spec: InstanceSpec) -> None:
    if spec.kind not in KINDS:
        raise SpecInvalid(f"unknown kind {spec.kind!r}; expected one of {KINDS}")
    if spec.kind != "file" and spec.n < 1:
        raise SpecInvalid("n must be >= 1")
    if spec.kind == "file" and not spec.path:
        raise SpecInvalid("file instances need a path")
    if spec.kind == "step-graphon":
        if spec.W is None:
            raise SpecInvalid("step-graphon needs a block matrix W")
        W = np.asarray(spec.W, dtype=float)
        if W.ndim != 2 or W.shape[0] != W.shape[1] or W.size == 0:
            raise SpecInvalid("W must be a non-empty square block matrix")
        if not np.array_equal(W, W.T) or W.min() < 0 or W.max() > 1:
            raise SpecInvalid("W must be symmetric with entries in [0, 1]")
    if spec.kind == "hypergraph-uniform" and not 1 <= spec.r <= spec.n:
        raise SpecInvalid("need 1 <= r <= n")


def _with_field(J: np.ndarray, spec: InstanceSpec) -> IsingModel:
    return IsingModel(J, np.full(J.shape[0], float(spec.field)))


def _uniform_edges(n: int, chosen: np.ndarray, weight: float) -> np.ndarray:
    iu, ju = np.triu_indices(n, 1)
    J = np.zeros((n, n))
    J[iu[chosen], ju[chosen]] = weight
    return J + J.T


def generate_instance(spec: InstanceSpec) -> Model:
    """Build the model described by ``spec``; deterministic given ``spec.seed``."""
    _check(spec)
    n, beta = spec.n, spec.beta
    rng = substream(spec.seed, "instance", spec.kind)
    if spec.kind == "file":
        return load_model(spec.path)
    if spec.kind == "curie-weiss":
        J = beta / n * (np.ones((n, n)) - np.eye(n))
        return _with_field(J, spec)
    if spec.kind in ("complete", "erdos-renyi-uniform-weight"):
        total = n * (n - 1) // 2
        m = total if spec.kind == "complete" or spec.m is None else int(spec.m)
        if not 1 <= m <= total:
            raise SpecInvalid(f"edge count m={m} must lie in [1, {total}]")
        chosen = np.arange(total) if m == total else np.sort(rng.choice(total, size=m, replace=False))
        return _with_field(_uniform_edges(n, chosen, beta * n / m), spec)
    if spec.kind == "hypergraph-uniform":
        subsets = list(itertools.combinations(range(n), spec.r))
        m = len(subsets) if spec.m is None else int(spec.m)
        if not 1 <= m <= len(subsets):
            raise SpecInvalid(f"hyperedge count m={m} must lie in [1, {len(subsets)}]")
        idx = range(m) if m == len(subsets) else np.sort(rng.choice(len(subsets), size=m, replace=False))
        coeff = beta * n / m
        coeffs = {subsets[i]: coeff for i in idx}
        if spec.field:
            for i in range(n):
                coeffs[(i,)] = coeffs.get((i,), 0.0) + spec.field
        return Mrf(n, coeffs, r=spec.r)
    if spec.kind == "step-graphon":
        W = np.asarray(spec.W, dtype=float)
        k = W.shape[0]
        u = rng.uniform(0.0, 1.0, size=n)
        block = np.minimum((u * k).astype(int), k - 1)
        prob = W[np.ix_(block, block)]
        coins = rng.uniform(0.0, 1.0, size=(n, n))
        upper = np.triu(coins < prob, 1)
        A = (upper | upper.T).astype(float)
        return _with_field(beta / n * A, spec)
    # lowerbound-pair
    pert, unif = generate_pair(n, spec.epsilon, spec.delta, spec.M, spec.seed)
    if spec.which not in ("perturbed", "uniform"):
        raise SpecInvalid("which must be 'perturbed' or 'uniform'")
    return (pert if spec.which == "perturbed" else unif).model


def uniform_weight_norms(n: int, m: int, beta: float) -> tuple[float, float]:
    """``(||J||_F, ||vec J||_inf)`` of an ``m``-edge uniform-weight graph in symmetric storage.

    Each edge occupies two entries, so the Frobenius norm is
    ``sqrt(2) |beta| n / sqrt(m)``.
    """
    return math.sqrt(2.0) * abs(beta) * n / math.sqrt(m), abs(beta) * n / m
