"""Ising models, binary Markov random fields and their exact free energies.

Conventions: an Ising model on ``n`` spins has energy ``x^T J x + h.x`` where
the quadratic form runs over ordered pairs, so each edge ``{i, j}`` contributes
``2 J_ij x_i x_j``.  An MRF stores its multilinear polynomial
``J(x) = sum_alpha J_alpha prod_{i in alpha} x_i`` as a map from sorted index
tuples to coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterator, Mapping, Sequence, Union

import numpy as np
from scipy.special import gammaln, logsumexp, xlogy

from .errors import DimensionMismatch, EnumerationTooLarge, InvalidSubset, MarginalOutOfRange

DEFAULT_ENUM_GUARD = 25
_enum_guard = DEFAULT_ENUM_GUARD

# spins enumerated per inner block; 2**14 rows keeps blocks cache-friendly
_BLOCK_BITS = 14


def enumeration_guard() -> int:
    return _enum_guard


def set_enumeration_guard(n: int) -> None:
    global _enum_guard
    if n < 1:
        raise ValueError("enumeration guard must be >= 1")
    _enum_guard = int(n)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class IsingModel:
    """Symmetric, zero-diagonal interaction matrix plus external field."""

    J: np.ndarray
    h: np.ndarray = None

    def __post_init__(self):
        J = np.asarray(self.J, dtype=float)
        if J.ndim != 2 or J.shape[0] != J.shape[1] or J.shape[0] < 1:
            raise DimensionMismatch(f"J must be a non-empty square matrix, got shape {J.shape}")
        n = J.shape[0]
        if np.any(np.diag(J) != 0.0):
            raise ValueError("J must have a zero diagonal")
        if not np.array_equal(J, J.T):
            raise ValueError("J must be symmetric")
        h = np.zeros(n) if self.h is None else np.asarray(self.h, dtype=float)
        if h.shape != (n,):
            raise DimensionMismatch(f"h must have shape ({n},), got {h.shape}")
        object.__setattr__(self, "J", _readonly(J))
        object.__setattr__(self, "h", _readonly(h))

    @property
    def n(self) -> int:
        return self.J.shape[0]

    @classmethod
    def zeros(cls, n: int) -> "IsingModel":
        return cls(np.zeros((n, n)))

    @classmethod
    def from_edges(cls, n: int, edges, fields=None) -> "IsingModel":
        """Build from ``(i, j, w)`` triples; each sets ``J_ij = J_ji = w``."""
        J = np.zeros((n, n))
        for i, j, w in edges:
            i, j = int(i), int(j)
            if i == j:
                raise ValueError(f"self-loop at vertex {i}")
            J[i, j] = J[j, i] = float(w)
        return cls(J, fields)

    def edges(self) -> list[tuple[int, int, float]]:
        iu, ju = np.nonzero(np.triu(self.J, 1))
        return [(int(i), int(j), float(self.J[i, j])) for i, j in zip(iu, ju)]

    def to_mrf(self) -> "Mrf":
        coeffs = {(i, j): 2.0 * w for i, j, w in self.edges()}
        for i, hi in enumerate(self.h):
            if hi != 0.0:
                coeffs[(i,)] = float(hi)
        return Mrf(self.n, coeffs, r=2)

    def scaled(self, c: float) -> "IsingModel":
        return IsingModel(c * self.J, c * self.h)


@dataclass(frozen=True, eq=False)
class Mrf:
    """Binary Markov random field with sparse multilinear energy."""

    n: int
    coeffs: Mapping[tuple[int, ...], float]
    r: int = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        clean = {}
        for key, w in dict(self.coeffs).items():
            key = tuple(int(i) for i in key)
            if not key:
                raise ValueError("empty subset: constant terms do not affect the distribution")
            if any(b <= a for a, b in zip(key, key[1:])):
                raise ValueError(f"subset {key} is not strictly sorted")
            if key[0] < 0 or key[-1] >= self.n:
                raise InvalidSubset(f"subset {key} out of range for n={self.n}")
            clean[key] = float(w)
        top = max((len(k) for k in clean), default=1)
        r = top if self.r is None else int(self.r)
        if r < top or r < 1:
            raise ValueError(f"r={r} is smaller than the largest stored subset ({top})")
        object.__setattr__(self, "coeffs", MappingProxyType(clean))
        object.__setattr__(self, "r", r)

    @classmethod
    def zeros(cls, n: int, r: int = 1) -> "Mrf":
        return cls(n, {}, r=r)

    def degree_part(self, d: int) -> dict[tuple[int, ...], float]:
        return {k: w for k, w in self.coeffs.items() if len(k) == d}


Model = Union[IsingModel, Mrf]


@dataclass(frozen=True)
class ModelNorms:
    frobenius: Union[float, tuple[float, ...]]
    max_entry: float
    l1: float


def norms(model: Model) -> ModelNorms:
    """Frobenius, max-entry and l1 norms of the interaction part.

    For an Ising model these are over all ``n*n`` entries of ``J`` (the field
    is not included).  For an MRF ``frobenius`` is the tuple of per-degree
    norms ``||J_{=d}||_F`` for ``d = 1..r``.
    """
    if isinstance(model, IsingModel):
        J = model.J
        return ModelNorms(float(np.linalg.norm(J)), float(np.abs(J).max()), float(np.abs(J).sum()))
    vals = np.array(list(model.coeffs.values()), dtype=float)
    per_degree = tuple(
        float(np.sqrt(sum(w * w for w in model.degree_part(d).values()))) for d in range(1, model.r + 1)
    )
    if vals.size == 0:
        return ModelNorms(per_degree, 0.0, 0.0)
    return ModelNorms(per_degree, float(np.abs(vals).max()), float(np.abs(vals).sum()))


def _check_spins(model: Model, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (model.n,):
        raise DimensionMismatch(f"spin vector has shape {x.shape}, model has n={model.n}")
    if np.any(np.abs(x) != 1.0):
        raise ValueError("spins must be +1 or -1")
    return x


def energy(model: Model, x) -> float:
    x = _check_spins(model, x)
    if isinstance(model, IsingModel):
        return float(x @ model.J @ x + model.h @ x)
    return float(sum(w * np.prod(x[list(a)]) for a, w in model.coeffs.items()))


def _spin_block(k: int) -> np.ndarray:
    """All ``2**k`` spin vectors of length ``k`` as rows, bit ``i`` set means ``-1``."""
    idx = np.arange(2**k, dtype=np.int64)[:, None]
    return 1.0 - 2.0 * ((idx >> np.arange(k)) & 1)


def _ising_blocks(J: np.ndarray, h: np.ndarray) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    # Split spins into a low block (enumerated once) and a high block (looped).
    n = len(h)
    k = min(n, _BLOCK_BITS)
    low = _spin_block(k)
    JLL, JLH, JHH = J[:k, :k], J[:k, k:], J[k:, k:]
    e_low = np.einsum("ci,ij,cj->c", low, JLL, low) + low @ h[:k]
    m_low = low.sum(axis=1)
    n_hi = n - k
    for hb in range(2**n_hi):
        xh = 1.0 - 2.0 * ((hb >> np.arange(n_hi)) & 1)
        e = e_low + 2.0 * (low @ (JLH @ xh)) + xh @ JHH @ xh + xh @ h[k:]
        yield m_low + xh.sum(), e


def _mrf_blocks(model: Mrf) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    n = model.n
    k = min(n, _BLOCK_BITS)
    low = _spin_block(k)
    n_hi = n - k
    terms = [(np.array(a), w) for a, w in model.coeffs.items()]
    for hb in range(2**n_hi):
        xh = 1.0 - 2.0 * ((hb >> np.arange(n_hi)) & 1)
        X = np.hstack([low, np.broadcast_to(xh, (low.shape[0], n_hi))])
        e = np.zeros(X.shape[0])
        for a, w in terms:
            e += w * np.prod(X[:, a], axis=1)
        yield X.sum(axis=1), e


def _guarded(model: Model, guard: int | None) -> None:
    guard = _enum_guard if guard is None else guard
    if model.n > guard:
        raise EnumerationTooLarge(f"n={model.n} exceeds the enumeration guard {guard}")


def _enumerate(model: Model, guard: int | None) -> tuple[float, float]:
    """Return ``(log Z, E[sum_i x_i])`` by brute force over all configurations."""
    _guarded(model, guard)
    blocks = _ising_blocks(model.J, model.h) if isinstance(model, IsingModel) else _mrf_blocks(model)
    lse, means = [], []
    for mag, e in blocks:
        top = e.max()
        w = np.exp(e - top)
        s = w.sum()
        lse.append(top + np.log(s))
        means.append(float(w @ mag) / s)
    lse = np.array(lse)
    total = logsumexp(lse)
    mean = float(np.exp(lse - total) @ np.array(means))
    return float(total), mean


def _uniform_complete(model: Model) -> tuple[float, float] | None:
    """``(edge_weight, field)`` when the model is a uniform complete graph."""
    if not isinstance(model, IsingModel):
        return None
    n = model.n
    if np.any(model.h != model.h[0]):
        return None
    if n == 1:
        return 0.0, float(model.h[0])
    w = model.J[0, 1]
    off = model.J[~np.eye(n, dtype=bool)]
    if np.any(off != w):
        return None
    return float(w), float(model.h[0])


def _complete_graph_log_terms(n: int, w: float, field: float) -> tuple[np.ndarray, np.ndarray]:
    k = np.arange(n + 1)
    total = n - 2 * k
    logt = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1) + w * (total**2 - n) + field * total
    return logt, total


def free_energy_complete_graph(n: int, edge_weight: float, field: float = 0.0) -> float:
    """``log Z`` of the complete graph with uniform weight, in O(n).

    Uses ``x^T J x = w((sum x)^2 - n)`` and groups configurations by the
    number of down spins.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    logt, _ = _complete_graph_log_terms(n, edge_weight, field)
    return float(logsumexp(logt))


def free_energy_exact(model: Model, *, method: str = "auto", guard: int | None = None) -> float:
    """Exact ``log Z``.

    ``method="auto"`` uses the closed form for uniform complete graphs and
    brute-force enumeration otherwise; ``"enumerate"`` always enumerates.
    """
    if method not in ("auto", "enumerate", "structured"):
        raise ValueError(f"unknown method {method!r}")
    if method != "enumerate":
        uc = _uniform_complete(model)
        if uc is not None:
            return free_energy_complete_graph(model.n, *uc)
        if method == "structured":
            raise ValueError("model has no structured closed form")
    return _enumerate(model, guard)[0]


def exact_total_magnetization(model: Model, *, guard: int | None = None) -> float:
    """``E[sum_i x_i]`` under the model's Boltzmann distribution."""
    uc = _uniform_complete(model)
    if uc is not None:
        logt, total = _complete_graph_log_terms(model.n, *uc)
        return float(np.exp(logt - logsumexp(logt)) @ total)
    return _enumerate(model, guard)[1]


def shift_field(model: Model, t: float) -> Model:
    """Add a uniform external field ``t`` to every spin."""
    if isinstance(model, IsingModel):
        return IsingModel(model.J, model.h + t)
    coeffs = dict(model.coeffs)
    for i in range(model.n):
        coeffs[(i,)] = coeffs.get((i,), 0.0) + t
    return Mrf(model.n, coeffs, r=model.r)


def _check_subset(Q, n: int) -> np.ndarray:
    Q = np.asarray(Q, dtype=np.int64).ravel()
    if Q.size < 1:
        raise InvalidSubset("subset must be non-empty")
    if Q.min() < 0 or Q.max() >= n:
        raise InvalidSubset(f"subset indices must lie in [0, {n})")
    if np.unique(Q).size != Q.size:
        raise InvalidSubset("subset has duplicate vertices")
    return Q


def restrict_scaled(model: Model, Q: Sequence[int], *, field_scaling: str = "mrf") -> Model:
    """Induced model on ``Q`` with interactions rescaled by ``n/q``.

    Vertex ``Q[a]`` becomes vertex ``a``.  A degree-``d`` term is scaled by
    ``(n/q)**(d-1)``.  For Ising models this multiplies ``J`` by ``n/q``; the
    field is left unscaled under ``field_scaling="mrf"`` and multiplied by
    ``n/q`` under ``"linear"``.
    """
    if field_scaling not in ("mrf", "linear"):
        raise ValueError(f"unknown field_scaling {field_scaling!r}")
    n = model.n
    Q = _check_subset(Q, n)
    q = Q.size
    if q == n and np.array_equal(Q, np.arange(n)):
        return model
    ratio = n / q
    if isinstance(model, IsingModel):
        hq = model.h[Q] * (ratio if field_scaling == "linear" else 1.0)
        return IsingModel(ratio * model.J[np.ix_(Q, Q)], hq)
    pos = {int(v): a for a, v in enumerate(Q)}
    coeffs = {}
    for alpha, w in model.coeffs.items():
        if all(i in pos for i in alpha):
            key = tuple(sorted(pos[i] for i in alpha))
            coeffs[key] = w * ratio ** (len(alpha) - 1)
    return Mrf(q, coeffs, r=model.r)


def binary_entropy_of_mean(x: np.ndarray) -> np.ndarray:
    """``H((1+x)/2)`` elementwise, with ``H(0) = H(1) = 0``."""
    p = (1.0 + x) / 2.0
    return -xlogy(p, p) - xlogy(1.0 - p, 1.0 - p)


def product_objective(model: IsingModel, xbar) -> float:
    """Variational objective of the product measure with means ``xbar``."""
    xbar = np.asarray(xbar, dtype=float)
    return float(xbar @ model.J @ xbar + model.h @ xbar + binary_entropy_of_mean(xbar).sum())


def kl_free_energy_gap(model: IsingModel, product_marginals, *, guard: int | None = None) -> float:
    """KL divergence from the product measure with the given means to the model.

    Equals ``F - (sum J_ij xbar_i xbar_j + h.xbar + sum H((1+xbar_i)/2))``.
    """
    x = np.asarray(product_marginals, dtype=float)
    if x.shape != (model.n,):
        raise DimensionMismatch(f"marginals have shape {x.shape}, model has n={model.n}")
    if np.any(np.abs(x) > 1.0):
        raise MarginalOutOfRange("product marginals must lie in [-1, 1]")
    _guarded(model, guard)
    return free_energy_exact(model, guard=guard) - product_objective(model, x)
