"""Cut matrices, weak-regularity decompositions and the infinity-to-one norm."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidSubset, TooLargeForExact
from .rng import substream

EXACT_LIMIT = 22
AUTO_EXACT_LIMIT = 16
_CHUNK_BITS = 14


@dataclass(frozen=True)
class CutMatrix:
    """Matrix equal to ``value`` on ``rows x cols`` and zero elsewhere."""

    rows: tuple[int, ...]
    cols: tuple[int, ...]
    value: float

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(sorted(int(i) for i in self.rows)))
        object.__setattr__(self, "cols", tuple(sorted(int(j) for j in self.cols)))
        object.__setattr__(self, "value", float(self.value))

    def to_dense(self, shape) -> np.ndarray:
        out = np.zeros(shape)
        if self.rows and self.cols:
            out[np.ix_(self.rows, self.cols)] = self.value
        return out

    def row_indicator(self, m: int) -> np.ndarray:
        v = np.zeros(m)
        v[list(self.rows)] = 1.0
        return v

    def col_indicator(self, n: int) -> np.ndarray:
        v = np.zeros(n)
        v[list(self.cols)] = 1.0
        return v


@dataclass(frozen=True)
class CutDecomposition:
    cuts: tuple[CutMatrix, ...]
    source_dims: tuple[int, int]
    epsilon: float
    # True when the stopping residual check used the exact norm
    exact_certificate: bool = True
    final_witness: float = 0.0

    @property
    def width(self) -> int:
        return len(self.cuts)

    @property
    def coefficient_length(self) -> float:
        return float(math.sqrt(sum(c.value**2 for c in self.cuts)))

    @property
    def values(self) -> np.ndarray:
        return np.array([c.value for c in self.cuts], dtype=float)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.source_dims)
        for c in self.cuts:
            if c.rows and c.cols:
                out[np.ix_(c.rows, c.cols)] += c.value
        return out

    def residual(self, J) -> np.ndarray:
        return np.asarray(J, dtype=float) - self.to_dense()

    def to_json(self) -> str:
        return json.dumps(
            {
                "epsilon": self.epsilon,
                "dims": list(self.source_dims),
                "cuts": [{"rows": list(c.rows), "cols": list(c.cols), "d": c.value} for c in self.cuts],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "CutDecomposition":
        d = json.loads(text)
        cuts = tuple(CutMatrix(c["rows"], c["cols"], c["d"]) for c in d["cuts"])
        if "dims" in d:
            dims = tuple(d["dims"])
        else:
            m = 1 + max((max(c.rows, default=-1) for c in cuts), default=-1)
            n = 1 + max((max(c.cols, default=-1) for c in cuts), default=-1)
            dims = (m, n)
        return cls(cuts, dims, float(d["epsilon"]))


@dataclass(frozen=True)
class CutNormResult:
    value: float
    x: np.ndarray
    y: np.ndarray
    # True when value is only a lower bound (heuristic search)
    lower_bound: bool


def _sign(v: np.ndarray) -> np.ndarray:
    return np.where(v >= 0.0, 1.0, -1.0)


def _exact(M: np.ndarray) -> CutNormResult:
    # enumerate the smaller side with its first sign fixed to +1 (x -> -x symmetry)
    transposed = M.shape[0] > M.shape[1]
    A = M.T if transposed else M
    m = A.shape[0]
    if m == 0 or A.shape[1] == 0:
        return CutNormResult(0.0, np.ones(M.shape[0]), np.ones(M.shape[1]), False)
    if m > EXACT_LIMIT:
        raise TooLargeForExact(f"exact infinity-to-one norm needs min dimension <= {EXACT_LIMIT}, got {m}")
    free = m - 1
    best_val, best_code = -1.0, 0
    step = 1 << min(free, _CHUNK_BITS)
    bits = np.arange(free)
    for start in range(0, 1 << free, step):
        codes = np.arange(start, start + step, dtype=np.int64)
        X = np.ones((step, m))
        X[:, 1:] = 1.0 - 2.0 * ((codes[:, None] >> bits) & 1)
        vals = np.abs(X @ A).sum(axis=1)
        k = int(np.argmax(vals))
        if vals[k] > best_val:
            best_val, best_code = float(vals[k]), int(codes[k])
    x = np.ones(m)
    x[1:] = 1.0 - 2.0 * ((best_code >> bits) & 1)
    y = _sign(A.T @ x)
    val = float(x @ A @ y)
    if transposed:
        x, y = y, x
    return CutNormResult(val, x, y, False)


def _heuristic(M: np.ndarray, budget: int, seed) -> CutNormResult:
    path = tuple(seed) if isinstance(seed, tuple) else (0 if seed is None else seed,)
    rng = substream(path[0], "cutnorm-heuristic", *path[1:])
    m, n = M.shape
    best = None
    starts = [np.ones(m)] + [_sign(rng.standard_normal(m)) for _ in range(max(budget, 1) - 1)]
    # a spectral start helps on low-rank residuals
    if min(m, n) > 0:
        u = np.linalg.svd(M, full_matrices=False)[0][:, 0]
        starts.append(_sign(u))
    for x in starts:
        val = -np.inf
        while True:
            y = _sign(M.T @ x)
            x = _sign(M @ y)
            new = float(x @ M @ y)
            if new <= val + 1e-12 * max(1.0, abs(val)):
                break
            val = new
        if best is None or val > best.value:
            best = CutNormResult(val, x.copy(), y.copy(), True)
    return best


def infty_to_one_norm(M, mode: str = "auto", budget: int = 64, seed=0) -> CutNormResult:
    """``max_{x, y in {+-1}} x^T M y`` for a real matrix ``M``.

    ``exact`` enumerates the sign vector of the shorter side and picks the
    other side in closed form.  ``heuristic`` runs alternating sign updates
    from ``budget`` starts and reports a lower bound.  ``auto`` is exact when
    the shorter side has at most 16 entries.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if mode == "exact":
        return _exact(M)
    if mode == "heuristic":
        return _heuristic(M, budget, seed)
    if mode == "auto":
        return _exact(M) if min(M.shape) <= AUTO_EXACT_LIMIT else _heuristic(M, budget, seed)
    raise ValueError(f"unknown mode {mode!r}")


def fk_decompose(J, epsilon: float, seed=0, *, mode: str = "auto", budget: int = 64) -> CutDecomposition:
    """Weak-regularity decomposition by greedy rank-one sign updates.

    Each round takes the residual's best sign witness ``(x, y)`` with value
    ``v = x^T W y``.  While ``v > (eps/2) sqrt(mn) ||J||_F`` it subtracts
    ``(v/mn) x y^T``, split into at most four cut matrices on the sign
    quadrants.  Every round lowers ``||W||_F^2`` by ``v^2/(mn)``, which bounds
    the number of rounds by ``4/eps^2``.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    J = np.atleast_2d(np.asarray(J, dtype=float))
    m, n = J.shape
    frob = float(np.linalg.norm(J))
    threshold = 0.5 * epsilon * math.sqrt(m * n) * frob
    max_width = int(math.floor(16.0 / epsilon**2))
    W = J.copy()
    cuts: list[CutMatrix] = []
    exact = mode == "exact" or (mode == "auto" and min(m, n) <= AUTO_EXACT_LIMIT)
    rounds = 0
    last = 0.0
    while frob > 0.0:
        res = infty_to_one_norm(W, mode="exact" if exact else "heuristic", budget=budget, seed=(seed, rounds))
        last = res.value
        if res.value <= threshold:
            break
        d = res.value / (m * n)
        quads = []
        for sx in (1.0, -1.0):
            R = tuple(np.nonzero(res.x == sx)[0])
            for sy in (1.0, -1.0):
                C = tuple(np.nonzero(res.y == sy)[0])
                if R and C:
                    quads.append(CutMatrix(R, C, sx * sy * d))
        if len(cuts) + len(quads) > max_width:
            break
        W -= d * np.outer(res.x, res.y)
        cuts.extend(quads)
        rounds += 1
    return CutDecomposition(tuple(cuts), (m, n), float(epsilon), exact, float(last))


def max_entry_bound(decomp: CutDecomposition, J) -> float:
    """``||vec J||_inf + sqrt(16 s) ||J||_F / sqrt(mn)``, a bound on ``||vec W||_inf``."""
    J = np.atleast_2d(np.asarray(J, dtype=float))
    m, n = J.shape
    if J.size == 0:
        return 0.0
    return float(np.abs(J).max() + math.sqrt(16 * decomp.width) * np.linalg.norm(J) / math.sqrt(m * n))


def restrict_cuts(decomp: CutDecomposition, Q, scale: float | None = None) -> CutDecomposition:
    """Intersect every cut with ``Q x Q``, reindex to ``Q`` and multiply by ``scale``.

    ``scale`` defaults to ``n/q``.  Cuts that become empty are kept so the
    width is unchanged.
    """
    m, n = decomp.source_dims
    if m != n:
        raise ValueError("restriction needs a square decomposition")
    Q = np.asarray(Q, dtype=np.int64).ravel()
    if Q.size == 0 or Q.min() < 0 or Q.max() >= n or np.unique(Q).size != Q.size:
        raise InvalidSubset("Q must be a non-empty set of distinct indices in range")
    q = Q.size
    scale = n / q if scale is None else float(scale)
    pos = {int(v): a for a, v in enumerate(Q)}
    cuts = tuple(
        CutMatrix([pos[i] for i in c.rows if i in pos], [pos[j] for j in c.cols if j in pos], scale * c.value)
        for c in decomp.cuts
    )
    return CutDecomposition(cuts, (q, q), decomp.epsilon, decomp.exact_certificate)
