"""Block-partitioned quadratic empirical processes.

Everything here works on a finite net of function handles evaluated on a
design matrix: good-block counting, infima over nets, Rademacher complexity
estimates, greedy packings, and the critical-radius fixed point.  Only the
linear-functional class gets first-class support (exact L2 geometry over
isotropic designs); richer classes are approximated by nets.
"""

from __future__ import annotations

import inspect
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import (
    BracketError,
    ContractError,
    DataError,
    ParameterError,
)
from .streams import stream, sign_matrix

__all__ = [
    "FunctionHandle",
    "linear_handle",
    "handle_distance",
    "NetSpec",
    "random_sphere_net",
    "separated_sphere_net",
    "star_hull_net",
    "BlockPartition",
    "partition",
    "block_square_means",
    "good_block_count",
    "MinBlocksResult",
    "min_good_blocks_over_net",
    "quadratic_inf",
    "RademacherEstimate",
    "rademacher_sup",
    "rademacher_sup_linear_ball",
    "PackingResult",
    "packing_count",
    "CriticalRadiusResult",
    "solve_critical_radius",
    "sphere_attack",
]

_SIGN_CHUNK = 256  # sign draws per block; shared so matched seeds match draws


# ---------------------------------------------------------------------------
# Function handles and nets
# ---------------------------------------------------------------------------

@dataclass
class FunctionHandle:
    """An evaluable function with a queryable L2 norm.

    ``descriptor`` records how the handle was built (linear vector,
    dictionary id, affine combination); linear handles over isotropic
    designs have exact norms and distances.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    l2_norm: float
    descriptor: dict
    hid: str
    l2_norm_se: float = 0.0  # recorded SE when the norm was MC-estimated

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(X), dtype=np.float64)

    @property
    def linear_vector(self) -> Optional[np.ndarray]:
        if self.descriptor.get("kind") == "linear":
            return self.descriptor["t"]
        return None


def linear_handle(t: np.ndarray, hid: Optional[str] = None) -> FunctionHandle:
    """Handle for x -> <t, x>; over an isotropic design its L2 norm is ||t||."""
    t = np.asarray(t, dtype=np.float64)
    if t.ndim != 1:
        raise DataError(f"linear handle needs a vector, got shape {t.shape}")
    return FunctionHandle(
        fn=lambda X, _t=t: X @ _t,
        l2_norm=float(np.linalg.norm(t)),
        descriptor={"kind": "linear", "t": t},
        hid=hid if hid is not None else f"lin[{hash(t.tobytes()) & 0xFFFFFF:06x}]",
    )


def handle_distance(a: FunctionHandle, b: FunctionHandle,
                    X: Optional[np.ndarray] = None) -> float:
    """L2 distance between handles: exact for linear pairs, else empirical
    over the provided design sample."""
    ta, tb = a.linear_vector, b.linear_vector
    if ta is not None and tb is not None:
        return float(np.linalg.norm(ta - tb))
    if X is None:
        raise ParameterError(
            "distance between non-linear handles needs a design sample X"
        )
    diff = a.evaluate(X) - b.evaluate(X)
    return float(np.sqrt(np.mean(diff**2)))


@dataclass
class NetSpec:
    """A finite net of handles at separation scale rho."""

    points: tuple
    rho: float = 0.0
    construction: dict = field(default_factory=lambda: {"kind": "explicit"})

    def __post_init__(self):
        self.points = tuple(self.points)

    def __len__(self):
        return len(self.points)

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        """Evaluate all net points on X; returns (N, K)."""
        if not self.points:
            raise DataError("empty net")
        ts = [h.linear_vector for h in self.points]
        if all(t is not None for t in ts):
            return X @ np.column_stack(ts)
        return np.column_stack([h.evaluate(X) for h in self.points])

    def norms(self) -> np.ndarray:
        return np.array([h.l2_norm for h in self.points])

    def check_separation(self, X: Optional[np.ndarray] = None) -> bool:
        """Whether all pairwise L2 distances are >= rho."""
        pts = self.points
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                if handle_distance(pts[i], pts[j], X) < self.rho:
                    return False
        return True


def random_sphere_net(d: int, size: int, seed: Optional[int] = None,
                      radius: float = 1.0,
                      rng: Optional[np.random.Generator] = None) -> NetSpec:
    """Net of uniformly random directions on the radius-r sphere in R^d.

    Pass either a seed or a ready generator (for callers managing their own
    per-trial streams).
    """
    if size < 1:
        raise ParameterError("net size must be positive")
    if rng is None:
        if seed is None:
            raise ParameterError("random_sphere_net needs a seed or an rng")
        rng = stream(seed)
    T = rng.standard_normal((size, d))
    T *= radius / np.linalg.norm(T, axis=1, keepdims=True)
    points = [linear_handle(T[i], hid=f"dir{i}") for i in range(size)]
    return NetSpec(points=points, rho=0.0,
                   construction={"kind": "random_sphere",
                                 "seed": None if seed is None else int(seed)})


def separated_sphere_net(d: int, rho: float, oversample: int, seed: int,
                         radius: float = 1.0) -> NetSpec:
    """Greedy rho-separated net on the sphere from oversampled directions.

    The achieved coverage radius (max distance from a discarded candidate to
    the net) is recorded in the construction metadata.
    """
    if rho <= 0:
        raise ParameterError("rho must be positive")
    rng = stream(seed)
    T = rng.standard_normal((oversample, d))
    T *= radius / np.linalg.norm(T, axis=1, keepdims=True)
    chosen: list[int] = []
    coverage = 0.0
    for i in range(oversample):
        if chosen:
            dmin = np.min(np.linalg.norm(T[chosen] - T[i], axis=1))
            if dmin < rho:
                coverage = max(coverage, float(dmin))
                continue
        chosen.append(i)
    points = [linear_handle(T[i], hid=f"dir{i}") for i in chosen]
    return NetSpec(
        points=points,
        rho=rho,
        construction={
            "kind": "greedy_random",
            "samples": oversample,
            "seed": int(seed),
            "coverage_radius": coverage,
        },
    )


def star_hull_net(points: Sequence[FunctionHandle], center: FunctionHandle,
                  levels: int) -> NetSpec:
    """Net of segments lam*h + (1-lam)*center for lam on a uniform grid.

    The grid is {1/levels, 2/levels, ..., 1}, so levels=1 reproduces the
    original points.  Duplicates are merged by descriptor.  Handles must be
    linear (affine combinations stay exact).
    """
    if levels < 1:
        raise ParameterError("levels must be >= 1")
    tc = center.linear_vector
    if tc is None:
        raise ParameterError("star hull requires linear handles")
    seen = {}
    for h in points:
        th = h.linear_vector
        if th is None:
            raise ParameterError("star hull requires linear handles")
        for i in range(1, levels + 1):
            lam = i / levels
            t = lam * th + (1.0 - lam) * tc
            key = t.tobytes()
            if key not in seen:
                seen[key] = linear_handle(t, hid=f"{h.hid}@{lam:g}")
    return NetSpec(points=list(seen.values()), rho=0.0,
                   construction={"kind": "star_hull", "levels": levels})


# ---------------------------------------------------------------------------
# Block partitions and good-block counts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BlockPartition:
    """Decomposition of {0..N-1} into n contiguous blocks of size m = N/n."""

    N: int
    n: int

    def __post_init__(self):
        if self.N < 1 or self.n < 1:
            raise ParameterError("N and n must be positive")
        if self.N % self.n != 0:
            raise ParameterError(
                f"n must divide N: N={self.N}, n={self.n}"
            )

    @property
    def m(self) -> int:
        return self.N // self.n

    @property
    def blocks(self) -> list:
        m = self.m
        return [np.arange(j * m, (j + 1) * m) for j in range(self.n)]


def partition(N: int, n: int) -> BlockPartition:
    """The natural partition into n equal contiguous blocks."""
    return BlockPartition(N=N, n=n)


def block_square_means(values: np.ndarray, part: BlockPartition) -> np.ndarray:
    """Per-block means of squares; values is (N,) or (N, K)."""
    v = np.asarray(values, dtype=np.float64)
    if v.shape[0] != part.N:
        raise DataError(f"values length {v.shape[0]} != N={part.N}")
    sq = v * v
    if sq.ndim == 1:
        return sq.reshape(part.n, part.m).mean(axis=1)
    return sq.reshape(part.n, part.m, -1).mean(axis=1)


def good_block_count(values: np.ndarray, part: BlockPartition, xi: float,
                     l2_norm: float) -> int:
    """Number of blocks with mean of squares >= (1 - xi) * l2_norm^2."""
    if l2_norm <= 0:
        raise ParameterError("l2_norm must be positive")
    means = block_square_means(values, part)
    return int(np.count_nonzero(means >= (1.0 - xi) * l2_norm**2))


@dataclass
class MinBlocksResult:
    min_count: int
    argmin_hid: str
    counts: np.ndarray  # per-handle good-block counts


def min_good_blocks_over_net(net: NetSpec, X: np.ndarray, part: BlockPartition,
                             xi: float) -> MinBlocksResult:
    """Minimum over the net of the good-block count, with the minimizer."""
    if len(net) == 0:
        raise DataError("empty net")
    norms = net.norms()
    if np.any(norms <= 0):
        raise ParameterError("all net handles need positive l2_norm")
    V = net.evaluate(X)
    means = block_square_means(V, part)  # (n, K)
    counts = (means >= (1.0 - xi) * norms**2).sum(axis=0)
    k = int(np.argmin(counts))
    return MinBlocksResult(
        min_count=int(counts[k]),
        argmin_hid=net.points[k].hid,
        counts=counts.astype(int),
    )


def quadratic_inf(net: NetSpec, X: np.ndarray) -> float:
    """min over the net of (1/N) sum_i f(X_i)^2 / ||f||^2."""
    if len(net) == 0:
        raise DataError("empty net")
    norms = net.norms()
    if np.any(norms <= 0):
        raise ParameterError("all net handles need positive l2_norm")
    V = net.evaluate(X)
    ratios = (V * V).mean(axis=0) / norms**2
    return float(ratios.min())


# ---------------------------------------------------------------------------
# Rademacher complexity
# ---------------------------------------------------------------------------

@dataclass
class RademacherEstimate:
    value: float
    stderr: float
    sign_draws: int


def _per_draw_stats(N: int, sign_draws: int, seed: int,
                    reducer: Callable[[np.ndarray], np.ndarray]) -> RademacherEstimate:
    """Accumulate per-sign-draw statistics in fixed chunks.

    ``reducer`` maps a (c, N) sign block to c per-draw values.  The chunking
    schedule is part of the seed contract: matched seeds -> matched draws.
    """
    rng = stream(seed)
    vals = np.empty(sign_draws)
    done = 0
    while done < sign_draws:
        c = min(_SIGN_CHUNK, sign_draws - done)
        eps = sign_matrix(rng, c, N)
        vals[done : done + c] = reducer(eps)
        done += c
    value = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(sign_draws)) if sign_draws > 1 else math.inf
    return RademacherEstimate(value=value, stderr=stderr, sign_draws=sign_draws)


def rademacher_sup(net: NetSpec, X: np.ndarray, sign_draws: int,
                   seed: int) -> RademacherEstimate:
    """MC estimate, conditional on X, of E sup_u |(1/N) sum_i eps_i u(X_i)|."""
    if len(net) == 0:
        raise DataError("empty net")
    V = net.evaluate(X)
    N = V.shape[0]
    return _per_draw_stats(
        N, sign_draws, seed,
        lambda eps: np.max(np.abs(eps @ V), axis=1) / N,
    )


def rademacher_sup_linear_ball(X: np.ndarray, rho: float, sign_draws: int,
                               seed: int) -> RademacherEstimate:
    """(rho/N) E || sum_i eps_i X_i ||_2: the exact supremum over the
    radius-rho ball of linear functionals, per sign draw (Cauchy-Schwarz
    equality)."""
    if rho <= 0:
        raise ParameterError("rho must be positive")
    X = np.asarray(X, dtype=np.float64)
    N = X.shape[0]
    return _per_draw_stats(
        N, sign_draws, seed,
        lambda eps: rho * np.linalg.norm(eps @ X, axis=1) / N,
    )


# ---------------------------------------------------------------------------
# Packing
# ---------------------------------------------------------------------------

@dataclass
class PackingResult:
    count: int
    indices: list
    points: list
    certified_maximal: bool


def packing_count(candidates: Sequence[FunctionHandle], rho: float,
                  distance_matrix: Optional[np.ndarray] = None) -> PackingResult:
    """Greedy maximal rho-separated subset of the candidates.

    Every chosen pair is >= rho apart and every rejected candidate is within
    rho of a chosen point (certified after construction).  Distances are
    exact for linear handles; otherwise pass ``distance_matrix``.
    """
    cands = list(candidates)
    if not cands:
        raise DataError("no candidates to pack")
    if rho <= 0:
        raise ParameterError("rho must be positive")
    K = len(cands)
    if distance_matrix is None:
        ts = [h.linear_vector for h in cands]
        if any(t is None for t in ts):
            raise ParameterError(
                "non-linear candidates need an explicit distance_matrix"
            )
        T = np.vstack(ts)
        sq = np.sum(T**2, axis=1)
        distance_matrix = np.sqrt(
            np.maximum(sq[:, None] + sq[None, :] - 2.0 * T @ T.T, 0.0)
        )
    D = np.asarray(distance_matrix, dtype=np.float64)
    if D.shape != (K, K):
        raise DataError(f"distance matrix must be ({K},{K}), got {D.shape}")
    chosen: list[int] = []
    for i in range(K):
        if not chosen or np.min(D[i, chosen]) >= rho:
            chosen.append(i)
    covered = all(
        (i in chosen) or float(np.min(D[i, chosen])) < rho for i in range(K)
    )
    return PackingResult(
        count=len(chosen),
        indices=chosen,
        points=[cands[i] for i in chosen],
        certified_maximal=covered,
    )


# ---------------------------------------------------------------------------
# Critical-radius fixed point
# ---------------------------------------------------------------------------

@dataclass
class CriticalRadiusResult:
    radius: float
    evaluations: list  # (r, complexity, se, budget)
    noise_limited: bool


def _normalize_eval(res) -> tuple:
    if isinstance(res, tuple):
        return float(res[0]), float(res[1])
    return float(res), 0.0


def solve_critical_radius(
    complexity: Callable,
    budget: Callable[[float], float],
    bracket: tuple,
    tol: float = 1e-3,
    initial_draws: int = 512,
    max_draws: int = 16384,
) -> CriticalRadiusResult:
    """Bisection for the smallest r in the bracket with
    complexity(r) <= budget(r).

    Contracts: complexity(r)/r nonincreasing on the bracket (star-shaped
    class) and budget(r)/r increasing; violations raise ContractError.  A
    noisy complexity may return (value, stderr) and accept a ``draws``
    keyword; when the margin |budget - value| is under 2 stderr the solver
    escalates draws before classifying the point, and records when it had to
    classify anyway.

    Raises
    ------
    BracketError
        If the predicate fails at the upper end of the bracket.
    """
    r_lo, r_hi = bracket
    if not 0 < r_lo < r_hi:
        raise ParameterError(f"need 0 < r_lo < r_hi, got {bracket}")
    takes_draws = False
    try:
        takes_draws = "draws" in inspect.signature(complexity).parameters
    except (TypeError, ValueError):
        pass

    noise_limited = False
    evals: list[tuple] = []

    def classify(r: float) -> bool:
        nonlocal noise_limited
        draws = initial_draws
        while True:
            res = complexity(r, draws=draws) if takes_draws else complexity(r)
            val, se = _normalize_eval(res)
            b = float(budget(r))
            if abs(b - val) >= 2.0 * se or se == 0.0:
                break
            if not takes_draws or draws >= max_draws:
                noise_limited = True
                break
            draws = min(2 * draws, max_draws)
        evals.append((r, val, se, b))
        return val <= b

    if not classify(r_hi):
        raise BracketError(
            f"complexity exceeds budget at the bracket top r={r_hi}"
        )
    if classify(r_lo):
        result_r = r_lo
    else:
        lo, hi = r_lo, r_hi
        while hi - lo > tol * hi:
            mid = 0.5 * (lo + hi)
            if classify(mid):
                hi = mid
            else:
                lo = mid
        result_r = hi

    # contract checks on the evaluated points
    pts = sorted(evals)
    for (r1, v1, s1, b1), (r2, v2, s2, b2) in zip(pts, pts[1:]):
        slack = 2.0 * (s1 / r1 + s2 / r2) + 1e-9 * max(abs(v1 / r1), 1.0)
        if v2 / r2 > v1 / r1 + slack:
            raise ContractError(
                f"complexity(r)/r increased from r={r1} to r={r2} "
                f"({v1 / r1:.6g} -> {v2 / r2:.6g}); star-shape contract violated"
            )
        if b2 / r2 <= b1 / r1 - 1e-12 * max(abs(b1 / r1), 1.0):
            raise ContractError(
                f"budget(r)/r not increasing from r={r1} to r={r2}"
            )
    return CriticalRadiusResult(radius=float(result_r), evaluations=evals,
                                noise_limited=noise_limited)


# ---------------------------------------------------------------------------
# Optional sharper adversarial search on the sphere
# ---------------------------------------------------------------------------

def sphere_attack(
    X: np.ndarray,
    part: BlockPartition,
    xi: float,
    seed: int,
    init: Optional[np.ndarray] = None,
    restarts: int = 4,
    steps: int = 150,
    step_size: float = 0.5,
    temperature: float = 0.02,
) -> tuple:
    """Projected-gradient search for a unit direction with few good blocks.

    Ascends a smoothed bad-block count (logistic relaxation of the
    indicator) over the unit sphere, tracking the best direction ever
    evaluated; warm-starting from a net minimizer via ``init`` makes the
    result at most the net minimum.  Returns (min_count, t); disagreement
    with a net minimum is for the caller to report, not resolve.
    """
    X = np.asarray(X, dtype=np.float64)
    N, d = X.shape
    theta = 1.0 - xi
    rng = stream(seed)
    best_count, best_t = part.n + 1, None
    Xb = X.reshape(part.n, part.m, d)

    def consider(t):
        nonlocal best_count, best_t
        count = good_block_count(X @ t, part, xi, 1.0)
        if count < best_count:
            best_count, best_t = count, t.copy()

    for restart in range(restarts):
        if restart == 0 and init is not None:
            t = np.asarray(init, dtype=np.float64).copy()
        else:
            t = rng.standard_normal(d)
        t /= np.linalg.norm(t)
        consider(t)
        for step in range(steps):
            proj = Xb @ t                       # (n, m)
            means = (proj**2).mean(axis=1)      # block means, ||t|| = 1
            w = 1.0 / (1.0 + np.exp((means - theta) / temperature))
            gw = w * (1.0 - w) / temperature    # d(sigmoid)/d(-mean)
            grad = -2.0 / part.m * np.einsum("j,jm,jmd->d", gw, proj, Xb)
            t = t + step_size * grad            # ascend the smoothed bad count
            t /= np.linalg.norm(t)
            if step % 25 == 24:
                consider(t)
        consider(t)
    return best_count, best_t
