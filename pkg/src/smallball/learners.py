"""Learning procedures for the squared loss: ERM over finite classes and
Euclidean balls, the excess-loss decomposition, a Bernstein-constant
estimator, the multiplier-process critical radius, and the block tournament.

The tournament here is the match/majority core: pairwise block-wise risk
comparisons with a majority vote, plus a draw rule for functions closer than
an empirical-L2 margin (comparisons between near-equal functions are noise).
The multi-phase selection logic built on top of such matches elsewhere is
deliberately out of scope; when no function survives undefeated we return
the fewest-losses handle and set a flag instead of failing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .blocks import (
    BlockPartition,
    FunctionHandle,
    NetSpec,
    partition,
)
from .distributions import Dataset, ScalarLaw
from .errors import (
    BracketError,
    ConvergenceError,
    DataError,
    ParameterError,
)
from .streams import child_seed, stream

__all__ = [
    "ModelClass",
    "ErmResult",
    "erm_finite",
    "erm_linear_ball",
    "Decomposition",
    "excess_loss_decomposition",
    "BernsteinEstimate",
    "bernstein_constant",
    "r1_estimate",
    "R1Result",
    "MatchOutcome",
    "tournament_match",
    "SelectionResult",
    "tournament_select",
]


@dataclass
class ModelClass:
    """A hypothesis class: a finite set of handles or a Euclidean ball."""

    kind: str
    handles: tuple = ()
    radius: float = 0.0
    d: int = 0
    metadata: dict = field(default_factory=dict)

    @classmethod
    def finite(cls, handles: Sequence[FunctionHandle], **metadata) -> "ModelClass":
        handles = tuple(handles)
        if not handles:
            raise ParameterError("finite class must be nonempty")
        return cls(kind="finite", handles=handles, metadata=metadata)

    @classmethod
    def linear_ball(cls, radius: float, d: int, **metadata) -> "ModelClass":
        if radius < 0:
            raise ParameterError("radius must be >= 0")
        return cls(kind="linear_ball", radius=radius, d=d, metadata=metadata)


def _require_targets(data: Dataset):
    if data.y is None:
        raise DataError("dataset has no regression targets")


def _class_values(handles: Sequence[FunctionHandle], X: np.ndarray) -> np.ndarray:
    """(N, K) matrix of handle values; linear handles take the fast path."""
    ts = [h.linear_vector for h in handles]
    if all(t is not None for t in ts):
        return X @ np.column_stack(ts)
    return np.column_stack([h.evaluate(X) for h in handles])


@dataclass
class ErmResult:
    handle_id: str
    index: int
    risks: np.ndarray


def erm_finite(model: ModelClass, data: Dataset) -> ErmResult:
    """Empirical squared-risk minimizer over a finite class.

    Ties break to the lowest handle index, so the outcome is deterministic.
    """
    if model.kind != "finite":
        raise ParameterError("erm_finite needs a finite class")
    _require_targets(data)
    V = _class_values(model.handles, data.X)
    risks = ((V - data.y[:, None]) ** 2).mean(axis=0)
    idx = int(np.argmin(risks))  # argmin returns the first minimizer
    return ErmResult(handle_id=model.handles[idx].hid, index=idx, risks=risks)


def erm_linear_ball(
    data: Dataset,
    radius: float,
    tol: float = 1e-8,
    max_iter: int = 20000,
) -> np.ndarray:
    """Projected-gradient ERM over the Euclidean ball of the given radius.

    Fixed step 1/L with L the largest eigenvalue of (2/N) X^T X; stops when
    the gradient-mapping norm (the KKT residual) drops to ``tol``.

    Raises
    ------
    ConvergenceError
        If max_iter is exhausted; carries the final residual.
    """
    _require_targets(data)
    if radius < 0:
        raise ParameterError("radius must be >= 0")
    if radius == 0.0:
        return np.zeros(data.d)
    X, y = data.X, data.y
    N = data.N
    gram2 = 2.0 * (X.T @ X) / N
    L = float(np.linalg.eigvalsh(gram2)[-1])
    if L <= 0:
        return np.zeros(data.d)
    xty2 = 2.0 * (X.T @ y) / N

    def project(t):
        nrm = np.linalg.norm(t)
        return t if nrm <= radius else t * (radius / nrm)

    t = np.zeros(data.d)
    residual = math.inf
    for _ in range(max_iter):
        grad = gram2 @ t - xty2
        t_next = project(t - grad / L)
        residual = float(np.linalg.norm(t - t_next) * L)
        t = t_next
        if residual <= tol:
            return t
    raise ConvergenceError(
        f"projected gradient did not reach tol={tol} in {max_iter} iterations "
        f"(residual {residual:.3e})",
        residual=residual,
    )


@dataclass
class Decomposition:
    quadratic: float
    multiplier: float

    @property
    def total(self) -> float:
        return self.quadratic + self.multiplier


def excess_loss_decomposition(f: FunctionHandle, f_star: FunctionHandle,
                              data: Dataset) -> Decomposition:
    """Split the empirical excess risk of f into its quadratic part
    (1/N) sum (f - f*)^2 and multiplier part (2/N) sum (f - f*)(f* - Y).

    The sum of the two parts equals the direct empirical excess risk
    exactly (an algebraic identity, up to float roundoff).
    """
    _require_targets(data)
    fv = f.evaluate(data.X)
    sv = f_star.evaluate(data.X)
    diff = fv - sv
    quadratic = float((diff**2).mean())
    multiplier = float(2.0 * (diff * (sv - data.y)).mean())
    return Decomposition(quadratic=quadratic, multiplier=multiplier)


@dataclass
class BernsteinEstimate:
    """Estimated Bernstein constant: max over the class of
    ||f - f*||^2 / excess risk, with f* the population-risk argmin.

    Values below 1 are floored to 1 (the raw maximum stays in ``b_raw``);
    handles whose excess risk is within 3 SE of 0 are excluded from the max
    and listed as unreliable.
    """

    B_hat: float
    argmax_handle: str
    f_star_handle: str
    mc_se: float
    b_raw: float
    unreliable: list
    flagged: bool


def bernstein_constant(
    model: Union[ModelClass, NetSpec],
    data_sampler: Callable[[np.random.Generator], tuple],
    mc_size: int,
    seed: int,
) -> BernsteinEstimate:
    """Estimate the Bernstein constant of (class, X, Y) by Monte Carlo.

    ``data_sampler(rng)`` must return one (X, Y) sample of size ``mc_size``
    (an (mc_size, d) design and length-mc_size targets).  f* is identified
    as the argmin of the estimated population risk.  Distances ||f - f*||
    are exact for linear handles, otherwise estimated on the same sample.
    """
    handles = tuple(model.points) if isinstance(model, NetSpec) else model.handles
    if not handles:
        raise ParameterError("class must be nonempty")
    rng = stream(seed)
    X, Y = data_sampler(rng)
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.shape[0] != Y.shape[0]:
        raise DataError("design and targets disagree on sample size")
    V = _class_values(handles, X)
    sq_err = (V - Y[:, None]) ** 2
    risks = sq_err.mean(axis=0)
    star = int(np.argmin(risks))

    if len(handles) == 1:
        return BernsteinEstimate(
            B_hat=1.0, argmax_handle=handles[0].hid,
            f_star_handle=handles[0].hid, mc_se=0.0, b_raw=math.nan,
            unreliable=[], flagged=True,
        )

    n = X.shape[0]
    excess_samples = sq_err - sq_err[:, star][:, None]  # per-point excess loss
    excess = excess_samples.mean(axis=0)
    excess_se = excess_samples.std(axis=0, ddof=1) / math.sqrt(n)

    t_star = handles[star].linear_vector
    ratios = np.full(len(handles), -math.inf)
    ratio_se = np.zeros(len(handles))
    unreliable = []
    for i, h in enumerate(handles):
        if i == star:
            continue
        if excess[i] <= 3.0 * excess_se[i]:
            unreliable.append(h.hid)
            continue
        ti = h.linear_vector
        if ti is not None and t_star is not None:
            num = float(np.sum((ti - t_star) ** 2))
            num_se = 0.0
        else:
            dvals = (V[:, i] - V[:, star]) ** 2
            num = float(dvals.mean())
            num_se = float(dvals.std(ddof=1) / math.sqrt(n))
        ratios[i] = num / excess[i]
        rel = math.sqrt(
            (num_se / num) ** 2 + (excess_se[i] / excess[i]) ** 2
        ) if num > 0 else 0.0
        ratio_se[i] = ratios[i] * rel

    best = int(np.argmax(ratios))
    if not math.isfinite(ratios[best]):
        # every non-star handle was an unreliable denominator
        return BernsteinEstimate(
            B_hat=1.0, argmax_handle=handles[star].hid,
            f_star_handle=handles[star].hid, mc_se=0.0, b_raw=math.nan,
            unreliable=unreliable, flagged=True,
        )
    b_raw = float(ratios[best])
    return BernsteinEstimate(
        B_hat=max(1.0, b_raw),
        argmax_handle=handles[best].hid,
        f_star_handle=handles[star].hid,
        mc_se=float(ratio_se[best]),
        b_raw=b_raw,
        unreliable=unreliable,
        flagged=b_raw < 1.0,
    )


@dataclass
class R1Result:
    r1: float
    evaluations: list  # (r, exceedance probability)
    delta: float


def _net_offsets(class_net: NetSpec, f_star: FunctionHandle) -> np.ndarray:
    t_star = f_star.linear_vector
    us = []
    for h in class_net.points:
        th = h.linear_vector
        if th is None or t_star is None:
            raise ParameterError("multiplier estimates support linear handles only")
        u = th - t_star
        if np.linalg.norm(u) > 0:
            us.append(u)
    return np.vstack(us) if us else np.empty((0, t_star.size))


def multiplier_sup_samples(
    class_net: NetSpec,
    f_star: FunctionHandle,
    noise: ScalarLaw,
    r: float,
    n_samples: int,
    mc: int,
    seed: int,
    sigma: float = 1.0,
    design: Optional[ScalarLaw] = None,
) -> np.ndarray:
    """Draw mc independent realizations of the symmetrized multiplier
    supremum over the star hull of the centered net meeting the radius-r
    ball: max_u min(1, r/||u||) |(1/N) sum_i eps_i xi_i u(X_i)|."""
    if design is None:
        design = ScalarLaw("gaussian")
    U = _net_offsets(class_net, f_star)
    if U.shape[0] == 0:
        return np.zeros(mc)
    norms = np.linalg.norm(U, axis=1)
    scale = np.minimum(1.0, r / norms)
    out = np.empty(mc)
    for t in range(mc):
        rng = stream(seed, t)
        X = design.sample(rng, (n_samples, U.shape[1]))
        w = noise.sample(rng, n_samples)
        eps = rng.integers(0, 2, n_samples) * 2.0 - 1.0
        weights = eps * (-sigma * w)  # eps_i * (f*(X_i) - Y_i)
        sups = np.abs(weights @ (X @ U.T)) / n_samples
        out[t] = np.max(scale * sups)
    return out


def r1_estimate(
    class_net: NetSpec,
    f_star: FunctionHandle,
    noise: ScalarLaw,
    delta: float,
    rho: float,
    n_samples: int,
    mc: int,
    seed: int,
    bracket: tuple = (1e-3, 10.0),
    sigma: float = 1.0,
    design: Optional[ScalarLaw] = None,
    tol: float = 0.02,
) -> R1Result:
    """Smallest r with Pr(phi(r) >= (rho/2) r^2) <= delta, by stochastic
    bisection; phi(r) is the symmetrized multiplier supremum over the
    star-shaped hull of the centered net intersected with the radius-r ball.

    Fresh samples and signs at every bisection step; mc trials per step.

    Raises
    ------
    ParameterError
        If delta * mc < 20 (not enough tail resolution for the requested
        level).
    BracketError
        If the exceedance probability still exceeds delta at the top of the
        bracket.
    """
    if not 0 < delta < 1:
        raise ParameterError(f"delta must lie in (0,1), got {delta}")
    if delta * mc < 20:
        raise ParameterError(
            f"resolution too low: delta*mc = {delta * mc:.1f} < 20; "
            "increase mc or delta"
        )
    if rho <= 0 or not rho < 1:
        raise ParameterError(f"need 0 < rho < 1, got {rho}")
    if design is None:
        design = ScalarLaw("gaussian")
    if _net_offsets(class_net, f_star).shape[0] == 0:
        # the net collapses onto f*; phi is identically 0
        return R1Result(r1=bracket[0], evaluations=[(bracket[0], 0.0)],
                        delta=delta)

    step = [0]

    def exceed_prob(r: float) -> float:
        k = step[0]
        step[0] += 1
        phis = multiplier_sup_samples(
            class_net, f_star, noise, r, n_samples, mc,
            seed=child_seed(seed, k), sigma=sigma, design=design,
        )
        return float(np.mean(phis >= 0.5 * rho * r * r))

    evals = []
    r_lo, r_hi = bracket
    p_hi = exceed_prob(r_hi)
    evals.append((r_hi, p_hi))
    if p_hi > delta:
        raise BracketError(
            f"exceedance {p_hi:.4f} > delta={delta} at bracket top r={r_hi}"
        )
    p_lo = exceed_prob(r_lo)
    evals.append((r_lo, p_lo))
    if p_lo <= delta:
        return R1Result(r1=r_lo, evaluations=evals, delta=delta)
    lo, hi = r_lo, r_hi
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        p_mid = exceed_prob(mid)
        evals.append((mid, p_mid))
        if p_mid <= delta:
            hi = mid
        else:
            lo = mid
    return R1Result(r1=hi, evaluations=evals, delta=delta)


@dataclass
class MatchOutcome:
    """Result of a block-wise statistical match between two functions."""

    winner: str  # "first" | "second" | "draw"
    block_wins: tuple  # (first wins, second wins, tied blocks)
    distance: float  # empirical L2 distance between the contestants

    def __post_init__(self):
        if self.winner not in ("first", "second", "draw"):
            raise ParameterError(f"bad winner {self.winner!r}")


def tournament_match(
    f: FunctionHandle,
    h: FunctionHandle,
    data: Dataset,
    part: BlockPartition,
    draw_margin: float = 0.0,
) -> MatchOutcome:
    """Compare f and h by their empirical risks on each block; the winner
    takes a majority of blocks.

    The match is declared a draw when the empirical L2 distance between the
    contestants is under ``draw_margin`` (such matches are unreliable), or
    when block wins tie; tied blocks count half to each side, which keeps
    the outcome antisymmetric.
    """
    _require_targets(data)
    fv = f.evaluate(data.X)
    hv = h.evaluate(data.X)
    distance = float(np.sqrt(np.mean((fv - hv) ** 2)))
    rf = ((fv - data.y) ** 2).reshape(part.n, part.m).mean(axis=1)
    rh = ((hv - data.y) ** 2).reshape(part.n, part.m).mean(axis=1)
    wins_f = int(np.count_nonzero(rf < rh))
    wins_h = int(np.count_nonzero(rh < rf))
    ties = part.n - wins_f - wins_h
    if distance < draw_margin or wins_f == wins_h:
        winner = "draw"
    else:
        winner = "first" if wins_f > wins_h else "second"
    return MatchOutcome(winner=winner, block_wins=(wins_f, wins_h, ties),
                        distance=distance)


@dataclass
class SelectionResult:
    handle_id: str
    index: int
    no_champion: bool
    losses: np.ndarray
    wins: np.ndarray
    matches: list  # (i, j, MatchOutcome)


def tournament_select(
    model: ModelClass,
    data: Dataset,
    n_blocks: int,
    draw_margin: float = 0.0,
) -> SelectionResult:
    """Round-robin tournament over a finite class.

    The champion is a handle with no non-draw loss and at least one decisive
    win (a single-member class is its own champion).  Among several
    champions the one with the smallest median block risk is returned.  If
    nobody qualifies, e.g. every match is a draw, the handle with fewest
    losses (lowest index on ties) is returned with ``no_champion`` set.
    """
    if model.kind != "finite":
        raise ParameterError("tournament_select needs a finite class")
    _require_targets(data)
    part = partition(data.N, n_blocks)
    handles = model.handles
    K = len(handles)
    if K == 1:
        return SelectionResult(handle_id=handles[0].hid, index=0,
                               no_champion=False,
                               losses=np.zeros(1, dtype=int),
                               wins=np.zeros(1, dtype=int), matches=[])
    V = _class_values(handles, data.X)
    block_risks = ((V - data.y[:, None]) ** 2).reshape(part.n, part.m, K).mean(axis=1)
    median_risk = np.median(block_risks, axis=0)

    losses = np.zeros(K, dtype=int)
    wins = np.zeros(K, dtype=int)
    matches = []
    for i in range(K):
        for j in range(i + 1, K):
            dist = float(np.sqrt(np.mean((V[:, i] - V[:, j]) ** 2)))
            wi = int(np.count_nonzero(block_risks[:, i] < block_risks[:, j]))
            wj = int(np.count_nonzero(block_risks[:, j] < block_risks[:, i]))
            ties = part.n - wi - wj
            if dist < draw_margin or wi == wj:
                outcome = MatchOutcome("draw", (wi, wj, ties), dist)
            elif wi > wj:
                outcome = MatchOutcome("first", (wi, wj, ties), dist)
                wins[i] += 1
                losses[j] += 1
            else:
                outcome = MatchOutcome("second", (wi, wj, ties), dist)
                wins[j] += 1
                losses[i] += 1
            matches.append((i, j, outcome))

    qualified = [i for i in range(K) if losses[i] == 0 and wins[i] >= 1]
    if qualified:
        idx = min(qualified, key=lambda i: (median_risk[i], i))
        return SelectionResult(handle_id=handles[idx].hid, index=idx,
                               no_champion=False, losses=losses, wins=wins,
                               matches=matches)
    idx = int(np.argmin(losses))  # first minimum: lowest index on ties
    return SelectionResult(handle_id=handles[idx].hid, index=idx,
                           no_champion=True, losses=losses, wins=wins,
                           matches=matches)
