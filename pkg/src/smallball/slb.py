"""Stable lower bounds: trimmed quadratic means, tail cutoffs, parameter
formulas per distributional regime, and the Bernoulli moment functional.

A function h satisfies a stable lower bound with parameters (xi, ell, k) for
sample size m when, with probability at least 1 - 2 exp(-k), discarding any
ell of the m sample points leaves (1/m) sum h^2 >= (1 - xi) E h^2.  The
adversarial discard set is the ell largest absolute values, so the check
reduces to the trimmed quadratic mean computed here.

All absolute constants in the parameter formulas are exposed as
configuration with default 1.0; scaling exponents are the testable content,
the constants are not.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy import integrate, optimize, stats

from .distributions import ScalarLaw
from .errors import (
    DegenerateInputError,
    ParameterError,
)
from .streams import stream, sign_matrix

__all__ = [
    "SlbConstants",
    "SlbParams",
    "MomentProfile",
    "trimmed_sq_mean",
    "tail_cutoff",
    "slb_params_bounded",
    "slb_params_lp",
    "slb_params_norm_equiv",
    "slb_params_uniform_integrable",
    "SlbFailureResult",
    "estimate_slb_failure",
    "bernoulli_moment_functional",
    "mc_bernoulli_moment",
]


@dataclass(frozen=True)
class SlbConstants:
    """Unspecified absolute constants of the parameter formulas."""

    c0: float = 1.0  # trim-budget constant (ell formula)
    c1: float = 1.0  # exponent constant (k formula)

    def __post_init__(self):
        if self.c0 <= 0 or self.c1 <= 0:
            raise ParameterError("constants c0, c1 must be positive")


@dataclass(frozen=True)
class SlbParams:
    """The triple (xi, ell, k) plus the constants that produced it.

    ``ell_raw`` is the pre-floor trim budget; scaling tests use it because
    the floor destroys exact homogeneity.
    """

    xi: float
    ell: int
    k: float
    constants: SlbConstants = field(default_factory=SlbConstants)
    ell_raw: float = 0.0

    def __post_init__(self):
        if not 0 < self.xi < 1:
            raise ParameterError(f"xi must lie in (0, 1), got {self.xi}")
        if self.ell < 0:
            raise ParameterError(f"ell must be >= 0, got {self.ell}")
        if self.k < 0:
            raise ParameterError(f"k must be >= 0, got {self.k}")


def _finish_params(xi, ell_raw, k, m, constants) -> SlbParams:
    ell = int(min(max(math.floor(ell_raw), 0), m))
    if ell == 0:
        warnings.warn(
            "trim budget ell floored to 0: the stable lower bound is "
            "degenerate at these parameters",
            RuntimeWarning,
            stacklevel=3,
        )
    return SlbParams(xi=xi, ell=ell, k=max(k, 0.0), constants=constants,
                     ell_raw=ell_raw)


def trimmed_sq_mean(v: np.ndarray, ell: int) -> float:
    """Minimum over discard sets |J| <= ell of (1/m) sum_{i in J^c} v_i^2.

    Equals (1/m) times the sum of the m - ell smallest squared entries: the
    adversary discards the ell largest absolute values.  Note the
    normalization stays 1/m, not 1/(m - ell).
    """
    v = np.asarray(v, dtype=np.float64)
    m = v.size
    if ell < 0 or ell > m:
        raise ParameterError(f"ell must lie in [0, {m}], got {ell}")
    if ell == m:
        return 0.0
    sq = np.sort(np.square(v))
    return float(sq[: m - ell].sum() / m)


def _tail_cutoff_empirical(values: np.ndarray, xi: float) -> float:
    a = np.abs(np.asarray(values, dtype=np.float64))
    total = float(np.square(a).sum())
    if total == 0.0:
        raise DegenerateInputError("tail cutoff undefined: E h^2 = 0")
    target = 0.5 * xi * total
    u = np.unique(a)  # ascending distinct levels
    csum = np.cumsum(np.square(u) * np.bincount(
        np.searchsorted(u, a), minlength=u.size))
    tails = total - csum  # tail mass strictly above each level
    idx = int(np.searchsorted(-tails, -target))  # first tail <= target
    return float(u[idx])


def _tail_cutoff_analytic(law: ScalarLaw, xi: float) -> float:
    """Smallest t with E h^2 1{|h| > t} <= (xi/2) E h^2 for an analytic law.

    Discrete laws are handled directly; continuous laws by quadrature of the
    symmetric tail integral and a bracketed root solve (relative tolerance
    1e-6 per the numeric contract).
    """
    sec = law.second_moment()
    target = 0.5 * xi * sec
    if law.kind == "rademacher":
        return law.scale  # single atom at |x| = scale

    def density(x: float) -> float:
        s = law.scale
        z = x / s
        if law.kind == "uniform_sym":
            return 0.5 / s if abs(z) <= 1.0 else 0.0
        if law.kind == "gaussian":
            return stats.norm.pdf(z) / s
        if law.kind == "student_t":
            return stats.t.pdf(z, df=law.param) / s
        # pareto_sym
        alpha = law.param
        return 0.5 * alpha * abs(z) ** (-alpha - 1.0) / s if abs(z) >= 1.0 else 0.0

    def tail(t: float) -> float:
        val, _ = integrate.quad(
            lambda x: x * x * density(x), t, np.inf, epsrel=1e-8, limit=200
        )
        return 2.0 * val

    lo, hi = 0.0, max(law.scale, 1.0)
    while tail(hi) > target:
        hi *= 2.0
        if hi > 1e12:
            raise ParameterError("tail cutoff search failed to bracket")
    if tail(lo) <= target:
        return 0.0
    root = optimize.brentq(lambda t: tail(t) - target, lo, hi, rtol=1e-6)
    return float(root)


def tail_cutoff(values_or_law: Union[np.ndarray, ScalarLaw], xi: float) -> float:
    """Smallest truncation level keeping (1 - xi/2) of the second moment.

    Accepts an empirical sample (order-statistic search, right-continuous at
    atoms) or a ScalarLaw (quadrature).

    Raises
    ------
    DegenerateInputError
        For an all-zero sample.
    """
    if not 0 < xi < 1:
        raise ParameterError(f"xi must lie in (0, 1), got {xi}")
    if isinstance(values_or_law, ScalarLaw):
        return _tail_cutoff_analytic(values_or_law, xi)
    return _tail_cutoff_empirical(values_or_law, xi)


def slb_params_bounded(
    m: int,
    xi: float,
    second_moment: float,
    M: float,
    constants: SlbConstants = SlbConstants(),
) -> SlbParams:
    """Parameters for a function bounded almost surely by M.

    ell = floor(c0 m xi Eh^2 / M^2),  k = c1 m xi^2 Eh^2 / M^2.
    """
    if second_moment <= 0 or M <= 0:
        raise ParameterError("second_moment and M must be positive")
    if M * M < second_moment:
        raise ParameterError(
            f"inconsistent profile: M^2 = {M*M} < E h^2 = {second_moment}"
        )
    ratio = second_moment / (M * M)
    ell_raw = constants.c0 * m * xi * ratio
    k = constants.c1 * m * xi * xi * ratio
    return _finish_params(xi, ell_raw, k, m, constants)


def slb_params_lp(
    m: int,
    xi: float,
    p: float,
    l2: float,
    lp: float,
    constants: SlbConstants = SlbConstants(),
) -> SlbParams:
    """Parameters for a function with finite L_p norm, p > 2.

    ell = floor(c0 m (xi l2^2 / lp^2)^(p/(p-2))); the exponent branch for k
    switches at p = 4, where the two expressions coincide:

        2 < p < 4 : k = c1 m (xi l2^2/lp^2)^(p/(p-2))
        p >= 4    : k = c1 m xi^2 (l2^2/lp^2)^(p/(p-2))
    """
    if p <= 2:
        raise ParameterError(f"need p > 2, got {p}")
    if not lp >= l2 > 0:
        raise ParameterError(f"need lp >= l2 > 0, got l2={l2}, lp={lp}")
    expo = p / (p - 2.0)
    base = l2 * l2 / (lp * lp)
    ell_raw = constants.c0 * m * (xi * base) ** expo
    if p < 4:
        k = constants.c1 * m * (xi * base) ** expo
    else:
        k = constants.c1 * m * xi * xi * base**expo
    return _finish_params(xi, ell_raw, k, m, constants)


def slb_params_norm_equiv(
    m: int,
    xi: float,
    q: float,
    L: float,
    constants: SlbConstants = SlbConstants(),
) -> SlbParams:
    """Parameters under an L_q-L_2 norm equivalence with constant L.

    ell = floor(c0 m (xi/L^2)^(q/(q-2)));
    k = c1 m (xi/L^2)^(q/(q-2)) for 2 < q < 4, else c1 m (xi/L^2)^2.
    """
    if q <= 2:
        raise ParameterError(f"need q > 2, got {q}")
    if L < 1:
        raise ParameterError(f"need L >= 1, got {L}")
    expo = q / (q - 2.0)
    base = xi / (L * L)
    ell_raw = constants.c0 * m * base**expo
    k = constants.c1 * m * (base**expo if q < 4 else base**2)
    return _finish_params(xi, ell_raw, k, m, constants)


def slb_params_uniform_integrable(
    m: int,
    xi: float,
    kappa: float,
    constants: SlbConstants = SlbConstants(),
) -> SlbParams:
    """Parameters under a uniform integrability cutoff M(h, xi) <= kappa ||h||.

    Substituting the cutoff into the bounded-case formulas gives
    ell = floor(c0 m xi / kappa^2) and k = c1 m xi^2 / kappa^2.
    """
    if kappa <= 0:
        raise ParameterError(f"need kappa > 0, got {kappa}")
    ell_raw = constants.c0 * m * xi / (kappa * kappa)
    k = constants.c1 * m * xi * xi / (kappa * kappa)
    return _finish_params(xi, ell_raw, k, m, constants)


@dataclass(frozen=True)
class MomentProfile:
    """Moment information about a function: which regime, which norms.

    ``kind`` is one of ``bounded`` (param M), ``lp`` (params p, norm_lp),
    ``norm_equiv`` (params q, L), ``uniform_integrable`` (param kappa_fn, a
    callable xi -> kappa(xi)).
    """

    kind: str
    l2_norm: float = 1.0
    M: Optional[float] = None
    p: Optional[float] = None
    norm_lp: Optional[float] = None
    q: Optional[float] = None
    L: Optional[float] = None
    kappa_fn: Optional[Callable[[float], float]] = None

    def __post_init__(self):
        if self.l2_norm <= 0:
            raise ParameterError("l2_norm must be positive")
        if self.kind == "bounded":
            if self.M is None or self.M < self.l2_norm:
                raise ParameterError("bounded profile needs M >= l2_norm")
        elif self.kind == "lp":
            if self.p is None or self.p <= 2:
                raise ParameterError("lp profile needs p > 2")
            if self.norm_lp is None or self.norm_lp < self.l2_norm:
                raise ParameterError("lp profile needs norm_lp >= l2_norm")
        elif self.kind == "norm_equiv":
            if self.q is None or self.q <= 2 or self.L is None or self.L < 1:
                raise ParameterError("norm_equiv profile needs q > 2 and L >= 1")
        elif self.kind == "uniform_integrable":
            if self.kappa_fn is None:
                raise ParameterError("uniform_integrable profile needs kappa_fn")
        else:
            raise ParameterError(f"unknown profile kind {self.kind!r}")

    def slb_params(self, m: int, xi: float,
                   constants: SlbConstants = SlbConstants()) -> SlbParams:
        """Dispatch to the formula for this regime."""
        if self.kind == "bounded":
            return slb_params_bounded(m, xi, self.l2_norm**2, self.M, constants)
        if self.kind == "lp":
            return slb_params_lp(m, xi, self.p, self.l2_norm, self.norm_lp,
                                 constants)
        if self.kind == "norm_equiv":
            return slb_params_norm_equiv(m, xi, self.q, self.L, constants)
        return slb_params_uniform_integrable(m, xi, self.kappa_fn(xi), constants)


@dataclass
class SlbFailureResult:
    """Empirical failure rate of a stable lower bound."""

    rate: float
    stderr: float
    trials: int
    threshold: float
    trimmed: np.ndarray  # per-trial trimmed quadratic means


def estimate_slb_failure(
    sampler: Union[ScalarLaw, Callable[[np.random.Generator, int], np.ndarray]],
    m: int,
    xi: float,
    ell: int,
    trials: int,
    seed: int,
    second_moment: Optional[float] = None,
) -> SlbFailureResult:
    """Fraction of trials where the trimmed quadratic mean drops below
    (1 - xi) E h^2.

    ``sampler`` is a ScalarLaw (second moment analytic) or a callable
    ``(rng, size) -> values`` with ``second_moment`` supplied explicitly.
    """
    if trials < 1:
        raise ParameterError("trials must be positive")
    if isinstance(sampler, ScalarLaw):
        law = sampler
        draw = law.sample
        if second_moment is None:
            second_moment = law.second_moment()
    else:
        draw = sampler
        if second_moment is None:
            raise ParameterError(
                "a callable sampler requires an explicit second_moment"
            )
    threshold = (1.0 - xi) * second_moment
    trimmed = np.empty(trials)
    for t in range(trials):
        v = draw(stream(seed, t), m)
        trimmed[t] = trimmed_sq_mean(v, ell)
    fails = trimmed < threshold
    rate = float(fails.mean())
    stderr = float(math.sqrt(max(rate * (1.0 - rate), 1e-12) / trials))
    return SlbFailureResult(rate=rate, stderr=stderr, trials=trials,
                            threshold=threshold, trimmed=trimmed)


def bernoulli_moment_functional(x: np.ndarray, p: float) -> float:
    """K_p(x) = sum_{i <= p} |x*_i| + sqrt(p) (sum_{i > p} x*_i^2)^(1/2).

    x* is the nonincreasing rearrangement of |x|; the head cut is at
    floor(p).  Two-sided equivalent (up to absolute constants) to the L_p
    moment of sum_i eps_i x_i over independent signs.
    """
    if p < 2:
        raise ParameterError(f"need p >= 2, got {p}")
    a = np.sort(np.abs(np.asarray(x, dtype=np.float64)))[::-1]
    cut = int(math.floor(p))
    head = float(a[:cut].sum())
    tail = math.sqrt(p) * math.sqrt(float(np.square(a[cut:]).sum()))
    return head + tail


def mc_bernoulli_moment(
    x: np.ndarray,
    p: float,
    trials: int,
    seed: int,
    return_se: bool = False,
):
    """(E |sum_i eps_i x_i|^p)^(1/p) by Monte Carlo over sign vectors.

    The standard error of the p-th moment estimate scales with the p-th
    moment's own tail weight; use enough trials that p * SE / estimate is
    small (batch-means SE available via ``return_se``).
    """
    if p < 2:
        raise ParameterError(f"need p >= 2, got {p}")
    if trials < 1:
        raise ParameterError("trials must be positive")
    x = np.asarray(x, dtype=np.float64)
    signs = sign_matrix(stream(seed), trials, x.size)
    s = np.abs(signs @ x) ** p
    value = float(s.mean() ** (1.0 / p))
    if not return_se:
        return value
    batches = min(10, trials)
    sb = s[: (trials // batches) * batches].reshape(batches, -1)
    vb = sb.mean(axis=1) ** (1.0 / p)
    se = float(vb.std(ddof=1) / math.sqrt(batches)) if batches > 1 else math.inf
    return value, se
