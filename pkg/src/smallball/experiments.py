"""End-to-end reproductions: the smallest-singular-value scaling law and
desk-scale verification of the block-majority conclusion.

Convention: lambda_min denotes the quadratic-form infimum
inf_{||t||=1} (1/N) sum_i <X_i, t>^2, i.e. the smallest eigenvalue of
(1/N) X^T X.  That is the square of the usual smallest singular value of
X / sqrt(N); we use the quadratic-form convention everywhere.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np

from .blocks import NetSpec, min_good_blocks_over_net, partition, random_sphere_net
from .distributions import ScalarLaw
from .errors import (
    DataError,
    MomentError,
    ParameterError,
    RankDeficiencyError,
)
from .streams import stream

__all__ = [
    "SvGrid",
    "SvCell",
    "SvResult",
    "min_singular_value",
    "run_sv_experiment",
    "FitResult",
    "fit_scaling_exponent",
    "VerifyMainResult",
    "verify_main_theorem",
    "QuantileError",
]


class QuantileError(ParameterError):
    """The chosen quantile yields nonpositive deficits; retry more extreme."""


def min_singular_value(X: np.ndarray) -> float:
    """Smallest eigenvalue of (1/N) X^T X via symmetric eigendecomposition.

    Tiny negative eigenvalues from roundoff are clamped to 0.

    Raises
    ------
    RankDeficiencyError
        If N < d, where the infimum is trivially 0.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DataError(f"design must be a matrix, got shape {X.shape}")
    N, d = X.shape
    if N < d:
        raise RankDeficiencyError(
            f"N={N} < d={d}: the quadratic-form infimum is 0"
        )
    gram = (X.T @ X) / N
    lam = float(np.linalg.eigvalsh(gram)[0])
    if lam < -1e-8 * max(1.0, abs(float(np.trace(gram)))):
        warnings.warn(
            f"eigenvalue clamp absorbed residual {lam:.3e}", RuntimeWarning
        )
    return max(lam, 0.0)


@dataclass(frozen=True)
class SvGrid:
    """Grid specification for the smallest-singular-value experiment."""

    dims: tuple
    aspects: tuple  # N/d ratios
    law: ScalarLaw = ScalarLaw("gaussian")
    q: float = 4.0
    trials: int = 50
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "aspects", tuple(self.aspects))
        if any(d < 1 for d in self.dims):
            raise ParameterError("all dims must be >= 1")
        for ratio in self.aspects:
            for d in self.dims:
                if (ratio * d) != int(ratio * d):
                    raise ParameterError(
                        f"aspect {ratio} * d {d} is not an integer sample size"
                    )
        if self.trials < 1:
            raise ParameterError("trials must be >= 1")
        if self.q <= 2:
            raise ParameterError(f"need q > 2, got {self.q}")

    @property
    def cells(self) -> list:
        return [(d, int(ratio * d)) for d in self.dims for ratio in self.aspects]


@dataclass
class SvCell:
    d: int
    N: int
    lambda_min: np.ndarray
    bound_argument: float  # (d/N) log(eN/d)
    bound_argument_nolog: float  # d/N, for the log-necessity comparison


@dataclass
class SvResult:
    grid: SvGrid
    cells: list


def run_sv_experiment(grid: SvGrid) -> SvResult:
    """Run the grid: per cell, independent designs and their lambda_min.

    Deterministic given (grid, seed): each (cell, trial) has its own stream.
    """
    if not grid.law.has_moment(grid.q):
        raise MomentError(
            f"law {grid.law.kind}({grid.law.param}) lacks a finite "
            f"q={grid.q} moment"
        )
    cells = []
    for ci, (d, N) in enumerate(grid.cells):
        lam = np.empty(grid.trials)
        for t in range(grid.trials):
            rng = stream(grid.seed, ci, t)
            X = grid.law.sample(rng, (N, d))
            lam[t] = min_singular_value(X)
        cells.append(
            SvCell(
                d=d,
                N=N,
                lambda_min=lam,
                bound_argument=(d / N) * math.log(math.e * N / d),
                bound_argument_nolog=d / N,
            )
        )
    return SvResult(grid=grid, cells=cells)


@dataclass
class FitResult:
    exponent: float
    intercept: float
    r2: float
    quantile: float
    n_cells: int


def fit_scaling_exponent(result: SvResult, quantile: float = 0.5,
                         use_log_factor: bool = True) -> FitResult:
    """Least-squares slope of log(deficit quantile) on log(bound argument).

    The deficit is 1 - lambda_min.  With ``use_log_factor=False`` the
    argument is plain d/N, for judging whether the log matters.

    Raises
    ------
    QuantileError
        If any cell's deficit quantile is nonpositive at this quantile.
    """
    if not 0 < quantile < 1:
        raise ParameterError(f"quantile must lie in (0,1), got {quantile}")
    args, defs = [], []
    for cell in result.cells:
        deficit = float(np.quantile(1.0 - cell.lambda_min, quantile))
        if deficit <= 0:
            raise QuantileError(
                f"nonpositive deficit {deficit:.3e} at quantile {quantile} "
                f"for cell (d={cell.d}, N={cell.N}); retry at a more extreme "
                "quantile"
            )
        args.append(cell.bound_argument if use_log_factor
                    else cell.bound_argument_nolog)
        defs.append(deficit)
    if len(set(args)) < 3:
        raise ParameterError(
            "need >= 3 cells with distinct bound arguments to fit"
        )
    lx = np.log(np.asarray(args))
    ly = np.log(np.asarray(defs))
    A = np.column_stack([lx, np.ones_like(lx)])
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    fitted = A @ coef
    ss_res = float(np.sum((ly - fitted) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return FitResult(
        exponent=float(coef[0]),
        intercept=float(coef[1]),
        r2=r2,
        quantile=quantile,
        n_cells=len(args),
    )


@dataclass
class VerifyMainResult:
    success_rate: float
    worst_min_count: int
    min_counts: np.ndarray
    required: int  # ceil((1 - eta) * n)


def verify_main_theorem(
    net: Union[NetSpec, int],
    law: ScalarLaw,
    d: int,
    N: int,
    n: int,
    xi: float,
    eta: float,
    trials: int,
    seed: int,
) -> VerifyMainResult:
    """Fraction of trials whose worst net direction keeps at least
    (1 - eta) n good blocks.

    ``net`` is a fixed NetSpec, or an integer size for a fresh random
    unit-sphere net per trial.
    """
    if not 0 < eta < 1:
        raise ParameterError(f"eta must lie in (0,1), got {eta}")
    part = partition(N, n)
    required = math.ceil((1.0 - eta) * n)
    counts = np.empty(trials, dtype=int)
    for t in range(trials):
        if isinstance(net, NetSpec):
            trial_net = net
        else:
            trial_net = random_sphere_net(d, int(net), rng=stream(seed, t, 1))
        X = law.sample(stream(seed, t, 0), (N, d))
        counts[t] = min_good_blocks_over_net(trial_net, X, part, xi).min_count
    return VerifyMainResult(
        success_rate=float(np.mean(counts >= required)),
        worst_min_count=int(counts.min()),
        min_counts=counts,
        required=required,
    )
