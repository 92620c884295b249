"""Experiment orchestration: config validation, dispatch, seed management,
persistence, and report generation.

Configs are plain nested dicts (JSON or YAML on disk).  Every experiment is
deterministic given (config, master_seed): trial-level work units draw from
counter-based streams, so results are byte-identical at any thread count.
"""

from __future__ import annotations

import concurrent.futures
import io
import json
import math
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import __version__
from .blocks import (
    linear_handle,
    min_good_blocks_over_net,
    partition,
    rademacher_sup_linear_ball,
    random_sphere_net,
    solve_critical_radius,
)
from .distributions import Dataset, ScalarLaw, sample_regression
from .errors import ConfigError, DataError, ParameterError, SmallBallError
from .experiments import (
    SvCell,
    SvGrid,
    SvResult,
    fit_scaling_exponent,
    min_singular_value,
)
from .learners import ModelClass, erm_finite, erm_linear_ball, tournament_select
from .slb import (
    SlbConstants,
    slb_params_bounded,
    slb_params_lp,
    slb_params_norm_equiv,
    slb_params_uniform_integrable,
    trimmed_sq_mean,
)
from .streams import stream

__all__ = [
    "EXPERIMENTS",
    "ExperimentConfig",
    "ExperimentResult",
    "run",
    "report",
    "write_result",
    "parse_rows_csv",
    "load_config_file",
]


# ---------------------------------------------------------------------------
# Config schema
# ---------------------------------------------------------------------------

def _check(cond: bool, message: str, path: str):
    if not cond:
        raise ConfigError(message, path=path)


def _get_number(params: dict, key: str, path: str, *, required=True,
                default=None, integer=False, low=None, high=None,
                low_open=False):
    if key not in params:
        _check(not required, "missing required field", f"{path}.{key}")
        return default
    val = params[key]
    _check(isinstance(val, (int, float)) and not isinstance(val, bool),
           f"expected a number, got {val!r}", f"{path}.{key}")
    if integer:
        _check(float(val).is_integer(), f"expected an integer, got {val!r}",
               f"{path}.{key}")
        val = int(val)
    if low is not None:
        ok = val > low if low_open else val >= low
        _check(ok, f"must be {'>' if low_open else '>='} {low}, got {val}",
               f"{path}.{key}")
    if high is not None:
        _check(val <= high, f"must be <= {high}, got {val}", f"{path}.{key}")
    return val


def _get_law(params: dict, key: str, path: str, default_kind="gaussian") -> ScalarLaw:
    cfg = params.get(key, {"kind": default_kind})
    _check(isinstance(cfg, dict), "law must be a mapping", f"{path}.{key}")
    try:
        return ScalarLaw.from_config(cfg)
    except ParameterError as exc:
        raise ConfigError(str(exc), path=f"{path}.{key}") from exc


@dataclass
class ExperimentConfig:
    """A validated experiment request."""

    experiment: str
    params: dict
    master_seed: int = 0
    trials: int = 1
    threads: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(
                f"unknown experiment {self.experiment!r}; "
                f"choose from {sorted(EXPERIMENTS)}",
                path="experiment",
            )
        if not isinstance(self.params, dict):
            raise ConfigError("params must be a mapping", path="params")
        if not (isinstance(self.master_seed, int) and 0 <= self.master_seed < 2**64):
            raise ConfigError("master_seed must be a u64", path="master_seed")
        if not (isinstance(self.trials, int) and self.trials >= 1):
            raise ConfigError("trials must be a positive integer", path="trials")
        if not (isinstance(self.threads, int) and self.threads >= 1):
            raise ConfigError("threads must be a positive integer", path="threads")
        EXPERIMENTS[self.experiment].validate(self.params)

    def normalized(self) -> dict:
        return json.loads(json.dumps({
            "experiment": self.experiment,
            "params": self.params,
            "master_seed": self.master_seed,
            "trials": self.trials,
            "threads": self.threads,
        }, sort_keys=True))

    @classmethod
    def from_dict(cls, cfg: dict) -> "ExperimentConfig":
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a mapping", path="")
        if "experiment" not in cfg:
            raise ConfigError("missing required field", path="experiment")
        unknown = set(cfg) - {"experiment", "params", "master_seed", "trials",
                              "threads"}
        if unknown:
            raise ConfigError(f"unknown fields {sorted(unknown)}", path="")
        return cls(
            experiment=cfg["experiment"],
            params=cfg.get("params", {}),
            master_seed=int(cfg.get("master_seed", 0)),
            trials=int(cfg.get("trials", 1)),
            threads=int(cfg.get("threads", 1)),
        )


@dataclass
class ExperimentResult:
    """Rows plus aggregate summary, with full config provenance."""

    config: dict  # normalized echo
    rows: list  # list of dicts with plain scalar values
    summary: dict
    timing: float
    version: str = __version__


def _parallel_trials(trials: int, threads: int, worker: Callable[[int], dict]) -> list:
    """Run per-trial workers, preserving trial order regardless of threads."""
    if threads <= 1:
        return [worker(t) for t in range(trials)]
    with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, range(trials)))


# ---------------------------------------------------------------------------
# Experiment implementations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Experiment:
    validate: Callable[[dict], None]
    execute: Callable[[ExperimentConfig], tuple]  # -> (rows, summary)


def _validate_sv(params: dict):
    dims = params.get("dims")
    _check(isinstance(dims, list) and dims, "need a nonempty list of dims",
           "params.dims")
    for i, d in enumerate(dims):
        _check(isinstance(d, int) and d >= 1, f"dims must be ints >= 1, got {d!r}",
               f"params.dims[{i}]")
    aspects = params.get("aspects")
    _check(isinstance(aspects, list) and aspects,
           "need a nonempty list of N/d aspects", "params.aspects")
    for i, a in enumerate(aspects):
        _check(isinstance(a, (int, float)) and a > 0,
               f"aspects must be positive numbers, got {a!r}",
               f"params.aspects[{i}]")
        for j, d in enumerate(dims):
            _check(float(a * d).is_integer(),
                   f"aspect {a} times dim {d} is not an integer N",
                   f"params.aspects[{i}]")
    _get_number(params, "q", "params", required=False, default=4.0, low=2,
                low_open=True)
    _get_law(params, "law", "params")
    _get_number(params, "quantile", "params", required=False, default=0.5,
                low=0, high=1, low_open=True)


def _run_sv(config: ExperimentConfig) -> tuple:
    p = config.params
    law = _get_law(p, "law", "params")
    grid = SvGrid(
        dims=tuple(p["dims"]),
        aspects=tuple(p["aspects"]),
        law=law,
        q=float(p.get("q", 4.0)),
        trials=config.trials,
        seed=config.master_seed,
    )
    # cells x trials parallelize; each (cell, trial) has its own stream, so
    # we can fan out over flat work indices and reassemble
    cells = grid.cells
    lam = np.empty((len(cells), grid.trials))

    def worker(flat: int) -> dict:
        ci, t = divmod(flat, grid.trials)
        d, N = cells[ci]
        X = grid.law.sample(stream(grid.seed, ci, t), (N, d))
        return {"ci": ci, "t": t, "lam": min_singular_value(X)}

    out = _parallel_trials(len(cells) * grid.trials, config.threads, worker)
    rows = []
    for rec in out:
        lam[rec["ci"], rec["t"]] = rec["lam"]
    for ci, (d, N) in enumerate(cells):
        for t in range(grid.trials):
            rows.append({"d": d, "N": N, "trial": t,
                         "lambda_min": float(lam[ci, t])})

    result = SvResult(grid=grid, cells=[
        SvCell(d=d, N=N, lambda_min=lam[ci],
               bound_argument=(d / N) * math.log(math.e * N / d),
               bound_argument_nolog=d / N)
        for ci, (d, N) in enumerate(cells)
    ])
    quantile = float(p.get("quantile", 0.5))
    summary = {"q": grid.q, "target_exponent": 1.0 - 2.0 / grid.q}
    for label, use_log in (("with_log", True), ("without_log", False)):
        try:
            fit = fit_scaling_exponent(result, quantile, use_log_factor=use_log)
            summary[f"fit_{label}"] = {
                "exponent": fit.exponent, "intercept": fit.intercept,
                "r2": fit.r2,
            }
        except SmallBallError as exc:
            summary[f"fit_{label}"] = {"error": str(exc)}
    summary["cells"] = [
        {"d": c.d, "N": c.N,
         "median_deficit": float(np.median(1.0 - c.lambda_min)),
         "bound_argument": c.bound_argument}
        for c in result.cells
    ]
    return rows, summary


def _validate_blockish(params: dict, with_eta: bool):
    N = _get_number(params, "N", "params", integer=True, low=1)
    n = _get_number(params, "n", "params", integer=True, low=1)
    if N % n != 0:
        raise ConfigError(f"params.n must divide params.N (N={N}, n={n})",
                          path="params.n")
    _get_number(params, "d", "params", integer=True, low=1)
    _get_number(params, "xi", "params", low=0, high=1, low_open=True)
    _get_number(params, "net_size", "params", integer=True, low=1)
    _get_law(params, "law", "params")
    if with_eta:
        _get_number(params, "eta", "params", low=0, high=1, low_open=True)


def _run_blockish(config: ExperimentConfig, with_eta: bool) -> tuple:
    p = config.params
    law = _get_law(p, "law", "params")
    N, n, d = int(p["N"]), int(p["n"]), int(p["d"])
    xi, net_size = float(p["xi"]), int(p["net_size"])
    part = partition(N, n)

    def worker(t: int) -> dict:
        net = random_sphere_net(d, net_size, rng=stream(config.master_seed, t, 1))
        X = law.sample(stream(config.master_seed, t, 0), (N, d))
        res = min_good_blocks_over_net(net, X, part, xi)
        return {"trial": t, "min_count": res.min_count,
                "argmin_id": res.argmin_hid}

    rows = _parallel_trials(config.trials, config.threads, worker)
    counts = np.array([r["min_count"] for r in rows])
    summary = {
        "worst_min_count": int(counts.min()),
        "mean_min_count": float(counts.mean()),
        "n_blocks": n,
    }
    if with_eta:
        eta = float(p["eta"])
        required = math.ceil((1.0 - eta) * n)
        for r in rows:
            r["success"] = bool(r["min_count"] >= required)
        summary["required"] = required
        summary["success_rate"] = float(np.mean(counts >= required))
    return rows, summary


_SLB_REGIMES = ("bounded", "lp", "norm_equiv", "uniform_integrable")


def _validate_slb(params: dict):
    regime = params.get("regime")
    _check(regime in _SLB_REGIMES,
           f"regime must be one of {_SLB_REGIMES}, got {regime!r}",
           "params.regime")
    _get_number(params, "m", "params", integer=True, low=1)
    _get_number(params, "xi", "params", low=0, high=1, low_open=True)
    _get_number(params, "c0", "params", required=False, default=1.0, low=0,
                low_open=True)
    _get_number(params, "c1", "params", required=False, default=1.0, low=0,
                low_open=True)
    _get_number(params, "l2", "params", required=False, default=1.0, low=0,
                low_open=True)
    if regime == "bounded":
        _get_number(params, "M", "params", low=0, low_open=True)
    elif regime == "lp":
        _get_number(params, "p", "params", low=2, low_open=True)
        _get_number(params, "norm_lp", "params", low=0, low_open=True)
    elif regime == "norm_equiv":
        _get_number(params, "q", "params", low=2, low_open=True)
        _get_number(params, "L", "params", low=1)
    else:
        _get_number(params, "kappa", "params", low=0, low_open=True)
    _get_law(params, "law", "params", default_kind="uniform_sym")
    ell = params.get("ell")
    if ell is not None:
        _get_number(params, "ell", "params", integer=True, low=0)


def _run_slb(config: ExperimentConfig) -> tuple:
    p = config.params
    m, xi = int(p["m"]), float(p["xi"])
    constants = SlbConstants(c0=float(p.get("c0", 1.0)), c1=float(p.get("c1", 1.0)))
    l2 = float(p.get("l2", 1.0))
    regime = p["regime"]
    if regime == "bounded":
        slb = slb_params_bounded(m, xi, l2 * l2, float(p["M"]), constants)
    elif regime == "lp":
        slb = slb_params_lp(m, xi, float(p["p"]), l2, float(p["norm_lp"]),
                            constants)
    elif regime == "norm_equiv":
        slb = slb_params_norm_equiv(m, xi, float(p["q"]), float(p["L"]),
                                    constants)
    else:
        slb = slb_params_uniform_integrable(m, xi, float(p["kappa"]), constants)
    ell = int(p.get("ell", slb.ell))
    law = _get_law(p, "law", "params", default_kind="uniform_sym")
    threshold = (1.0 - xi) * law.second_moment()

    def worker(t: int) -> dict:
        v = law.sample(stream(config.master_seed, t), m)
        tm = trimmed_sq_mean(v, ell)
        return {"trial": t, "trimmed": float(tm),
                "failed": bool(tm < threshold)}

    rows = _parallel_trials(config.trials, config.threads, worker)
    rate = float(np.mean([r["failed"] for r in rows]))
    summary = {
        "ell": ell,
        "ell_formula": slb.ell,
        "k": slb.k,
        "failure_rate": rate,
        "stderr": float(math.sqrt(max(rate * (1 - rate), 1e-12) / config.trials)),
        "threshold": threshold,
        "bound_2exp_minus_k": float(min(1.0, 2.0 * math.exp(-slb.k))),
    }
    return rows, summary


def _validate_dataset_params(params: dict):
    if "data_file" in params:
        _check(isinstance(params["data_file"], str), "must be a path",
               "params.data_file")
        return
    gen = params.get("generate")
    _check(isinstance(gen, dict), "need data_file or generate table",
           "params.generate")
    _get_number(gen, "N", "params.generate", integer=True, low=1)
    _get_number(gen, "d", "params.generate", integer=True, low=1)
    _get_number(gen, "sigma", "params.generate", required=False, default=1.0,
                low=0)
    f0 = gen.get("f0")
    _check(isinstance(f0, list) and f0, "f0 must be a weight vector",
           "params.generate.f0")
    _get_law(gen, "noise", "params.generate")
    _get_law(gen, "design", "params.generate")


def _load_dataset(params: dict, seed: int) -> Dataset:
    if "data_file" in params:
        raw = np.loadtxt(params["data_file"], delimiter=",", ndmin=2)
        if raw.shape[1] < 2:
            raise DataError("dataset file needs >= 1 feature column + target")
        return Dataset(X=raw[:, :-1], y=raw[:, -1],
                       meta={"source": params["data_file"]})
    gen = params["generate"]
    t0 = np.asarray(gen["f0"], dtype=np.float64)
    return sample_regression(
        f0=linear_handle(t0, hid="f0"),
        noise=_get_law(gen, "noise", "params.generate"),
        sigma=float(gen.get("sigma", 1.0)),
        N=int(gen["N"]),
        d=int(gen["d"]),
        seed=seed,
        design=_get_law(gen, "design", "params.generate"),
    )


def _finite_model(params: dict) -> ModelClass:
    hs = params.get("handles")
    _check(isinstance(hs, list) and hs, "need a list of weight vectors",
           "params.model.handles")
    handles = [linear_handle(np.asarray(t, dtype=np.float64), hid=f"h{i}")
               for i, t in enumerate(hs)]
    return ModelClass.finite(handles)


def _validate_erm(params: dict):
    _validate_dataset_params(params)
    model = params.get("model")
    _check(isinstance(model, dict), "need a model table", "params.model")
    kind = model.get("kind")
    _check(kind in ("finite", "linear_ball"),
           f"model.kind must be finite|linear_ball, got {kind!r}",
           "params.model.kind")
    if kind == "finite":
        _check(isinstance(model.get("handles"), list) and model["handles"],
               "need a list of weight vectors", "params.model.handles")
    else:
        _get_number(model, "radius", "params.model", low=0)


def _run_erm(config: ExperimentConfig) -> tuple:
    p = config.params
    data = _load_dataset(p, config.master_seed)
    model_cfg = p["model"]
    if model_cfg["kind"] == "finite":
        model = _finite_model(model_cfg)
        res = erm_finite(model, data)
        rows = [{"handle": h.hid, "risk": float(r)}
                for h, r in zip(model.handles, res.risks)]
        summary = {"selected": res.handle_id, "index": res.index,
                   "min_risk": float(res.risks[res.index])}
    else:
        t = erm_linear_ball(data, radius=float(model_cfg["radius"]))
        risk = float(np.mean((data.X @ t - data.y) ** 2))
        rows = [{"coef": i, "value": float(v)} for i, v in enumerate(t)]
        summary = {"risk": risk, "norm": float(np.linalg.norm(t)),
                   "radius": float(model_cfg["radius"])}
    return rows, summary


def _validate_tournament(params: dict):
    _validate_dataset_params(params)
    model = params.get("model")
    _check(isinstance(model, dict), "need a model table", "params.model")
    _check(isinstance(model.get("handles"), list) and model["handles"],
           "need a list of weight vectors", "params.model.handles")
    n_blocks = _get_number(params, "n_blocks", "params", integer=True, low=1)
    _get_number(params, "draw_margin", "params", required=False, default=0.0,
                low=0)
    gen = params.get("generate")
    if gen is not None and int(gen["N"]) % n_blocks != 0:
        raise ConfigError("n_blocks must divide N", path="params.n_blocks")


def _run_tournament(config: ExperimentConfig) -> tuple:
    p = config.params
    data = _load_dataset(p, config.master_seed)
    model = _finite_model(p["model"])
    sel = tournament_select(model, data, n_blocks=int(p["n_blocks"]),
                            draw_margin=float(p.get("draw_margin", 0.0)))
    rows = [
        {"first": model.handles[i].hid, "second": model.handles[j].hid,
         "winner": out.winner, "first_wins": out.block_wins[0],
         "second_wins": out.block_wins[1], "tied_blocks": out.block_wins[2],
         "distance": out.distance}
        for i, j, out in sel.matches
    ]
    summary = {
        "selected": sel.handle_id,
        "index": sel.index,
        "no_champion": sel.no_champion,
        "losses": [int(x) for x in sel.losses],
        "wins": [int(x) for x in sel.wins],
    }
    return rows, summary


def _validate_fixed_point(params: dict):
    _get_number(params, "d", "params", integer=True, low=1)
    _get_number(params, "N", "params", integer=True, low=1)
    _get_number(params, "sign_draws", "params", required=False, default=512,
                integer=True, low=1)
    _get_law(params, "law", "params")
    budget = params.get("budget")
    _check(isinstance(budget, dict), "need a budget table", "params.budget")
    kind = budget.get("kind")
    _check(kind in ("bounded", "lp"),
           f"budget.kind must be bounded|lp, got {kind!r}",
           "params.budget.kind")
    _get_number(budget, "M", "params.budget", low=0, low_open=True)
    if kind == "lp":
        _get_number(budget, "p", "params.budget", low=2, low_open=True)
    bracket = params.get("bracket", [1e-3, 10.0])
    _check(isinstance(bracket, list) and len(bracket) == 2
           and 0 < bracket[0] < bracket[1],
           "bracket must be [r_lo, r_hi] with 0 < r_lo < r_hi",
           "params.bracket")


def _run_fixed_point(config: ExperimentConfig) -> tuple:
    p = config.params
    law = _get_law(p, "law", "params")
    d, N = int(p["d"]), int(p["N"])
    X = law.sample(stream(config.master_seed, 0), (N, d))
    base_draws = int(p.get("sign_draws", 512))
    budget_cfg = p["budget"]
    M = float(budget_cfg["M"])
    if budget_cfg["kind"] == "bounded":
        budget = lambda r: r * r / M
    else:
        expo = float(budget_cfg["p"]) / (float(budget_cfg["p"]) - 2.0)
        budget = lambda r: r * (r / M) ** expo

    call = [0]

    def complexity(r: float, draws: Optional[int] = None) -> tuple:
        call[0] += 1
        est = rademacher_sup_linear_ball(
            X, rho=r, sign_draws=draws or base_draws,
            seed=stream(config.master_seed, 1, call[0]).integers(2**63),
        )
        return est.value, est.stderr

    bracket = tuple(p.get("bracket", [1e-3, 10.0]))
    res = solve_critical_radius(complexity, budget, bracket)
    rows = [
        {"r": float(r), "complexity": float(v), "stderr": float(se),
         "budget": float(b)}
        for r, v, se, b in res.evaluations
    ]
    summary = {
        "radius": res.radius,
        "noise_limited": res.noise_limited,
        "evaluations": len(res.evaluations),
    }
    return rows, summary


EXPERIMENTS = {
    "sv": _Experiment(_validate_sv, _run_sv),
    "blocks": _Experiment(
        lambda p: _validate_blockish(p, with_eta=False),
        lambda c: _run_blockish(c, with_eta=False),
    ),
    "verify_main": _Experiment(
        lambda p: _validate_blockish(p, with_eta=True),
        lambda c: _run_blockish(c, with_eta=True),
    ),
    "slb": _Experiment(_validate_slb, _run_slb),
    "erm": _Experiment(_validate_erm, _run_erm),
    "tournament": _Experiment(_validate_tournament, _run_tournament),
    "fixed_point": _Experiment(_validate_fixed_point, _run_fixed_point),
}


# ---------------------------------------------------------------------------
# Run and report
# ---------------------------------------------------------------------------

def run(config: ExperimentConfig) -> ExperimentResult:
    """Dispatch the experiment; deterministic given (config, master_seed)."""
    start = time.perf_counter()
    rows, summary = EXPERIMENTS[config.experiment].execute(config)
    if not rows:
        raise DataError("experiment produced no rows")
    return ExperimentResult(
        config=config.normalized(),
        rows=rows,
        summary=summary,
        timing=time.perf_counter() - start,
    )


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)  # shortest round-trip decimal
    return str(value)


def report(result: ExperimentResult, fmt: str) -> str:
    """Render the result as csv (rows), json (lossless), or markdown."""
    if not result.rows:
        raise DataError("empty result")
    if fmt == "csv":
        cols = list(result.rows[0].keys())
        buf = io.StringIO()
        buf.write(",".join(cols) + "\n")
        for row in result.rows:
            buf.write(",".join(_fmt(row[c]) for c in cols) + "\n")
        return buf.getvalue()
    if fmt == "json":
        return json.dumps(
            {
                "version": result.version,
                "config": result.config,
                "summary": result.summary,
                "timing_seconds": result.timing,
                "rows": result.rows,
            },
            sort_keys=True,
            indent=2,
        )
    if fmt == "markdown":
        lines = [f"# {result.config['experiment']} report", ""]
        lines.append(f"- version: {result.version}")
        lines.append(f"- master_seed: {result.config['master_seed']}")
        lines.append(f"- rows: {len(result.rows)}")
        lines.append("")
        lines.append("## Summary")
        lines.append("")
        lines.append("| key | value |")
        lines.append("| --- | --- |")
        for key, value in result.summary.items():
            if key == "cells":
                continue
            lines.append(f"| {key} | {json.dumps(value)} |")
        if result.config["experiment"] == "sv":
            target = result.summary.get("target_exponent")
            fit = result.summary.get("fit_with_log", {})
            if "exponent" in fit:
                lines.append("")
                lines.append(
                    f"Fitted deficit exponent {fit['exponent']:.4f} "
                    f"(target 1 - 2/q = {target:.4f})."
                )
            cells = result.summary.get("cells", [])
            if cells:
                lines.append("")
                lines.append("## Cells")
                lines.append("")
                lines.append("| d | N | median deficit | bound argument |")
                lines.append("| --- | --- | --- | --- |")
                for c in cells:
                    lines.append(
                        f"| {c['d']} | {c['N']} | {c['median_deficit']:.6g} "
                        f"| {c['bound_argument']:.6g} |"
                    )
        return "\n".join(lines) + "\n"
    raise ParameterError(f"unknown report format {fmt!r}")


def parse_rows_csv(text: str, like: Optional[list] = None) -> list:
    """Parse a rows CSV produced by :func:`report` back into row dicts.

    Column types follow ``like`` (a reference row list, e.g. the original
    rows) or are inferred: int, then float, then bool, then str.
    """
    lines = [ln for ln in text.splitlines() if ln]
    if not lines:
        return []
    cols = lines[0].split(",")
    types = {}
    if like:
        types = {c: type(like[0][c]) for c in cols}

    def convert(col, raw):
        ty = types.get(col)
        if ty is bool or (ty is None and raw in ("true", "false")):
            return raw == "true"
        if ty is int:
            return int(raw)
        if ty is float:
            return float(raw)
        if ty is None:
            for cast in (int, float):
                try:
                    return cast(raw)
                except ValueError:
                    continue
        return raw

    return [
        {c: convert(c, v) for c, v in zip(cols, ln.split(","))}
        for ln in lines[1:]
    ]


def write_result(result: ExperimentResult, outdir) -> dict:
    """Persist rows.csv, summary.json, and report.md under outdir."""
    from pathlib import Path

    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}
    for name, fmt in (("rows.csv", "csv"), ("summary.json", "json"),
                      ("report.md", "markdown")):
        path = out / name
        path.write_text(report(result, fmt))
        paths[fmt] = str(path)
    return paths


def load_config_file(path) -> dict:
    """Load a JSON or YAML config file into a dict."""
    from pathlib import Path

    text = Path(path).read_text()
    if str(path).endswith((".yaml", ".yml")):
        import yaml

        cfg = yaml.safe_load(text)
    else:
        cfg = json.loads(text)
    if not isinstance(cfg, dict):
        raise ConfigError("config file must contain a mapping", path="")
    return cfg
