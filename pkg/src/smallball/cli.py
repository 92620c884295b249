"""Command-line entry point.

    smallball <subcommand> [--config FILE] [--seed U64] [--trials N]
              [--threads K] [--out DIR] [extra flags]

Subcommands map one-to-one onto experiments; flags override config file
fields.  Exit codes: 0 success, 2 config error, 3 numerical-contract
violation.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import (
    BracketError,
    ConfigError,
    ContractError,
    ConvergenceError,
    ParameterError,
    SmallBallError,
)
from .runner import (
    EXPERIMENTS,
    ExperimentConfig,
    load_config_file,
    report,
    run,
    write_result,
)

_SUBCOMMANDS = {
    "sv": "sv",
    "blocks": "blocks",
    "verify-main": "verify_main",
    "slb": "slb",
    "erm": "erm",
    "tournament": "tournament",
    "fixed-point": "fixed_point",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smallball",
        description="Stable-lower-bound simulations, block-majority "
                    "experiments, and robust learning procedures.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _SUBCOMMANDS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", help="JSON or YAML config file")
        p.add_argument("--seed", type=int, help="master seed (u64)")
        p.add_argument("--trials", type=int, help="number of trials")
        p.add_argument("--threads", type=int, help="worker threads")
        p.add_argument("--out", help="output directory for rows/summary/report")
        if name in ("blocks", "verify-main"):
            p.add_argument("--N", type=int, help="sample size")
            p.add_argument("--n", type=int, help="number of blocks")
            p.add_argument("--d", type=int, help="dimension")
            p.add_argument("--xi", type=float, help="almost-isometry level")
            p.add_argument("--net-size", type=int, help="directions in the net")
            if name == "verify-main":
                p.add_argument("--eta", type=float, help="bad-block budget")
        if name in ("erm", "tournament"):
            p.add_argument("--data", help="CSV dataset: feature columns + target")
    return parser


def _assemble_config(args) -> ExperimentConfig:
    cfg = load_config_file(args.config) if args.config else {}
    cfg.setdefault("experiment", _SUBCOMMANDS[args.command])
    if cfg["experiment"] != _SUBCOMMANDS[args.command]:
        raise ConfigError(
            f"config is for {cfg['experiment']!r} but the subcommand is "
            f"{args.command!r}",
            path="experiment",
        )
    params = cfg.setdefault("params", {})
    for flag, key in (("N", "N"), ("n", "n"), ("d", "d"), ("xi", "xi"),
                      ("net_size", "net_size"), ("eta", "eta")):
        if getattr(args, flag, None) is not None:
            params[key] = getattr(args, flag)
    if getattr(args, "data", None) is not None:
        params["data_file"] = args.data
    if args.seed is not None:
        cfg["master_seed"] = args.seed
    if args.trials is not None:
        cfg["trials"] = args.trials
    if args.threads is not None:
        cfg["threads"] = args.threads
    return ExperimentConfig.from_dict(cfg)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = _assemble_config(args)
        result = run(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (BracketError, ContractError, ConvergenceError) as exc:
        print(f"numerical contract violated: {exc}", file=sys.stderr)
        return 3
    except ParameterError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SmallBallError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.out:
        paths = write_result(result, args.out)
        print(json.dumps({"out": paths, "summary": result.summary},
                         sort_keys=True))
    else:
        print(report(result, "json"))
    return 0


if __name__ == "__main__":
    sys.exit(main())
