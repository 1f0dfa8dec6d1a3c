"""Command-line driver: ``misesim run|compare-models|sweep-bounds --config PATH``.

Exit codes: 0 success, 1 simulation failure, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from contextlib import contextmanager

from .config import load_config, parse_bounds
from .errors import ConfigurationError, MiseSimError
from .experiments import compare_models, simulate, sweep_bounds

log = logging.getLogger("misesim")

INTERVAL_HEADER = ("interval", "app", "srsr", "arsr", "alpha", "mise_slowdown", "stfm_slowdown",
                   "share", "carried_forward_flag")
SUMMARY_HEADER = ("app", "alone_ipc", "shared_ipc", "actual_slowdown", "mise_error_pct", "stfm_error_pct")
SWEEP_HEADER = ("policy", "bound", "aoi_actual_slowdown", "bound_met_actual", "bound_met_predicted",
                "nonaoi_harmonic_speedup", "nonaoi_max_slowdown", "final_aoi_share", "unmeetable")


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def csv_line(fields) -> str:
    return ",".join(fmt(f) for f in fields) + "\n"


def interval_rows(result):
    for k, row in enumerate(result.estimates):
        shares = result.shares_history[k]
        for e in row:
            yield (k, e.app_id, e.srsr, e.arsr, e.alpha, e.mise_slowdown, e.stfm_slowdown,
                   shares[e.app_id], e.carried_forward)


def summary_rows(oracle):
    for a in oracle.apps:
        yield (a.app_id, a.alone_ipc, a.shared_ipc, a.actual_slowdown,
               oracle.per_app_mise_error[a.app_id], oracle.per_app_stfm_error[a.app_id])
    yield ("all", None, None, None, oracle.mise_error_pct, oracle.stfm_error_pct)


def sweep_rows(rows):
    for r in rows:
        yield (r.policy, r.bound, r.aoi_actual_slowdown, r.bound_met_actual, r.bound_met_predicted,
               r.nonaoi_harmonic_speedup, r.nonaoi_max_slowdown, r.final_aoi_share, r.unmeetable)


def render(*blocks) -> str:
    """Blocks of ``(header, rows)`` separated by one blank line."""
    parts = []
    for header, rows in blocks:
        parts.append(csv_line(header) + "".join(csv_line(r) for r in rows))
    return "\n".join(parts)


@contextmanager
def _output(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def cmd_run(exp):
    if exp.horizon < 2 * exp.interval_len:
        # no post-warmup interval, so there is nothing for the oracle to score
        return render((INTERVAL_HEADER, interval_rows(simulate(exp))))
    result, oracle = compare_models(exp)
    return render((INTERVAL_HEADER, interval_rows(result)), (SUMMARY_HEADER, summary_rows(oracle)))


def cmd_compare_models(exp):
    _, oracle = compare_models(exp)
    return render((SUMMARY_HEADER, summary_rows(oracle)))


def cmd_sweep_bounds(exp, bounds):
    return render((SWEEP_HEADER, sweep_rows(sweep_bounds(exp, bounds))))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="misesim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "compare-models", "sweep-bounds"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="experiment config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--horizon", type=int, help="cycles to simulate")
        p.add_argument("--out", help="CSV destination (default: config output, else stdout)")
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "sweep-bounds":
            p.add_argument("--bounds", help="comma-separated bounds, e.g. 10/1,10/3,2.5")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        exp = load_config(args.config).replace(seed=args.seed, horizon=args.horizon)
        if args.command == "sweep-bounds":
            bounds = parse_bounds(args.bounds) if args.bounds is not None else exp.bounds
            if not bounds:
                raise ConfigurationError("sweep-bounds needs a non-empty bounds list")
    except ConfigurationError as exc:
        print(f"misesim: config error: {exc}", file=sys.stderr)
        return 2

    try:
        log.info("running %s with %d apps, seed %d", args.command, len(exp.apps), exp.seed)
        if args.command == "run":
            text = cmd_run(exp)
        elif args.command == "compare-models":
            text = cmd_compare_models(exp)
        else:
            text = cmd_sweep_bounds(exp, bounds)
    except ConfigurationError as exc:
        print(f"misesim: config error: {exc}", file=sys.stderr)
        return 2
    except MiseSimError as exc:
        print(f"misesim: simulation failed: {exc}", file=sys.stderr)
        return 1

    out = args.out or exp.output
    try:
        with _output(out) as fh:
            fh.write(text)
    except OSError as exc:
        print(f"misesim: cannot write {out}: {exc.strerror}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
