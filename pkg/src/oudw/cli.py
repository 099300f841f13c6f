"""Command line entry point: ``oudw <subcommand> [options]``.

Exit status is 0 on success, 1 on usage or validation errors and 2 on numeric
failures such as a degenerate path. A test that rejects H0 exits with 0.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from oudw import io, rng
from oudw.asymptotics import (
    WSamplerConfig,
    asymptotic_law,
    critical_value,
    l_hat_limit,
    quantile_table,
    sample_w,
)
from oudw.dw_test import run_test
from oudw.errors import OudwError
from oudw.estimators import estimate, estimate_vartheta
from oudw.harness import load_spec, replicate
from oudw.sde import ModelParams, simulate_euler, simulate_exact, stationary_moments

log = logging.getLogger("oudw")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2

_METHODS = {"kl": "karhunen_loeve", "path": "brownian_path"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _alphas(text: str) -> list[float]:
    try:
        return [float(a) for a in text.split(",") if a.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated levels, got {text!r}")


def _seed(args) -> int:
    return rng.default_seed() if args.seed is None else args.seed


def _model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--theta", type=float, required=True, help="drift of X, < 0")
    p.add_argument("--rho", type=float, required=True, help="drift of V, <= 0")


def _sampler_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", choices=sorted(_METHODS), default="kl")
    p.add_argument("--count", type=int, default=100_000, help="number of draws")
    p.add_argument("--terms", type=int, default=200, help="Karhunen-Loeve truncation N")
    p.add_argument("--steps", type=int, default=2000, help="Brownian path steps m")
    p.add_argument(
        "--no-tail", action="store_true", help="plain truncated Karhunen-Loeve series"
    )
    p.add_argument("--seed", type=int, default=None)


def _sampler_config(args) -> WSamplerConfig:
    return WSamplerConfig(
        method=_METHODS[args.method],
        kl_terms=args.terms,
        path_steps=args.steps,
        count=args.count,
        seed=_seed(args),
        kl_tail=not args.no_tail,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="oudw", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="simulate a path and write it as CSV")
    _model_args(p)
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--step", type=float, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--scheme", choices=["exact", "euler"], default="exact")
    p.add_argument("--out", required=True)

    p = sub.add_parser("estimate", help="estimate theta, rho and D from a path CSV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out")

    p = sub.add_parser("test", help="Durbin-Watson test of rho = 0 on a path CSV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--z-alpha", type=float, default=None, help="critical value")
    p.add_argument("--out")

    p = sub.add_parser("limits", help="closed-form limits and asymptotic variances")
    _model_args(p)

    p = sub.add_parser("wdist", help="draw from the null limit law W")
    _sampler_args(p)
    p.add_argument("--out", help="CSV file for the draws")

    p = sub.add_parser("quantile", help="quantiles of 4 W^2")
    p.add_argument("--alpha", type=_alphas, default=[0.01, 0.05, 0.1])
    _sampler_args(p)
    p.add_argument("--out")

    p = sub.add_parser("mc", help="run a Monte Carlo experiment from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--raw", help="CSV file for per-replicate estimates")
    p.add_argument("--threads", type=int, default=1)
    return parser


def _estimation_record(est) -> dict:
    s = est.stats
    record = {
        "T": est.horizon,
        "theta_hat": est.theta_hat,
        "rho_hat": est.rho_hat,
        "dw": est.dw,
        "stats": {
            "S_T": s.s_t,
            "Sigma_T": s.sigma_T,
            "Pi_T": s.pi_T,
            "X_T": s.x_T,
            "V_hat_T": s.v_hat_T,
            "L_hat_T": s.l_hat_T,
            "gram": s.gram,
            "rhs": s.rhs,
        },
    }
    return record


def cmd_simulate(args) -> int:
    params = ModelParams(args.theta, args.rho)
    seed = _seed(args)
    sim = simulate_exact if args.scheme == "exact" else simulate_euler
    path = sim(params, args.horizon, args.step, seed)
    io.write_path_csv(path, args.out)
    print(
        io.dump_json(
            {"command": "simulate", "scheme": args.scheme, "seed": seed,
             "theta": params.theta, "rho": params.rho,
             "horizon": path.horizon, "step": path.step, "points": path.n + 1,
             "out": args.out}
        )
    )
    return EXIT_OK


def cmd_estimate(args) -> int:
    path = io.read_path_csv(args.infile)
    est = estimate(path)
    record = _estimation_record(est)
    try:
        record["vartheta_hat"] = estimate_vartheta(path).vartheta_hat
    except OudwError as exc:
        log.warning("vartheta not available: %s", exc)
        record["vartheta_hat"] = None
    text = io.dump_json(record, args.out)
    if args.out is None:
        print(text)
    return EXIT_OK


def cmd_test(args) -> int:
    if not 0 < args.alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {args.alpha}")
    z_alpha = critical_value(args.alpha) if args.z_alpha is None else args.z_alpha
    outcome = run_test(io.read_path_csv(args.infile), args.alpha, z_alpha)
    text = io.dump_json(outcome.to_record(), args.out)
    if args.out is None:
        print(text)
    if outcome.reject:
        print(
            "H0 rejected: serial correlation in the driving noise; "
            "use `estimate` and its vartheta_hat for unbiased drift estimates",
            file=sys.stderr,
        )
    return EXIT_OK


def cmd_limits(args) -> int:
    params = ModelParams(args.theta, args.rho)
    law = asymptotic_law(params)
    var_x, var_v, cov_xv = stationary_moments(params)
    print(
        io.dump_json(
            {
                "theta": params.theta,
                "rho": params.rho,
                "theta_star": law.theta_star,
                "rho_star": law.rho_star,
                "d_star": law.d_star,
                "sigma_theta_sq": law.sigma_theta_sq,
                "ell": law.ell,
                "sigma_rho_sq": law.sigma_rho_sq,
                "sigma_d_sq": law.sigma_d_sq,
                "delta": law.delta,
                "stationary": {"var_x": var_x, "var_v": var_v, "cov_xv": cov_xv},
                "l_hat_over_T": l_hat_limit(params) if params.rho < 0 else None,
            }
        )
    )
    return EXIT_OK


def cmd_wdist(args) -> int:
    config = _sampler_config(args)
    w = sample_w(config)
    if args.out:
        io._write_rows(args.out, ["w"], ([io._fmt(v)] for v in w))
    print(
        io.dump_json(
            {
                "command": "wdist",
                "method": config.method,
                "count": config.count,
                "seed": config.seed,
                "mean": float(np.mean(w)),
                "std": float(np.std(w, ddof=1)) if w.size > 1 else None,
                "quantiles": {str(q): float(np.quantile(w, q)) for q in (0.01, 0.05, 0.5, 0.95, 0.99)},
                "out": args.out,
            }
        )
    )
    return EXIT_OK


def cmd_quantile(args) -> int:
    config = _sampler_config(args)
    rows = quantile_table(args.alpha, config)
    io.write_quantile_csv(rows, config.count, config.method, config.seed, args.out or sys.stdout)
    return EXIT_OK


def cmd_mc(args) -> int:
    if args.threads < 1:
        raise ValueError(f"threads must be >= 1, got {args.threads}")
    spec = load_spec(args.config)
    summary = replicate(spec, threads=args.threads, keep_raw=args.raw is not None)
    if args.raw:
        io.write_raw_csv(summary.raw, args.raw)
    text = io.dump_json(summary.to_dict(), args.out)
    if args.out is None:
        print(text)
    return EXIT_OK if summary.failures == 0 else EXIT_NUMERIC


COMMANDS = {
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "test": cmd_test,
    "limits": cmd_limits,
    "wdist": cmd_wdist,
    "quantile": cmd_quantile,
    "mc": cmd_mc,
}


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"oudw: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return COMMANDS[args.command](args)
    except OudwError as exc:
        print(f"oudw {args.command}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        print(f"oudw {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
