"""Command-line entry point: ``hetshrink <subcommand> [options]``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from hetshrink import experiments as ex
from hetshrink.estimator import apply, make_rule
from hetshrink.model import CovarianceSpec, make_geometric_covariance, theta_on_diagonal
from hetshrink.phi import parse_phi
from hetshrink.risk import BAYES_ENGINES, ORDINARY_ENGINES


def _floats(text: str) -> tuple[float, ...]:
    try:
        return ex._floats(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _names(text: str) -> tuple[str, ...]:
    return ex._names(text)


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def _config_flags(sub: argparse.ArgumentParser, *names: str) -> None:
    spec = {
        "p": dict(type=int),
        "a_list": dict(type=_floats, help="comma-separated spectrum bases"),
        "estimators": dict(type=_names, help="comma-separated: GB, JS, MLE, stein:c1,c2"),
        "m_grid": dict(type=_floats),
        "tau_grid": dict(type=_floats),
        "n_mc": dict(type=int),
        "n_sure": dict(type=int),
        "engine": dict(choices=("auto", "mc", "sure")),
        "bayes_engine": dict(type=str.upper, choices=tuple(BAYES_ENGINES)),
        "workers": dict(type=int),
    }
    for name in names:
        sub.add_argument("--" + name.replace("_", "-"), dest=name, default=None, **spec[name])


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value config file")
    common.add_argument("--seed", type=_u64, default=None)
    common.add_argument("--output", choices=("csv", "md"), default=None)
    common.add_argument("--out", type=Path, default=None, help="write output here instead of stdout")

    parser = argparse.ArgumentParser(
        prog="hetshrink",
        description="Heteroscedastic James-Stein shrinkage: risks, tables and minimaxity checks.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    t1 = subs.add_parser("table1", parents=[common], help="relative ordinary risk difference table")
    _config_flags(t1, "p", "a_list", "estimators", "m_grid", "n_mc", "n_sure", "engine", "workers")
    t2 = subs.add_parser("table2", parents=[common], help="relative Bayes risk difference table")
    _config_flags(t2, "p", "a_list", "estimators", "tau_grid", "n_mc", "bayes_engine", "workers")
    chk = subs.add_parser("check", parents=[common], help="ordinary and ensemble minimaxity verdicts")
    _config_flags(chk, "p", "a_list", "estimators")

    def rule_flags(sub):
        sub.add_argument("--estimator", default="GB")
        sub.add_argument("--g", default="casella", choices=("casella", "berger", "identity"))
        sub.add_argument("--p", type=int, default=None)
        sub.add_argument("--a", type=float, default=1.5)
        sub.add_argument("--sigma2", type=_floats, default=None, help="explicit variances (overrides --a)")
        sub.add_argument("--n", type=int, default=None)
        sub.add_argument("--workers", type=int, default=1)

    risk = subs.add_parser("risk", parents=[common], help="ordinary risk at one mean")
    rule_flags(risk)
    risk.add_argument("--m", type=float, default=0.0, help="mean on the diagonal with |theta|^2 = m^2 tr(Sigma)")
    risk.add_argument("--theta", type=_floats, default=None, help="explicit mean vector (overrides --m)")
    risk.add_argument("--engine", dest="point_engine", type=str.upper, choices=tuple(ORDINARY_ENGINES), default="MC")

    bayes = subs.add_parser("bayes-risk", parents=[common], help="ensemble (Bayes) risk at one tau")
    rule_flags(bayes)
    bayes.add_argument("--tau", type=float, required=True)
    bayes.add_argument("--engine", dest="point_engine", type=str.upper, choices=tuple(BAYES_ENGINES), default="RB")

    phi = subs.add_parser("phi-eval", parents=[common], help="evaluate a shrinkage profile")
    phi.add_argument("--phi", default="gb", help="gb, js, mle or stein:c1,c2")
    phi.add_argument("--p", type=int, default=10)
    phi.add_argument("--z", type=_floats, required=True)

    est = subs.add_parser("estimate", parents=[common], help="apply a rule to one observation")
    est.add_argument("--x", type=_floats, required=True)
    est.add_argument("--estimator", default="JS")
    est.add_argument("--g", default="casella", choices=("casella", "berger", "identity"))
    est.add_argument("--a", type=float, default=None)
    est.add_argument("--sigma2", type=_floats, default=None)
    return parser


def _load_config(args) -> ex.ExperimentConfig:
    config = ex.parse_config(args.config) if args.config else ex.ExperimentConfig()
    names = ("p", "a_list", "estimators", "m_grid", "tau_grid", "n_mc", "n_sure", "engine", "bayes_engine", "workers")
    changes = {name: getattr(args, name, None) for name in names}
    changes["seed"] = args.seed
    changes["output_format"] = args.output
    return ex.override(config, **changes)


def _covariance(args, p: int) -> CovarianceSpec:
    if args.sigma2 is not None:
        return CovarianceSpec(np.array(args.sigma2))
    if args.a is None:
        raise ex.ConfigError("give --a or --sigma2")
    return make_geometric_covariance(p, args.a)


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args)
        fmt = config.output_format
        if args.command == "table1":
            text = ex.render_cells(ex.run_table1(config), fmt)
        elif args.command == "table2":
            text = ex.render_cells(ex.run_table2(config), fmt)
        elif args.command == "check":
            text = ex.render_checks(ex.run_check_suite(config), fmt)
        elif args.command in ("risk", "bayes-risk"):
            p = args.p or (len(args.sigma2) if args.sigma2 else config.p)
            cov = _covariance(args, p)
            rule = make_rule(args.estimator, cov, args.g)
            n = args.n or config.n_mc
            if args.command == "risk":
                theta = np.array(args.theta) if args.theta is not None else theta_on_diagonal(args.m, cov)
                res = ORDINARY_ENGINES[args.point_engine](rule, theta, n, config.seed, workers=args.workers)
                index = args.m
            else:
                res = BAYES_ENGINES[args.point_engine](rule, args.tau, n, config.seed, workers=args.workers)
                index = args.tau
            rel, rel_err = res.relative_difference(cov.trace)
            text = ex.render(
                [(rule.name, index, res.mean, res.stderr, rel, rel_err, res.engine, res.n, cov.trace)],
                ("estimator", "index", "risk", "stderr", "relative_difference", "relative_stderr", "engine", "n", "trace"),
                fmt,
            )
        elif args.command == "phi-eval":
            spec = parse_phi(args.phi, args.p)
            z = np.array(args.z)
            rows = zip(z, spec.value(z), spec.derivative(z), spec.ratio(z))
            text = ex.render([tuple(map(float, r)) for r in rows], ("z", "phi", "phi_prime", "phi_over_z"), fmt)
        elif args.command == "estimate":
            x = np.array(args.x)
            if args.sigma2 is None and args.a is None:
                args.sigma2 = tuple([1.0] * x.size)
            cov = _covariance(args, x.size)
            res = apply(make_rule(args.estimator, cov, args.g), x)
            rows = [(i + 1, float(x[i]), float(res.delta[i]), float(res.factors[i])) for i in range(x.size)]
            text = f"z = {res.z:.6g}\n" + ex.render(rows, ("i", "x", "delta", "factor"), fmt)
        else:  # pragma: no cover - argparse enforces the choices
            parser.error(f"unknown command {args.command}")
    except (ex.ConfigError, ValueError, OSError) as exc:
        print(f"hetshrink: error: {exc}", file=sys.stderr)
        return 2
    _emit(text, args.out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
