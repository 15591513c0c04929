"""
Command-line front end.

    ndcrisk <verb> [options] [--output PATH|-] [--plot-dir DIR]

Exit status: 0 success, 1 usage error, 2 data/validation error,
3 numerical failure (the report is still written, with ``error`` set).
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

from . import budgeting, capital, chaos, simulation, var, volatility
from .exceptions import ConvergenceError
from .market_data import load_price_series, summary_stats, to_returns
from .report import Report, emit_plot_data, file_digest

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

# execution settings that never change results, kept out of the command echo
_NOT_ECHOED = {"verb", "output", "plot_dir", "workers", "handler"}


class UsageError(Exception):
    pass


class NumericalFailure(Exception):
    """Raised by a handler after filling the report, to request exit status 3."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")

    def exit(self, status=0, message=None):
        if message:
            sys.stderr.write(message)
        raise SystemExit(status)


def _level(text):
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError("level must lie in (0, 1)")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _seed(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _fraction(text):
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError("must lie in (0, 1)")
    return v


# --- input helpers -----------------------------------------------------------------

def _read_returns(report: Report, args, attr="input"):
    path = getattr(args, attr)
    report.inputs[path] = file_digest(path)
    with open(path, "rb") as fh:
        prices = load_price_series(fh, args.periods_per_year)
    return to_returns(prices, args.returns_kind)


def _fit(returns, args) -> volatility.GarchFit:
    return volatility.fit_garch(returns, volatility.FitConfig(tol=args.tol, max_iter=args.max_iter))


def _require_converged(report: Report, fit):
    if not fit.converged:
        report.error = f"GARCH optimizer did not converge after {fit.iterations} iterations"
        raise NumericalFailure(report.error)


def _variance_plot(h):
    return (["t", "sigma2"], np.arange(1, len(h) + 1), h)


# --- verb handlers -------------------------------------------------------------------

def cmd_fit(args, report):
    r = _read_returns(report, args)
    fit = _fit(r, args)
    report.results = {"fit": fit.to_dict(), "persistence": fit.params.persistence,
                      "unconditional_variance": volatility.unconditional_variance(fit.params),
                      "n": len(r)}
    report.plots = {"garch_variance": _variance_plot(fit.variance_path)}
    _require_converged(report, fit)


def cmd_forecast(args, report):
    r = _read_returns(report, args)
    fit = _fit(r, args)
    f = volatility.forecast_variance(fit, args.horizon)
    report.results = {"fit": fit.to_dict(), "horizon": args.horizon, "forecast": f}
    report.plots = {"forecast": (["h", "sigma2"], np.arange(1, len(f) + 1), f)}
    _require_converged(report, fit)


def cmd_var(args, report):
    r = _read_returns(report, args)
    m = args.method
    fit = None
    if m == "parametric_normal":
        st = summary_stats(r)
        if st.std is None:
            raise ValueError("series too short for parametric VaR")
        est = var.parametric_var(st.mean, st.std, args.level)
        est = var.VarEstimate(est.level, est.value, est.method, as_of_index=len(r) - 1)
    elif m == "historical":
        est = var.historical_var(r, args.level)
    else:
        if len(r) < 100:
            raise ValueError(f"series too short for {m} VaR: {len(r)} < 100")
        fit = _fit(r, args)
        if m == "fhs":
            est = var.fhs_var(r, fit, args.level)
        else:
            est = var.garch_evt_var(r, fit, args.level, args.threshold_quantile)
    report.results = {"var": est.to_dict()}
    if fit is not None:
        report.results["fit"] = fit.to_dict()
        report.plots = {"garch_variance": _variance_plot(fit.variance_path)}
        _require_converged(report, fit)


def cmd_backtest(args, report):
    r = _read_returns(report, args)
    m, level, window = args.method, args.level, args.window
    if len(r) <= window + 10:
        raise ValueError(f"window {window} too large for {len(r)} returns")
    fit = None
    if m == "parametric_normal":
        est = var.parametric_estimator(level)
    elif m == "historical":
        est = var.historical_estimator(level)
    else:
        if window < 100:
            raise ValueError(f"{m} backtest needs window >= 100")
        fit = _fit(r.returns[:window], args)
        est = (var.fhs_estimator(fit.params, level) if m == "fhs"
               else var.evt_estimator(fit.params, level, args.threshold_quantile))
    res = var.rolling_backtest(r, est, window, level, workers=args.workers)
    lo, hi = res.binomial_band()
    report.results = {"backtest": res.to_dict(), "expected_rate": res.expected_rate,
                      "binomial_band_95": [lo, hi], "window": window}
    log = res.log
    report.plots = {"violations": (["index", "return", "var_value", "violation"],
                                   log.index, log.returns, log.var_values, log.violations)}
    if fit is not None:
        report.results["fit"] = fit.to_dict()
        _require_converged(report, fit)


def cmd_simulate(args, report):
    p = simulation.GbmParams(args.s0, args.mu, args.sigma, args.dt, args.steps, args.paths, args.seed)
    est = simulation.monte_carlo_var(p, args.level, workers=args.workers)
    x = simulation.terminal_log_returns(p, workers=args.workers)
    report.results = {"var": est.to_dict(), "horizon_years": p.horizon,
                      "terminal_price_mean": float(p.s0 * np.mean(np.exp(x))),
                      "terminal_log_return_variance": float(np.var(x, ddof=1)) if len(x) > 1 else None}
    if args.plot_dir:
        k = min(args.dump_paths, p.n_paths)
        dump = simulation.GbmParams(p.s0, p.mu, p.sigma, p.dt, p.steps, k, p.seed)
        report.path_dump = simulation.simulate_gbm_paths(dump, workers=args.workers)


def cmd_ndc(args, report):
    report.inputs[args.params] = file_digest(args.params)
    params = chaos.load_ndc_params(args.params)
    r, h = chaos.simulate_ndc(params, args.n, args.seed)
    st = summary_stats(r)
    report.results = {"model": chaos.MODEL_LABEL, "params": params.to_dict(), "n": args.n,
                      "return_stats": st.__dict__,
                      "variance_mean": float(np.mean(h)), "variance_min": float(np.min(h)),
                      "variance_max": float(np.max(h))}
    report.plots = {"ndc_variance": _variance_plot(h),
                    "ndc_returns": (["t", "return"], np.arange(1, len(h) + 1), r.returns)}


def cmd_chaos(args, report):
    if args.params:
        report.inputs[args.params] = file_digest(args.params)
        params = chaos.load_ndc_params(args.params)
        d = chaos.divergence_diagnostic(params, args.eta, args.n, args.seed)
        pred = (d.predicted_divergence_time(args.eta, params.delta)
                if params.delta > 0 and d.lyapunov_estimate > 0 else None)
        report.results = {"model": chaos.MODEL_LABEL, "lyapunov_estimate": d.lyapunov_estimate,
                          "chaotic": d.chaotic, "eta": args.eta,
                          "divergence_time": d.divergence_time, "predicted_divergence_time": pred,
                          "target_gap": d.target_gap,
                          "divergence_times": [list(x) for x in d.divergence_times],
                          "clamp_count": d.clamp_count}
        report.plots = {"divergence": (["t", "gap"], np.arange(len(d.gap)), d.gap)}
    else:
        lam = chaos.lyapunov_exponent(args.r, args.x0, args.burn_in, args.n)
        report.results = {"r": args.r, "x0": args.x0, "lyapunov_estimate": lam,
                          "chaotic": bool(lam > 0)}


def cmd_beta(args, report):
    series = {}
    for attr in ("asset", "market"):
        path = getattr(args, attr)
        report.inputs[path] = file_digest(path)
        with open(path, "rb") as fh:
            series[attr] = load_price_series(fh, args.periods_per_year)
    a, m = series["asset"], series["market"]
    common, ia, im = np.intersect1d(a.dates, m.dates, return_indices=True)
    if len(common) < 2:
        raise ValueError("asset and market share fewer than 2 dates")
    pa, pm = a.prices[ia], m.prices[im]
    if args.returns_kind == "log":
        ra, rm = np.log(pa[1:] / pa[:-1]), np.log(pm[1:] / pm[:-1])
    else:
        ra, rm = pa[1:] / pa[:-1] - 1.0, pm[1:] / pm[:-1] - 1.0
    report.results = {"beta": capital.estimate_beta(ra, rm), "n": len(ra)}


def cmd_capm(args, report):
    inputs = capital.CapmInputs(args.rf, args.beta, args.mrp)
    report.results = {"cost_of_equity": capital.capm_cost_of_equity(inputs)}


def cmd_wacc(args, report):
    if args.structure:
        import json

        report.inputs[args.structure] = file_digest(args.structure)
        with open(args.structure, encoding="utf-8") as fh:
            s = capital.CapitalStructure.from_dict(json.load(fh))
    else:
        missing = [f"--{n}" for n in ("kd", "tax", "dv", "ke", "ev") if getattr(args, n) is None]
        if missing:
            raise UsageError(f"wacc: missing {', '.join(missing)} (or give --structure)")
        s = capital.CapitalStructure(args.kd, args.tax, args.dv, args.ke, args.ev, args.kp, args.pv)
    report.results = {"wacc": capital.wacc(s)}


def _schedule(args, report):
    report.inputs[args.input] = file_digest(args.input)
    return budgeting.load_cashflows(args.input, args.rate)


def cmd_npv(args, report):
    report.results = {"npv": budgeting.npv(_schedule(args, report)), "rate": args.rate}


def cmd_irr(args, report):
    s = _schedule(args, report)
    roots = budgeting.irr_roots(s)
    report.results = {"irr": budgeting.irr(s), "roots": list(roots.roots)}


def cmd_payback(args, report):
    s = _schedule(args, report)
    tau = budgeting.payback_period(s, discounted=args.discounted)
    if tau is None:
        warnings.warn("cumulative cashflow never recovers: no payback")
    report.results = {"payback_years": tau, "discounted": args.discounted, "rate": args.rate}


def cmd_arr(args, report):
    report.results = {"arr": budgeting.arr(_schedule(args, report)),
                      "definition": "cashflow proxy: mean post-investment flow / |initial investment|"}


def cmd_option(args, report):
    spec = budgeting.OptionSpec(args.spot, args.strike, args.rate, args.vol, args.maturity, args.kind)
    report.results = {"price": budgeting.black_scholes_price(spec), "kind": args.kind}


# --- parser ----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ndcrisk", description="Volatility, VaR, cost-of-capital and chaos toolkit.")
    sub = parser.add_subparsers(dest="verb", metavar="verb", parser_class=_Parser)

    def verb(name, handler, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(handler=handler)
        p.add_argument("--output", "-o", default="-", help="report path, '-' for stdout")
        p.add_argument("--plot-dir", default=None, help="directory for plot-ready CSV files")
        p.add_argument("--seed", type=_seed, default=42)
        return p

    def series_opts(p, fit=True):
        p.add_argument("--input", required=True, help="date,price CSV")
        p.add_argument("--returns-kind", choices=["log", "simple"], default="log")
        p.add_argument("--periods-per-year", type=_positive_int, default=252)
        if fit:
            p.add_argument("--tol", type=float, default=1e-8)
            p.add_argument("--max-iter", type=_positive_int, default=10_000)

    p = verb("fit", cmd_fit, "fit GARCH(1,1) by quasi-maximum likelihood")
    series_opts(p)
    p = verb("forecast", cmd_forecast, "fit GARCH(1,1) and forecast variance")
    series_opts(p)
    p.add_argument("--horizon", type=_positive_int, required=True)

    methods = ["parametric_normal", "historical", "fhs", "evt_gpd"]
    p = verb("var", cmd_var, "one-period Value-at-Risk")
    series_opts(p)
    p.add_argument("--method", choices=methods, required=True)
    p.add_argument("--level", type=_level, default=0.99)
    p.add_argument("--threshold-quantile", type=_fraction, default=0.90)

    p = verb("backtest", cmd_backtest, "rolling VaR backtest with Kupiec test")
    series_opts(p)
    p.add_argument("--method", choices=methods, required=True)
    p.add_argument("--level", type=_level, default=0.99)
    p.add_argument("--window", type=_positive_int, default=250)
    p.add_argument("--threshold-quantile", type=_fraction, default=0.90)
    p.add_argument("--workers", type=_positive_int, default=1)

    p = verb("simulate", cmd_simulate, "GBM Monte Carlo and Monte Carlo VaR")
    p.add_argument("--s0", type=float, default=100.0)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--sigma", type=float, default=0.2)
    p.add_argument("--dt", type=float, default=1 / 252)
    p.add_argument("--steps", type=_positive_int, default=252)
    p.add_argument("--paths", type=_positive_int, default=10_000)
    p.add_argument("--level", type=_level, default=0.99)
    p.add_argument("--dump-paths", type=_positive_int, default=100, help="paths written to paths.csv")
    p.add_argument("--workers", type=_positive_int, default=1)

    p = verb("ndc", cmd_ndc, "simulate the exploratory NDC volatility model")
    p.add_argument("--params", required=True, help="NDC parameter JSON")
    p.add_argument("--n", type=_positive_int, default=1000)

    p = verb("chaos", cmd_chaos, "Lyapunov exponent or NDC divergence diagnostic")
    p.add_argument("--r", type=float, default=4.0)
    p.add_argument("--x0", type=float, default=chaos.DEFAULT_X0)
    p.add_argument("--burn-in", type=int, default=1000)
    p.add_argument("--n", type=_positive_int, default=100_000)
    p.add_argument("--params", default=None, help="NDC parameter JSON: run the divergence diagnostic")
    p.add_argument("--eta", type=float, default=1e-8)

    p = verb("beta", cmd_beta, "CAPM beta from two price files")
    p.add_argument("--asset", required=True)
    p.add_argument("--market", required=True)
    p.add_argument("--returns-kind", choices=["log", "simple"], default="simple")
    p.add_argument("--periods-per-year", type=_positive_int, default=252)

    p = verb("capm", cmd_capm, "CAPM cost of equity")
    p.add_argument("--rf", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--mrp", type=float, required=True)

    p = verb("wacc", cmd_wacc, "weighted average cost of capital")
    for name in ("kd", "tax", "dv", "ke", "ev"):
        p.add_argument(f"--{name}", type=float, default=None)
    p.add_argument("--kp", type=float, default=0.0)
    p.add_argument("--pv", type=float, default=0.0)
    p.add_argument("--structure", default=None, help="JSON with kd, tax_rate, d_v, ke, e_v, kp, p_v")

    for name, handler, text in (("npv", cmd_npv, "net present value"),
                                ("irr", cmd_irr, "internal rate of return"),
                                ("payback", cmd_payback, "simple or discounted payback period"),
                                ("arr", cmd_arr, "accounting rate of return (cashflow proxy)")):
        p = verb(name, handler, text)
        p.add_argument("--input", required=True, help="time,amount CSV")
        p.add_argument("--rate", type=float, default=0.0)
        if name == "payback":
            p.add_argument("--discounted", action="store_true")

    p = verb("option", cmd_option, "Black-Scholes option price")
    p.add_argument("--spot", type=float, required=True)
    p.add_argument("--strike", type=float, required=True)
    p.add_argument("--rate", type=float, default=0.0)
    p.add_argument("--vol", type=float, required=True)
    p.add_argument("--maturity", type=float, required=True)
    p.add_argument("--kind", choices=["call", "put"], default="call")
    return parser


def _write_outputs(report: Report, args) -> None:
    text = report.to_json()
    if args.output == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        Path(args.output).write_text(text)
    if args.plot_dir:
        if report.plots:
            emit_plot_data(report.plots, args.plot_dir)
        dump = report.path_dump
        if dump is not None:
            Path(args.plot_dir).mkdir(parents=True, exist_ok=True)
            simulation.write_paths_csv(dump, Path(args.plot_dir) / "paths.csv")


def run_command(argv) -> int:
    """Parse ``argv``, run the verb and write its report. Returns the exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
        if args.verb is None:
            raise UsageError(parser.format_usage())
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE

    options = {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_ECHOED}
    report = Report(args.verb, options, seed=args.seed)
    status = EXIT_OK
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            args.handler(args, report)
        except UsageError as exc:
            sys.stderr.write(f"{exc}\n")
            return EXIT_USAGE
        except NumericalFailure:
            status = EXIT_NUMERIC
        except (ConvergenceError, ArithmeticError, RuntimeError) as exc:
            report.error = f"numerical failure: {exc}"
            status = EXIT_NUMERIC
        except (ValueError, KeyError, TypeError, OSError) as exc:
            sys.stderr.write(f"ndcrisk {args.verb}: {_describe(exc)}\n")
            return EXIT_DATA
        except Exception as exc:  # never let a traceback escape
            report.error = f"internal failure: {type(exc).__name__}: {exc}"
            status = EXIT_NUMERIC
    report.warnings = [str(w.message) for w in caught]

    try:
        _write_outputs(report, args)
    except OSError as exc:
        sys.stderr.write(f"ndcrisk {args.verb}: cannot write output: {exc}\n")
        return EXIT_DATA
    if report.error:
        sys.stderr.write(f"ndcrisk {args.verb}: {report.error}\n")
    return status


def _describe(exc: Exception) -> str:
    if isinstance(exc, KeyError):
        return f"missing field {exc}"
    if isinstance(exc, OSError) and exc.filename:
        return f"{exc.strerror}: {exc.filename}"
    return str(exc)


def main(argv=None) -> None:
    sys.exit(run_command(sys.argv[1:] if argv is None else argv))


if __name__ == "__main__":
    main()
