"""
ndcrisk: conditional volatility, Value-at-Risk, cost of capital, capital
budgeting and an exploratory chaos-driven volatility model.
"""

from .budgeting import (CashflowSchedule, IrrResult, OptionSpec, arr, black_scholes_price, irr,
                        irr_roots, load_cashflows, npv, payback_period)
from .capital import CapitalStructure, CapmInputs, capm_cost_of_equity, estimate_beta, wacc
from .chaos import (ChaosDiagnostics, Cycle, NdcParams, ProbeResult, cycle_interaction_signal,
                    divergence_diagnostic, gaussian_var_probe, load_ndc_params, logistic_orbit,
                    lyapunov_exponent, ndc_variance_path, simulate_ndc)
from .exceptions import ConvergenceError, NotPositiveSemidefinite, RiskWarning
from .market_data import (PriceSeries, ReturnSeries, SeriesStats, load_price_series,
                          summary_stats, to_returns)
from .simulation import GbmParams, monte_carlo_var, simulate_gbm_paths, terminal_log_returns
from .var import (BacktestResult, PortfolioSpec, RiskCategory, VarEstimate, VarMethod,
                  aggregate_portfolio_sigma, component_var, empirical_quantile, evt_var,
                  fhs_var, fit_gpd_tail, garch_evt_var, historical_var, kupiec_test,
                  parametric_var, rolling_backtest)
from .volatility import (EwmaParams, FitConfig, GarchFit, GarchParams, ewma_variance_path,
                         filter_garch, fit_garch, forecast_variance, garch_log_likelihood,
                         garch_variance_path, simulate_garch, unconditional_variance)

__version__ = "0.1.0"
