"""
GARCH volatility and four VaR estimators
========================================

Simulate a GARCH(1,1) return series, fit it back, then compare the one-day
99% VaR from four methods and backtest two of them.
"""

import numpy as np

from ndcrisk import (GarchParams, fhs_var, fit_garch, forecast_variance, garch_evt_var,
                     historical_var, kupiec_test, parametric_var, rolling_backtest, simulate_garch)
from ndcrisk.var import fhs_estimator, historical_estimator

# daily returns with about 1% volatility and strong clustering
true = GarchParams(omega=2e-6, alpha=0.08, beta=0.90)
r, h = simulate_garch(true, 3000, seed=42)
print("sample std of returns:", r.returns.std(ddof=1))

fit = fit_garch(r)
print("fitted:", fit.to_dict())
print("persistence:", fit.params.persistence)

# ten-day variance forecast, decaying toward omega / (1 - alpha - beta)
print("forecast sigma:", np.sqrt(forecast_variance(fit, 10)))

level = 0.99
print("parametric:", parametric_var(r.returns.mean(), r.returns.std(ddof=1), level).value)
print("historical:", historical_var(r, level).value)
print("FHS:       ", fhs_var(r, fit, level).value)
print("EVT (GPD): ", garch_evt_var(r, fit, level).value)

# walk-forward backtests on a 500-day window
window = 500
for name, est in (("historical", historical_estimator(level)),
                  ("FHS", fhs_estimator(fit_garch(r.returns[:window]).params, level))):
    res = rolling_backtest(r, est, window, level)
    lo, hi = res.binomial_band()
    print(f"{name:>10}: {res.violations} violations in {res.n} days "
          f"(95% band {lo}-{hi}), Kupiec p = {res.p_value:.3f}")

# a calibrated model should see about 1% violations
print(kupiec_test(25, 2500, level).to_dict())
