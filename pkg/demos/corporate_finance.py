"""
Cost of capital and project appraisal
=====================================
"""

import numpy as np

from ndcrisk import (CapitalStructure, CapmInputs, CashflowSchedule, OptionSpec, arr,
                     black_scholes_price, capm_cost_of_equity, estimate_beta, irr, npv,
                     payback_period, wacc)

# beta of a stock that moves 1.3x with the market plus its own noise
rng = np.random.default_rng(0)
market = 0.01 * rng.standard_normal(1000)
stock = 1.3 * market + 0.008 * rng.standard_normal(1000)
beta = estimate_beta(stock, market)
print("beta:", beta)

ke = capm_cost_of_equity(CapmInputs(rf=0.03, beta=beta, mrp=0.05))
print("cost of equity:", ke)

mix = CapitalStructure(kd=0.06, tax_rate=0.30, d_v=0.4, ke=ke, e_v=0.5, kp=0.08, p_v=0.1)
rate = wacc(mix)
print("WACC:", rate)

project = CashflowSchedule.from_amounts([-1000, 250, 300, 350, 400, 200], discount_rate=rate)
print("NPV:", npv(project))
print("IRR:", irr(project))
print("payback (simple, discounted):", payback_period(project), payback_period(project, discounted=True))
print("ARR (cashflow proxy):", arr(project))

# option to defer: a call on the project value struck at the outlay
print("option value:", black_scholes_price(OptionSpec(spot=1200, strike=1000, rate=0.03,
                                                      volatility=0.35, maturity=2.0)))
