"""Compiled inner loops for the sequential recursions.

Kept free of fastmath so results are IEEE-exact and reproducible.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def garch_path(eps, omega, alpha, beta, h1):
    n = eps.shape[0]
    h = np.empty(n)
    h[0] = h1
    for t in range(1, n):
        e = eps[t - 1]
        h[t] = omega + alpha * (e * e) + beta * h[t - 1]
    return h


@njit(cache=True)
def garch_loglik(eps, h):
    total = 0.0
    for t in range(eps.shape[0]):
        total += np.log(h[t]) + eps[t] * eps[t] / h[t]
    return -0.5 * (eps.shape[0] * np.log(2.0 * np.pi) + total)


@njit(cache=True)
def garch_loglik_grad(eps, omega, alpha, beta, h1, dh1):
    # dh1: derivative of the seed variance wrt (omega, alpha, beta, mu)
    n = eps.shape[0]
    grad = np.zeros(4)
    dh = dh1.copy()
    h = h1
    for t in range(n):
        if t > 0:
            e = eps[t - 1]
            new = np.empty(4)
            new[0] = 1.0 + beta * dh[0]
            new[1] = e * e + beta * dh[1]
            new[2] = h + beta * dh[2]
            new[3] = -2.0 * alpha * e + beta * dh[3]
            h = omega + alpha * (e * e) + beta * h
            dh = new
        w = 1.0 / h - eps[t] * eps[t] / (h * h)
        for j in range(4):
            grad[j] += -0.5 * w * dh[j]
        grad[3] += eps[t] / h
    return grad


@njit(cache=True)
def garch_simulate(z, omega, alpha, beta, h1):
    n = z.shape[0]
    h = np.empty(n)
    eps = np.empty(n)
    h[0] = h1
    eps[0] = np.sqrt(h1) * z[0]
    for t in range(1, n):
        e = eps[t - 1]
        h[t] = omega + alpha * (e * e) + beta * h[t - 1]
        eps[t] = np.sqrt(h[t]) * z[t]
    return h, eps


@njit(cache=True)
def logistic_orbit(r, x0, n):
    x = np.empty(n)
    clamps = 0
    v = x0
    for k in range(n):
        x[k] = v
        v = r * v * (1.0 - v)
        if v < 0.0:
            v = 0.0
            clamps += 1
        elif v > 1.0:
            v = 1.0
            clamps += 1
    return x, clamps


@njit(cache=True)
def lyapunov_sum(r, x0, burn_in, n, kick):
    """Sum of ln|f'(x)| along the orbit; returns (sum, perturbations, hit_zero_derivative)."""
    v = x0
    kicks = 0
    for _ in range(burn_in):
        nxt = r * v * (1.0 - v)
        if nxt == v:
            nxt = v + kick if v + kick < 1.0 else v - kick
            kicks += 1
        v = min(max(nxt, 0.0), 1.0)
    total = 0.0
    for _ in range(n):
        d = abs(r * (1.0 - 2.0 * v))
        if d == 0.0:
            return -np.inf, kicks, True
        total += np.log(d)
        nxt = r * v * (1.0 - v)
        if nxt == v:
            nxt = v + kick if v + kick < 1.0 else v - kick
            kicks += 1
        v = min(max(nxt, 0.0), 1.0)
    return total, kicks, False


@njit(cache=True)
def ndc_path(eps, omega, alpha, beta, h1, cyc, chaos, gamma, delta, floor):
    # cyc[t] = |C_t|, chaos[t] = x_t, both aligned with the output
    n = eps.shape[0]
    h = np.empty(n)
    h[0] = max(h1 + gamma * cyc[0] + delta * chaos[0], floor)
    for t in range(1, n):
        e = eps[t - 1]
        h[t] = max(omega + alpha * (e * e) + beta * h[t - 1] + gamma * cyc[t] + delta * chaos[t], floor)
    return h


@njit(cache=True)
def ndc_simulate(z, omega, alpha, beta, h1, cyc, chaos, gamma, delta, floor):
    n = z.shape[0]
    h = np.empty(n)
    eps = np.empty(n)
    h[0] = max(h1 + gamma * cyc[0] + delta * chaos[0], floor)
    eps[0] = np.sqrt(h[0]) * z[0]
    for t in range(1, n):
        e = eps[t - 1]
        h[t] = max(omega + alpha * (e * e) + beta * h[t - 1] + gamma * cyc[t] + delta * chaos[t], floor)
        eps[t] = np.sqrt(h[t]) * z[t]
    return h, eps
