"""Law of one walk's survival contribution given its fork and end times.

A walk forked at ``tau_f`` first reaches a random node after an Exp(mu)
delay, then returns at Exp(lambda) gaps until it ends at ``tau_t``.  The
functions below give the CDF, mean and variance of ``exp(-lambda (t - L))``
where ``L`` is its last visit (contribution 0 if it never arrived).
Pass ``tau_f = -inf`` for a walk active since forever.
"""
from __future__ import annotations

import math

from ..errors import ConfigError


def _check(t, tau_f, tau_t, lambda_r, mu_h):
    if lambda_r <= 0 or mu_h <= 0:
        raise ConfigError("rates must be positive")
    tau_t = min(tau_t, t)
    if tau_f > tau_t:
        raise ConfigError("require tau_f <= tau_t")
    return tau_t


def forked_cdf(x: float, t: float, tau_f: float, tau_t: float, lambda_r: float, mu_h: float) -> float:
    tau_t = _check(t, tau_f, tau_t, lambda_r, mu_h)
    if x < 0:
        return 0.0
    top = math.exp(-lambda_r * (t - tau_t))
    if x > top:
        return 1.0
    atom = math.exp(-mu_h * (tau_t - tau_f))
    bottom = math.exp(-lambda_r * (t - tau_f))
    if x < bottom or x == 0.0:
        return atom
    ratio = math.exp(-mu_h * (t - tau_f) - (mu_h / lambda_r) * math.log(x))
    return x * (1.0 - ratio) / top + atom


def _exp_diff(a: float, b: float, w: float) -> float:
    """(exp(-a w) - exp(-b w)) / (b - a), continuous at a == b."""
    if math.isinf(w):
        return 0.0
    s = abs(b - a)
    g = -math.expm1(-s * w) / s if s * w > 1e-300 and s > 0 else w
    return math.exp(-min(a, b) * w) * g


def forked_mean(t: float, tau_f: float, tau_t: float, lambda_r: float, mu_h: float) -> float:
    tau_t = _check(t, tau_f, tau_t, lambda_r, mu_h)
    c = math.exp(-lambda_r * (t - tau_t))
    w = tau_t - tau_f
    atom = math.exp(-mu_h * w)
    e2 = math.exp(-2 * lambda_r * w)
    return max(0.0, c * (0.5 - atom + e2 / 2 + lambda_r * _exp_diff(mu_h, 2 * lambda_r, w)))


def forked_second_moment(t: float, tau_f: float, tau_t: float, lambda_r: float, mu_h: float) -> float:
    tau_t = _check(t, tau_f, tau_t, lambda_r, mu_h)
    c = math.exp(-lambda_r * (t - tau_t))
    w = tau_t - tau_f
    atom = math.exp(-mu_h * w)
    e3 = math.exp(-3 * lambda_r * w)
    return c * c * (1 / 3 - atom + 2 * e3 / 3 + 2 * lambda_r * _exp_diff(mu_h, 3 * lambda_r, w))


def forked_var_integrated(t: float, tau_f: float, tau_t: float, lambda_r: float, mu_h: float) -> float:
    """Variance obtained by integrating :func:`forked_cdf`; finite for every rate pair."""
    mean = forked_mean(t, tau_f, tau_t, lambda_r, mu_h)
    return max(0.0, forked_second_moment(t, tau_f, tau_t, lambda_r, mu_h) - mean * mean)


def forked_var(t: float, tau_f: float, tau_t: float, lambda_r: float, mu_h: float) -> float:
    """Closed-form variance, evaluated exactly as written.

    Rewritten in the elapsed times ``t - tau_t`` and ``tau_t - tau_f`` so it
    does not overflow; algebraically identical to the absolute-time form.
    It disagrees with :func:`forked_var_integrated` in the sign of its
    ``3 (lambda - mu) exp(-mu (tau_t - tau_f))`` term, so it is not used by
    the bounds unless requested.
    """
    tau_t = _check(t, tau_f, tau_t, lambda_r, mu_h)
    lam, mu = lambda_r, mu_h
    if math.isclose(mu, 2 * lam, rel_tol=1e-12) or math.isclose(mu, 3 * lam, rel_tol=1e-12):
        raise ConfigError("forked_var is singular at mu = 2 lambda and mu = 3 lambda")
    u = t - tau_t
    w = tau_t - tau_f
    em = math.exp(-mu * w)
    e2 = math.exp(-2 * lam * w)
    e3 = math.exp(-3 * lam * w)
    k = 2 * em * (lam - mu) + mu * e2 + mu - 2 * lam
    second = (2 * mu * e3 + (mu - 3 * lam) - 3 * (lam - mu) * em) / (3 * (mu - 3 * lam))
    return math.exp(-2 * lam * u) * (second - k * k / (4 * (mu - 2 * lam) ** 2))


def forked_var_absolute(t: float, tau_f: float, tau_t: float, lambda_r: float, mu_h: float) -> float:
    """The printed variance expression in absolute times (overflows for large ``t``)."""
    lam, mu = lambda_r, mu_h
    tt, tf = min(tau_t, t), tau_f
    exp = math.exp
    k = 2 * exp(mu * (tf - tt)) * (lam - mu) + mu * exp(2 * lam * (tf - tt)) + mu - 2 * lam
    first = 3 * (-mu + 3 * lam) * k ** 2 * exp((mu + lam) * tt + 2 * lam * t)
    second = 4 * (mu - 2 * lam) ** 2 * exp(2 * lam * (t - tt)) * (
        2 * mu * exp(mu * tt + 3 * tf * lam)
        + (mu - 3 * lam) * exp(tt * (mu + 3 * lam))
        - (lam - mu) * 3 * exp(mu * tf + 3 * lam * tt)
    )
    pref = exp(tt * (lam - mu) - 4 * lam * t) / (12 * (mu - 3 * lam) * (mu - 2 * lam) ** 2)
    return pref * (first + second)
