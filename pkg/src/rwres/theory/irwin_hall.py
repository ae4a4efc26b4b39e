"""Irwin-Hall law (sum of iid U(0,1)) and threshold design on top of it."""
from __future__ import annotations

import math
from fractions import Fraction

from scipy.optimize import bisect

from ..errors import ConfigError

MAX_TERMS = 64


def _lower_exact(m: int, s: float) -> float:
    q = Fraction(s)
    a, b = q.numerator, q.denominator
    total = 0
    for k in range(int(math.floor(s)) + 1):
        d = a - k * b
        if d <= 0:
            break
        total += (-1) ** k * math.comb(m, k) * d ** m
    return float(Fraction(total, b ** m * math.factorial(m)))


def _lower(m: int, s: float) -> float:
    terms = []
    for k in range(int(math.floor(s)) + 1):
        d = s - k
        if d <= 0.0:
            break
        log_term = m * math.log(d) - math.lgamma(k + 1) - math.lgamma(m - k + 1)
        terms.append(math.exp(log_term) if k % 2 == 0 else -math.exp(log_term))
    value = math.fsum(terms)
    # each term carries a relative rounding error; redo exactly if cancellation could show
    err = 4 * m * 2.2e-16 * max((abs(x) for x in terms), default=0.0)
    if err > 1e-14 * abs(value):
        return _lower_exact(m, s)
    return value


def irwin_hall_cdf(m: int, sigma: float) -> float:
    """P(U_1 + ... + U_m <= sigma) for iid uniforms on (0, 1).

    Alternating sum with log-domain terms and exact (fsum) accumulation,
    evaluated on whichever side of the mean keeps the cancellation small.
    ``m = 0`` is the point mass at zero.
    """
    if m < 0:
        raise ConfigError("m must be >= 0")
    if m > MAX_TERMS:
        raise ConfigError(f"m > {MAX_TERMS} is not supported")
    if m == 0:
        return 1.0 if sigma >= 0 else 0.0
    if sigma <= 0:
        return 0.0
    if sigma >= m:
        return 1.0
    if sigma > m / 2:
        value = 1.0 - _lower(m, m - sigma)
    else:
        value = _lower(m, sigma)
    return min(1.0, max(0.0, value))


def scaled_failed_cdf(k_t: int, sigma: float, lambda_r: float, elapsed: float) -> float:
    """CDF of the summed survival of ``k_t`` walks that died ``elapsed`` steps ago."""
    if k_t < 1:
        raise ConfigError("k_t must be >= 1")
    if elapsed < 0:
        raise ConfigError("elapsed must be >= 0")
    return irwin_hall_cdf(k_t, sigma * math.exp(lambda_r * elapsed))


def design_thresholds(z0: int, delta_star: float, tol: float = 1e-12) -> tuple[float, float]:
    """Fork and termination thresholds whose false-trigger probability at ``z0`` walks is ``delta_star``."""
    if not 0.0 < delta_star < 0.5:
        raise ConfigError("delta_star must lie in (0, 1/2)")
    if z0 < 2:
        raise ConfigError("threshold design needs z0 >= 2")
    m = z0 - 1
    low = bisect(lambda s: irwin_hall_cdf(m, s) - delta_star, 0.0, m / 2, xtol=tol)
    high = bisect(lambda s: 1.0 - irwin_hall_cdf(m, s) - delta_star, m / 2, float(m), xtol=tol)
    return low + 0.5, high + 0.5
