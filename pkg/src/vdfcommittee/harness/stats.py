"""Tail bounds used to size trial budgets and justify tolerances."""

from __future__ import annotations

import math

from scipy import stats as _st

from ..errors import ConfigurationError

__all__ = ["chernoff_band", "binomial_upper", "binomial_lower", "zero_failure_bound"]


def chernoff_band(P: float, gamma: float) -> tuple[float, float]:
    """Multiplicative Chernoff bounds for a sum of independent Bernoullis with mean ``P``.

    Returns ``(exp(-gamma^2 P / 3), exp(-gamma^2 P / 2))``: bounds on
    ``Pr[X >= (1 + gamma) P]`` and ``Pr[X <= (1 - gamma) P]``.
    """
    if not 0 < gamma <= 1:
        raise ConfigurationError(f"gamma must lie in (0, 1], got {gamma}")
    if not P > 0:
        raise ConfigurationError(f"expected sum P must be positive, got {P}")
    return math.exp(-gamma * gamma * P / 3), math.exp(-gamma * gamma * P / 2)


def binomial_upper(successes: int, trials: int, alpha: float = 0.01) -> float:
    """One-sided Clopper-Pearson upper confidence limit on a success probability."""
    if trials <= 0:
        raise ConfigurationError("trials must be positive")
    if successes >= trials:
        return 1.0
    return float(_st.beta.ppf(1 - alpha, successes + 1, trials - successes))


def binomial_lower(successes: int, trials: int, alpha: float = 0.01) -> float:
    """One-sided Clopper-Pearson lower confidence limit on a success probability."""
    if trials <= 0:
        raise ConfigurationError("trials must be positive")
    if successes <= 0:
        return 0.0
    return float(_st.beta.ppf(alpha, successes, trials - successes + 1))


def zero_failure_bound(trials: int, alpha: float = 0.05) -> float:
    """Failure rate ruled out at level ``alpha`` by observing zero failures: 1 - alpha^(1/trials)."""
    if trials <= 0:
        raise ConfigurationError("trials must be positive")
    return 1 - alpha ** (1 / trials)
