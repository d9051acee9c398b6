"""Closed-form stopping-time tail bounds and their constants.

All logarithms are natural.  The combined bound is only established for
growth factor ``beta = 1/16``, which pins ``kappa = 15**2`` and
``C' = 60 / log(17/16)``; the per-phase bounds accept any ``beta`` in
``(0, 1/8)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

DEFAULT_BETA = 1.0 / 16.0
KAPPA = 15.0**2
C_PRIME = 60.0 / math.log(17.0 / 16.0)


class BoundInapplicable(ValueError):
    """The requested time lies below the range where the bound is proven."""


def _check_beta(beta: float) -> float:
    if not (0.0 < beta < 1.0 / 8.0):
        raise ValueError(f"beta must lie in (0, 1/8), got {beta}")
    return float(beta)


def p_beta(beta: float) -> float:
    """Per-step probability of growing the volume by a factor ``1 + beta``."""
    beta = _check_beta(beta)
    return 1.0 - 7.0 / (8.0 * (1.0 - beta))


def i_star_direct(epsilon: float, beta: float) -> int:
    """Smallest ``i`` with ``epsilon * (1 + beta)**i >= 1/2``, by search."""
    i, level = 0, epsilon
    while level < 0.5:
        level *= 1.0 + beta
        i += 1
    return max(i, 1)


def i_star(epsilon: float, beta: float) -> int:
    """Number of geometric levels between ``epsilon`` and 1/2.

    The ceiling formula is corrected by one step when rounding lands it on
    the wrong side of the defining inequality.
    """
    beta = _check_beta(beta)
    if not (0.0 < epsilon < 0.5):
        raise ValueError(f"epsilon must lie in (0, 1/2), got {epsilon}")
    i = max(1, math.ceil(math.log(1.0 / (2.0 * epsilon)) / math.log1p(beta)))
    while epsilon * (1.0 + beta) ** i < 0.5:
        i += 1
    while i > 1 and epsilon * (1.0 + beta) ** (i - 1) >= 0.5:
        i -= 1
    return i


def tau1_threshold(epsilon: float, beta: float) -> float:
    """``i*/p_beta``, written as ``i* 8(1 - beta)/(1 - 8 beta)`` to stay exact at beta = 1/16."""
    beta = _check_beta(beta)
    return i_star(epsilon, beta) * 8.0 * (1.0 - beta) / (1.0 - 8.0 * beta)


def _below(t: float, start: float) -> bool:
    return t < start * (1.0 - 1e-12)


def tau1_tail_bound(t: float, epsilon: float, beta: float = DEFAULT_BETA) -> float:
    """Lower bound on ``Pr[tau1 <= t]``, valid for ``t >= i*/p_beta``."""
    p = p_beta(beta)
    start = tau1_threshold(epsilon, beta)
    if _below(t, start):
        raise BoundInapplicable(f"tau1 bound needs t >= {start:.6g}, got {t}")
    return 1.0 - math.exp(-2.0 * p * p / t * max(t - start, 0.0) ** 2)


def tau2_tail_bound(t: float, epsilon: float) -> float:
    """Lower bound on ``Pr[tau2 <= t]``; negative (vacuous) for small ``t``."""
    if not t > 0:
        raise BoundInapplicable(f"tau2 bound needs t > 0, got {t}")
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    return 1.0 - (7.0 / 8.0) ** t / epsilon


def tau2_positive_from(epsilon: float) -> float:
    """Time from which the tau2 bound is non-negative."""
    return math.log(1.0 / epsilon) / math.log(8.0 / 7.0)


def tau_combined_threshold(epsilon: float) -> float:
    """Smallest time at which the combined bound is claimed.

    Both the stated condition ``t >= C' log(1/eps)`` and the entry condition
    of the tau1 bound at ``t/2`` must hold.
    """
    return max(C_PRIME * math.log(1.0 / epsilon), 2.0 * tau1_threshold(epsilon, DEFAULT_BETA))


def _check_combined(t: float, epsilon: float) -> None:
    if not (0.0 < epsilon < 1.0 / 3.0):
        raise ValueError(f"epsilon must lie in (0, 1/3), got {epsilon}")
    start = tau_combined_threshold(epsilon)
    if _below(t, start):
        raise BoundInapplicable(f"combined bound needs t >= {start:.6g}, got {t}")


def tau_combined_bound(t: float, epsilon: float) -> float:
    """Lower bound on ``Pr[tau <= t]`` with the constants ``kappa`` and ``C'``."""
    _check_combined(t, epsilon)
    shift = C_PRIME * math.log(1.0 / epsilon)
    return 1.0 - 2.0 * math.exp(-((t - shift) ** 2) / (KAPPA * t))


def tau_split_bound(t: float, epsilon: float) -> float:
    """Union bound over the two phases, each given ``t/2`` steps.

    This is the tighter intermediate expression that the combined bound
    relaxes; it always dominates :func:`tau_combined_bound` where both apply.
    """
    _check_combined(t, epsilon)
    p = p_beta(DEFAULT_BETA)
    first = math.exp(-p * p / t * (t - 2.0 * tau1_threshold(epsilon, DEFAULT_BETA)) ** 2)
    second = (7.0 / 8.0) ** (t / 2.0) / epsilon
    return 1.0 - first - second


@dataclass(frozen=True)
class BoundParams:
    beta: float
    p_beta: float
    i_star: int
    kappa: float
    c_prime: float

    @classmethod
    def for_epsilon(cls, epsilon: float, beta: float = DEFAULT_BETA) -> BoundParams:
        return cls(beta, p_beta(beta), i_star(epsilon, beta), KAPPA, C_PRIME)


def wilson_interval(successes: int, n: int, confidence: float = 0.99) -> tuple[float, float]:
    """Two-sided Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise ValueError("need at least one trial")
    z = NormalDist().inv_cdf(0.5 + confidence / 2.0)
    phat = successes / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    return min(phat, max(0.0, center - half)), max(phat, min(1.0, center + half))
