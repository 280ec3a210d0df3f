"""Running sufficient statistics, the optimum estimator, and the decision rule.

Everything observable about the pair stream ``(y_t, h_t)`` that the estimator
and detector need is carried by the triple ``(t, U, V)`` with
``U = sum h_s^2`` (accumulated channel energy) and ``V = sum y_s h_s``
(correlation of observations with gains).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import CostWeights, Hypothesis, ModelParams


@dataclass(frozen=True)
class SufficientStats:
    """Sample count plus the two running sums that summarize the history."""

    t: int
    U: float
    V: float


def init() -> SufficientStats:
    """Empty-history state: no samples, zero energy, zero correlation."""
    return SufficientStats(t=0, U=0.0, V=0.0)


def update(s: SufficientStats, y: float, h: float) -> SufficientStats:
    """Fold one observation pair into the running sums."""
    if not (math.isfinite(y) and math.isfinite(h)):
        raise ValueError(f"observation pair must be finite, got y={y!r}, h={h!r}")
    return SufficientStats(t=s.t + 1, U=s.U + h * h, V=s.V + y * h)


def estimate(s: SufficientStats, p: ModelParams) -> float:
    """Posterior-mean amplitude estimate (V + mu_x*kappa) / (U + kappa).

    Shrinks the empirical ratio V/U toward the prior mean; with no data it
    returns mu_x, and for large energy it approaches V/U.
    """
    k = p.kappa
    return (s.V + p.mu_x * k) / (s.U + k)


def posterior_variance(s: SufficientStats, p: ModelParams) -> float:
    """Conditional variance of the amplitude given the history: sigma^2 / (U + kappa)."""
    return p.sigma**2 / (s.U + p.kappa)


def log_likelihood_ratio(s: SufficientStats, p: ModelParams) -> float:
    """Log of the marginal likelihood ratio of the y-history given the gains.

    The amplitude is integrated out against its Gaussian prior, leaving
    ``0.5*ln(kappa/(U+kappa)) + (V + mu_x*kappa)^2 / (2*sigma^2*(U+kappa))
    - mu_x^2 / (2*sigma_x^2)``.  Kept in the log domain because the quadratic
    term grows without bound with the accumulated energy.
    """
    k = p.kappa
    a = s.U + k
    num = s.V + p.mu_x * k
    return 0.5 * math.log(k / a) + num * num / (2.0 * p.sigma**2 * a) \
        - p.mu_x**2 / (2.0 * p.sigma_x**2)


def decide(s: SufficientStats, p: ModelParams, c: CostWeights) -> Hypothesis:
    """Estimation-aware decision rule.

    Accepts the alternative exactly when ``c0 <= L * (c1 + ce * xhat^2)``
    with ``L`` the marginal likelihood ratio and ``xhat`` the optimum
    estimate, evaluated in the log domain.  Equality decides H1.  When the
    weight ``c1 + ce*xhat^2`` vanishes the rule degenerates: H0 if c0 > 0,
    H1 if c0 = 0.
    """
    xhat = estimate(s, p)
    weight = c.c1 + c.ce * xhat * xhat
    if weight == 0.0:
        return Hypothesis.H1 if c.c0 == 0.0 else Hypothesis.H0
    if c.c0 == 0.0:
        return Hypothesis.H1
    if math.log(c.c0) <= log_likelihood_ratio(s, p) + math.log(weight):
        return Hypothesis.H1
    return Hypothesis.H0
