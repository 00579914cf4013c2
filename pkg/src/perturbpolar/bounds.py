"""Upper bounds on uncorrected-error probabilities and their Monte Carlo check.

All tail probabilities use the normalized Gaussian Q function.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, log_ndtr, ndtri

EPS = 1e-9
_SQRT_HALF_PI = math.sqrt(math.pi / 2.0)


@dataclass(frozen=True)
class BoundResult:
    value: float
    argmin_s: float
    raw_value: float


@dataclass(frozen=True)
class McEstimate:
    estimate: float
    std_error: float
    ci_low: float
    ci_high: float
    conditioned: int


def q_function(x):
    """Standard normal upper tail ``P(Z > x)``."""
    out = 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    return float(out) if out.ndim == 0 else out


def _minimize_exp_bound(prefactor: float, rate: float) -> BoundResult:
    """``inf_{0<s<1/2} 1/2 + s + prefactor * exp(-rate * s)``.

    The objective is convex in ``s``; its stationary point is
    ``ln(rate * prefactor) / rate``, clamped into ``[EPS, 1/2 - EPS]``.
    """
    if not rate > 0:
        raise ValueError("rate must be positive")
    # logs keep rate * prefactor from overflowing at astronomically large N
    s = (math.log(rate) + math.log(prefactor)) / rate if prefactor > 0 else EPS
    s = min(max(s, EPS), 0.5 - EPS)
    raw = 0.5 + s + prefactor * math.exp(-rate * s)
    return BoundResult(min(raw, 1.0), s, raw)


def prop3_bound(mu: float, sigma_L: float) -> BoundResult:
    """Bound on ``P(L + n < 0 | L < 0)`` for ``L ~ N(mu, 2 mu)``, ``n ~ N(0, sigma_L^2)``."""
    if mu <= 0 or sigma_L <= 0:
        raise ValueError("mu and sigma_L must be positive")
    return _minimize_exp_bound((2.0 + mu) / math.sqrt(2.0 * mu), _SQRT_HALF_PI * sigma_L)


def lemma1_bound(N: int, sigma2: float, gamma: float, alpha: float) -> BoundResult:
    """Bound on keeping the same first error position after one perturbation.

    Uses the worst-case noise scale ``N**((gamma - alpha) / 2)`` and the
    prefactor ``2 N / sigma2``.
    """
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    return _minimize_exp_bound(2.0 * N / sigma2, _SQRT_HALF_PI * N ** ((gamma - alpha) / 2.0))


def prop2_sigma_floor(N: int, gamma: float, alpha: float) -> float:
    return float(N) ** (gamma - alpha)


def grid_minimize(prefactor: float, rate: float, points: int = 10_000) -> tuple[float, float]:
    """Brute-force ``(min value, argmin)`` over an interior grid of ``(0, 1/2)``."""
    s = np.linspace(0.0, 0.5, points + 2)[1:-1]
    vals = 0.5 + s + prefactor * np.exp(-rate * s)
    k = int(np.argmin(vals))
    return float(vals[k]), float(s[k])


def sample_conditioned_llr(mu: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draws of ``L ~ N(mu, 2 mu)`` conditioned on ``L < 0`` (inverse-CDF truncation)."""
    sd = math.sqrt(2.0 * mu)
    # P(Z < -mu/sd) in logs keeps precision deep in the tail
    log_p0 = float(log_ndtr(-mu / sd))
    if log_p0 < -700:
        raise ValueError(f"conditioning event too rare at mu={mu}")
    u = rng.random(size)
    return mu + sd * ndtri(np.exp(np.log(u) + log_p0))


def mc_conditional_flip(mu: float, sigma_L: float, trials: int,
                        rng: np.random.Generator) -> McEstimate:
    """Monte Carlo estimate of ``P(L + n < 0 | L < 0)`` with a normal-approximation 95% CI.

    Every draw lands in the conditioning event, so ``trials`` is also the
    number of conditioned samples.
    """
    if trials < 10_000:
        raise ValueError("need at least 10^4 trials")
    L = sample_conditioned_llr(mu, trials, rng)
    noise = sigma_L * rng.standard_normal(trials) if sigma_L > 0 else 0.0
    hits = int(np.count_nonzero(L + noise < 0))
    p = hits / trials
    se = math.sqrt(max(p * (1.0 - p), 0.0) / trials)
    return McEstimate(p, se, max(p - 1.96 * se, 0.0), min(p + 1.96 * se, 1.0), trials)
