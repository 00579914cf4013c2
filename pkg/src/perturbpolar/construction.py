"""Gaussian-approximation construction and Bhattacharyya bounds.

Reliabilities are indexed in decoding order.  Index ``i`` of length ``2N``
derives from parent ``i // 2`` of length ``N``: an even child takes the
check-node (f) update, an odd child the variable-node (g) update.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numba import cfunc, types
from scipy import LowLevelCallable, integrate, optimize

from .errors import ConfigurationError, DomainError
from .polar_core import CodeConfig, CrcSpec

ASYMPTOTIC_X = 700.0
SERIES_X = 1e-4
_WINDOW = 40.0
_RTOL = 1e-12
_TINY = float(np.finfo(float).tiny)


@cfunc(types.float64(types.intc, types.CPointer(types.float64)))
def _phi_integrand(argc, xx):
    # 1 - tanh(t/2) = 2 / (1 + e^t); positive, so quad keeps relative accuracy
    t, x = xx[0], xx[1]
    if t > 0:
        w = 2.0 * math.exp(-t) / (1.0 + math.exp(-t))
    else:
        w = 2.0 / (1.0 + math.exp(t))
    return w * math.exp(-(t - x) ** 2 / (4.0 * x)) / math.sqrt(4.0 * math.pi * x)


@cfunc(types.float64(types.intc, types.CPointer(types.float64)))
def _psi_integrand(argc, xx):
    t, x = xx[0], xx[1]
    return math.tanh(0.5 * t) * math.exp(-(t - x) ** 2 / (4.0 * x)) / math.sqrt(4.0 * math.pi * x)


_PHI_LLC = LowLevelCallable(_phi_integrand.ctypes)
_PSI_LLC = LowLevelCallable(_psi_integrand.ctypes)


def _phi_quad(x: float) -> float:
    # the phi integrand peaks near t = -x for large x, so the window is
    # widened on the left to cover it
    s = math.sqrt(x)
    lo, hi = -x - _WINDOW * s, x + _WINDOW * s
    pts = sorted({-x, 0.0, x} - {lo, hi})
    val, _ = integrate.quad(_PHI_LLC, lo, hi, args=(x,), points=pts,
                            epsabs=0.0, epsrel=_RTOL, limit=500)
    return val


def _psi_quad(x: float) -> float:
    s = math.sqrt(x)
    val, _ = integrate.quad(_PSI_LLC, x - _WINDOW * s, x + _WINDOW * s, args=(x,),
                            points=(0.0, x), epsabs=0.0, epsrel=1e-10, limit=500)
    return val


def _log_phi_asymptotic_raw(x: float) -> float:
    return -x / 4.0 + 0.5 * math.log(math.pi / x) + math.log1p(-10.0 / (7.0 * x))


# The expansion is ~0.15% high at the switch point; a constant offset makes
# phi continuous (and hence strictly decreasing) across it.
_ASYMPTOTIC_OFFSET = math.log(_phi_quad(ASYMPTOTIC_X)) - _log_phi_asymptotic_raw(ASYMPTOTIC_X)


def _log_phi_asymptotic(x: float) -> float:
    return _log_phi_asymptotic_raw(x) + _ASYMPTOTIC_OFFSET


def log_phi(x: float) -> float:
    """``log(phi(x))``; uses the asymptotic expansion above ASYMPTOTIC_X."""
    if x < 0:
        raise DomainError(f"phi undefined for x={x} < 0")
    if x == 0:
        return 0.0
    if x > ASYMPTOTIC_X:
        return _log_phi_asymptotic(x)
    if x < 1.0:
        return math.log1p(-one_minus_phi(x))
    return math.log(_phi_quad(x))


def one_minus_phi(x: float) -> float:
    """``1 - phi(x) = E[tanh(t/2)]``, accurate when it is small."""
    if x < 0:
        raise DomainError(f"phi undefined for x={x} < 0")
    if x < SERIES_X:
        return x / 2.0 - x * x / 4.0 + 5.0 * x ** 3 / 24.0
    if x < 1.0:
        return _psi_quad(x)
    return -math.expm1(log_phi(x))


def phi(x: float) -> float:
    """GA check-node function: ``1 - E[tanh(t/2)]`` for ``t ~ N(x, 2x)``.

    ``phi(0) = 1`` by continuity.  For ``x > 700`` the asymptotic
    ``exp(-x/4) sqrt(pi/x) (1 - 10/(7x))`` is returned instead of quadrature,
    scaled by a constant so that it meets the quadrature value at 700.
    """
    if x < 0:
        raise DomainError(f"phi undefined for x={x} < 0")
    if x == 0:
        return 1.0
    if x > ASYMPTOTIC_X:
        return math.exp(_log_phi_asymptotic(x))
    if x < 1.0:
        return 1.0 - one_minus_phi(x)
    return _phi_quad(x)


def _bracket_root(g, lo: float, hi: float) -> float:
    """Root of the increasing function ``g``; widens ``[lo, hi]`` geometrically."""
    while lo > 0 and g(lo) > 0:
        lo, hi = 0.5 * lo, lo
    while g(hi) < 0:
        lo, hi = hi, 2.0 * hi
        if hi > 1e12:
            raise DomainError("failed to bracket root")
    return optimize.brentq(g, lo, hi, xtol=1e-15 * max(lo, 1e-300), rtol=1e-14, maxiter=500)


def _inv_phi_log(log_y: float) -> float:
    # solve log_phi(x) = log_y, log_y < 0
    return _bracket_root(lambda x: log_y - log_phi(x), 0.0, 1.0)


def _inv_one_minus_phi(q: float) -> float:
    # solve 1 - phi(x) = q for small q; x/4 <= 1 - phi(x) <= x/2 near zero
    return _bracket_root(lambda x: one_minus_phi(x) - q, 2.0 * q, 4.0 * q)


def phi_inv(y: float) -> float:
    """Inverse of ``phi`` on ``(0, 1)``."""
    if not 0.0 < y < 1.0:
        raise DomainError(f"phi_inv requires 0 < y < 1, got {y}")
    if y > 0.5:
        return _inv_one_minus_phi(1.0 - y)
    return _inv_phi_log(math.log(y))


def _even_child(mu_parent: float) -> float:
    """``phi^-1(1 - (1 - phi(mu))^2)`` without forming numbers near 1."""
    q = one_minus_phi(mu_parent) if mu_parent < 1.0 else 1.0
    if q < 0.5:
        # child's 1 - phi is q^2
        return _inv_one_minus_phi(q * q)
    lp = log_phi(mu_parent)
    return _inv_phi_log(lp + math.log(2.0 - math.exp(lp)))


@lru_cache(maxsize=64)
def _ga_means_cached(n: int, sigma2: float) -> np.ndarray:
    mu = np.array([2.0 / sigma2])
    for level in range(1, n + 1):
        child = np.empty(2 * mu.size)
        for j, m in enumerate(mu):
            try:
                # below the smallest normal float the channel is useless anyway
                child[2 * j] = max(_even_child(m), _TINY) if m > _TINY else _TINY
            except (DomainError, ValueError) as exc:
                raise DomainError(f"GA recursion failed at level {level}, index {2 * j}: {exc}") from exc
            child[2 * j + 1] = 2.0 * m
        mu = child
    mu.setflags(write=False)
    return mu


def ga_means(n: int, sigma2: float) -> np.ndarray:
    """GA means of the ``2**n`` decision LLRs over an AWGN channel of variance sigma2."""
    if n < 1:
        raise ConfigurationError("n must be >= 1")
    if sigma2 <= 0:
        raise ConfigurationError("sigma2 must be positive")
    return _ga_means_cached(int(n), float(sigma2)).copy()


def log_bhattacharyya_bounds(n: int, sigma2: float) -> np.ndarray:
    """Natural log of the Bhattacharyya upper bounds (avoids underflow at large N)."""
    if n < 1 or sigma2 <= 0:
        raise ConfigurationError("need n >= 1 and sigma2 > 0")
    lz = np.array([-1.0 / (2.0 * sigma2)])
    for _ in range(n):
        child = np.empty(2 * lz.size)
        # f-branch: 2Z - Z^2, written as 1 - (1 - Z)^2 when Z is close to 1
        near = lz > -1.0
        f = lz + np.log(2.0 - np.exp(lz))
        f[near] = np.log1p(-np.expm1(np.minimum(lz[near], 0.0)) ** 2)
        child[0::2] = f
        child[1::2] = 2.0 * lz                        # g-branch: Z^2
        lz = child
    return lz


def bhattacharyya_bounds(n: int, sigma2: float) -> np.ndarray:
    return np.exp(log_bhattacharyya_bounds(n, sigma2))


@dataclass(frozen=True, eq=False)
class ReliabilityProfile:
    mu: np.ndarray
    log_z: np.ndarray
    sigma2: float

    @property
    def z_bound(self) -> np.ndarray:
        return np.exp(self.log_z)

    @classmethod
    def compute(cls, n: int, sigma2: float) -> "ReliabilityProfile":
        return cls(ga_means(n, sigma2), log_bhattacharyya_bounds(n, sigma2), float(sigma2))

    def to_dict(self) -> dict:
        return {"sigma2": self.sigma2, "mu": self.mu.tolist(), "log_z": self.log_z.tolist()}


@dataclass(frozen=True)
class TheoryParams:
    beta: float
    alpha: float
    gamma: float

    def __post_init__(self):
        if not 1 / 3 < self.beta < 1 / 2:
            raise ConfigurationError(f"beta={self.beta} outside (1/3, 1/2)")
        if not 1 - 2 * self.beta < self.alpha < self.beta:
            raise ConfigurationError(f"alpha={self.alpha} outside (1-2beta, beta)")
        if not self.gamma < self.beta:
            raise ConfigurationError(f"gamma={self.gamma} must be < beta")


def select_info_set(mu, K: int) -> np.ndarray:
    """Indices of the K largest reliabilities; ties go to the smaller index."""
    mu = np.asarray(mu, dtype=float)
    if not 0 <= K <= mu.size:
        raise ConfigurationError(f"K={K} outside [0, {mu.size}]")
    order = np.argsort(-mu, kind="stable")
    return np.sort(order[:K])


def theory_info_set(n: int, sigma2: float, params: TheoryParams | float) -> np.ndarray:
    """Bit-channels whose Bhattacharyya bound is below ``2**(-N**beta)``.

    Often empty at practical lengths; callers should check the size.
    """
    beta = params.beta if isinstance(params, TheoryParams) else float(params)
    N = 1 << n
    log_threshold = -(N ** beta) * math.log(2.0)
    return np.flatnonzero(log_bhattacharyya_bounds(n, sigma2) < log_threshold)


def build_code(n: int, K: int, sigma2: float, crc: CrcSpec | None = None) -> CodeConfig:
    """GA top-K code designed at noise variance ``sigma2``."""
    return CodeConfig(n, K, select_info_set(ga_means(n, sigma2), K), crc)
