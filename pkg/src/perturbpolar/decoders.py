"""SC, SCL and CRC-aided SCL decoding on channel LLRs.

LLR inputs are in channel (codeword) order.  Every decoder returns decisions
for the full ``u`` vector; frozen positions are always 0.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernels
from .polar_core import CodeConfig, bit_reversal_permute, crc_check

DecisionHook = Callable[[int, float], float]


@dataclass
class DecodeResult:
    u_hat: np.ndarray
    decision_llrs: np.ndarray | None
    attempts_used: int = 0
    crc_pass: bool | None = None
    path_metric: float | None = None

    def info_bits(self, cfg: CodeConfig) -> np.ndarray:
        return self.u_hat[cfg.info_set]


def f_op(a: float, b: float) -> float:
    """Min-sum check-node update ``sgn(a) sgn(b) min(|a|, |b|)``."""
    return float(_kernels.f_minsum(float(a), float(b)))


def f_exact(a: float, b: float) -> float:
    """Exact check-node update ``2 atanh(tanh(a/2) tanh(b/2))``."""
    return float(_kernels.f_exact(float(a), float(b)))


def g_op(a: float, b: float, u_prev: int) -> float:
    return (-a if u_prev else a) + b


def hard_decision(L: float) -> int:
    """1 for negative LLRs; a zero LLR decides 0."""
    return 1 if L < 0 else 0


def _sc_python(alpha, frozen, hook, exact):
    # plain recursive SC used for arbitrary Python hooks
    f = f_exact if exact else f_op
    N = alpha.shape[0]
    u = np.zeros(N, dtype=np.uint8)
    dec = np.empty(N)

    def rec(a, start):
        size = a.shape[0]
        if size == 1:
            L = float(hook(start, float(a[0])))
            dec[start] = L
            b = 0 if frozen[start] else hard_decision(L)
            u[start] = b
            return np.array([b], dtype=np.uint8)
        s = size // 2
        fa = np.array([f(a[j], a[j + s]) for j in range(s)])
        v1 = rec(fa, start)
        ga = np.where(v1 == 1, -a[:s], a[:s]) + a[s:]
        v2 = rec(ga, start + s)
        return np.concatenate([v1 ^ v2, v2])

    rec(np.asarray(alpha, dtype=np.float64), 0)
    return u, dec


def sc_decode(llr, cfg: CodeConfig, hook: DecisionHook | np.ndarray | None = None,
              exact_f: bool = False) -> DecodeResult:
    """Successive-cancellation decoding.

    ``hook`` maps ``(i, L_i)`` to the LLR actually used for decision ``i``.  An
    array is taken as an additive offset per index (the compiled fast path);
    a callable goes through a slower pure-Python decoder.
    """
    llr = np.asarray(llr, dtype=np.float64)
    if llr.shape[0] != cfg.N:
        raise ValueError(f"expected {cfg.N} LLRs, got {llr.shape[0]}")
    alpha = bit_reversal_permute(llr)
    if callable(hook):
        u, dec = _sc_python(alpha, cfg.frozen_mask, hook, exact_f)
    else:
        offsets = np.zeros(cfg.N) if hook is None else np.asarray(hook, dtype=np.float64)
        u, dec = _kernels.sc_kernel(alpha, cfg.frozen_mask, offsets, exact_f)
    return DecodeResult(u, dec)


def scl_decode(llr, cfg: CodeConfig, list_size: int,
               exact_f: bool = False) -> list[tuple[np.ndarray, float]]:
    """LLR-based SCL.  Returns ``(u_hat, path_metric)`` pairs, best metric first.

    A decision following the sign of ``L_i`` costs nothing; the other branch
    costs ``|L_i|``.  Frozen bits pay ``|L_i|`` when ``L_i < 0``.  When more
    than ``list_size`` candidates exist the lowest metrics survive, ties going
    to the lower candidate index (parent path order, bit 0 before bit 1).
    """
    if list_size < 1:
        raise ValueError("list_size must be >= 1")
    llr = np.asarray(llr, dtype=np.float64)
    if llr.shape[0] != cfg.N:
        raise ValueError(f"expected {cfg.N} LLRs, got {llr.shape[0]}")
    u, pm = _kernels.scl_kernel(bit_reversal_permute(llr), cfg.frozen_mask,
                                int(list_size), exact_f)
    order = np.argsort(pm, kind="stable")
    return [(u[k], float(pm[k])) for k in order]


def ca_scl_decode(llr, cfg: CodeConfig, list_size: int, crc=None) -> DecodeResult:
    """Lowest-metric CRC-passing path, else the lowest-metric path."""
    crc = crc or cfg.crc
    if crc is None:
        raise ValueError("CA-SCL needs a CRC")
    paths = scl_decode(llr, cfg, list_size)
    for u, metric in paths:
        if crc_check(u[cfg.info_set], crc):
            return DecodeResult(u, None, crc_pass=True, path_metric=metric)
    u, metric = paths[0]
    return DecodeResult(u, None, crc_pass=False, path_metric=metric)

