"""Perturbation-enhanced decoding: y-side (received LLRs) and u-side (decision LLRs).

Both decoders retry on CRC failure with fresh, independent noise.  Every
attempt starts from the original received LLRs, so perturbations never
accumulate across attempts.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .decoders import DecodeResult, ca_scl_decode, sc_decode
from .polar_core import CodeConfig, CrcSpec, crc_check

# attempt index -> generator; attempt 0 is never requested
StreamFactory = Callable[[int], np.random.Generator]


def g_op_count(i: int, n: int) -> int:
    """Number of g-stages on the decoding path of bit ``i`` (its popcount)."""
    if not 0 <= i < (1 << n):
        raise ValueError(f"index {i} outside [0, 2^{n})")
    return int(i).bit_count()


@dataclass(frozen=True, eq=False)
class PerturbSchedule:
    """Per-bit decision-noise variances ``2**k[i] * sigma_p2``."""

    sigma_p2: float
    k: np.ndarray
    sigma_i2: np.ndarray

    @property
    def n(self) -> int:
        return int(self.k[-1])


def build_schedule(n: int, sigma_p2: float) -> PerturbSchedule:
    if sigma_p2 < 0:
        raise ValueError("sigma_p2 must be non-negative")
    idx = np.arange(1 << n)
    k = np.zeros(idx.size, dtype=np.int64)
    for b in range(n):
        k += (idx >> b) & 1
    return PerturbSchedule(float(sigma_p2), k, np.ldexp(float(sigma_p2), k))


def _as_factory(rng) -> StreamFactory:
    if callable(rng):
        return rng
    return lambda attempt: rng


def u_side_noise(cfg: CodeConfig, schedule: PerturbSchedule,
                 rng: np.random.Generator) -> np.ndarray:
    """Decision-LLR offsets: ``N(0, sigma_i2[i])`` at information indices, 0 elsewhere."""
    offsets = np.zeros(cfg.N)
    info = cfg.info_set
    offsets[info] = rng.standard_normal(info.size) * np.sqrt(schedule.sigma_i2[info])
    return offsets


def u_side_sc(llr, cfg: CodeConfig, schedule: PerturbSchedule,
              rng: np.random.Generator, static_reharden: bool = False,
              base: DecodeResult | None = None) -> DecodeResult:
    """One SC pass with noise injected into every information decision LLR.

    The noise enters during decoding, so a changed decision alters the
    partial sums that feed later g-updates.  With ``static_reharden`` the
    decision LLRs of a plain SC pass (``base``) are perturbed and re-hardened
    without re-running the recursion.
    """
    if schedule.sigma_i2.shape[0] != cfg.N:
        raise ValueError("schedule length does not match code length")
    offsets = u_side_noise(cfg, schedule, rng)
    if not static_reharden:
        return sc_decode(llr, cfg, hook=offsets)
    base = base if base is not None else sc_decode(llr, cfg)
    dec = base.decision_llrs + offsets
    u = np.where(cfg.frozen_mask, 0, dec < 0).astype(np.uint8)
    return DecodeResult(u, dec)


def u_side_enhanced(llr, cfg: CodeConfig, sigma_p2: float, T: int,
                    crc: CrcSpec | None, rng, static_reharden: bool = False) -> DecodeResult:
    """Plain SC, then up to ``T`` u-side retries until the CRC passes.

    ``rng`` is a generator or a callable ``attempt -> generator``; no noise is
    drawn when attempt 0 already passes.
    """
    crc = crc or cfg.crc
    if T < 0:
        raise ValueError("T must be >= 0")
    res = sc_decode(llr, cfg)
    res.crc_pass = crc_check(res.u_hat[cfg.info_set], crc)
    if res.crc_pass or T == 0:
        return res
    streams = _as_factory(rng)
    schedule = build_schedule(cfg.n, sigma_p2)
    base = res
    for t in range(1, T + 1):
        res = u_side_sc(llr, cfg, schedule, streams(t), static_reharden, base)
        res.attempts_used = t
        res.crc_pass = crc_check(res.u_hat[cfg.info_set], crc)
        if res.crc_pass:
            break
    return res


def _base_decode(llr, cfg, crc, list_size):
    if list_size is None:
        res = sc_decode(llr, cfg)
        res.crc_pass = crc_check(res.u_hat[cfg.info_set], crc)
        return res
    return ca_scl_decode(llr, cfg, list_size, crc)


def y_side_enhanced(llr, cfg: CodeConfig, sigma_p2: float, T: int,
                    crc: CrcSpec | None, rng, list_size: int | None = None) -> DecodeResult:
    """Decode, then retry on ``llr + N(0, sigma_p2)`` up to ``T`` times.

    ``list_size=None`` uses SC as the base decoder, otherwise CA-SCL.
    """
    crc = crc or cfg.crc
    if T < 0:
        raise ValueError("T must be >= 0")
    llr = np.asarray(llr, dtype=np.float64)
    res = _base_decode(llr, cfg, crc, list_size)
    if res.crc_pass or T == 0:
        return res
    streams = _as_factory(rng)
    sd = np.sqrt(sigma_p2)
    for t in range(1, T + 1):
        perturbed = llr + sd * streams(t).standard_normal(llr.shape[0])
        res = _base_decode(perturbed, cfg, crc, list_size)
        res.attempts_used = t
        if res.crc_pass:
            break
    return res
