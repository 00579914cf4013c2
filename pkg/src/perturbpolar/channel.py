"""BPSK over AWGN, channel LLRs, SNR conversions and keyed random streams."""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import ConfigurationError

EBN0 = "EbN0"
ESN0 = "EsN0"
CONVENTIONS = (EBN0, ESN0)


class Role(IntEnum):
    """Purpose tag mixed into every random substream key."""

    CHANNEL = 0
    PAYLOAD = 1
    Y_PERTURB = 2
    U_PERTURB = 3
    AUX = 4


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``(seed, *key)``.

    Uses the SeedSequence spawn-key mechanism, so a stream depends only on its
    key and never on the order in which streams are requested.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class TrialStreams:
    """Perturbation substreams for one trial of one experiment point."""

    seed: int
    point: int
    trial: int

    def y_perturb(self, attempt: int) -> np.random.Generator:
        return substream(self.seed, self.point, Role.Y_PERTURB, self.trial, attempt)

    def u_perturb(self, attempt: int) -> np.random.Generator:
        return substream(self.seed, self.point, Role.U_PERTURB, self.trial, attempt)


@dataclass(frozen=True)
class ChannelParams:
    sigma2: float
    snr_db: float | None = None
    convention: str = EBN0

    def __post_init__(self):
        if self.sigma2 <= 0:
            raise ConfigurationError("sigma2 must be positive")
        if self.convention not in CONVENTIONS:
            raise ConfigurationError(f"unknown SNR convention {self.convention!r}")

    @classmethod
    def from_snr(cls, snr_db: float, rate: float, convention: str = EBN0) -> "ChannelParams":
        return cls(sigma_from_snr(snr_db, rate, convention), snr_db, convention)


def modulate_bpsk(c) -> np.ndarray:
    """0 -> +1, 1 -> -1."""
    return 1.0 - 2.0 * np.asarray(c, dtype=np.float64)


def awgn_transmit(x, sigma2: float, rng: np.random.Generator) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if sigma2 <= 0:
        raise ConfigurationError("sigma2 must be positive")
    return x + np.sqrt(sigma2) * rng.standard_normal(x.shape)


def llr_from_channel(y, sigma2: float) -> np.ndarray:
    """``2 y / sigma2``; positive values favour bit 0."""
    if sigma2 <= 0:
        raise ConfigurationError("sigma2 must be positive")
    return 2.0 * np.asarray(y, dtype=np.float64) / sigma2


def sigma_from_snr(snr_db: float, rate: float = 1.0, convention: str = EBN0) -> float:
    """Per-dimension noise variance for unit-energy BPSK.

    EbN0: ``1 / (2 R 10^(snr/10))``; EsN0: ``1 / (2 10^(snr/10))``.
    """
    if not 0 < rate <= 1:
        raise ConfigurationError(f"rate must lie in (0, 1], got {rate}")
    lin = 10.0 ** (snr_db / 10.0)
    if convention == EBN0:
        return 1.0 / (2.0 * rate * lin)
    if convention == ESN0:
        return 1.0 / (2.0 * lin)
    raise ConfigurationError(f"unknown SNR convention {convention!r}")


def perturb_power(snr_db: float, sigma2: float) -> float:
    """Perturbation power ``10^(-(snr-0.1)/10) - sigma2``, which must be positive."""
    sp2 = 10.0 ** (-(snr_db - 0.1) / 10.0) - sigma2
    if sp2 <= 0:
        raise ConfigurationError(
            f"perturbation power undefined at snr={snr_db} dB, sigma2={sigma2} (got {sp2:.4g})")
    return sp2
