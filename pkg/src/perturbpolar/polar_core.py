"""Polar encoding, CRC attachment and the static code description.

Bit order convention: ``u[0]`` is the first bit decoded by SC, and the binary
expansion of an index (MSB first) selects the f/g branch taken at each
decoding stage.  Encoding is ``c = u B_n F^{(x)n}`` over GF(2).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numba
import numpy as np

from .errors import ConfigurationError

MAX_ORACLE_N = 12


def log2_exact(N: int) -> int:
    """Return ``n`` with ``2**n == N`` or raise ConfigurationError."""
    N = int(N)
    if N < 1 or N & (N - 1):
        raise ConfigurationError(f"length {N} is not a power of two")
    return N.bit_length() - 1


@lru_cache(maxsize=None)
def bit_reversal_indices(n: int) -> np.ndarray:
    idx = np.arange(1 << n)
    rev = np.zeros_like(idx)
    for b in range(n):
        rev |= ((idx >> b) & 1) << (n - 1 - b)
    rev.setflags(write=False)
    return rev


def bit_reversal_permute(v):
    """Move element ``i`` to position ``rev_n(i)``; an involution."""
    v = np.asarray(v)
    n = log2_exact(v.shape[-1])
    # rev_n is an involution, so gathering equals scattering
    return v[..., bit_reversal_indices(n)]


@numba.njit(cache=True)
def _butterfly(x):
    N = x.shape[0]
    half = 1
    while half < N:
        for start in range(0, N, 2 * half):
            for j in range(start, start + half):
                x[j] ^= x[j + half]
        half *= 2
    return x


def encode(u, n: int | None = None) -> np.ndarray:
    """Polar-encode ``u`` (length ``2**n``): bit reversal then n XOR stages."""
    u = np.asarray(u, dtype=np.uint8)
    n_actual = log2_exact(u.shape[0])
    if n is not None and n != n_actual:
        raise ConfigurationError(f"len(u)={u.shape[0]} does not match n={n}")
    x = bit_reversal_permute(u & 1).astype(np.uint8)
    return _butterfly(x)


def generator_matrix(n: int) -> np.ndarray:
    """Explicit ``B_n F^{(x)n}`` over GF(2).  Reference oracle only."""
    if n < 1:
        raise ConfigurationError("n must be >= 1")
    if n > MAX_ORACLE_N:
        raise ConfigurationError(f"refusing to materialize G for n={n} > {MAX_ORACLE_N}")
    F = np.array([[1, 0], [1, 1]], dtype=np.uint8)
    G = np.ones((1, 1), dtype=np.uint8)
    for _ in range(n):
        G = np.kron(G, F)
    return G[bit_reversal_indices(n)]


# --- CRC -------------------------------------------------------------------

CRC24_EXPONENTS = (24, 23, 6, 5, 1, 0)


@dataclass(frozen=True)
class CrcSpec:
    """Generator polynomial by its nonzero exponents.

    Register convention: zero initial state, no reflection, no final XOR,
    most-significant coefficient first.
    """

    exponents: tuple[int, ...] = CRC24_EXPONENTS

    def __post_init__(self):
        exps = tuple(sorted({int(e) for e in self.exponents}, reverse=True))
        if not exps or exps[-1] != 0 or exps[0] < 1:
            raise ConfigurationError(
                f"CRC generator must contain x^0 and a positive degree, got {self.exponents}")
        object.__setattr__(self, "exponents", exps)

    @property
    def degree(self) -> int:
        return self.exponents[0]

    @property
    def generator_bits(self) -> np.ndarray:
        """Coefficients from x^degree down to x^0."""
        g = np.zeros(self.degree + 1, dtype=np.uint8)
        for e in self.exponents:
            g[self.degree - e] = 1
        return g

    def to_dict(self) -> dict:
        return {"exponents": list(self.exponents)}

    @classmethod
    def from_dict(cls, d: dict) -> "CrcSpec":
        return cls(tuple(d["exponents"]))


@numba.njit(cache=True)
def _poly_remainder(word, gen):
    # long division; gen[0] is the leading coefficient
    deg = gen.shape[0] - 1
    buf = word.copy()
    for i in range(buf.shape[0] - deg):
        if buf[i]:
            for j in range(deg + 1):
                buf[i + j] ^= gen[j]
    return buf[buf.shape[0] - deg:]


def crc_remainder(bits, spec: CrcSpec) -> np.ndarray:
    """Remainder of ``bits(x) * x^degree`` modulo the generator."""
    bits = np.asarray(bits, dtype=np.uint8)
    padded = np.concatenate([bits, np.zeros(spec.degree, dtype=np.uint8)])
    return _poly_remainder(padded, spec.generator_bits)


def crc_encode(payload, spec: CrcSpec | None = None) -> np.ndarray:
    """Append ``spec.degree`` CRC bits to ``payload``."""
    spec = spec or CrcSpec()
    payload = np.asarray(payload, dtype=np.uint8)
    if payload.size == 0:
        raise ConfigurationError("CRC payload must be non-empty")
    return np.concatenate([payload, crc_remainder(payload, spec)])


def crc_check(word, spec: CrcSpec | None = None) -> bool:
    spec = spec or CrcSpec()
    word = np.asarray(word, dtype=np.uint8)
    if word.size <= spec.degree:
        raise ConfigurationError(f"word of length {word.size} too short for CRC-{spec.degree}")
    return not _poly_remainder(word, spec.generator_bits).any()


# --- code configuration ------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CodeConfig:
    """Static shape of one polar code.

    ``K`` counts every unfrozen position, so with a CRC attached the payload
    length is ``K - crc.degree``.
    """

    n: int
    K: int
    info_set: np.ndarray
    crc: CrcSpec | None = None
    frozen_mask: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n < 1:
            raise ConfigurationError("n must be >= 1")
        info = np.unique(np.asarray(self.info_set, dtype=np.int64))
        if info.size != len(self.info_set):
            raise ConfigurationError("info_set contains duplicates")
        if info.size != self.K:
            raise ConfigurationError(f"|info_set|={info.size} but K={self.K}")
        if info.size and (info[0] < 0 or info[-1] >= self.N):
            raise ConfigurationError(f"info_set indices must lie in [0, {self.N})")
        if self.crc is not None and self.K <= self.crc.degree:
            raise ConfigurationError(f"K={self.K} leaves no payload after CRC-{self.crc.degree}")
        info.setflags(write=False)
        object.__setattr__(self, "info_set", info)
        mask = np.ones(self.N, dtype=np.bool_)
        mask[info] = False
        mask.setflags(write=False)
        object.__setattr__(self, "frozen_mask", mask)

    @property
    def N(self) -> int:
        return 1 << self.n

    @property
    def payload_size(self) -> int:
        return self.K - (self.crc.degree if self.crc else 0)

    def __eq__(self, other):
        if not isinstance(other, CodeConfig):
            return NotImplemented
        return (self.n == other.n and self.K == other.K and self.crc == other.crc
                and np.array_equal(self.info_set, other.info_set))

    def __hash__(self):
        return hash((self.n, self.K, self.crc, self.info_set.tobytes()))

    def message_to_u(self, info_bits) -> np.ndarray:
        u = np.zeros(self.N, dtype=np.uint8)
        u[self.info_set] = info_bits
        return u

    def to_dict(self) -> dict:
        d = {"n": self.n, "K": self.K, "info_set": self.info_set.tolist()}
        d["crc"] = self.crc.to_dict() if self.crc else None
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CodeConfig":
        crc = CrcSpec.from_dict(d["crc"]) if d.get("crc") else None
        return cls(int(d["n"]), int(d["K"]), np.asarray(d["info_set"]), crc)

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict())
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_json(cls, text_or_path) -> "CodeConfig":
        p = Path(text_or_path) if not str(text_or_path).lstrip().startswith("{") else None
        text = p.read_text() if p is not None else text_or_path
        return cls.from_dict(json.loads(text))
