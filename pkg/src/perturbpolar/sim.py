"""Monte Carlo BLER and first-error-position experiments.

Trials are grouped into fixed-size chunks.  Every random draw of a trial is
keyed by (seed, point, chunk or trial, role), and the stopping rule is
evaluated chunk by chunk in order, so results never depend on how many
worker processes ran the chunks.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from statsmodels.stats.proportion import proportion_confint

from . import __version__
from .channel import EBN0, Role, TrialStreams, llr_from_channel, modulate_bpsk, \
    perturb_power, sigma_from_snr, substream
from .construction import build_code
from .decoders import DecodeResult, ca_scl_decode, sc_decode, scl_decode
from .errors import ConfigurationError
from .perturbation import build_schedule, u_side_enhanced, u_side_sc, y_side_enhanced
from .polar_core import CodeConfig, CrcSpec, crc_check, crc_encode, encode

log = logging.getLogger(__name__)

METHODS = ("sc", "scl", "ca-scl", "y-perturb-sc", "y-perturb-scl", "u-perturb-sc")
FEP_METHODS = ("u-perturb-sc", "y-perturb-sc")

BLER_HEADER = ["snr_db", "method", "T", "trials", "block_errors", "bler", "ci_lo", "ci_hi",
               "undetected_errors", "mean_attempts"]
FEP_HEADER = ["N", "snr_db", "sigma_p2", "conditioned_trials", "delay", "unchanged", "advance",
              "p_delay", "p_delay_lo", "p_delay_hi", "p_unchanged", "p_advance", "incomplete"]


def wilson_interval(successes: int, trials: int, alpha: float = 0.05) -> tuple[float, float]:
    if trials == 0:
        return (0.0, 1.0)
    lo, hi = proportion_confint(successes, trials, alpha=alpha, method="wilson")
    # rounding can leave the bounds a hair on the wrong side of 0, 1 or p-hat
    p = successes / trials
    return min(max(float(lo), 0.0), p), max(min(float(hi), 1.0), p)


# --- configuration -------------------------------------------------------------

@dataclass
class ExperimentConfig:
    """One experiment: a code, an SNR grid, a decoder and a stopping rule.

    ``K`` counts all unfrozen positions (payload plus CRC).  The code is GA
    top-K at ``design_snr_db`` (each point's own SNR when None) unless
    ``info_set`` is given.  ``sigma_p2=None`` selects the automatic
    perturbation power at each SNR.  The rate used for SNR conversion
    defaults to payload bits over N.
    """

    kind: str
    n: int
    K: int
    snr_list: list[float]
    method: str = "sc"
    attempts: int = 0
    sigma_p2: float | None = None
    crc: list[int] | None = field(default_factory=lambda: list(CrcSpec().exponents))
    list_size: int = 8
    design_snr_db: float | None = None
    info_set: list[int] | None = None
    convention: str = EBN0
    rate: float | None = None
    max_trials: int = 10_000_000
    target_errors: int = 400
    seed: int = 0
    workers: int = 1
    chunk_size: int = 1000
    static_reharden: bool = False
    output: str | None = None

    def __post_init__(self):
        if self.kind not in ("bler", "fep"):
            raise ConfigurationError(f"kind must be 'bler' or 'fep', got {self.kind!r}")
        if not self.snr_list:
            raise ConfigurationError("snr_list must be non-empty")
        self.snr_list = [float(s) for s in self.snr_list]
        if self.target_errors < 1:
            raise ConfigurationError("target_errors must be >= 1")
        allowed = FEP_METHODS if self.kind == "fep" else METHODS
        if self.method not in allowed:
            raise ConfigurationError(f"method {self.method!r} not in {allowed}")
        if self.kind == "fep" and self.attempts != 1:
            raise ConfigurationError("FEP statistics are defined for exactly one perturbation (T=1)")
        if self.attempts < 0 or self.chunk_size < 1 or self.workers < 1 or self.max_trials < 1:
            raise ConfigurationError("attempts, chunk_size, workers and max_trials must be positive")
        if self.sigma_p2 is not None and self.sigma_p2 < 0:
            raise ConfigurationError("sigma_p2 must be non-negative")
        if self.kind == "bler" and not self.crc and self.method not in ("sc", "scl"):
            raise ConfigurationError(f"method {self.method!r} needs a CRC")

    @property
    def crc_spec(self) -> CrcSpec | None:
        return CrcSpec(tuple(self.crc)) if self.crc else None

    @property
    def N(self) -> int:
        return 1 << self.n

    def code_rate(self) -> float:
        if self.rate is not None:
            return self.rate
        spec = self.crc_spec
        return (self.K - (spec.degree if spec else 0)) / self.N

    def sigma2_at(self, snr_db: float) -> float:
        return sigma_from_snr(snr_db, self.code_rate(), self.convention)

    def code_at(self, snr_db: float) -> CodeConfig:
        if self.info_set is not None:
            return CodeConfig(self.n, self.K, np.asarray(self.info_set), self.crc_spec)
        design = self.design_snr_db if self.design_snr_db is not None else snr_db
        return build_code(self.n, self.K, self.sigma2_at(design), self.crc_spec)

    def sigma_p2_at(self, snr_db: float) -> float:
        if self.sigma_p2 is not None:
            return self.sigma_p2
        return perturb_power(snr_db, self.sigma2_at(snr_db))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


# --- results -----------------------------------------------------------------------

@dataclass
class BlerPoint:
    snr_db: float
    method: str
    T: int
    trials: int
    block_errors: int
    bler: float
    ci_lo: float
    ci_hi: float
    undetected_errors: int
    mean_attempts: float

    def row(self) -> list:
        return [getattr(self, k) for k in BLER_HEADER]


class Outcome(Enum):
    DELAY = "delay"
    UNCHANGED = "unchanged"
    ADVANCE = "advance"
    NOT_CONDITIONED = "not_conditioned"


@dataclass
class FepStats:
    N: int
    snr_db: float
    sigma_p2: float
    trials: int = 0
    delay: int = 0
    unchanged: int = 0
    advance: int = 0
    incomplete: bool = False

    @property
    def conditioned_trials(self) -> int:
        return self.delay + self.unchanged + self.advance

    def _p(self, k: int) -> float:
        c = self.conditioned_trials
        return k / c if c else math.nan

    @property
    def p_delay(self) -> float:
        return self._p(self.delay)

    @property
    def p_unchanged(self) -> float:
        return self._p(self.unchanged)

    @property
    def p_advance(self) -> float:
        # the complement of the other two, so that p_delay + p_unchanged +
        # p_advance evaluates to exactly 1.0 in floating point
        if not self.conditioned_trials:
            return math.nan
        return 1.0 - (self.p_delay + self.p_unchanged)

    def interval(self, outcome: Outcome) -> tuple[float, float]:
        return wilson_interval(getattr(self, outcome.value), self.conditioned_trials)

    def add(self, outcome: Outcome) -> None:
        if outcome is not Outcome.NOT_CONDITIONED:
            setattr(self, outcome.value, getattr(self, outcome.value) + 1)

    def row(self) -> list:
        lo, hi = self.interval(Outcome.DELAY)
        return [self.N, self.snr_db, self.sigma_p2, self.conditioned_trials, self.delay,
                self.unchanged, self.advance, self.p_delay, lo, hi, self.p_unchanged,
                self.p_advance, int(self.incomplete)]


# --- first error position ------------------------------------------------------------

def first_error_position(u_hat, u, info_set) -> int:
    """First information index where ``u_hat`` and ``u`` differ, or N if none."""
    u_hat = np.asarray(u_hat)
    u = np.asarray(u)
    if u_hat.shape != u.shape:
        raise ValueError("u_hat and u must have equal length")
    info = np.asarray(info_set)
    bad = info[u_hat[info] != u[info]]
    return int(bad.min()) if bad.size else int(u.shape[0])


def classify_trial(tau0: int, tau1: int, N: int) -> Outcome:
    if tau0 >= N:
        return Outcome.NOT_CONDITIONED
    if tau1 > tau0:
        return Outcome.DELAY
    if tau1 == tau0:
        return Outcome.UNCHANGED
    return Outcome.ADVANCE


# --- chunk workers -------------------------------------------------------------------

@dataclass(frozen=True)
class _PointSetup:
    cfg: ExperimentConfig
    point: int
    snr_db: float
    code: CodeConfig
    sigma2: float
    sigma_p2: float


def _decode(setup: _PointSetup, llr, trial: int) -> DecodeResult:
    cfg, code = setup.cfg, setup.code
    streams = TrialStreams(cfg.seed, setup.point, trial)
    m = cfg.method
    if m == "sc":
        return sc_decode(llr, code)
    if m == "scl":
        u, metric = scl_decode(llr, code, cfg.list_size)[0]
        return DecodeResult(u, None, path_metric=metric)
    if m == "ca-scl":
        return ca_scl_decode(llr, code, cfg.list_size)
    if m == "u-perturb-sc":
        return u_side_enhanced(llr, code, setup.sigma_p2, cfg.attempts, None,
                               streams.u_perturb, cfg.static_reharden)
    list_size = cfg.list_size if m == "y-perturb-scl" else None
    return y_side_enhanced(llr, code, setup.sigma_p2, cfg.attempts, None,
                           streams.y_perturb, list_size)


def _chunk_trials(cfg: ExperimentConfig, chunk: int) -> range:
    start = chunk * cfg.chunk_size
    return range(start, min(start + cfg.chunk_size, cfg.max_trials))


def _bler_chunk(setup: _PointSetup, chunk: int) -> tuple[int, int, int, int]:
    cfg, code = setup.cfg, setup.code
    noise_rng = substream(cfg.seed, setup.point, Role.CHANNEL, chunk)
    payload_rng = substream(cfg.seed, setup.point, Role.PAYLOAD, chunk)
    crc = code.crc
    sd = math.sqrt(setup.sigma2)
    trials = errors = undetected = attempts = 0
    for t in _chunk_trials(cfg, chunk):
        payload = payload_rng.integers(0, 2, code.payload_size, dtype=np.uint8)
        info = crc_encode(payload, crc) if crc else payload
        x = modulate_bpsk(encode(code.message_to_u(info)))
        y = x + sd * noise_rng.standard_normal(code.N)
        res = _decode(setup, llr_from_channel(y, setup.sigma2), t)
        decoded = res.u_hat[code.info_set][: code.payload_size]
        trials += 1
        attempts += res.attempts_used
        if not np.array_equal(decoded, payload):
            errors += 1
            passed = res.crc_pass if res.crc_pass is not None else (
                crc is not None and crc_check(res.u_hat[code.info_set], crc))
            undetected += int(bool(passed))
    return trials, errors, undetected, attempts


def _fep_chunk(setup: _PointSetup, chunk: int) -> tuple[int, int, int, int]:
    cfg, code = setup.cfg, setup.code
    noise_rng = substream(cfg.seed, setup.point, Role.CHANNEL, chunk)
    sd = math.sqrt(setup.sigma2)
    schedule = build_schedule(code.n, setup.sigma_p2)
    zeros = np.zeros(code.N, dtype=np.uint8)
    counts = {o: 0 for o in Outcome}
    trials = 0
    for t in _chunk_trials(cfg, chunk):
        trials += 1
        # all-zero codeword -> all +1 symbols
        llr = llr_from_channel(1.0 + sd * noise_rng.standard_normal(code.N), setup.sigma2)
        plain = sc_decode(llr, code)
        tau0 = first_error_position(plain.u_hat, zeros, code.info_set)
        if tau0 == code.N:
            continue
        streams = TrialStreams(cfg.seed, setup.point, t)
        if cfg.method == "u-perturb-sc":
            pert = u_side_sc(llr, code, schedule, streams.u_perturb(1),
                             cfg.static_reharden, plain)
        else:
            noisy = llr + math.sqrt(setup.sigma_p2) * streams.y_perturb(1).standard_normal(code.N)
            pert = sc_decode(noisy, code)
        tau1 = first_error_position(pert.u_hat, zeros, code.info_set)
        counts[classify_trial(tau0, tau1, code.N)] += 1
    return trials, counts[Outcome.DELAY], counts[Outcome.UNCHANGED], counts[Outcome.ADVANCE]


def _run_chunks(setup: _PointSetup, worker, stop, pool) -> tuple[list[int], bool]:
    """Sum chunk tuples in chunk order until ``stop(totals)`` or max_trials."""
    cfg = setup.cfg
    n_chunks = math.ceil(cfg.max_trials / cfg.chunk_size)
    totals = None
    next_chunk = 0
    while next_chunk < n_chunks:
        wave = range(next_chunk, min(next_chunk + cfg.workers, n_chunks))
        if pool is None:
            results = (worker(setup, c) for c in wave)
        else:
            results = pool.map(worker, [setup] * len(wave), wave)
        for r in results:
            totals = list(r) if totals is None else [a + b for a, b in zip(totals, r)]
            next_chunk += 1
            if stop(totals):
                return totals, True
    return totals, False


def _setup(cfg: ExperimentConfig, point: int, snr: float, need_sigma_p: bool) -> _PointSetup:
    sigma2 = cfg.sigma2_at(snr)
    sp2 = cfg.sigma_p2_at(snr) if need_sigma_p else 0.0
    return _PointSetup(cfg, point, snr, cfg.code_at(snr), sigma2, sp2)


def _pool(cfg: ExperimentConfig):
    if cfg.workers <= 1:
        return None
    import multiprocessing as mp
    return ProcessPoolExecutor(max_workers=cfg.workers, mp_context=mp.get_context("fork"))


def run_bler_experiment(cfg: ExperimentConfig) -> list[BlerPoint]:
    if cfg.kind != "bler":
        raise ConfigurationError("not a BLER config")
    needs_sp = "perturb" in cfg.method and cfg.attempts > 0
    points = []
    pool = _pool(cfg)
    try:
        for p, snr in enumerate(cfg.snr_list):
            setup = _setup(cfg, p, snr, needs_sp)
            (trials, errors, undetected, attempts), _ = _run_chunks(
                setup, _bler_chunk, lambda tot: tot[1] >= cfg.target_errors, pool)
            lo, hi = wilson_interval(errors, trials)
            points.append(BlerPoint(snr, cfg.method, cfg.attempts, trials, errors,
                                    errors / trials, lo, hi, undetected, attempts / trials))
            log.info("%s T=%d snr=%.2f: %d/%d errors", cfg.method, cfg.attempts, snr, errors, trials)
    finally:
        if pool is not None:
            pool.shutdown()
    return points


def run_fep_experiment(cfg: ExperimentConfig) -> list[FepStats]:
    """Delay / unchanged / advance counts, one FepStats per SNR point.

    Each trial sends the all-zero codeword, decodes it with plain SC and with
    one perturbed SC pass on the same channel output, and compares first
    error positions against the true word.
    """
    if cfg.kind != "fep":
        raise ConfigurationError("not an FEP config")
    out = []
    pool = _pool(cfg)
    try:
        for p, snr in enumerate(cfg.snr_list):
            setup = _setup(cfg, p, snr, True)
            (trials, d, u, a), done = _run_chunks(
                setup, _fep_chunk, lambda tot: tot[1] + tot[2] + tot[3] >= cfg.target_errors, pool)
            out.append(FepStats(cfg.N, snr, setup.sigma_p2, trials, d, u, a, incomplete=not done))
    finally:
        if pool is not None:
            pool.shutdown()
    return out


# --- output --------------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def write_results(results, path, cfg: ExperimentConfig | None = None) -> Path:
    """CSV with the fixed schema plus a ``.json`` sidecar holding config and version."""
    path = Path(path)
    kind = cfg.kind if cfg is not None else (
        "fep" if results and isinstance(results[0], FepStats) else "bler")
    header = FEP_HEADER if kind == "fep" else BLER_HEADER
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in results:
                w.writerow([_fmt(v) for v in r.row()])
        sidecar = {"version": __version__, "kind": kind,
                   "config": cfg.to_dict() if cfg is not None else None}
        path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True))
    except OSError as exc:
        raise OSError(f"failed writing results to {path}: {exc}") from exc
    return path


def load_sidecar(path) -> ExperimentConfig:
    data = json.loads(Path(path).with_suffix(".json").read_text())
    return ExperimentConfig.from_dict(data["config"])
