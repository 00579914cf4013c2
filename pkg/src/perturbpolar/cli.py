"""Command-line entry point: ``construct``, ``simulate bler|fep`` and ``bound``.

Exit codes: 0 success, 1 configuration error, 2 incomplete statistics.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .bounds import lemma1_bound, mc_conditional_flip, prop2_sigma_floor, prop3_bound
from .channel import CONVENTIONS, EBN0, substream, sigma_from_snr
from .construction import ReliabilityProfile, TheoryParams, select_info_set, theory_info_set
from .errors import ConfigurationError, DomainError
from .sim import METHODS, ExperimentConfig, run_bler_experiment, run_fep_experiment, write_results

EXIT_OK, EXIT_CONFIG, EXIT_INCOMPLETE = 0, 1, 2


def _snr_list(text: str) -> list[float]:
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad SNR list {text!r}") from exc


def _crc_arg(text: str):
    if text.lower() == "none":
        return []
    return [int(e) for e in text.split(",")]


# --- construct -----------------------------------------------------------------------

def _cmd_construct(args) -> int:
    if args.sigma2 is not None:
        sigma2 = args.sigma2
    elif args.design_snr_db is not None:
        sigma2 = sigma_from_snr(args.design_snr_db, args.rate, args.convention)
    else:
        raise ConfigurationError("give --sigma2 or --design-snr-db")
    profile = ReliabilityProfile.compute(args.n, sigma2)
    if args.k is not None:
        info = select_info_set(profile.mu, args.k)
        rule = {"k": args.k}
    else:
        params = TheoryParams(args.beta, args.alpha, args.gamma)
        info = theory_info_set(args.n, sigma2, params)
        rule = {"beta": args.beta, "alpha": args.alpha, "gamma": args.gamma}
    doc = {"n": args.n, "N": 1 << args.n, "selection": rule, "K": int(info.size),
           "info_set": info.tolist(), "profile": profile.to_dict()}
    text = json.dumps(doc)
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}: K={info.size} of N={1 << args.n}")
    else:
        print(text)
    return EXIT_OK


# --- simulate ------------------------------------------------------------------------

_SIM_KEYS = ("n", "K", "snr_list", "method", "attempts", "sigma_p2", "crc", "list_size",
             "design_snr_db", "convention", "rate", "max_trials", "target_errors", "seed",
             "workers", "chunk_size", "static_reharden", "output")


def _experiment_config(args, kind: str) -> ExperimentConfig:
    d = {}
    if args.config:
        d = json.loads(Path(args.config).read_text())
        if "kind" in d and d["kind"] != kind:
            raise ConfigurationError(f"config file is for {d['kind']!r}, not {kind!r}")
    for key in _SIM_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            d[key] = val
    if args.auto_sigma_p:
        d["sigma_p2"] = None
    if args.code:
        code = json.loads(Path(args.code).read_text())
        d.setdefault("n", code["n"])
        d.setdefault("K", code["K"])
        d["info_set"] = code["info_set"]
    d["kind"] = kind
    if kind == "fep":
        d.setdefault("method", "u-perturb-sc")
        d.setdefault("attempts", 1)
    missing = [k for k in ("n", "K", "snr_list") if k not in d]
    if missing:
        raise ConfigurationError(f"missing required settings: {missing}")
    return ExperimentConfig.from_dict(d)


def _cmd_simulate(args) -> int:
    cfg = _experiment_config(args, args.kind)
    # a BLER point that reaches max_trials is a normal stop; only FEP runs can be incomplete
    if cfg.kind == "bler":
        results = run_bler_experiment(cfg)
        incomplete = False
    else:
        results = run_fep_experiment(cfg)
        incomplete = any(s.incomplete for s in results)
    if cfg.output:
        write_results(results, cfg.output, cfg)
    for r in results:
        print(",".join(str(v) for v in r.row()))
    return EXIT_INCOMPLETE if incomplete else EXIT_OK


# --- bound ---------------------------------------------------------------------------

def _cmd_bound(args) -> int:
    rows = []
    if args.kind == "prop3":
        for mu in args.mu:
            for sl in args.sigma_l:
                b = prop3_bound(mu, sl)
                row = {"mu": mu, "sigma_L": sl, "value": b.value, "raw": b.raw_value,
                       "argmin_s": b.argmin_s}
                if args.verify_mc:
                    est = mc_conditional_flip(mu, sl, args.verify_mc, substream(args.seed, len(rows)))
                    row.update(mc=est.estimate, ci_lo=est.ci_low, ci_hi=est.ci_high)
                rows.append(row)
    elif args.kind == "lemma1":
        b = lemma1_bound(args.N, args.sigma2, args.gamma, args.alpha)
        rows.append({"N": args.N, "sigma2": args.sigma2, "gamma": args.gamma, "alpha": args.alpha,
                     "value": b.value, "raw": b.raw_value, "argmin_s": b.argmin_s})
    else:
        rows.append({"N": args.N, "gamma": args.gamma, "alpha": args.alpha,
                     "floor": prop2_sigma_floor(args.N, args.gamma, args.alpha)})
    cols = list(rows[0])
    print("\t".join(cols))
    for r in rows:
        print("\t".join(f"{r[c]:.6g}" if isinstance(r[c], float) else str(r[c]) for c in cols))
    return EXIT_OK


# --- parser --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="perturbpolar", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("construct", help="GA reliability profile and information set")
    c.add_argument("--n", type=int, required=True)
    noise = c.add_mutually_exclusive_group(required=True)
    noise.add_argument("--sigma2", type=float)
    noise.add_argument("--design-snr-db", type=float)
    c.add_argument("--rate", type=float, default=0.5)
    c.add_argument("--convention", choices=CONVENTIONS, default=EBN0)
    sel = c.add_mutually_exclusive_group(required=True)
    sel.add_argument("--k", type=int)
    sel.add_argument("--beta", type=float)
    c.add_argument("--alpha", type=float, default=0.2)
    c.add_argument("--gamma", type=float, default=0.4)
    c.add_argument("--out")
    c.set_defaults(func=_cmd_construct)

    s = sub.add_parser("simulate", help="Monte Carlo BLER or first-error-position statistics")
    s.add_argument("kind", choices=("bler", "fep"))
    s.add_argument("--config", help="JSON file with ExperimentConfig fields; flags override it")
    s.add_argument("--code", help="JSON from `construct` supplying n, K and info_set")
    s.add_argument("--n", type=int)
    s.add_argument("--k", dest="K", type=int, help="unfrozen positions, CRC included")
    s.add_argument("--snr", dest="snr_list", type=_snr_list, help="comma-separated dB values")
    s.add_argument("--method", choices=METHODS)
    s.add_argument("--attempts", "-T", type=int)
    sp = s.add_mutually_exclusive_group()
    sp.add_argument("--sigma-p2", type=float)
    sp.add_argument("--auto-sigma-p", action="store_true",
                    help="perturbation power 10^(-(SNR-0.1)/10) - sigma^2 at each point")
    s.add_argument("--static-reharden", action="store_true", default=None)
    s.add_argument("--list-size", type=int)
    s.add_argument("--crc", type=_crc_arg, help="generator exponents, e.g. 24,23,6,5,1,0, or none")
    s.add_argument("--design-snr-db", type=float)
    s.add_argument("--convention", choices=CONVENTIONS)
    s.add_argument("--rate", type=float)
    s.add_argument("--seed", type=int)
    s.add_argument("--workers", type=int)
    s.add_argument("--chunk-size", type=int)
    s.add_argument("--target-errors", type=int)
    s.add_argument("--max-trials", type=int)
    s.add_argument("--out", dest="output")
    s.set_defaults(func=_cmd_simulate)

    b = sub.add_parser("bound", help="analytic bounds, optionally checked by Monte Carlo")
    b.add_argument("--kind", choices=("prop3", "lemma1", "prop2-floor"), required=True)
    b.add_argument("--mu", type=float, nargs="+", default=[1.0, 5.0, 20.0])
    b.add_argument("--sigma-l", type=float, nargs="+", default=[1.0, 10.0, 100.0])
    b.add_argument("--N", type=int, default=1024)
    b.add_argument("--sigma2", type=float, default=0.5)
    b.add_argument("--gamma", type=float, default=0.4)
    b.add_argument("--alpha", type=float, default=0.2)
    b.add_argument("--verify-mc", type=int, metavar="TRIALS")
    b.add_argument("--seed", type=int, default=0)
    b.set_defaults(func=_cmd_bound)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigurationError, DomainError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
