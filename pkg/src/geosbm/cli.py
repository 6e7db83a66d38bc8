"""``geosbm`` command line: single runs, gamma sweeps, spectra, moments, regimes.

Exit codes: 0 on success, 1 for a bad configuration, 2 for a numerical
failure (eigensolve, secular roots, quadrature). Output goes to ``--outdir``,
else ``$GEOSBM_OUTPUT_DIR``, else the config's ``outdir``.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .eigen import EigenError
from .experiments import (OUTPUT_ENV, PRESETS, ConfigError, ExperimentConfig, crossing_point,
                          histogram_table, isolated_vertex_counts, load_config, meta, output_dir,
                          record_json, run_moments, run_single, run_sweep, spectra_for, write_csv,
                          write_json)
from .model import ParameterError
from .moments import L_MAX, write_moment_csv
from .resolvent import ResolventError
from .theory import QuadratureError, check_regimes, expected_isolated_vertices

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2
NUMERIC_ERRORS = (EigenError, ResolventError, QuadratureError, np.linalg.LinAlgError, FloatingPointError)
_NUMERIC_NAMES = {e.__name__ for e in NUMERIC_ERRORS} | {"LinAlgError"}

# flag name -> config key
_OVERRIDES = {
    "N": "N", "p1": "p1", "p2": "p2", "kappa": "kappa", "gamma": "gamma",
    "seed": "base_seed", "trials": "trials", "estimator": "estimator",
    "known_mean": "known_mean", "epsilon": "epsilon", "bins": "bins", "workers": "workers",
}

# here --trials counts Monte Carlo samples (0 = exact only), not experiment trials
_SAMPLE_COUNT_COMMANDS = ("moments", "isolated")


def _grid(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.replace(",", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad gamma grid {text!r}") from exc
    if not vals:
        raise argparse.ArgumentTypeError("gamma grid is empty")
    return vals


def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("configuration")
    g.add_argument("--config", help="flat JSON config file")
    g.add_argument("--preset", choices=sorted(PRESETS))
    g.add_argument("--outdir", help=f"output directory (overrides ${OUTPUT_ENV})")
    g.add_argument("--seed", type=int)
    g.add_argument("--trials", type=int)
    g.add_argument("--gamma-grid", type=_grid, help="comma or space separated gammas")
    g.add_argument("--N", type=int)
    g.add_argument("--p1", type=float)
    g.add_argument("--p2", type=float)
    g.add_argument("--kappa", type=float)
    g.add_argument("--gamma", type=float)
    g.add_argument("--estimator", choices=["naive", "davis_kahan"])
    g.add_argument("--known-mean", type=float)
    g.add_argument("--epsilon", type=float)
    g.add_argument("--bins", type=int)
    g.add_argument("--workers", type=int)
    g.add_argument("--no-predict", action="store_true", help="skip the secular-root predictions")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="geosbm", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("single", help="one (gamma, seed) trial")
    _common(p)
    p.add_argument("--stream", type=int, default=0, help="trial index within the seed")

    p = sub.add_parser("sweep", help="trials over a gamma grid, with an aggregate table")
    _common(p)

    p = sub.add_parser("spectra", help="eigenvalue histograms of A, the kappa=0 SBM and Q")
    _common(p)
    p.add_argument("--stream", type=int, default=0)

    p = sub.add_parser("moments", help="exact trace moments of P against Monte Carlo")
    _common(p)
    p.add_argument("--l-max", type=int, default=4)
    p.add_argument("--quotients", action="store_true", help="also write the per-quotient table")

    p = sub.add_parser("regimes", help="finite-size regime checks for the configured parameters")
    _common(p)

    p = sub.add_parser("isolated", help="isolated vertices of the kernel graph: quadrature vs sampling")
    _common(p)
    return ap


def make_config(args) -> ExperimentConfig:
    data = {}
    if args.preset:
        data.update(PRESETS[args.preset])
    if args.config:
        data.update(load_config(args.config))
    for flag, key in _OVERRIDES.items():
        if flag == "trials" and args.command in _SAMPLE_COUNT_COMMANDS:
            continue
        v = getattr(args, flag, None)
        if v is not None:
            data[key] = v
    if args.gamma_grid is not None:
        data["gamma_grid"] = args.gamma_grid
    if getattr(args, "no_predict", False):
        data["predict"] = False
    try:
        return ExperimentConfig.from_mapping(data).validate()
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _fmt(x):
    return "null" if x is None else (f"{x:.4f}" if isinstance(x, float) else str(x))


def cmd_single(args, cfg: ExperimentConfig, out: str) -> int:
    rec = run_single(cfg, args.stream)
    path = os.path.join(out, f"single_g{cfg.gamma:g}_s{cfg.base_seed}_t{args.stream}.json")
    write_json(path, {"meta": meta(cfg, stream=args.stream), "record": json.loads(record_json(rec))})
    if rec["status"] != "ok":
        print(f"failed: {rec['reason']}", file=sys.stderr)
        return EXIT_NUMERIC if rec.get("error") in _NUMERIC_NAMES else EXIT_CONFIG
    print(" ".join(f"{k}={_fmt(rec[k])}" for k in
                   ("gamma", "rho1", "rho2", "rho3", "n_detached", "overlap", "hamming_agreement",
                    "classification", "theta1", "theta2", "corr2")))
    print(path)
    return EXIT_OK


def cmd_sweep(args, cfg: ExperimentConfig, out: str) -> int:
    records, rows = run_sweep(cfg)
    m = meta(cfg)
    tag = f"sweep_{m['config_hash']}"
    with open(os.path.join(out, f"{tag}_records.jsonl"), "w") as fh:
        fh.write(json.dumps({"meta": m}, sort_keys=True) + "\n")
        for r in records:
            fh.write(record_json(r) + "\n")
    write_csv(os.path.join(out, f"{tag}_aggregate.csv"), rows, m)
    for r in rows:
        print(" ".join(f"{k}={_fmt(r[k])}" for k in ("gamma", "median_overlap", "q25_overlap",
                                                        "q75_overlap", "median_gap32_ratio", "failed")))
    cp = crossing_point(rows)
    print(f"crossing_0.5={_fmt(cp)}")
    failed = [r for r in records if r["status"] != "ok"]
    if failed and len(failed) == len(records):
        return EXIT_NUMERIC if failed[0].get("error") in _NUMERIC_NAMES else EXIT_CONFIG
    return EXIT_OK


def cmd_spectra(args, cfg: ExperimentConfig, out: str) -> int:
    spectra = spectra_for(cfg, args.stream)
    edges, hists = histogram_table(spectra, cfg.bins)
    m = meta(cfg, stream=args.stream)
    tag = f"spectra_g{cfg.gamma:g}_s{cfg.base_seed}_t{args.stream}"
    for name, h in hists.items():
        rows = [{"bin_lo": edges[i], "bin_hi": edges[i + 1], "count": int(h.counts[i])}
                for i in range(len(h.counts))]
        write_csv(os.path.join(out, f"{tag}_{name}_hist.csv"), rows, m)
    n = len(next(iter(spectra.values())))
    raw = [{"index": i, **{k: float(v[i]) for k, v in spectra.items()}} for i in range(n)]
    write_csv(os.path.join(out, f"{tag}_eigenvalues.csv"), raw, m)
    for name, v in spectra.items():
        print(f"{name}: top3={', '.join(f'{x:.4f}' for x in v[:3])}")
    return EXIT_OK


def cmd_moments(args, cfg: ExperimentConfig, out: str) -> int:
    if not 2 <= args.l_max <= L_MAX:
        raise ConfigError(f"--l-max must lie in [2, {L_MAX}]")
    trials = 0 if args.trials is None else args.trials
    if trials < 0:
        raise ConfigError("--trials must be nonnegative")
    rep = run_moments(cfg.N, cfg.gamma, args.l_max, trials, cfg.base_seed)
    m = meta(cfg, note=rep["note"])
    tag = f"moments_N{cfg.N}_g{cfg.gamma:g}_s{cfg.base_seed}"
    write_json(os.path.join(out, f"{tag}.json"), {"meta": m, **rep})
    write_csv(os.path.join(out, f"{tag}.csv"), rep["rows"], m)
    if args.quotients:
        write_moment_csv(os.path.join(out, f"{tag}_quotients.csv"), range(2, args.l_max + 1), cfg.gamma)
    for r in rep["rows"]:
        print(" ".join(f"{k}={_fmt(r[k])}" for k in ("l", "exact", "normalized", "limit", "mc_mean",
                                                        "mc_stderr", "z")))
    print(f"note: {rep['note']}")
    return EXIT_OK


def cmd_regimes(args, cfg: ExperimentConfig, out: str) -> int:
    reports = {}
    for g in (cfg.gamma_grid or [cfg.gamma]):
        rep = check_regimes(cfg.params(g))
        reports[f"{g:g}"] = json.loads(rep.to_json())
        flags = " ".join(f"{c.name}={'ok' if c.passed else 'no'}({c.ratio:.3g})" for c in rep.checks)
        print(f"gamma={g:g} {flags}")
    write_json(os.path.join(out, f"regimes_{cfg.digest()}.json"), {"meta": meta(cfg), "reports": reports})
    return EXIT_OK


def cmd_isolated(args, cfg: ExperimentConfig, out: str) -> int:
    expected = expected_isolated_vertices(cfg.N, cfg.gamma)
    trials = 0 if args.trials is None else args.trials
    payload = {"N": cfg.N, "gamma": cfg.gamma, "expected": expected, "trials": trials,
               "mc_mean": None, "mc_stderr": None, "z": None}
    if trials > 0:
        counts = isolated_vertex_counts(cfg.N, cfg.gamma, trials, cfg.base_seed)
        mean = float(counts.mean())
        se = float(counts.std(ddof=1) / math.sqrt(trials)) if trials > 1 else None
        payload.update(mc_mean=mean, mc_stderr=se,
                       z=(mean - expected) / se if se else None, counts=counts.tolist())
    write_json(os.path.join(out, f"isolated_N{cfg.N}_g{cfg.gamma:g}_s{cfg.base_seed}.json"),
               {"meta": meta(cfg), **payload})
    print(" ".join(f"{k}={_fmt(payload[k])}" for k in ("N", "gamma", "expected", "mc_mean", "mc_stderr", "z")))
    return EXIT_OK


COMMANDS = {"single": cmd_single, "sweep": cmd_sweep, "spectra": cmd_spectra,
            "moments": cmd_moments, "regimes": cmd_regimes, "isolated": cmd_isolated}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = make_config(args)
        out = output_dir(args.outdir, cfg)
        return COMMANDS[args.command](args, cfg, out)
    except (ConfigError, ParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERIC_ERRORS as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
