"""Command-line front end: ``hyperrank <command> --config FILE --out FILE``.

Exit status is 0 on success (violations are data, not failures), 2 for
configuration problems and 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .bilipschitz import run_bilipschitz_experiment
from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .dsl import DSLError
from .errors import GeometryError, InvalidDimension, MismatchedSplit, NoSplit
from .pinch import estimate_constants, halton_points, lambda_threshold, rank_additivity, verify_stretch_pinching
from .report import pairs_csv, write_report
from .tensor import random_orthonormal, riemann

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
AUTO_FACTOR = 1.05


def _space_info(g) -> dict:
    info = {"name": g.name, "dim": g.dim, "box": np.asarray(g.box, dtype=float).tolist()}
    if g.split is not None:
        info["split"] = {"t_index": g.split.t_index, "r": g.split.r}
    return info


def cmd_curvature(cfg: ExperimentConfig, seed: int, samples: int | None) -> dict:
    g = cfg.build().metric
    n = samples if samples is not None else 100
    points = halton_points(g.box, n, seed) if n else np.empty((0, g.dim))
    records = []
    worst = {"antisym_first": 0.0, "antisym_last": 0.0, "pair": 0.0, "bianchi": 0.0}
    for i, p in enumerate(points):
        R = riemann(g, p)
        U, V = random_orthonormal(R.metric, 2, np.random.default_rng([seed, i]))
        res = R.symmetry_residuals()
        for key in worst:
            worst[key] = max(worst[key], res[key])
        records.append({"point": p, "u": U, "v": V, "K": R.sectional(U, V), "residuals": res})
    ks = [r["K"] for r in records]
    return {
        "seed": seed,
        "space": _space_info(g),
        "samples": n,
        "min_K": min(ks) if ks else None,
        "max_K": max(ks) if ks else None,
        "max_residuals": worst,
        "points": records,
    }


def _embedding(cfg):
    built = cfg.build()
    if built.embedding is None:
        raise ConfigError("this command needs a 'space = pullback(...)' setting", cfg.lines.get("space"))
    return built


def cmd_embed(cfg: ExperimentConfig, seed: int, samples: int | None) -> dict:
    built = _embedding(cfg)
    g, emb = built.metric, built.embedding
    n = samples if samples is not None else 200
    probes = halton_points(g.box, 32, seed)
    rows = np.array([g.evaluate(p)[0] for p in probes])
    k = estimate_constants(g, samples=n, seed=seed)
    return {
        "seed": seed,
        "space": _space_info(g),
        "factors": [f.name for f in emb.factors],
        "tt_entry": float(rows[0, 0]),
        "tt_entry_spread": float(np.ptp(rows[:, 0])),
        "t_row_offdiag_max": float(np.abs(rows[:, 1:]).max()) if g.dim > 1 else 0.0,
        "constants": k,
        "conservative_constants": k.conservative(),
        "lambda_threshold": lambda_threshold(k.conservative()),
        "lambda_threshold_unmargined": lambda_threshold(k),
    }


def cmd_stretch(cfg: ExperimentConfig, seed: int, samples: int | None) -> dict:
    g = cfg.build().metric
    if g.split is None:
        raise NoSplit(f"{g.name} has no split structure")
    n = samples if samples is not None else 2000
    k = estimate_constants(g, samples=cfg.number("constant_samples", int), seed=seed).conservative()
    raw = cfg.get("lambda")
    lam = AUTO_FACTOR * lambda_threshold(k) if raw == "auto" else cfg.number("lambda")
    rep = verify_stretch_pinching(g, lam, k, samples=n, seed=seed)
    return {
        "seed": seed,
        "space": _space_info(g),
        "lambda_setting": raw,
        "constants": k,
        "result": rep,
    }


def cmd_bilipschitz(cfg: ExperimentConfig, seed: int, samples: int | None) -> dict:
    built = _embedding(cfg)
    n_pairs = samples if samples is not None else cfg.number("n_pairs", int)
    tol = cfg.number("solver_tol")
    method = cfg.get("distance_method")
    if method not in ("auto", "bvp", "closed_form"):
        raise ConfigError(f"unknown distance_method {method!r}", cfg.lines.get("distance_method"))
    # the polyline fallback is judged on a looser gradient scale unless set explicitly
    refine = cfg.number("refine_tol") if "refine_tol" in cfg.settings else min(1e-4, 100.0 * tol)
    rep = run_bilipschitz_experiment(built.embedding, n_pairs, cfg.number("n_curves", int), seed,
                                     distance_method=method, tol=tol, refine_tol=refine)
    return {"space": _space_info(built.metric), "warnings": rep.errors, **rep.to_dict()}


COMMANDS = {
    "curvature": cmd_curvature,
    "embed": cmd_embed,
    "stretch": cmd_stretch,
    "bilipschitz": cmd_bilipschitz,
}


def _seed(text):
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _nonneg(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be nonnegative")
    return value


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hyperrank", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="config file (defaults apply without one)")
        sp.add_argument("--out", help=f"report path (default {name}.json)")
        sp.add_argument("--seed", type=_seed, help="overrides the config seed")
        sp.add_argument("--samples", type=_nonneg, help="sample count (pairs for bilipschitz)")
    rk = sub.add_parser("rank")
    rk.add_argument("--dims", required=True, help="comma-separated factor dimensions, e.g. 2,3,4")
    return ap


def _rank(dims_text: str) -> int:
    try:
        dims = [int(s) for s in dims_text.split(",")]
    except ValueError:
        raise InvalidDimension(f"cannot read dimensions from {dims_text!r}") from None
    return rank_additivity(dims)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "rank":
            print(_rank(args.dims))
            return EXIT_OK
        cfg = load_config(args.config) if args.config else parse_config("")
        seed = args.seed if args.seed is not None else cfg.number("seed", int)
        body = COMMANDS[args.command](cfg, seed, args.samples)
        out = Path(args.out or f"{args.command}.json")
        write_report(out, args.command, body)
        if args.command == "bilipschitz":
            out.with_suffix(".csv").write_text(pairs_csv(body["pairs"]), encoding="utf-8")
            if body["warnings"]:
                print(f"warning: {body['warnings']} solver failures recorded in the report",
                      file=sys.stderr)
        print(out)
        return EXIT_OK
    except (DSLError, ConfigError, MismatchedSplit, NoSplit, InvalidDimension) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (GeometryError, np.linalg.LinAlgError, FloatingPointError, ArithmeticError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
