"""Batch experiment runner.

Subcommands::

    tables    VRF tables per product (CSV + markdown) and a cell manifest
    curves    error versus path count, one CSV row per cell
    speed     parallel engine against the single-worker reference loop
    validate  closed-form and finite-difference oracle checks

Settings come from an optional ``--config`` file of ``key = value`` lines
(lists comma-separated, ``#`` starts a comment); command-line flags win.
Exit status: 0 success, 1 validation failure, 2 configuration or I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .engine import METHOD_LABELS, METHODS, MethodSpec, run_methods
from .exceptions import ConfigurationError
from .products import PATH_PRODUCTS, MarketParams, ProductSpec
from .stats import GREEKS, aggregate, build_vrf_table
from .validation import run_validation

log = logging.getLogger("qmcgreeks")

DEFAULT_SEED = 2024


@dataclass
class ExperimentConfig:
    products: tuple = PATH_PRODUCTS
    strikes: tuple = (90.0, 100.0, 110.0)
    steps: tuple = (64, 256)
    methods: tuple = METHODS
    paths: int = 2**13
    runs: int = 50
    sweep: tuple = tuple(2**i for i in range(12, 20))
    max_paths: int = 2**16
    seed: int = DEFAULT_SEED
    out: str = "results"
    workers: int = field(default_factory=lambda: os.cpu_count() or 1)
    block_size: int = 64
    s0: float = 100.0
    sigma: float = 0.2
    r: float = 0.1
    T: float = 1.0

    def __post_init__(self):
        for p in self.products:
            if p not in PATH_PRODUCTS:
                raise ConfigurationError(f"unknown product {p!r}")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigurationError(f"unknown method {m!r}")
        if self.paths < 1 or self.runs < 1 or self.workers < 1:
            raise ConfigurationError("paths, runs and workers must be positive")
        if not self.strikes or not self.steps or not self.products or not self.methods:
            raise ConfigurationError("products, strikes, steps and methods must be non-empty")

    @property
    def market(self) -> MarketParams:
        return MarketParams(self.s0, self.sigma, self.r, self.T)

    @property
    def path_sweep(self) -> tuple:
        return tuple(p for p in self.sweep if p <= self.max_paths)


_LIST_KEYS = {"products": str, "strikes": float, "steps": int, "methods": str, "sweep": int}
_SCALAR_KEYS = {f.name: f.type for f in fields(ExperimentConfig) if f.name not in _LIST_KEYS}
_CASTS = {"int": int, "float": float, "str": str}


def _parse_int(text: str) -> int:
    text = text.strip()
    if text.startswith("2^"):
        return 2 ** int(text[2:])
    return int(float(text)) if "e" in text.lower() else int(text)


def parse_config(text: str) -> dict:
    """``key = value`` lines to a dict of typed overrides."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"config line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        try:
            if key in _LIST_KEYS:
                cast = _parse_int if _LIST_KEYS[key] is int else _LIST_KEYS[key]
                values[key] = tuple(cast(v.strip()) for v in value.split(",") if v.strip())
            elif key in _SCALAR_KEYS:
                cast = _CASTS[_SCALAR_KEYS[key]]
                values[key] = _parse_int(value) if cast is int else cast(value)
            else:
                raise ConfigurationError(f"config line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigurationError):
                raise
            raise ConfigurationError(f"config line {lineno}: bad value for {key}: {value!r}") from None
    return values


def build_config(args) -> ExperimentConfig:
    values = {}
    if args.config:
        try:
            values.update(parse_config(Path(args.config).read_text()))
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {args.config}: {exc}") from None
    for name in ("paths", "runs", "seed", "workers", "out", "max_paths"):
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    return ExperimentConfig(**values)


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def _prepare_out(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise OSError(f"output directory {out} is not writable: {exc}") from None
    return out


def _run_grid(cfg: ExperimentConfig, paths: int, methods) -> dict:
    """``{(product, K, d, method): [RunSummary]}`` for the configured grid."""
    mp = cfg.market
    results = {}
    for d in cfg.steps:
        specs = [ProductSpec(p, K, d) for p in cfg.products for K in cfg.strikes]
        for method in methods:
            ms = MethodSpec(method, paths, cfg.runs, seed=cfg.seed, block_size=cfg.block_size)
            log.info("running %s d=%d P=%d L=%d", method, d, paths, cfg.runs)
            for spec, runs in run_methods(mp, specs, ms, workers=cfg.workers).items():
                results[(spec.kind, spec.strike, d, method)] = runs
    return results


def run_tables(cfg: ExperimentConfig) -> list[Path]:
    out = _prepare_out(cfg)
    methods = ("lr-mc",) + tuple(m for m in cfg.methods if m != "lr-mc")
    results = _run_grid(cfg, cfg.paths, methods)
    written, manifest = [], {"paths": cfg.paths, "runs": cfg.runs, "seed": cfg.seed, "cells": []}
    labels = [METHOD_LABELS[m] for m in methods]
    for product in cfg.products:
        cells = {(K, d, m): runs for (p, K, d, m), runs in results.items() if p == product}
        table = build_vrf_table(product, cells, methods)
        rows = []
        for greek in GREEKS:
            for K in cfg.strikes:
                for d in cfg.steps:
                    rows.append([greek, _fmt(K), str(d)] + [_fmt(table.rows[(greek, K, d, m)]) for m in methods])
                    for m in methods:
                        est, sigma = table.errors[(greek, K, d, m)]
                        manifest["cells"].append({
                            "product": product, "greek": greek, "strike": K, "steps": d, "method": m,
                            "paths": cfg.paths, "runs": cfg.runs, "seed": cfg.seed,
                            "estimate": _fmt(est), "error": _fmt(sigma),
                            "vrf": _fmt(table.rows[(greek, K, d, m)]),
                        })
        header = ["Greek", "K", "d"] + labels
        path = out / f"vrf_{product}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
        md = out / f"vrf_{product}.md"
        lines = [f"VRFs for {product}, P={cfg.paths}, L={cfg.runs}, seed={cfg.seed}", "",
                 "| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
        lines += ["| " + " | ".join(r) + " |" for r in rows]
        md.write_text("\n".join(lines) + "\n")
        eff = out / f"efficiency_{product}.csv"
        with open(eff, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["Greek", "K", "d", "method", "seconds_per_run", "vrf", "cost_adjusted_vrf"])
            for greek in GREEKS:
                for K in cfg.strikes:
                    for d in cfg.steps:
                        for m in methods:
                            w.writerow([greek, _fmt(K), d, m, _fmt(table.seconds[(K, d, m)]),
                                        _fmt(table.rows[(greek, K, d, m)]),
                                        _fmt(table.efficiency_ratio(greek, K, d, m))])
        written += [path, md, eff]
    mpath = out / "manifest_tables.json"
    mpath.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    written.append(mpath)
    return written


def run_error_curves(cfg: ExperimentConfig) -> Path:
    sweep = cfg.path_sweep
    if not sweep:
        raise ConfigurationError("path sweep is empty after applying max_paths")
    out = _prepare_out(cfg)
    path = out / "curves.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["product", "K", "d", "method", "greek", "paths", "log2_paths", "estimate", "error", "log2_error"])
        for P in sweep:
            results = _run_grid(cfg, P, cfg.methods)
            for (product, K, d, m), runs in sorted(results.items()):
                for greek in GREEKS:
                    est, sigma = aggregate(r[greek] for r in runs)
                    l2 = np.log2(sigma) if sigma > 0 else float("-inf")
                    w.writerow([product, _fmt(K), d, m, greek, P, _fmt(np.log2(P)), _fmt(est), _fmt(sigma), _fmt(l2)])
    return path


def run_speed_report(cfg: ExperimentConfig) -> Path:
    out = _prepare_out(cfg)
    mp = cfg.market
    path = out / "speed.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "d", "paths", "runs", "workers", "reference_seconds", "parallel_seconds",
                    "ratio", "identical"])
        for d in cfg.steps:
            specs = [ProductSpec(p, K, d) for p in cfg.products for K in cfg.strikes]
            for m in cfg.methods:
                ms = MethodSpec(m, cfg.paths, cfg.runs, seed=cfg.seed, block_size=cfg.block_size)
                # untimed warm-up so one-off costs do not land on either side
                warm = MethodSpec(m, min(cfg.paths, 2048), 1, seed=cfg.seed, block_size=cfg.block_size)
                run_methods(mp, specs, warm, workers=cfg.workers)
                t0 = time.perf_counter()
                ref = run_methods(mp, specs, ms, workers=1)
                t1 = time.perf_counter()
                par = run_methods(mp, specs, ms, workers=cfg.workers)
                t2 = time.perf_counter()
                same = all(
                    [r.estimates for r in ref[s]] == [r.estimates for r in par[s]] for s in specs
                )
                w.writerow([m, d, cfg.paths, cfg.runs, cfg.workers, _fmt(t1 - t0), _fmt(t2 - t1),
                            _fmt((t1 - t0) / (t2 - t1)), same])
    return path


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value settings file")
    common.add_argument("--paths", type=_parse_int, help="paths per run (accepts 2^k)")
    common.add_argument("--runs", type=int, help="independent runs L")
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")
    p = argparse.ArgumentParser(prog="qmcgreeks", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("tables", parents=[common], help="VRF tables")
    curves = sub.add_parser("curves", parents=[common], help="error versus paths")
    curves.add_argument("--max-paths", dest="max_paths", type=_parse_int, help="cap on the path sweep")
    sub.add_parser("speed", parents=[common], help="parallel vs reference timing")
    sub.add_parser("validate", parents=[common], help="oracle checks")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = build_config(args)
        if args.command == "tables":
            for path in run_tables(cfg):
                print(path)
        elif args.command == "curves":
            print(run_error_curves(cfg))
        elif args.command == "speed":
            print(run_speed_report(cfg))
        elif args.command == "validate":
            paths = args.paths or 2**16
            results = run_validation(cfg.market, seed=cfg.seed, paths=paths)
            for r in results:
                print(r.line())
            return 0 if all(r.passed for r in results) else 1
    except (ConfigurationError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
