"""
Command-line entry point.

    zklab <subcommand> [--config FILE] [--out DIR] [--threads N] [--tol-scale F] [--seed S]

Exit status: 0 when every assertion passed, 2 when nothing failed but a
window or contamination guard made a result inconclusive, 1 on failures and errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import platform
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from . import experiments as xp
from . import suites
from .config import LabConfig, load_config
from .errors import ConfigError
from .report import Report, atomic_write, canonical_hash
from .spectral import set_threads

# subcommand -> config section
JOBS = {
    "fundsol": "fundsol",
    "evolve": "evolve",
    "equivalence": "equivalence",
    "weights": "weights",
    "interp": "interp",
    "carleman": "carleman",
    "smoothing": "smoothing",
    "decay15": "decay15",
    "persistence": "persistence",
    "annulus": "annulus",
}
# order used by `all`: spectral self-tests first
ALL_ORDER = ("spectral", "fundsol", "evolve", "equivalence", "weights", "interp", "carleman", "smoothing",
             "decay15", "persistence", "annulus")
SUBCOMMANDS = tuple(JOBS) + ("all",)

# experiment fields scaled by --tol-scale
_EXPERIMENT_TOLERANCES = {
    "decay15": ("w_cap", "contamination_limit"),
    "persistence": ("spread_limit", "contamination_limit", "mirror_tol"),
    "annulus": ("refine_tol",),
}

EXIT_PASS, EXIT_FAIL, EXIT_INCONCLUSIVE = 0, 1, 2


def run_job(name: str, cfg: LabConfig) -> Report:
    params = cfg.section(name)
    ts = cfg.globals.tol_scale
    seed = cfg.globals.seed
    if name in _EXPERIMENT_TOLERANCES:
        params = replace(params, **{k: getattr(params, k) * ts for k in _EXPERIMENT_TOLERANCES[name]})
        runner = {"decay15": xp.run_decay15, "persistence": xp.run_persistenceB,
                  "annulus": xp.run_annulus_trend}[name]
        return runner(params)
    fn = getattr(suites, f"run_{name}")
    if name in ("interp", "carleman", "smoothing"):
        return fn(params, tol_scale=ts, seed=seed)
    return fn(params, tol_scale=ts)


def _versions() -> dict:
    return {"zklab": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__}


def emit_report(report: Report, name: str, cfg: LabConfig, out: Path, wall: float) -> Path:
    """Write every table as CSV, then the JSON envelope (its presence marks completion)."""
    canon = cfg.canonical(name)
    digest = canonical_hash(canon)[:8]
    stem = f"{name}-{digest}"
    written = []
    try:
        for i, table in enumerate(report.tables):
            fname = f"{stem}.csv" if i == 0 else f"{stem}-{table.name}.csv"
            atomic_write(out / fname, table.to_csv())
            written.append(fname)
        envelope = {
            "subcommand": name,
            "status": report.status,
            "config_hash": canonical_hash(canon),
            "config": canon,
            "versions": _versions(),
            "wall_time_s": wall,
            "threads": cfg.globals.threads,
            "assertions": [a.as_dict() for a in report.assertions],
            "inconclusive": report.inconclusive,
            "metadata": report.metadata,
            "csv": written,
            "tables": [t.name for t in report.tables],
        }
        path = out / f"{stem}.json"
        atomic_write(path, json.dumps(envelope, indent=2, sort_keys=True, default=_jsonable) + "\n")
    except BaseException:
        for fname in written:
            (out / fname).unlink(missing_ok=True)
        raise
    return path


def _jsonable(o):
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    if dataclasses.is_dataclass(o):
        return dataclasses.asdict(o)
    if isinstance(o, (tuple, set)):
        return list(o)
    return str(o)


def _exit_code(statuses: list[str]) -> int:
    if any(s in ("fail", "error") for s in statuses):
        return EXIT_FAIL
    if any(s == "inconclusive" for s in statuses):
        return EXIT_INCONCLUSIVE
    return EXIT_PASS


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit with status 1
        self.print_usage(sys.stderr)
        self.exit(EXIT_FAIL, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="zklab", description="Numerical checks for the Zakharov-Kuznetsov unique continuation lab.")
    p.add_argument("subcommand", choices=SUBCOMMANDS, help="module check or experiment to run; 'all' runs the suite")
    p.add_argument("--config", type=Path, default=None, help="TOML config (default: the shipped defaults)")
    p.add_argument("--out", type=Path, default=None, help="output directory (default: $ZKLAB_OUT or ./zklab-out)")
    p.add_argument("--threads", type=int, default=None, help="FFT worker threads")
    p.add_argument("--tol-scale", type=float, default=None, help="factor applied to every tolerance")
    p.add_argument("--seed", type=int, default=None, help="seed for the Carleman, smoothing and interpolation corpora")
    return p


def _resolve(args) -> tuple[LabConfig, Path]:
    cfg = load_config(args.config)
    g = cfg.globals
    overrides = {}
    if args.threads is not None:
        overrides["threads"] = args.threads
    if args.tol_scale is not None:
        overrides["tol_scale"] = args.tol_scale
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        try:
            g = replace(g, **overrides)
        except ValueError as exc:
            raise ConfigError(f"command line: {exc}") from exc
        cfg = LabConfig(g, cfg.sections)
    out = args.out or (Path(g.out) if g.out else None) or Path(os.environ.get("ZKLAB_OUT", "zklab-out"))
    return cfg, out


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg, out = _resolve(args)
        out.mkdir(parents=True, exist_ok=True)
    except (ConfigError, OSError) as exc:
        print(f"zklab: {exc}", file=sys.stderr)
        return EXIT_FAIL
    set_threads(cfg.globals.threads)
    names = ALL_ORDER if args.subcommand == "all" else (JOBS[args.subcommand],)
    statuses = []
    summary = []
    for name in names:
        start = time.perf_counter()
        try:
            report = run_job(name, cfg)
            path = emit_report(report, name, cfg, out, time.perf_counter() - start)
            status = report.status
            failed = [a.name for a in report.assertions if a.passed is False]
            detail = f"{path.name}" + (f" failed: {', '.join(failed)}" if failed else "")
        except Exception as exc:  # surfaced as exit status 1 with context
            status, detail = "error", f"{type(exc).__name__}: {exc}"
        statuses.append(status)
        summary.append({"subcommand": name, "status": status})
        print(f"{name:12s} {status:12s} {detail}", flush=True)
    if args.subcommand == "all":
        digest = canonical_hash([cfg.canonical(n) for n in names])
        atomic_write(out / f"all-{digest[:8]}.json",
                     json.dumps({"subcommand": "all", "config_hash": digest, "jobs": summary,
                                 "versions": _versions()}, indent=2, sort_keys=True) + "\n")
    return _exit_code(statuses)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
