"""Command-line front end: read a scenario, run one mode, write CSV tables.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure,
3 validation gate failed.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .analysis import AnalyticResult, analyze, crossover, q_tables, scenario_moments
from .channel import first_hitting_pdf
from .config import ScenarioConfig, config_digest, loads_config, parse_config, serialize_config
from .errors import ConfigError, NanosentryError
from .simkit.roc import RocCurve, parse_grid, roc_sweep
from .simkit.trials import estimate_operating_points

log = logging.getLogger("nanosentry")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_GATE = 0, 1, 2, 3
MODES = ("analyze", "simulate", "roc", "validate", "pdf-dump")
DEFAULT_ROC_GRID = "-50:250:6001"
DEFAULT_T_GRID = "1e-4:1e1:200"


@dataclass(frozen=True)
class RunManifest:
    config_digest: str
    tool_version: str
    master_seed: int
    started: str
    finished: str
    mode: str


def fmt(x) -> str:
    """12 significant digits; blank for missing values."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.12g}"


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def shipped_scenarios() -> list[str]:
    root = resources.files("nanosentry") / "scenarios"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def load_scenario(ref: str) -> ScenarioConfig:
    """A file path, or the name of a shipped scenario (``mobile``)."""
    path = Path(ref)
    if path.exists() or ref not in shipped_scenarios():
        return parse_config(path)
    text = (resources.files("nanosentry") / "scenarios" / f"{ref}.cfg").read_text(encoding="utf-8")
    return loads_config(text)


# -- per-mode writers ---------------------------------------------------------

def _analyze(cfg: ScenarioConfig, out: Path) -> AnalyticResult:
    res = analyze(cfg)
    for k, name in enumerate(cfg.link_names):
        recs = res.link_table(k)
        if any(r.degenerate for r in recs):
            log.warning("link %s carries no signal (identical hypothesis moments); "
                        "its decisions follow the prior alone", name)
        weak = [r.rx_slot for r in recs if not r.gaussian_ok and not r.degenerate]
        if weak:
            log.warning("link %s: n*q0 <= 5, Gaussian approximation is rough", name)
        write_csv(out / f"link_{name}.csv",
                  ["slot", "mu0", "var0", "mu1", "var1", "threshold", "pd_fc", "pf_fc"],
                  ([r.rx_slot - 1, r.moments.mu0, r.moments.var0, r.moments.mu1, r.moments.var1,
                    r.threshold, r.op.pd_fc, r.op.pf_fc] for r in recs))
    for rule in cfg.rules:
        write_csv(out / f"fusion_{rule}.csv", ["slot", "qd", "qf"],
                  ([j + 1, f.qd, f.qf] for j, f in enumerate(res.per_slot[rule])))
    write_csv(out / "summary.csv", ["rule", "qf_avg", "qd_avg", "slots"],
              ([rule, a.qf_avg, a.qd_avg, a.slots] for rule, a in res.averaged.items()))
    return res


def _simulate(cfg: ScenarioConfig, out: Path) -> None:
    est = estimate_operating_points(cfg)[0]
    write_csv(out / "estimates.csv",
              ["rule", "qf_avg", "qd_avg", "qf_halfwidth", "qd_halfwidth", "h0_slot_trials", "h1_slot_trials"],
              ([r, e.qf_avg, e.qd_avg, e.qf_halfwidth, e.qd_halfwidth, e.h0_trials, e.h1_trials]
               for r, e in est.items()))


def write_roc(curves: dict[str, RocCurve], out: Path, stem: str) -> None:
    """``<stem>.csv`` in the fixed schema plus a gnuplot ``<stem>.dat``."""
    table: dict[float, dict[str, tuple[float, float]]] = {}
    for rule, c in curves.items():
        for qf, qd, lam in c.points:
            table.setdefault(lam, {})[rule] = (qf, qd)
    rows = []
    for lam in sorted(table):
        row = [lam]
        for rule in ("and", "or"):
            row += list(table[lam].get(rule, (None, None)))
        rows.append(row)
    write_csv(out / f"{stem}.csv", ["lambda", "qf_and", "qd_and", "qf_or", "qd_or"], rows)

    # gnuplot: one indexed block per rule, sorted by false-alarm rate
    with open(out / f"{stem}.dat", "w", encoding="utf-8", newline="\n") as fh:
        for i, (rule, c) in enumerate(curves.items()):
            if i:
                fh.write("\n\n")
            fh.write(f"# rule={rule} provenance={c.provenance}\n# qf qd lambda\n")
            for qf, qd, lam in sorted(c.points):
                fh.write(f"{fmt(qf)} {fmt(qd)} {fmt(lam)}\n")
    gaps = next(iter(curves.values())).gaps if curves else ()
    if gaps:
        log.warning("%d lambda values produced no point", len(gaps))
        write_csv(out / f"{stem}_gaps.csv", ["lambda", "reason"], gaps)


def _roc(cfg: ScenarioConfig, out: Path, lambdas: np.ndarray, empirical: bool) -> dict[str, RocCurve]:
    tables = q_tables(cfg)
    curves = roc_sweep(cfg, lambdas, "analytic", tables)
    write_roc(curves, out, "roc")
    if {"and", "or"} <= curves.keys():
        pts = crossover(curves["and"].as_array()[:, :2], curves["or"].as_array()[:, :2])
        write_csv(out / "crossover.csv", ["qf", "qd"], pts)
    if empirical:
        write_roc(roc_sweep(cfg, lambdas, "empirical", tables), out, "roc_empirical")
    return curves


def _validate(cfg: ScenarioConfig, out: Path, lambdas: np.ndarray | None, tolerance: float) -> bool:
    """Compare analytic and simulated operating points; True when all agree."""
    tables = q_tables(cfg)
    moments = scenario_moments(cfg, tables)
    points: list[tuple[str, float | None]] = [("prior", None)]
    if lambdas is not None:
        points += [("lambda", float(x)) for x in lambdas]
    results = [analyze(cfg, lam, moments) for _, lam in points]
    thr = np.stack([r.thresholds(len(cfg.links), cfg.slots) for r in results])
    estimates = estimate_operating_points(cfg, thr, tables)
    rows, ok = [], True
    for (kind, lam), res, est in zip(points, results, estimates):
        for rule in cfg.rules:
            a, e = res.averaged[rule], est[rule]
            diff = max(abs(a.qf_avg - e.qf_avg), abs(a.qd_avg - e.qd_avg))
            passed = diff <= tolerance
            ok &= passed
            rows.append([kind, lam, rule, a.qf_avg, e.qf_avg, e.qf_halfwidth,
                         a.qd_avg, e.qd_avg, e.qd_halfwidth, diff, passed])
            if not passed:
                log.error("%s %s %s: |analytic - empirical| = %.4f > %.4f",
                          kind, "" if lam is None else fmt(lam), rule, diff, tolerance)
    write_csv(out / "validation.csv",
              ["point", "lambda", "rule", "qf_analytic", "qf_empirical", "qf_halfwidth",
               "qd_analytic", "qd_empirical", "qd_halfwidth", "max_abs_diff", "pass"], rows)
    return ok


def _pdf_dump(cfg: ScenarioConfig, out: Path, t: np.ndarray, tx_slot: int) -> None:
    cols = [first_hitting_pdf(t, tx_slot, p.geom) for p in cfg.links]
    write_csv(out / "pdf.csv", ["t", *cfg.link_names], zip(t, *cols))


def run(mode: str, cfg: ScenarioConfig, output_dir: str | Path, *, lambdas: np.ndarray | None = None,
        tolerance: float = 0.02, t_grid: np.ndarray | None = None, tx_slot: int = 1,
        empirical: bool = False) -> int:
    """Execute one mode, writing artifacts and ``manifest.json`` into ``output_dir``.

    Numerical errors propagate; :func:`main` maps them to exit codes.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = datetime.now(timezone.utc).isoformat()
    (out / "config.cfg").write_text(serialize_config(cfg), encoding="utf-8", newline="\n")

    code = EXIT_OK
    if mode == "analyze":
        _analyze(cfg, out)
    elif mode == "simulate":
        _simulate(cfg, out)
    elif mode == "roc":
        _roc(cfg, out, lambdas if lambdas is not None else parse_grid(DEFAULT_ROC_GRID), empirical)
    elif mode == "validate":
        if not _validate(cfg, out, lambdas, tolerance):
            code = EXIT_GATE
    else:
        grid = t_grid if t_grid is not None else np.geomspace(*_log_grid(DEFAULT_T_GRID))
        _pdf_dump(cfg, out, grid, tx_slot)

    manifest = RunManifest(config_digest(cfg), __version__, cfg.master_seed, started,
                           datetime.now(timezone.utc).isoformat(), mode)
    (out / "manifest.json").write_text(json.dumps(asdict(manifest), indent=2) + "\n",
                                       encoding="utf-8", newline="\n")
    return code


def verify_manifest(output_dir: str | Path) -> bool:
    """Recompute the digest of the saved canonical config and compare."""
    out = Path(output_dir)
    stored = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    cfg = parse_config(out / "config.cfg")
    return config_digest(cfg) == stored["config_digest"]


def _log_grid(spec: str) -> tuple[float, float, int]:
    lo, hi, steps = spec.split(":")
    lo, hi, steps = float(lo), float(hi), int(steps)
    if not (0 < lo < hi) or steps < 2:
        raise ValueError(f"time grid needs 0 < min < max and steps >= 2, got {spec!r}")
    return lo, hi, steps


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nanosentry", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="mode", required=True, parser_class=_Parser)
    for mode in MODES:
        s = sub.add_parser(mode)
        s.add_argument("--config", required=True,
                       help="scenario file, or the name of a shipped scenario "
                            f"({', '.join(shipped_scenarios())})")
        s.add_argument("--out", default=".", help="output directory (default: .)")
        s.add_argument("--seed", type=int, help="override the master seed")
        s.add_argument("--trials", type=int, help="override the trial count")
        s.add_argument("--rule", choices=("and", "or", "both"), help="override the fusion rule")
        s.add_argument("--lambda-grid", metavar="MIN:MAX:STEPS",
                       help=f"log-odds sweep (roc default {DEFAULT_ROC_GRID}; "
                            "validate checks only the prior thresholds unless given)")
        s.add_argument("--tolerance", type=float, default=0.02,
                       help="validation gate on |analytic - empirical| (default 0.02)")
        if mode == "roc":
            s.add_argument("--empirical", action="store_true",
                           help="also trace the simulated curve")
        if mode == "pdf-dump":
            s.add_argument("--t-grid", default=DEFAULT_T_GRID, metavar="MIN:MAX:STEPS",
                           help=f"log-spaced times after emission, seconds (default {DEFAULT_T_GRID})")
            s.add_argument("--tx-slot", type=int, default=1)
    return p


def _join_grid_values(argv: list[str]) -> list[str]:
    """Let grids that start with a minus sign follow their flag as a separate word."""
    out, i = [], 0
    while i < len(argv):
        if argv[i] in ("--lambda-grid", "--t-grid") and i + 1 < len(argv):
            out.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s: %(message)s", stream=sys.stderr)
    parser = build_parser()
    args = parser.parse_args(_join_grid_values(sys.argv[1:] if argv is None else list(argv)))
    try:
        cfg = load_scenario(args.config)
        changes = {k: v for k, v in (("master_seed", args.seed), ("trials", args.trials),
                                     ("rule", args.rule)) if v is not None}
        if changes:
            cfg = cfg.with_(**changes)
        lambdas = parse_grid(args.lambda_grid) if args.lambda_grid else None
        t_grid = np.geomspace(*_log_grid(args.t_grid)) if args.mode == "pdf-dump" else None
        if not args.tolerance >= 0:
            raise ValueError("tolerance must be >= 0")
    except (ConfigError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    try:
        return run(args.mode, cfg, args.out, lambdas=lambdas, tolerance=args.tolerance,
                   t_grid=t_grid, tx_slot=getattr(args, "tx_slot", 1),
                   empirical=getattr(args, "empirical", False))
    except NanosentryError as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    except (ValueError, ArithmeticError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
