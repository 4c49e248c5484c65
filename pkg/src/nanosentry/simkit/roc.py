"""ROC curves traced by replacing the prior log-odds in every link's LRT."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from ..analysis import analyze, q_tables, scenario_moments
from ..config import ScenarioConfig
from ..errors import NanosentryError
from ..linkstats import QTable
from .trials import estimate_operating_points


@dataclass(frozen=True)
class RocCurve:
    rule: str
    points: tuple[tuple[float, float, float], ...]  # (qf_avg, qd_avg, lambda)
    provenance: Literal["analytic", "empirical"]
    gaps: tuple[tuple[float, str], ...] = field(default=())

    def as_array(self) -> np.ndarray:
        """``(m, 3)`` array of ``qf, qd, lambda``."""
        return np.array(self.points, dtype=float).reshape(-1, 3)


def parse_grid(spec: str) -> np.ndarray:
    """``"min:max:steps"`` -> evenly spaced values (inclusive)."""
    try:
        lo, hi, steps = spec.split(":")
        lo, hi, steps = float(lo), float(hi), int(steps)
    except ValueError:
        raise ValueError(f"grid must look like min:max:steps, got {spec!r}") from None
    if steps < 1 or (steps > 1 and not hi > lo):
        raise ValueError(f"invalid grid {spec!r}")
    return np.linspace(lo, hi, steps)


def _check_lambdas(lambdas: Sequence[float]) -> np.ndarray:
    lam = np.asarray(lambdas, dtype=float)
    if lam.ndim != 1 or lam.size == 0:
        raise ValueError("lambdas must be a nonempty sequence")
    d = np.diff(lam)
    if lam.size > 1 and not (np.all(d > 0) or np.all(d < 0)):
        raise ValueError("lambdas must be strictly monotone")
    return lam


def roc_sweep(cfg: ScenarioConfig, lambdas: Sequence[float],
              mode: Literal["analytic", "empirical"] = "analytic",
              tables: Sequence[QTable] | None = None) -> dict[str, RocCurve]:
    """One curve per configured rule; failures at a given lambda become gaps."""
    lam = _check_lambdas(lambdas)
    if mode not in ("analytic", "empirical"):
        raise ValueError(f"mode must be analytic or empirical, got {mode!r}")
    tables = tables if tables is not None else q_tables(cfg)
    moments = scenario_moments(cfg, tables)

    ok, results, gaps = [], [], []
    for x in lam:
        try:
            res = analyze(cfg, float(x), moments)
        except (NanosentryError, ValueError, ArithmeticError) as exc:
            gaps.append((float(x), str(exc)))
            continue
        ok.append(float(x))
        results.append(res)

    curves: dict[str, list] = {rule: [] for rule in cfg.rules}
    if mode == "analytic":
        for x, res in zip(ok, results):
            for rule in cfg.rules:
                a = res.averaged[rule]
                curves[rule].append((a.qf_avg, a.qd_avg, x))
    elif ok:
        K, l = len(cfg.links), cfg.slots
        thr = np.stack([r.thresholds(K, l) for r in results])
        estimates = estimate_operating_points(cfg, thr, tables)
        for x, est in zip(ok, estimates):
            for rule in cfg.rules:
                e = est[rule]
                curves[rule].append((e.qf_avg, e.qd_avg, x))
    return {rule: RocCurve(rule, tuple(pts), mode, tuple(gaps)) for rule, pts in curves.items()}
