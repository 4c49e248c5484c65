"""Closed-form scenario evaluation: per-link operating points, fusion, slot averages."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import ScenarioConfig
from .detector import LinkOperatingPoint, link_operating_point, lrt_threshold, optimal_threshold
from .fusion import (
    AveragedPerformance,
    FusionResult,
    LinkConditionals,
    average_over_slots,
    fuse,
    link_conditionals,
)
from .linkstats import (
    HypothesisMoments,
    QTable,
    build_q_table,
    gaussian_approx_valid,
    link_moments,
    transmission_prior,
)


@dataclass(frozen=True)
class LinkSlotRecord:
    link: int
    rx_slot: int
    moments: HypothesisMoments
    beta_tx: float
    threshold: float
    op: LinkOperatingPoint
    conditionals: LinkConditionals
    gaussian_ok: bool
    degenerate: bool


@dataclass(frozen=True)
class AnalyticResult:
    records: tuple[LinkSlotRecord, ...]
    per_slot: dict[str, tuple[FusionResult, ...]]
    averaged: dict[str, AveragedPerformance]
    log_odds: float | None

    def thresholds(self, n_links: int, slots: int) -> np.ndarray:
        """Thresholds as an array indexed ``[decision slot - 1, link]``."""
        out = np.empty((slots, n_links))
        for r in self.records:
            out[r.rx_slot - 2, r.link] = r.threshold
        return out

    def link_table(self, link: int) -> list[LinkSlotRecord]:
        return [r for r in self.records if r.link == link]


def q_tables(cfg: ScenarioConfig) -> tuple[QTable, ...]:
    absolute = cfg.isi_indexing == "absolute"
    return tuple(build_q_table(p.geom, cfg.slots, absolute, cfg.quadrature) for p in cfg.links)


def scenario_moments(cfg: ScenarioConfig,
                     tables: Sequence[QTable] | None = None) -> list[list[HypothesisMoments]]:
    """Moments indexed ``[link][decision slot - 1]`` (receive slots 2 .. l + 1)."""
    tables = tables if tables is not None else q_tables(cfg)
    return [
        [link_moments(j + 1, p, cfg.noise, cfg.beta, qt) for j in range(1, cfg.slots + 1)]
        for p, qt in zip(cfg.links, tables)
    ]


def _prior_log_odds(b: float) -> float:
    if b <= 0.0:
        return math.inf
    if b >= 1.0:
        return -math.inf
    return math.log((1.0 - b) / b)


def analyze(cfg: ScenarioConfig, log_odds: float | None = None,
            moments: list[list[HypothesisMoments]] | None = None,
            tables: Sequence[QTable] | None = None) -> AnalyticResult:
    """Evaluate every link and slot, then fuse under the configured rules.

    With ``log_odds=None`` each link uses its own transmission prior in the
    LRT threshold; otherwise ``log_odds`` replaces the prior-odds term on every
    link (ROC sweeps).
    """
    if moments is None:
        tables = tables if tables is not None else q_tables(cfg)
        moments = scenario_moments(cfg, tables)
    records = []
    by_slot: list[list[LinkConditionals]] = [[] for _ in range(cfg.slots)]
    for k, profile in enumerate(cfg.links):
        for j in range(1, cfg.slots + 1):
            m = moments[k][j - 1]
            b = transmission_prior(j, profile, cfg.beta)
            degenerate = m.var1 == m.var0 and m.mu1 == m.mu0
            if log_odds is None and not degenerate and 0.0 < b < 1.0:
                thr = optimal_threshold(m, b)
            else:
                thr = lrt_threshold(m, _prior_log_odds(b) if log_odds is None else log_odds)
            op = link_operating_point(m, thr)
            cond = link_conditionals(op, profile.pd(j), profile.pf(j))
            q0 = m.mu1 - m.mu0
            records.append(LinkSlotRecord(
                link=k, rx_slot=j + 1, moments=m, beta_tx=b, threshold=thr, op=op,
                conditionals=cond,
                gaussian_ok=gaussian_approx_valid(profile.n, q0 / profile.n if profile.n else 0.0),
                degenerate=degenerate,
            ))
            by_slot[j - 1].append(cond)
    per_slot = {rule: tuple(fuse(links, rule) for links in by_slot) for rule in cfg.rules}
    averaged = {rule: average_over_slots(per_slot[rule]) for rule in cfg.rules}
    return AnalyticResult(tuple(records), per_slot, averaged, log_odds)


def crossover(curve_and: np.ndarray, curve_or: np.ndarray, grid: int = 20001) -> list[tuple[float, float]]:
    """Points where the AND and OR ROC curves intersect.

    Each curve is an ``(m, 2)`` array of ``(qf, qd)`` points; both are
    interpolated on a common false-alarm grid restricted to their overlap.
    """
    def prep(c):
        c = np.asarray(c, dtype=float)
        c = c[np.isfinite(c).all(axis=1)]
        order = np.lexsort((c[:, 1], c[:, 0]))
        c = c[order]
        qf, idx = np.unique(c[:, 0], return_index=True)
        return qf, c[idx, 1]

    fa, da = prep(curve_and)
    fo, do = prep(curve_or)
    lo, hi = max(fa[0], fo[0]), min(fa[-1], fo[-1])
    if not hi > lo:
        return []
    x = np.linspace(lo, hi, grid)
    ya = np.interp(x, fa, da)
    yo = np.interp(x, fo, do)
    diff = yo - ya
    # Sign changes between consecutive nonzero differences; a run of exact
    # zeros between them is a crossing at the run's middle.  Shared endpoints
    # such as (1, 1) never register.
    nz = np.nonzero(diff)[0]
    out = []
    for a, b in zip(nz[:-1], nz[1:]):
        if np.sign(diff[a]) == np.sign(diff[b]):
            continue
        if b == a + 1:
            t = diff[a] / (diff[a] - diff[b])
            xc = x[a] + t * (x[b] - x[a])
        else:
            xc = 0.5 * (x[a + 1] + x[b - 1])
        out.append((float(xc), float(np.interp(xc, fa, da))))
    return out
