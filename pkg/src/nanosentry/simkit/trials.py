"""Generative Monte Carlo of the full reporting chain.

Per trial: draw the abnormality state, let every CN decide in each of the
``l`` decision slots, push its molecules through the channel, add background
noise and counting error, threshold each link at the FC and fuse.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import norm

from ..analysis import analyze, q_tables
from ..config import ScenarioConfig
from ..errors import SimulationError
from ..linkstats import QTable
from . import streams

BLOCK = 4096
Z99 = float(norm.ppf(0.995))


@dataclass(frozen=True)
class TrialOutcome:
    truth: tuple[bool, ...]                     # abnormality state per slot
    per_slot_decisions: dict[str, tuple[bool, ...]]
    per_link_statistics: np.ndarray             # [decision slot - 1, link]
    cn_reports: np.ndarray                      # [decision slot - 1, link]


@dataclass(frozen=True)
class OperatingPointEstimate:
    rule: str
    qf_avg: float
    qd_avg: float
    qf_halfwidth: float
    qd_halfwidth: float
    h0_trials: int   # slot-trials drawn under H0
    h1_trials: int


def _arrival_probs(cfg: ScenarioConfig, tables: Sequence[QTable]) -> np.ndarray:
    """``[link, decision slot - 1, lag]`` arrival probabilities per emission."""
    l = cfg.slots
    out = np.zeros((len(cfg.links), l, l))
    for k, qt in enumerate(tables):
        for m in range(1, l + 1):
            for lag in range(l - m + 1):
                out[k, m - 1, lag] = qt.q(lag, m + 1)
    return out


class _Model:
    """Scenario constants shared by every block."""

    def __init__(self, cfg: ScenarioConfig, tables: Sequence[QTable] | None = None):
        tables = tables if tables is not None else q_tables(cfg)
        l, K = cfg.slots, len(cfg.links)
        self.cfg = cfg
        self.q = _arrival_probs(cfg, tables)
        self.n = np.array([p.n for p in cfg.links], dtype=np.int64)
        self.pd = np.array([[p.pd(j) for p in cfg.links] for j in range(1, l + 1)])
        self.pf = np.array([[p.pf(j) for p in cfg.links] for j in range(1, l + 1)])

    def statistics(self, rng: np.random.Generator, size: int):
        """Draw ``size`` trials.

        Returns the per-slot state ``(B, l)``, CN reports ``(B, l, K)`` and FC
        counts ``(B, l, K)``.
        """
        cfg = self.cfg
        l, K = cfg.slots, len(cfg.links)
        if cfg.truth_model == "persistent":
            truth = np.repeat((rng.random(size) < cfg.beta)[:, None], l, axis=1)
        else:
            truth = rng.random((size, l)) < cfg.beta
        p_report = np.where(truth[:, :, None], self.pd[None], self.pf[None])
        x = rng.random((size, l, K)) < p_report

        counts = np.zeros((size, l, K))
        expected = np.full((size, l, K), float(cfg.noise.mu_o))
        for k in range(K):
            n = self.n[k]
            if n == 0:
                continue
            for m in range(l):
                # One emission spreads its molecules over the remaining slots
                # (multinomial); each slot's share is Binomial(n x, q_lag).
                horizon = l - m
                q = self.q[k, m, :horizon]
                pvals = np.append(q, max(0.0, 1.0 - q.sum()))
                emitted = np.where(x[:, m, k], n, 0)
                split = rng.multinomial(emitted, pvals)[:, :horizon]
                counts[:, m:, k] += split
                expected[:, m:, k] += emitted[:, None] * q[None, :]
        noise = rng.normal(cfg.noise.mu_o, math.sqrt(cfg.noise.var_o), size=(size, l, K))
        counting = rng.standard_normal((size, l, K)) * np.sqrt(np.maximum(expected, 0.0))
        stats = counts + noise + counting
        if cfg.clamp_counts:
            np.maximum(stats, 0.0, out=stats)
        return truth, x, stats


def fused_decisions(stats: np.ndarray, thresholds: np.ndarray, rule: str) -> np.ndarray:
    """Per-slot FC decisions ``(..., B, l)`` for thresholds ``(..., l, K)``."""
    local = stats >= thresholds[..., None, :, :]
    return local.all(axis=-1) if rule == "and" else local.any(axis=-1)


def _block(model: _Model, thresholds: np.ndarray, index: int, size: int):
    """Integer co-occurrence sums of one block, for every threshold set and rule."""
    rng = streams.stream(model.cfg.master_seed, streams.TRIALS, index)
    truth, _, stats = model.statistics(rng, BLOCK)
    truth, stats = truth[:size], stats[:size]
    ind = {h: (truth == bool(h)).astype(np.int64) for h in (0, 1)}  # (B, l)
    out = {h: {"ii": ind[h].T @ ind[h]} for h in (0, 1)}
    for rule in model.cfg.rules:
        d = fused_decisions(stats, thresholds, rule).astype(np.int64)  # (P, B, l)
        for h in (0, 1):
            di = d * ind[h][None]
            out[h][rule] = (
                np.einsum("pbj,bk->pjk", di, ind[h]),  # sum_t I_j I_k d_j
                np.einsum("pbj,pbk->pjk", di, di),     # sum_t I_j I_k d_j d_k
            )
    return out


@dataclass
class _Totals:
    """Per-hypothesis sums accumulated over blocks (all integers)."""

    ii: np.ndarray
    di: np.ndarray
    dd: np.ndarray

    def rate_and_halfwidth(self, p: int) -> tuple[float, float]:
        """Slot-averaged decision rate and its 99% cluster-robust half-width.

        Trials are the independent units; the decisions of one trial are
        correlated through the shared reporting history (and, with a
        persistent state, through the state itself).
        """
        n = np.diag(self.ii).astype(float)
        hits = np.diag(self.di[p]).astype(float)
        l = n.size
        rate = hits / n
        a = 1.0 / (l * n)
        di, dd, ii = self.di[p], self.dd[p], self.ii
        # sum_t z_t**2 with z_t = sum_j a_j I_tj (d_tj - rate_j)
        s = dd - rate[None, :] * di - rate[:, None] * di.T + np.outer(rate, rate) * ii
        var = float(a @ s @ a)
        return float(rate.mean()), Z99 * math.sqrt(max(var, 0.0))


def default_thresholds(cfg: ScenarioConfig, tables: Sequence[QTable] | None = None) -> np.ndarray:
    return analyze(cfg, tables=tables).thresholds(len(cfg.links), cfg.slots)


def estimate_operating_points(cfg: ScenarioConfig, thresholds: np.ndarray | None = None,
                              tables: Sequence[QTable] | None = None,
                              workers: int | None = None) -> list[dict[str, OperatingPointEstimate]]:
    """Empirical ``(Q_F^l, Q_D^l)`` for one or more threshold sets.

    ``thresholds`` is ``(l, K)`` or ``(P, l, K)``; every set is applied to the
    same simulated statistics.  Each slot's rate is taken over the slots in
    the matching state and the slot rates are averaged.  Blocks of
    :data:`BLOCK` trials each use their own stream and every reduction is an
    integer sum, so results are bit-identical for any worker count.
    """
    if cfg.trials < 100:
        raise ValueError("need at least 100 trials")
    tables = tables if tables is not None else q_tables(cfg)
    if thresholds is None:
        thresholds = default_thresholds(cfg, tables)
    thresholds = np.asarray(thresholds, dtype=float)
    if thresholds.ndim == 2:
        thresholds = thresholds[None]
    model = _Model(cfg, tables)
    n_blocks = -(-cfg.trials // BLOCK)
    sizes = [min(BLOCK, cfg.trials - b * BLOCK) for b in range(n_blocks)]

    def run(b):
        return _block(model, thresholds, b, sizes[b])

    workers = workers or streams.worker_count()
    if workers > 1 and n_blocks > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, range(n_blocks)))
    else:
        parts = [run(b) for b in range(n_blocks)]

    ii = {h: sum(part[h]["ii"] for part in parts) for h in (0, 1)}
    for h, name in ((1, "H1"), (0, "H0")):
        if np.diag(ii[h]).min() == 0:
            raise SimulationError(
                f"no {name} slots were drawn in some slot (beta={cfg.beta}); "
                "the corresponding rate is undefined"
            )
    results: list[dict[str, OperatingPointEstimate]] = [dict() for _ in range(thresholds.shape[0])]
    for rule in cfg.rules:
        tot = {
            h: _Totals(ii[h], sum(part[h][rule][0] for part in parts),
                       sum(part[h][rule][1] for part in parts))
            for h in (0, 1)
        }
        for i in range(thresholds.shape[0]):
            qd, hd = tot[1].rate_and_halfwidth(i)
            qf, hf = tot[0].rate_and_halfwidth(i)
            results[i][rule] = OperatingPointEstimate(
                rule, qf, qd, hf, hd,
                h0_trials=int(np.trace(ii[0])), h1_trials=int(np.trace(ii[1])),
            )
    return results


def estimate_operating_point(cfg: ScenarioConfig, thresholds: np.ndarray | None = None,
                             tables: Sequence[QTable] | None = None) -> dict[str, OperatingPointEstimate]:
    return estimate_operating_points(cfg, thresholds, tables)[0]


def simulate_trial(cfg: ScenarioConfig, trial_index: int, thresholds: np.ndarray | None = None,
                   tables: Sequence[QTable] | None = None) -> TrialOutcome:
    """Reproduce a single trial exactly as it occurs inside the block estimator."""
    if not 0 <= trial_index < cfg.trials:
        raise IndexError(f"trial {trial_index} outside 0..{cfg.trials - 1}")
    tables = tables if tables is not None else q_tables(cfg)
    if thresholds is None:
        thresholds = default_thresholds(cfg, tables)
    model = _Model(cfg, tables)
    block, offset = divmod(trial_index, BLOCK)
    rng = streams.stream(cfg.master_seed, streams.TRIALS, block)
    truth, reports, stats = model.statistics(rng, BLOCK)
    stats = stats[offset]
    decisions = {
        rule: tuple(bool(d) for d in fused_decisions(stats[None], np.asarray(thresholds), rule)[0])
        for rule in cfg.rules
    }
    return TrialOutcome(
        truth=tuple(bool(t) for t in truth[offset]),
        per_slot_decisions=decisions,
        per_link_statistics=stats.copy(),
        cn_reports=reports[offset].copy(),
    )
