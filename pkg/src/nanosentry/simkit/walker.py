"""Particle random-walk oracle for the first hitting time of the FC.

The common flow moves CN, FC and molecule alike, so it cancels in relative
coordinates.  Before emission the CN-FC offset spreads for ``tx_slot * tau``
with the CN and FC diffusion; the molecule-FC offset then walks with
Gaussian steps of variance ``2 (D_p + D_fc) dt`` (the difference of the two
independent walks) until it changes sign, i.e. the paths cross.

Walkers far from the absorber are advanced ``M`` steps at once, only when
they sit at least ``SAFE_Z`` step-deviations ``sqrt(M)`` away; the chance that
the skipped fine walk would have crossed is below ``2 Q(SAFE_Z)`` (~1e-15).
Plain sign-change monitoring misses crossings between grid points and biases
early hits low by O(sqrt(dt)); the default therefore adds the Brownian-bridge
crossing test on every fine step.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from ..channel import LinkGeometry
from . import streams

SAFE_Z = 8.0
CHUNK = 1 << 17


def _steps(duration: float, dt: float) -> int:
    return int(math.floor(duration / dt + 1e-9))


def initial_offsets(geom: LinkGeometry, tx_slot: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """CN-FC offset at the emission instant ``tx_slot * tau``."""
    t_pre = tx_slot * geom.tau
    x = np.full(size, geom.d0)
    if geom.D_cn > 0:
        x += math.sqrt(2.0 * geom.D_cn * t_pre) * rng.standard_normal(size)
    if geom.D_fc > 0:
        x -= math.sqrt(2.0 * geom.D_fc * t_pre) * rng.standard_normal(size)
    return x


def first_hit_steps(x0: np.ndarray, step_sd: float, max_steps: int, rng: np.random.Generator,
                    bridge: bool = False) -> np.ndarray:
    """Index (1-based) of the first step at which the walk reaches or crosses 0.

    Returns ``0`` for walks still alive after ``max_steps``.  With
    ``bridge=True`` a same-sign fine step also counts as a hit with the
    Brownian-bridge crossing probability ``exp(-2 x_a x_b / step_sd**2)``,
    which turns the discrete walk into an exact continuous-path monitor.
    """
    n = x0.size
    hit = np.zeros(n, dtype=np.int64)
    x = x0.astype(float).copy()
    k = np.zeros(n, dtype=np.int64)
    idx = np.arange(n)
    inv = 1.0 / (SAFE_Z * step_sd)
    while idx.size:
        rem = max_steps - k
        m = np.floor((np.abs(x) * inv) ** 2)
        m = np.minimum(np.maximum(m, 1.0), rem).astype(np.int64)
        new = x + step_sd * np.sqrt(m) * rng.standard_normal(idx.size)
        crossed = x * new <= 0.0
        if bridge:
            fine = (m == 1) & ~crossed
            if fine.any():
                p = np.exp(-2.0 * x[fine] * new[fine] / step_sd**2)
                crossed[np.nonzero(fine)[0][rng.random(p.size) < p]] = True
        k += m
        hit[idx[crossed]] = k[crossed]
        keep = ~crossed & (k < max_steps)
        idx, x, k = idx[keep], new[keep], k[keep]
    return hit


@dataclass(frozen=True)
class WalkerRun:
    """Outcome of a walker ensemble; ``hit_steps == 0`` marks censored walkers."""

    hit_steps: np.ndarray
    dt: float
    max_steps: int

    @property
    def hit_times(self) -> np.ndarray:
        return np.where(self.hit_steps > 0, self.hit_steps * self.dt, np.inf)

    @property
    def absorbed_fraction(self) -> float:
        return float(np.count_nonzero(self.hit_steps)) / self.hit_steps.size

    @property
    def censored_fraction(self) -> float:
        return float(np.count_nonzero(self.hit_steps == 0)) / self.hit_steps.size

    def slot_counts(self, tau: float, lags: int) -> np.ndarray:
        """Walkers absorbed in ``[lag tau, (lag + 1) tau)`` for ``lag < lags``."""
        per_slot = tau / self.dt
        if abs(per_slot - round(per_slot)) > 1e-6 * per_slot:
            raise ValueError("tau must be an integer multiple of dt for slot binning")
        per_slot = int(round(per_slot))
        h = self.hit_steps[self.hit_steps > 0]
        return np.bincount((h - 1) // per_slot, minlength=lags)[:lags]


def random_walk_first_hits(geom: LinkGeometry, tx_slot: int, dt: float, max_time: float,
                           n_walkers: int, master_seed: int = 0, stream_key: tuple[int, ...] = (),
                           bridge: bool = True, workers: int | None = None) -> WalkerRun:
    """Simulate ``n_walkers`` emissions from slot ``tx_slot``.

    Walkers are processed in fixed chunks, each on its own stream derived from
    ``(master_seed, WALKERS, *stream_key, chunk)``, so the result is identical
    for any worker count.
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    if not max_time > dt:
        raise ValueError("max_time must exceed dt")
    if tx_slot < 1:
        raise ValueError("tx_slot must be >= 1")
    max_steps = _steps(max_time, dt)
    step_sd = math.sqrt(2.0 * geom.D * dt)
    n_chunks = -(-n_walkers // CHUNK)

    def run(c: int) -> np.ndarray:
        rng = streams.stream(master_seed, streams.WALKERS, *stream_key, c)
        size = min(CHUNK, n_walkers - c * CHUNK)
        x0 = initial_offsets(geom, tx_slot, size, rng)
        return first_hit_steps(x0, step_sd, max_steps, rng, bridge=bridge)

    workers = workers or streams.worker_count()
    if workers > 1 and n_chunks > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, range(n_chunks)))
    else:
        parts = [run(c) for c in range(n_chunks)]
    return WalkerRun(np.concatenate(parts), dt, max_steps)


def random_walk_first_hit(geom: LinkGeometry, tx_slot: int, dt: float, max_time: float,
                          rng: np.random.Generator, bridge: bool = True) -> float | None:
    """Single walker; absorption time in seconds or ``None`` if censored."""
    if not dt > 0 or not max_time > dt:
        raise ValueError("need dt > 0 and max_time > dt")
    x0 = initial_offsets(geom, tx_slot, 1, rng)
    h = first_hit_steps(x0, math.sqrt(2.0 * geom.D * dt), _steps(max_time, dt), rng, bridge)[0]
    return float(h * dt) if h > 0 else None


def binomial_ci(successes: int, trials: int, level: float = 0.99) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    z = norm.ppf(0.5 + level / 2)
    p = successes / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return centre - half, centre + half


def convergence_check(geom: LinkGeometry, tx_slot: int = 1, n_walkers: int = 200_000,
                      dt: float | None = None, master_seed: int = 0,
                      bridge: bool = True) -> tuple[float, float]:
    """Lag-0 hit fraction at ``dt`` and at ``dt / 2`` (same walker count)."""
    dt = dt or geom.tau / 5000
    est = []
    for i, step in enumerate((dt, dt / 2)):
        run = random_walk_first_hits(geom, tx_slot, step, geom.tau, n_walkers,
                                     master_seed, stream_key=(99, i), bridge=bridge)
        est.append(run.slot_counts(geom.tau, 1)[0] / n_walkers)
    return est[0], est[1]
