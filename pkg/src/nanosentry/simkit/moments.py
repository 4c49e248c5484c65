"""Brute-force sampling of one link's received count, for checking its moments."""

from __future__ import annotations

import math

import numpy as np

from ..config import ScenarioConfig
from ..linkstats import QTable, transmission_prior
from . import streams


def sample_link_counts(cfg: ScenarioConfig, link: int, rx_slot: int, draws: int,
                       table: QTable, signal: bool, master_seed: int | None = None) -> np.ndarray:
    """Draw the count of ``rx_slot`` with the current CN report fixed to ``signal``.

    Earlier reports are independent Bernoulli(transmission prior) draws, each
    emission's arrivals are exact binomials, and the counting-error variance
    is the expected count given the drawn history.
    """
    if rx_slot < 2:
        raise ValueError("rx_slot must be >= 2")
    seed = cfg.master_seed if master_seed is None else master_seed
    rng = streams.stream(seed, streams.MOMENTS, link, rx_slot, int(signal))
    profile = cfg.links[link]
    n = profile.n
    j = rx_slot - 1
    counts = np.zeros(draws)
    expected = np.full(draws, float(cfg.noise.mu_o))
    for lag in range(1, j):
        m = j - lag
        b = transmission_prior(m, profile, cfg.beta)
        q = table.q(lag, m + 1)
        emitted = np.where(rng.random(draws) < b, n, 0)
        counts += rng.binomial(emitted, q)
        expected += emitted * q
    if signal:
        q0 = table.q(0, rx_slot)
        counts += rng.binomial(n, q0, size=draws)
        expected += n * q0
    counts += rng.normal(cfg.noise.mu_o, math.sqrt(cfg.noise.var_o), size=draws)
    counts += rng.standard_normal(draws) * np.sqrt(np.maximum(expected, 0.0))
    return counts


def sample_moments(cfg: ScenarioConfig, link: int, rx_slot: int, draws: int,
                   table: QTable, master_seed: int | None = None) -> tuple[float, float, float, float]:
    """Sample ``(mu0, var0, mu1, var1)`` for one link and receive slot."""
    h0 = sample_link_counts(cfg, link, rx_slot, draws, table, False, master_seed)
    h1 = sample_link_counts(cfg, link, rx_slot, draws, table, True, master_seed)
    return float(h0.mean()), float(h0.var(ddof=1)), float(h1.mean()), float(h1.var(ddof=1))
