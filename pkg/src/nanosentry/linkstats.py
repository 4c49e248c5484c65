"""Gaussian moments of the FC's received count for one link and one receive slot.

Slot bookkeeping: the CN decision ``x[m]`` (decision slot ``m``) is emitted in
slot ``m + 1``.  The count observed in receive slot ``j + 1`` therefore holds
the signal of ``x[j]`` (lag 0) plus stray molecules of ``x[j - 1] .. x[1]``
(lags ``1 .. j - 1``), background noise and counting error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channel import LinkGeometry, QuadratureOptions, hitting_probability


def _as_probs(values, name: str) -> tuple[float, ...]:
    if np.ndim(values) == 0:
        values = (values,)
    out = tuple(float(v) for v in values)
    if not out:
        raise ValueError(f"{name} must not be empty")
    for v in out:
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} entries must lie in [0, 1], got {v}")
    return out


@dataclass(frozen=True)
class CnProfile:
    """Local detection quality and molecule budget of one CN.

    ``pd_cn``/``pf_cn`` are per-decision-slot sequences; a single value is
    broadcast to every slot.
    """

    pd_cn: tuple[float, ...]
    pf_cn: tuple[float, ...]
    n: int
    geom: LinkGeometry

    def __post_init__(self) -> None:
        object.__setattr__(self, "pd_cn", _as_probs(self.pd_cn, "pd_cn"))
        object.__setattr__(self, "pf_cn", _as_probs(self.pf_cn, "pf_cn"))
        if int(self.n) != self.n or self.n < 0:
            raise ValueError(f"n must be a non-negative integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))

    @staticmethod
    def _pick(seq: tuple[float, ...], slot: int) -> float:
        if slot < 1:
            raise IndexError(f"decision slot must be >= 1, got {slot}")
        if len(seq) == 1:
            return seq[0]
        if slot > len(seq):
            raise IndexError(f"decision slot {slot} outside configured range 1..{len(seq)}")
        return seq[slot - 1]

    def pd(self, slot: int) -> float:
        return self._pick(self.pd_cn, slot)

    def pf(self, slot: int) -> float:
        return self._pick(self.pf_cn, slot)


@dataclass(frozen=True)
class NoiseModel:
    mu_o: float
    var_o: float

    def __post_init__(self) -> None:
        if self.var_o < 0:
            raise ValueError(f"var_o must be >= 0, got {self.var_o}")


@dataclass(frozen=True)
class HypothesisMoments:
    mu0: float
    var0: float
    mu1: float
    var1: float


@dataclass(frozen=True)
class QTable:
    """Per-slot hitting probabilities of one link.

    In lag mode ``values`` has a single row (emission slot 1 for every
    transmission).  In absolute mode row ``r`` holds emission slot ``r + 1``.
    """

    values: np.ndarray
    absolute: bool = False

    def q(self, lag: int, tx_slot: int = 1) -> float:
        row = tx_slot - 1 if self.absolute else 0
        return float(self.values[row, lag])


def build_q_table(geom: LinkGeometry, slots: int, absolute: bool = False,
                  opts: QuadratureOptions | None = None) -> QTable:
    """Tabulate q for lags ``0 .. slots - 1``.

    Absolute mode covers emission slots ``1 .. slots + 1`` (decision ``x[m]``
    leaves in slot ``m + 1``).
    """
    tx_slots = range(1, slots + 2) if absolute else (1,)
    values = np.array([[hitting_probability(lag, i, geom, opts) for lag in range(slots)]
                       for i in tx_slots])
    values.setflags(write=False)
    return QTable(values, absolute)


def gaussian_approx_valid(n: int, q0: float) -> bool:
    """Rule of thumb for replacing Binomial(n, q0) by its Gaussian moments."""
    return n * q0 > 5 and n * (1.0 - q0) > 5


def transmission_prior(slot: int, profile: CnProfile, beta: float) -> float:
    """Marginal probability that the CN reports an abnormality in decision ``slot``."""
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    return profile.pd(slot) * beta + profile.pf(slot) * (1.0 - beta)


def null_moments(rx_slot: int, profile: CnProfile, noise: NoiseModel, beta: float,
                 q_table: QTable) -> tuple[float, float]:
    """Mean and variance of the count in ``rx_slot`` when the current CN is silent.

    Each earlier transmission is a Bernoulli(beta_k) mixture of
    Binomial(n, q_lag); the counting-error variance equals the mean count.
    """
    if rx_slot < 2:
        raise ValueError(f"rx_slot must be >= 2, got {rx_slot}")
    j = rx_slot - 1
    n = profile.n
    mean_isi = 0.0
    var_isi = 0.0
    for lag in range(1, j):
        m = j - lag
        b = transmission_prior(m, profile, beta)
        q = q_table.q(lag, m + 1)
        nq = n * q
        mean_isi += b * nq
        var_isi += b * nq * (1.0 - q) + b * (1.0 - b) * nq * nq
    mu0 = mean_isi + noise.mu_o
    var0 = var_isi + noise.var_o + mu0
    return mu0, var0


def alt_moments(null: tuple[float, float], n: int, q0: float) -> tuple[float, float]:
    """Add the current-slot signal (and its counting error) to the null moments."""
    if not 0.0 <= q0 <= 1.0:
        raise ValueError(f"q0 must lie in [0, 1], got {q0}")
    mu0, var0 = null
    return n * q0 + mu0, n * q0 * (2.0 - q0) + var0


def link_moments(rx_slot: int, profile: CnProfile, noise: NoiseModel, beta: float,
                 q_table: QTable) -> HypothesisMoments:
    null = null_moments(rx_slot, profile, noise, beta, q_table)
    q0 = q_table.q(0, rx_slot)
    mu1, var1 = alt_moments(null, profile.n, q0)
    return HypothesisMoments(null[0], null[1], mu1, var1)
