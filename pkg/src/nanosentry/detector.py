"""Single-threshold likelihood-ratio test between two Gaussians at the FC."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .errors import DegenerateVarianceError, NegativeDiscriminantError
from .linkstats import HypothesisMoments

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class LinkOperatingPoint:
    threshold: float
    pd_fc: float
    pf_fc: float


def q_function(x):
    """Standard normal upper tail, ``0.5 * erfc(x / sqrt(2))``."""
    if np.ndim(x) == 0:
        return 0.5 * math.erfc(x / _SQRT2)
    return 0.5 * erfc(np.asarray(x, dtype=float) / _SQRT2)


def _alpha_and_offset(m: HypothesisMoments) -> tuple[float, float, float]:
    dv = m.var1 - m.var0
    if not dv > 0:
        raise DegenerateVarianceError(
            f"var1 ({m.var1}) must exceed var0 ({m.var0}); the link carries no signal"
        )
    alpha = (m.mu1 * m.var0 - m.mu0 * m.var1) / dv
    offset = (m.mu1**2 * m.var0 - m.mu0**2 * m.var1) / dv
    return dv, alpha, offset


def threshold_from_log_odds(m: HypothesisMoments, log_odds: float) -> float:
    """Upper-branch LRT boundary for a given ``ln((1 - b) / b)`` term.

    Raises on a degenerate variance pair or a negative discriminant; see
    :func:`lrt_threshold` for the resolving variant.
    """
    dv, alpha, offset = _alpha_and_offset(m)
    log_term = log_odds + 0.5 * math.log(m.var1 / m.var0)
    gamma = 2.0 * m.var1 * m.var0 / dv * log_term + alpha**2 + offset
    if gamma < 0:
        raise NegativeDiscriminantError(
            f"gamma = {gamma:.6g} < 0: the weighted likelihoods never cross"
        )
    return math.sqrt(gamma) - alpha


def optimal_threshold(m: HypothesisMoments, beta_tx: float) -> float:
    """Threshold on the received count given the transmission prior ``beta_tx``."""
    if not 0.0 < beta_tx < 1.0:
        raise ValueError(f"beta_tx must lie in (0, 1), got {beta_tx}")
    return threshold_from_log_odds(m, math.log((1.0 - beta_tx) / beta_tx))


def lrt_threshold(m: HypothesisMoments, log_odds: float) -> float:
    """Like :func:`threshold_from_log_odds`, resolving the edge cases.

    A negative discriminant means the prior-weighted H1 likelihood dominates
    everywhere, so the test always decides H1 (``-inf``).  A link whose
    moments do not differ is decided on prior odds alone (``-inf`` or ``+inf``);
    equal variances with distinct means give the linear LRT boundary.  Only
    ``var1 < var0`` still raises :class:`DegenerateVarianceError`.
    """
    if m.var1 == m.var0:
        if m.mu1 == m.mu0:
            return -math.inf if log_odds < 0 else math.inf
        if m.mu1 > m.mu0:
            return 0.5 * (m.mu0 + m.mu1) + m.var0 * log_odds / (m.mu1 - m.mu0)
    try:
        return threshold_from_log_odds(m, log_odds)
    except NegativeDiscriminantError:
        return -math.inf


def link_operating_point(m: HypothesisMoments, threshold: float) -> LinkOperatingPoint:
    pd_fc = q_function((threshold - m.mu1) / math.sqrt(m.var1))
    pf_fc = q_function((threshold - m.mu0) / math.sqrt(m.var0))
    return LinkOperatingPoint(threshold, pd_fc, pf_fc)


def lrt_decide(statistic, threshold):
    """True (decide H1) when the statistic reaches the threshold; ties go to H1."""
    return np.greater_equal(statistic, threshold)
