"""First-hitting-time density and per-slot arrival probabilities of one CN->FC link.

Both endpoints drift with the common flow ``v``, so only their diffusion
matters: by the time a molecule is emitted in slot ``i`` the CN-FC separation
has spread for ``i * tau`` seconds with coefficient ``D_cn + D_fc``, after
which the molecule-FC separation diffuses with ``D_fc + D_p`` until it first
reaches zero.  Everything here is SI (meters, seconds).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .quadrature import integrate


@dataclass(frozen=True)
class LinkGeometry:
    d0: float
    D_cn: float
    D_fc: float
    D_p: float
    v: float
    tau: float

    def __post_init__(self) -> None:
        if not self.d0 > 0:
            raise ValueError(f"d0 must be > 0, got {self.d0}")
        if not self.D_p > 0:
            raise ValueError(f"D_p must be > 0, got {self.D_p}")
        if self.D_cn < 0 or self.D_fc < 0:
            raise ValueError("D_cn and D_fc must be >= 0")
        if not self.tau > 0:
            raise ValueError(f"tau must be > 0, got {self.tau}")

    @property
    def D_tot(self) -> float:
        return self.D_cn + self.D_fc

    @property
    def D(self) -> float:
        return self.D_fc + self.D_p


@dataclass(frozen=True)
class QuadratureOptions:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-14
    max_subdivisions: int = 200

    def __post_init__(self) -> None:
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be > 0")
        if self.abs_tol < 0:
            raise ValueError("abs_tol must be >= 0")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


def derived_coefficients(geom: LinkGeometry) -> tuple[float, float]:
    """Return ``(D_tot, D)``: CN-FC relative and molecule-FC relative diffusion."""
    return geom.D_tot, geom.D


def levy_pdf(t, d0: float, D: float):
    """One-sided stable first-passage density to an absorber at distance ``d0``."""
    t = np.asarray(t, dtype=float)
    return d0 / np.sqrt(4.0 * np.pi * D * t**3) * np.exp(-d0**2 / (4.0 * D * t))


def first_hitting_pdf(t, tx_slot: int, geom: LinkGeometry):
    """Density of the arrival time ``t`` (s) of a molecule emitted in slot ``tx_slot``.

    Accepts scalars or arrays; ``t`` must be strictly positive.  With static
    endpoints (``D_tot == 0``) this is exactly :func:`levy_pdf`.
    """
    if tx_slot < 1 or int(tx_slot) != tx_slot:
        raise ValueError(f"tx_slot must be a positive integer, got {tx_slot}")
    scalar = np.ndim(t) == 0
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0)):
        raise ValueError("first_hitting_pdf requires t > 0")

    d0 = geom.d0
    D_tot, D = derived_coefficients(geom)
    if D_tot == 0.0:
        out = levy_pdf(t, d0, D)
        return float(out) if scalar else out

    s = tx_slot * geom.tau * D_tot
    w = s + t * D
    u = t + s / D
    spread = np.sqrt(s * D) / (np.pi * np.sqrt(t) * w) * math.exp(-d0**2 / (4.0 * s))
    drift = (
        d0 / np.sqrt(4.0 * np.pi * D * u**3)
        * np.exp(-d0**2 / (4.0 * D * u))
        * erf(0.5 * d0 * np.sqrt(t * D / (s * w)))
    )
    out = spread + drift
    return float(out) if scalar else out


def _integrate_pdf(lo: float, hi: float, tx_slot: int, geom: LinkGeometry,
                   opts: QuadratureOptions) -> float:
    if hi <= lo:
        return 0.0
    kw = dict(rel_tol=opts.rel_tol, abs_tol=opts.abs_tol,
              max_subdivisions=opts.max_subdivisions)
    if lo == 0.0:
        # t = u**2 absorbs the t**-1/2 endpoint singularity.
        def g(u):
            u = np.maximum(u, np.finfo(float).tiny)
            return 2.0 * u * first_hitting_pdf(u * u, tx_slot, geom)

        value, _ = integrate(g, 0.0, math.sqrt(hi), **kw)
    else:
        value, _ = integrate(lambda t: first_hitting_pdf(t, tx_slot, geom), lo, hi, **kw)
    return value


def hitting_probability(lag: int, tx_slot: int, geom: LinkGeometry,
                        opts: QuadratureOptions | None = None) -> float:
    """Probability that a molecule emitted in ``tx_slot`` is absorbed during
    the interval ``[lag * tau, (lag + 1) * tau]`` after its emission."""
    if lag < 0 or int(lag) != lag:
        raise ValueError(f"lag must be a non-negative integer, got {lag}")
    if tx_slot < 1 or int(tx_slot) != tx_slot:
        raise ValueError(f"tx_slot must be a positive integer, got {tx_slot}")
    opts = opts or QuadratureOptions()
    tau = geom.tau
    q = _integrate_pdf(lag * tau, (lag + 1) * tau, tx_slot, geom, opts)
    return min(max(q, 0.0), 1.0)


def cumulative_hitting(horizon: float, tx_slot: int, geom: LinkGeometry,
                       opts: QuadratureOptions | None = None) -> float:
    """Probability of absorption within ``horizon`` seconds of emission."""
    if not horizon > 0:
        raise ValueError(f"horizon must be > 0, got {horizon}")
    if tx_slot < 1 or int(tx_slot) != tx_slot:
        raise ValueError(f"tx_slot must be a positive integer, got {tx_slot}")
    opts = opts or QuadratureOptions()
    return max(_integrate_pdf(0.0, horizon, tx_slot, geom, opts), 0.0)
