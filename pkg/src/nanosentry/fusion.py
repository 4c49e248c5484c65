"""Hard-decision AND/OR fusion at the FC and averaging over slots."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

from .detector import LinkOperatingPoint

Rule = Literal["and", "or"]

# Above this many links products are accumulated as sums of logs.
LOG_SPACE_LINKS = 30


@dataclass(frozen=True)
class LinkConditionals:
    """Probability that the FC's decision on one link is H1, given H1 or H0."""

    p1_given_h1: float
    p1_given_h0: float

    @property
    def p0_given_h1(self) -> float:
        return 1.0 - self.p1_given_h1

    @property
    def p0_given_h0(self) -> float:
        return 1.0 - self.p1_given_h0


@dataclass(frozen=True)
class FusionResult:
    qd: float
    qf: float
    rule: Rule


@dataclass(frozen=True)
class AveragedPerformance:
    qd_avg: float
    qf_avg: float
    slots: int
    rule: Rule


def link_conditionals(op: LinkOperatingPoint, pd_cn: float, pf_cn: float) -> LinkConditionals:
    pd_fc, pf_fc = op.pd_fc, op.pf_fc
    return LinkConditionals(
        p1_given_h1=pf_fc * (1.0 - pd_cn) + pd_fc * pd_cn,
        p1_given_h0=pf_fc * (1.0 - pf_cn) + pd_fc * pf_cn,
    )


def complement_conditionals(op: LinkOperatingPoint, pd_cn: float, pf_cn: float) -> tuple[float, float]:
    """Probabilities that the FC decides H0 on the link, given H1 and given H0.

    Expanded term by term rather than as ``1 - p``, so that the two routes can
    be checked against each other.
    """
    pd_fc, pf_fc = op.pd_fc, op.pf_fc
    return (
        (1.0 - pf_fc) * (1.0 - pd_cn) + (1.0 - pd_fc) * pd_cn,
        (1.0 - pf_fc) * (1.0 - pf_cn) + (1.0 - pd_fc) * pf_cn,
    )


def _product(values: Sequence[float]) -> float:
    if len(values) <= LOG_SPACE_LINKS:
        return math.prod(values)
    if any(v == 0.0 for v in values):
        return 0.0
    return math.exp(math.fsum(math.log(v) for v in values))


def _check(links: Sequence[LinkConditionals]) -> Sequence[LinkConditionals]:
    links = list(links)
    if not links:
        raise ValueError("fusion needs at least one link")
    return links


def fuse_and(links: Iterable[LinkConditionals]) -> FusionResult:
    links = _check(links)
    return FusionResult(
        qd=_product([l.p1_given_h1 for l in links]),
        qf=_product([l.p1_given_h0 for l in links]),
        rule="and",
    )


def fuse_or(links: Iterable[LinkConditionals]) -> FusionResult:
    links = _check(links)
    if len(links) == 1:
        # 1 - (1 - p) is not always p in floating point.
        return FusionResult(links[0].p1_given_h1, links[0].p1_given_h0, "or")
    return FusionResult(
        qd=1.0 - _product([l.p0_given_h1 for l in links]),
        qf=1.0 - _product([l.p0_given_h0 for l in links]),
        rule="or",
    )


def fuse(links: Iterable[LinkConditionals], rule: Rule) -> FusionResult:
    if rule == "and":
        return fuse_and(links)
    if rule == "or":
        return fuse_or(links)
    raise ValueError(f"unknown fusion rule {rule!r}")


def average_over_slots(per_slot: Sequence[FusionResult]) -> AveragedPerformance:
    per_slot = list(per_slot)
    if not per_slot:
        raise ValueError("need at least one slot")
    rules = {r.rule for r in per_slot}
    if len(rules) != 1:
        raise ValueError(f"cannot average results of mixed rules {sorted(rules)}")
    l = len(per_slot)
    return AveragedPerformance(
        qd_avg=math.fsum(r.qd for r in per_slot) / l,
        qf_avg=math.fsum(r.qf for r in per_slot) / l,
        slots=l,
        rule=rules.pop(),
    )
