import math
from dataclasses import replace

import numpy as np
import pytest

from nanosentry.analysis import analyze, q_tables, scenario_moments
from nanosentry.errors import SimulationError
from nanosentry.simkit.trials import (
    BLOCK,
    Z99,
    estimate_operating_point,
    estimate_operating_points,
    fused_decisions,
    simulate_trial,
)
from oracles import ExactChain


@pytest.fixture(scope="module")
def small(base_cfg):
    cfg = base_cfg.with_(slots=4, trials=3 * BLOCK + 17, master_seed=123)
    return cfg, q_tables(cfg)


def silent(cfg):
    return cfg.with_(links=tuple(replace(p, n=0) for p in cfg.links))


def test_repeat_is_bit_identical(small):
    cfg, tables = small
    a = estimate_operating_point(cfg, tables=tables)
    b = estimate_operating_point(cfg, tables=tables)
    assert a == b


def test_worker_count_is_irrelevant(small, monkeypatch):
    cfg, tables = small
    serial = estimate_operating_points(cfg, tables=tables, workers=1)
    pooled = estimate_operating_points(cfg, tables=tables, workers=4)
    assert serial == pooled
    monkeypatch.setenv("NANOSENTRY_THREADS", "3")
    assert estimate_operating_points(cfg, tables=tables) == serial


def test_seed_changes_the_draws(small):
    cfg, tables = small
    assert estimate_operating_point(cfg, tables=tables) != \
        estimate_operating_point(cfg.with_(master_seed=124), tables=tables)


def test_stacked_thresholds_equal_separate_runs(small):
    cfg, tables = small
    moments = scenario_moments(cfg, tables)
    thr = np.stack([analyze(cfg, lam, moments).thresholds(3, 4) for lam in (-1.0, 0.5)])
    stacked = estimate_operating_points(cfg, thr, tables)
    assert stacked[1] == estimate_operating_point(cfg, thr[1], tables)


def test_matches_exact_chain(small):
    """Simulated rates agree with the exact (non-Gaussian) chain within ~4 sigma."""
    cfg, tables = small
    cfg = cfg.with_(trials=40_000)
    moments = scenario_moments(cfg, tables)
    exact = ExactChain(cfg, tables)
    results = [analyze(cfg, lam, moments) for lam in (None, -1.0, 0.0, 1.0)]
    thr = np.stack([r.thresholds(3, 4) for r in results])
    for th, est in zip(thr, estimate_operating_points(cfg, thr, tables)):
        for rule, e in est.items():
            qf, qd = exact.averaged(th, rule)
            k = 4.0 / Z99
            assert abs(e.qf_avg - qf) <= k * e.qf_halfwidth + 1e-12
            assert abs(e.qd_avg - qd) <= k * e.qd_halfwidth + 1e-12


def test_uninformative_links_give_equal_rates(base_cfg):
    cfg = silent(base_cfg).with_(beta=0.5, trials=20_000)
    est = estimate_operating_point(cfg)
    for e in est.values():
        joint = math.hypot(e.qf_halfwidth, e.qd_halfwidth)
        assert abs(e.qd_avg - e.qf_avg) <= joint + 1e-12


def test_missing_class_is_an_error(base_cfg):
    thr = np.full((10, 3), 15.0)
    with pytest.raises(SimulationError, match="no H0"):
        estimate_operating_point(base_cfg.with_(beta=1.0, trials=500), thr)
    with pytest.raises(SimulationError, match="no H1"):
        estimate_operating_point(base_cfg.with_(beta=0.0, trials=500), thr)
    with pytest.raises(ValueError):
        estimate_operating_point(base_cfg.with_(trials=50))


def test_saturated_pipeline_always_detects(base_cfg):
    cfg = base_cfg.with_(beta=1.0, trials=200,
                          links=tuple(replace(p, pd_cn=(1.0,), n=10_000) for p in base_cfg.links))
    tables = q_tables(cfg)
    res = analyze(cfg, tables=tables)
    for i in range(0, 200, 7):
        out = simulate_trial(cfg, i, tables=tables)
        assert all(out.truth)
        for rule in ("and", "or"):
            assert all(out.per_slot_decisions[rule])
            assert res.averaged[rule].qd_avg == 1.0


def test_single_trial_is_consistent(small):
    cfg, tables = small
    thr = analyze(cfg, tables=tables).thresholds(3, 4)
    out = simulate_trial(cfg, BLOCK + 5, thr, tables)
    assert len(out.truth) == 4
    assert out.per_link_statistics.shape == (4, 3)
    assert out.cn_reports.shape == (4, 3)
    for rule in ("and", "or"):
        local = out.per_link_statistics >= thr
        expect = local.all(axis=1) if rule == "and" else local.any(axis=1)
        assert out.per_slot_decisions[rule] == tuple(bool(v) for v in expect)
    again = simulate_trial(cfg, BLOCK + 5, thr, tables)
    assert np.array_equal(again.per_link_statistics, out.per_link_statistics)
    with pytest.raises(IndexError):
        simulate_trial(cfg, cfg.trials, thr, tables)


def test_persistent_state_and_clamping(small):
    cfg, tables = small
    cfg = cfg.with_(truth_model="persistent", clamp_counts=True,
                    noise=replace(cfg.noise, mu_o=0.5, var_o=50.0))
    for i in range(20):
        out = simulate_trial(cfg, i, tables=tables)
        assert len(set(out.truth)) == 1
        assert np.all(out.per_link_statistics >= 0)


def test_fused_decision_shapes():
    stats = np.array([[[1.0, 5.0], [3.0, 3.0]]])  # (B=1, l=2, K=2)
    thr = np.array([[2.0, 2.0], [2.0, 2.0]])
    assert fused_decisions(stats, thr, "and").tolist() == [[False, True]]
    assert fused_decisions(stats, thr, "or").tolist() == [[True, True]]
    stacked = fused_decisions(stats, np.stack([thr, thr + 10]), "or")
    assert stacked.shape == (2, 1, 2)
    assert stacked[1].tolist() == [[False, False]]


def test_shipped_scenarios_agree_with_analysis():
    """Prior-optimal operating points: |analytic - simulated| <= max(0.02, 3 SE)."""
    from nanosentry.cli import load_scenario, shipped_scenarios

    for name in shipped_scenarios():
        cfg = load_scenario(name)
        tables = q_tables(cfg)
        a = analyze(cfg, tables=tables).averaged
        for rule, e in estimate_operating_point(cfg, tables=tables).items():
            tol_f = max(0.02, 3 * e.qf_halfwidth / Z99)
            tol_d = max(0.02, 3 * e.qd_halfwidth / Z99)
            assert abs(a[rule].qf_avg - e.qf_avg) <= tol_f, (name, rule)
            assert abs(a[rule].qd_avg - e.qd_avg) <= tol_d, (name, rule)
