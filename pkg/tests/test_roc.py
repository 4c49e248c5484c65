import numpy as np
import pytest

from nanosentry import analysis
from nanosentry.simkit import roc as roc_mod
from nanosentry.simkit.roc import parse_grid, roc_sweep


def test_grid_parsing():
    assert parse_grid("-2:2:5").tolist() == [-2.0, -1.0, 0.0, 1.0, 2.0]
    assert parse_grid("3:3:1").tolist() == [3.0]
    for bad in ("1:2", "a:b:c", "2:1:5", "0:1:0"):
        with pytest.raises(ValueError):
            parse_grid(bad)


def test_lambda_preconditions(base_cfg, base_tables):
    for bad in ([], [0.0, 0.0], [0.0, 1.0, 0.5]):
        with pytest.raises(ValueError):
            roc_sweep(base_cfg, bad, tables=base_tables)
    with pytest.raises(ValueError):
        roc_sweep(base_cfg, [0.0], mode="mixed", tables=base_tables)


def test_extremes_and_monotonicity(base_cfg, base_tables):
    curves = roc_sweep(base_cfg, np.linspace(-200, 200, 401), tables=base_tables)
    assert set(curves) == {"and", "or"}
    for c in curves.values():
        pts = c.as_array()
        assert c.provenance == "analytic" and not c.gaps
        assert tuple(pts[0, :2]) == (1.0, 1.0)
        assert pts[-1, :2] == pytest.approx((0.0, 0.0), abs=1e-12)
        order = np.argsort(pts[:, 2])
        assert np.all(np.diff(pts[order, 0]) <= 1e-15)  # qf falls as lambda grows
        by_qf = pts[np.lexsort((pts[:, 1], pts[:, 0]))]
        assert np.all(np.diff(by_qf[:, 1]) >= -1e-15)


def test_descending_lambdas_are_accepted(base_cfg, base_tables):
    up = roc_sweep(base_cfg, [-1.0, 0.0, 1.0], tables=base_tables)
    down = roc_sweep(base_cfg, [1.0, 0.0, -1.0], tables=base_tables)
    assert up["and"].points == down["and"].points[::-1]


def test_failures_become_gaps(base_cfg, base_tables, monkeypatch):
    real = analysis.analyze

    def flaky(cfg, log_odds=None, *a, **kw):
        if log_odds == 0.0:
            raise ArithmeticError("synthetic failure")
        return real(cfg, log_odds, *a, **kw)

    monkeypatch.setattr(roc_mod, "analyze", flaky)
    curves = roc_sweep(base_cfg, [-1.0, 0.0, 1.0], tables=base_tables)
    assert [p[2] for p in curves["or"].points] == [-1.0, 1.0]
    assert curves["or"].gaps == ((0.0, "synthetic failure"),)


def test_empirical_sweep_shares_draws(base_cfg, base_tables):
    cfg = base_cfg.with_(trials=8000, rule="or")
    curves = roc_sweep(cfg, [-1.0, 1.0, 3.0], mode="empirical", tables=base_tables)
    assert set(curves) == {"or"}
    c = curves["or"]
    assert c.provenance == "empirical"
    qf = [p[0] for p in c.points]
    assert qf == sorted(qf, reverse=True)
