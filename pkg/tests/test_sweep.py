import json
import logging
import math
from pathlib import Path

import numpy as np
import pytest

from radres.errors import ConfigurationError, FitError, ResourceError
from radres.operator1d import g_of
from radres.potential import BarrierWell, PowerDecay
from radres.sweep import (DEFAULT_HS, SweepConfig, SweepResult, SweepRow, bound_check, fit_scaling,
                          load_config, read_result, run_sweep, write_outputs)

CONFIG = """
[problem]
d = 3
E = 1.0
s = 1.0
eps = 1e-3

[potential]
kind = {kind}

[grid]
R = 3.0
cap = 1.0

[sweep]
h = {hs}
eps_sensitivity = {sens}

[regime]
name = delta_gt2
delta = 3
"""


def write_cfg(tmp_path, kind="zero", hs="0.2 0.14 0.1", sens="false", extra=""):
    p = tmp_path / "run.ini"
    p.write_text(CONFIG.format(kind=kind, hs=hs, sens=sens) + extra)
    return p


def synthetic(hs, gs):
    return SweepResult([SweepRow(h, 1e-3, 1.0, 1.0, "delta_gt2", g, 1.0, 0, 0.0, True, 1, 10,
                                 4 / 3, 0.0) for h, g in zip(hs, gs)])


def test_fit_pure_power_synthetic():
    hs = np.logspace(-1, -3, 7)
    fit = fit_scaling(synthetic(hs, 7 * hs ** (-4 / 3)), "pure-power")
    assert fit.slope == pytest.approx(4 / 3, abs=1e-6) and fit.r2 >= 0.999999
    assert fit.intercept == pytest.approx(math.log(7), abs=1e-9)


def test_fit_power_with_log_synthetic():
    hs = np.logspace(-2, -4, 9)
    gs = 2 * hs ** -1.5 * np.log(1 / hs) ** 1.25
    fit = fit_scaling(synthetic(hs, gs), "power-with-log")
    assert fit.slope == pytest.approx(1.5, abs=1e-3) and fit.log_power == pytest.approx(1.25, abs=1e-3)


def test_fit_trapping_synthetic():
    hs = np.array([0.2, 0.1, 0.05, 0.025])
    fit = fit_scaling(synthetic(hs, 0.3 + 0.8 / hs), "trapping")
    assert fit.slope == pytest.approx(0.8) and fit.intercept == pytest.approx(0.3) and fit.r2 == 1.0


def test_fit_errors():
    with pytest.raises(FitError):
        fit_scaling(synthetic([0.2, 0.1], [1, 2]))
    with pytest.raises(FitError):
        fit_scaling(synthetic([0.1, 0.1, 0.1], [1, 2, 3]))
    with pytest.raises(FitError):
        fit_scaling(synthetic([0.2, 0.1, 0.05], [1, -2, 3]))
    with pytest.raises(FitError):
        fit_scaling(synthetic([0.2, 0.1, 0.05], [1, 2, 3]), "cubic")


def test_fit_uses_converged_rows_only():
    res = synthetic([0.2, 0.1, 0.05, 0.025], [1.0, 2.0, 4.0, 100.0])
    res.rows[-1].converged = False
    fit = fit_scaling(res, "pure-power")
    assert fit.n == 3 and fit.slope == pytest.approx(1.0)


def test_bound_check_constant():
    hs = np.array([0.2, 0.1, 0.05, 0.025])
    res = synthetic(hs, 3 * hs ** (-4 / 3))
    bc = bound_check(res)
    assert bc.C_fit == pytest.approx(3.0) and bc.passed and bc.max_violation <= 1e-12


def test_bound_check_growing_ratio_fails():
    hs = np.array([0.2, 0.1, 0.05, 0.025])
    assert not bound_check(synthetic(hs, hs ** -2.0)).passed


def test_bound_check_single_row(caplog):
    with caplog.at_level(logging.WARNING):
        assert bound_check(synthetic([0.1], [1.0])).passed
    assert "vacuously" in caplog.text


def test_load_config(tmp_path):
    p = write_cfg(tmp_path, kind="barrier")
    p.write_text(p.read_text().replace("kind = barrier", "kind = barrier\nr_out = 1.1"))
    cfg = load_config(p)
    assert cfg.hs == (0.2, 0.14, 0.1) and cfg.regime == "delta_gt2" and cfg.cap == 1.0
    assert cfg.potential.r_out == 1.1 and cfg.potential.height == 2.0


def test_load_config_infers_regime(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("[potential]\nkind = log\nrho = 3\n[sweep]\nh = 0.2 0.1 0.05\n")
    cfg = load_config(p)
    assert cfg.regime == "log_decay" and cfg.regime_params == {"rho": 3.0}


@pytest.mark.parametrize("patch", [
    ("h = 0.2 0.14 0.1", "h = 0.1 0.14"),
    ("s = 1.0", "s = 0.5"),
    ("eps = 1e-3", "eps = 1e-9"),
    ("E = 1.0", "E = -1"),
    ("kind = zero", "kind = bogus"),
    ("name = delta_gt2", "name = delta_le2"),
    ("d = 3", "d = 2"),
    ("R = 3.0", "R = 0"),
    ("h = 0.2 0.14 0.1", "h = 0.2 abc"),
])
def test_config_rejections(tmp_path, patch):
    p = write_cfg(tmp_path)
    p.write_text(p.read_text().replace(*patch))
    with pytest.raises(ConfigurationError):
        load_config(p)


def test_config_unknown_section(tmp_path):
    p = write_cfg(tmp_path, extra="\n[extra]\nx = 1\n")
    with pytest.raises(ConfigurationError):
        load_config(p)


def test_config_work_cap(tmp_path):
    p = write_cfg(tmp_path)
    p.write_text(p.read_text().replace("eps_sensitivity", "max_work = 1000\neps_sensitivity"))
    with pytest.raises(ResourceError):
        load_config(p)


def test_single_row_equals_direct_call():
    V = PowerDecay(C=1.0, delta=3)
    cfg = SweepConfig(potential=V, regime="delta_gt2", regime_params={"delta": 3}, hs=(0.1,),
                      eps=1e-3, R=3.0, eps_sensitivity=False)
    res = run_sweep(cfg)
    direct = g_of(0.1, 1e-3, 1.0, 3, V, 1.0, 3.0)
    assert res.rows[0].g == direct.g and res.rows[0].worst_l == direct.worst_l


def test_run_sweep_rows_and_sensitivity():
    cfg = SweepConfig(potential=BarrierWell(height=2.0, r_in=1.0, r_out=1.1), regime="delta_gt2",
                      regime_params={"delta": 3}, hs=(0.2, 0.14, 0.1), eps=1e-5, R=4.0, cap=1.0,
                      C=0.5)
    res = run_sweep(cfg, fit_model="trapping")
    assert [r.h for r in res.rows] == [0.2, 0.14, 0.1]
    assert all(r.converged for r in res.rows)
    assert [s["eps"] for s in res.eps_sensitivity] == pytest.approx([1e-4, 1e-6])
    for r in res.rows:
        assert r.bound == pytest.approx(0.5 * r.h ** (-4 / 3))
    assert res.fit.model == "trapping"


def test_eps_sensitivity_respects_floor():
    cfg = SweepConfig(potential=PowerDecay(C=0.0, delta=3), regime="delta_gt2",
                      regime_params={"delta": 3}, hs=(0.2,), eps=1e-6, R=3.0)
    res = run_sweep(cfg)
    assert [s["eps"] for s in res.eps_sensitivity] == pytest.approx([1e-5])


def test_outputs_roundtrip(tmp_path):
    cfg = SweepConfig(potential=PowerDecay(C=1.0, delta=3), regime="delta_gt2",
                      regime_params={"delta": 3}, hs=(0.2, 0.14, 0.1), eps=1e-3, R=3.0,
                      eps_sensitivity=False)
    res = run_sweep(cfg, fit_model="pure-power")
    paths = write_outputs(res, tmp_path, "x", emit_plot_data=True)
    back = read_result(paths["csv"])
    assert [r.g for r in back.rows] == [r.g for r in res.rows]
    assert [r.worst_l for r in back.rows] == [r.worst_l for r in res.rows]
    rec = json.loads(paths["json"].read_text())
    assert rec["fit"]["model"] == "pure-power" and len(rec["rows"]) == 3
    again = read_result(paths["json"])
    assert again.fit.slope == res.fit.slope and again.rows[1].g == res.rows[1].g
    data = np.loadtxt(paths["plot_data"])
    assert np.allclose(data[:, 0], np.log(1 / np.array([0.2, 0.14, 0.1])))
    assert "wall_time" not in paths["csv"].read_text().splitlines()[0]


def test_read_result_rejects_bad_csv(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ConfigurationError):
        read_result(p)


def test_readme_config_loads(tmp_path):
    text = Path(__file__).resolve().parents[1].joinpath("README.md").read_text()
    block = text.split("```ini\n", 1)[1].split("```", 1)[0]
    path = tmp_path / "readme.ini"
    path.write_text(block)
    cfg = load_config(path)
    assert cfg.s == 1.0 and cfg.eps == 1e-6 and cfg.sign == 1
    assert cfg.nu_scan == "continuous" and cfg.regime == "delta_gt2"
    assert cfg.potential.r_out == 1.1


@pytest.mark.parametrize("name", ["free.ini", "barrier.ini"])
def test_shipped_configs_load(name):
    cfg = load_config(Path(__file__).resolve().parents[1] / "configs" / name)
    assert cfg.hs == DEFAULT_HS
