import filecmp
from pathlib import Path

import numpy as np
import pytest
import yaml

from pqga.cli import main
from pqga.harness import (
    ConfigError,
    build_schedule,
    build_setup,
    csv_header,
    load_config,
    parse_config,
    read_csv,
    run_experiment,
    verify_bounds,
)

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def small_mimo(**over):
    data = {
        "seed": 1,
        "horizon": 48,
        "problem": {"kind": "mimo", "mimo": {"N": 4, "M": 2, "K_m": 1}},
        "schedule": {"durations": [8, 4], "feedback_offsets": {8: [0, 4], 4: [0]}},
        "algorithm": {"mode": "regime", "regime": 4, "nu": 1.0, "steps": 2},
    }
    data.update(over)
    return parse_config(data)


def synthetic(**over):
    data = yaml.safe_load((CONFIGS / "synthetic.yaml").read_text())
    data["horizon"] = 96
    data.update(over)
    return parse_config(data)


def test_default_config_parses_to_cell_defaults():
    cfg = load_config(CONFIGS / "mimo_default.yaml")
    p = cfg.problem
    assert (p["N"], p["M"], p["K_m"]) == (32, 4, 2)
    assert (p["P_max_dbm"], p["P_bar_dbm"], p["alpha_h"], p["B_W"]) == (33.0, 30.0, 0.997, 15e3)
    assert cfg.horizon == 400
    sched = build_schedule(cfg)
    assert sched.durations[:4] == (8, 4, 8, 4)
    assert [sched.feedback_count(i) for i in range(4)] == [2, 1, 2, 1]


def test_empty_mimo_block_gets_defaults():
    cfg = parse_config({"seed": 0})
    assert cfg.problem["N"] == 32 and cfg.problem_kind == "mimo"


@pytest.mark.parametrize(
    "data, path",
    [
        ({"horizon": 10}, "seed"),
        ({"seed": 0, "bogus": 1}, "bogus"),
        ({"seed": 0, "algorithm": {"regime": 1, "kappa": 0.7, "nu": 0.5}}, "algorithm.kappa"),
        ({"seed": 0, "algorithm": {"regime": 1, "nu": 0.5}}, "algorithm.kappa"),
        ({"seed": 0, "algorithm": {"regime": 9}}, "algorithm.regime"),
        ({"seed": 0, "algorithm": {"nu": None}}, "algorithm.nu"),
        ({"seed": 0, "problem": {"kind": "mimo", "mimo": {"Nx": 3}}}, "problem.mimo.Nx"),
        ({"seed": 0, "schedule": {"durations": [0]}}, "schedule.durations"),
        ({"seed": 0, "policies": ["pqga", "magic"]}, "policies[1]"),
        ({"seed": -1}, "seed"),
        ({"seed": 0, "algorithm": {"mode": "manual", "alpha": 1.0, "eta": 1.0}}, "algorithm.gamma"),
    ],
)
def test_config_errors_name_the_field(data, path):
    with pytest.raises(ConfigError) as info:
        parse_config(data)
    assert info.value.path == path


def test_truncated_last_period_keeps_fitting_offsets():
    cfg = small_mimo(horizon=30)
    sched = build_schedule(cfg)
    assert sched.durations == (8, 4, 8, 4, 6)
    assert sched.feedback_slots[-1] == (24, 28)


def test_run_is_deterministic(tmp_path):
    cfg = small_mimo()
    run_experiment(cfg, tmp_path / "a")
    run_experiment(cfg, tmp_path / "b")
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == ["delayed.csv", "metadata.txt", "offline.csv", "per_period.csv", "pqga.csv",
                     "summary.csv", "superslot.csv"]
    match, mismatch, errors = filecmp.cmpfiles(tmp_path / "a", tmp_path / "b", names, shallow=False)
    assert mismatch == [] and errors == []


def test_csv_schema_and_round_trip(tmp_path):
    cfg = small_mimo()
    res = run_experiment(cfg, tmp_path)
    rows = read_csv(tmp_path / "pqga.csv")
    assert list(rows[0]) == csv_header(1)
    assert csv_header(1) == ["seed", "policy", "period", "t_start", "T_i", "S_i", "loss_weighted",
                             "g_1", "queue_norm", "re_dyn_cum", "re_stat_cum", "vo_1_cum",
                             "app_fbar_cum", "app_pbar_cum", "app_rbar_cum"]
    trace = res.traces["pqga"]
    assert len(rows) == trace.num_periods
    np.testing.assert_allclose([float(r["loss_weighted"]) for r in rows], trace.weighted_loss,
                               rtol=1e-11)
    np.testing.assert_allclose([float(r["g_1"]) for r in rows], trace.constraint_values[:, 0],
                               rtol=1e-11, atol=1e-300)
    assert [int(r["T_i"]) for r in rows] == list(trace.durations)
    assert float(rows[-1]["queue_norm"]) == pytest.approx(np.linalg.norm(trace.final_queue),
                                                          rel=1e-11)


def test_policies_share_feedback_and_oracle_dominates(tmp_path):
    res = run_experiment(small_mimo(), write=False)
    tr = res.traces
    for name in ("superslot", "per_period", "delayed", "offline"):
        np.testing.assert_array_equal(tr[name].feedback_counts, tr["pqga"].feedback_counts)
    # the oracle minimizes over the average-power ball, so it dominates exactly in the
    # periods where the solver's decision also lies in that ball
    inside = tr["pqga"].app_power <= res.setup.problem.p_bar
    assert inside.any()
    assert np.all(tr["per_period"].weighted_loss[inside]
                  <= tr["pqga"].weighted_loss[inside] * (1 + 1e-9) + 1e-9)


def test_verify_synthetic_passes():
    checks = {c.name: c for c in verify_bounds(synthetic())}
    assert checks["dynamic_regret"].status == "PASS"
    assert checks["static_regret"].status == "PASS"
    assert checks["violation_1"].status == "PASS"
    assert checks["queue_certificate_1"].status == "PASS"


def test_verify_skips_when_alpha_too_small():
    cfg = synthetic(algorithm={"mode": "manual", "alpha": 0.01, "eta": 100.0, "gamma": 1.0,
                               "steps": 0})
    checks = {c.name: c for c in verify_bounds(cfg)}
    assert checks["dynamic_regret"].status == "SKIP"
    assert "alpha >= T_max*L" in checks["dynamic_regret"].note
    assert checks["static_regret"].status == "SKIP"
    assert checks["queue_certificate_1"].status == "PASS"


def test_setup_uses_regime_parameters():
    setup = build_setup(synthetic())
    c, p = setup.constants, setup.params
    T = setup.schedule.horizon
    assert p.alpha == pytest.approx(c.t_max * c.smoothness * T**0.5)
    assert p.gamma**2 == pytest.approx(T**0.5)
    assert p.eta == pytest.approx(c.constraint_lipschitz**2 * p.gamma**2 * c.t_max**2)
    assert setup.baseline_params.gamma == p.gamma


def write_cfg(tmp_path, cfg):
    path = tmp_path / "cfg.yaml"
    path.write_text(yaml.safe_dump(cfg.as_dict()))
    return path


def test_cli_run_and_exit_codes(tmp_path, capsys):
    path = write_cfg(tmp_path, small_mimo())
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "o"), "--seed", "3"]) == 0
    assert (tmp_path / "o" / "summary.csv").exists()
    assert read_csv(tmp_path / "o" / "pqga.csv")[0]["seed"] == "3"
    assert "pqga" in capsys.readouterr().out
    bad = tmp_path / "bad.yaml"
    bad.write_text("horizon: 4\n")
    assert main(["run", "--config", str(bad)]) == 2
    assert main(["bounds", "--config", str(path)]) == 0
    assert "dynamic_regret" in capsys.readouterr().out


def test_cli_verify(tmp_path, capsys):
    path = write_cfg(tmp_path, synthetic())
    assert main(["verify", "--config", str(path)]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "FAIL" not in out


def test_cli_solver_failure(tmp_path, capsys):
    # the synthetic problem uses the generic inner solver; one iteration cannot converge
    data = synthetic().as_dict()
    data["algorithm"].update(inner_max_iter=1, inner_tol=1e-300, steps=1)
    path = tmp_path / "fail.yaml"
    path.write_text(yaml.safe_dump(data))
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "f")]) == 3
    assert (tmp_path / "f" / "pqga.csv").exists()
