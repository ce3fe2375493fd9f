import json
import math

import numpy as np
import pytest

from cqed_thermo.analysis import fit_line
from cqed_thermo.harness import (ConfigError, RunConfig, dump_config, parse_config,
                                 read_csv, run_ensemble, write_outputs)
from cqed_thermo.harness.cli import main
from cqed_thermo.harness.ensemble import derive_seed, resolve_threads, simulate
from cqed_thermo.harness.io import format_value


def small(**kw):
    base = dict(trajectories=6, record_stride=100)
    base.update(kw)
    return RunConfig(**base)


def write_cfg(tmp_path, data):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(data))
    return path


# configuration ------------------------------------------------------------

def test_minimal_config_derives_measurement_rate(tmp_path):
    cfg = parse_config(write_cfg(tmp_path, {}))
    assert cfg.gamma_d / (2 * math.pi) == pytest.approx(0.16, rel=1e-14)
    assert cfg.derived()["gamma_d_mhz"] == pytest.approx(0.16, rel=1e-14)
    assert cfg.dt == 1e-3 and cfg.n_steps == 2400


def test_explicit_dt_over_cap_rejected(tmp_path):
    with pytest.raises(ConfigError) as err:
        parse_config(write_cfg(tmp_path, {"dt_ns": 100, "nbar": 200}))
    assert err.value.field == "dt_ns" and "rate_cap" in err.value.reason


def test_auto_dt_refines_for_strong_measurement():
    cfg = RunConfig(nbar=200)
    assert cfg.refinement == 11 and cfg.n_steps == 26400
    assert cfg.dt * cfg.gamma_d <= cfg.rate_cap
    assert cfg.effective_stride == 11


def test_round_trip_identical(tmp_path):
    cfg = RunConfig(nbar=2.5, dt_ns=0.5, master_seed=2**63 + 5, integrator="sme")
    path = tmp_path / "c.json"
    dump_config(cfg, path)
    again = parse_config(path)
    assert again == cfg
    dump_config(again, tmp_path / "d.json")
    assert (tmp_path / "d.json").read_bytes() == path.read_bytes()


@pytest.mark.parametrize("data, field", [
    ({"nbarr": 1}, "nbarr"),
    ({"nbar": -1}, "nbar"),
    ({"kappa_mhz": 0}, "kappa_mhz"),
    ({"trajectories": 0}, "trajectories"),
    ({"trajectories": 2.5}, "trajectories"),
    ({"integrator": "rk4"}, "integrator"),
    ({"master_seed": -1}, "master_seed"),
    ({"master_seed": 2**64}, "master_seed"),
    ({"dt_ns": 0.7}, "dt_ns"),
    ({"record_stride": 7}, "record_stride"),
    ({"quench_time_us": 3.0}, "quench_time_us"),
    ({"gamma1_over_kappa": True}, "gamma1_over_kappa"),
])
def test_schema_violations_name_field(tmp_path, data, field):
    with pytest.raises(ConfigError) as err:
        parse_config(write_cfg(tmp_path, data))
    assert err.value.field == field


def test_negative_chi_allowed():
    assert RunConfig(chi_mhz=-3.0).gamma_d > 0


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(FileNotFoundError):
        parse_config(tmp_path / "nope.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(ConfigError):
        parse_config(bad)
    bad.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        parse_config(bad)


# ensemble + outputs -------------------------------------------------------

def test_threads_do_not_change_outputs(tmp_path):
    cfg = small()
    _, a = run_ensemble(cfg, threads=1, out_dir=tmp_path / "a")
    _, b = run_ensemble(cfg, threads=3, out_dir=tmp_path / "b")
    for name in ("trajectories.csv", "endpoints.csv", "summary.json", "manifest.json"):
        assert (a.directory / name).read_bytes() == (b.directory / name).read_bytes()


def test_row_count_and_checksums(tmp_path):
    cfg = small(trajectories=4, record_stride=60)
    records, bundle = run_ensemble(cfg, out_dir=tmp_path)
    header, rows = read_csv(tmp_path / "trajectories.csv")
    assert header == ["traj_id", "t_us", "current", "U", "W", "Q", "Sigma"]
    assert len(rows) == 4 * (2400 // 60 + 1)
    assert bundle.verify()
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["files"] == bundle.checksums
    assert manifest["derived"]["gamma_d_mhz"] == pytest.approx(0.16)
    # rewriting the same data keeps checksums valid
    again = write_outputs(records, None, tmp_path)
    assert again.checksums["trajectories.csv"] == bundle.checksums["trajectories.csv"]
    (tmp_path / "endpoints.csv").write_text("tampered\n")
    assert not bundle.verify()


def test_endpoints_round_trip(tmp_path):
    records, _ = run_ensemble(small(), out_dir=tmp_path)
    _, rows = read_csv(tmp_path / "endpoints.csv")
    for rec, row in zip(records, rows):
        assert row[5] == rec.log_pF and row[6] == rec.log_pB and row[7] == rec.sigma_final


def test_seed_changes_trajectories_not_efficacy():
    a = simulate(small(trajectories=200, master_seed=1))
    b = simulate(small(trajectories=200, master_seed=2))
    assert any(x.n != y.n or x.sigma_final != y.sigma_final for x, y in zip(a, b))
    for recs in (a, b):
        v = np.exp(-np.array([r.sigma_final for r in recs]))
        assert abs(v.mean() - 1) <= 3 * v.std(ddof=1) / math.sqrt(len(v))


def test_float_formatting_round_trips():
    for v in (math.pi, -1e-300, 2.0**-1074, 1 / 3, 12566.370614359172):
        assert float(format_value(v)) == v
    assert format_value(None) == "" and format_value(np.int64(3)) == "3"


def test_thread_and_seed_helpers():
    assert resolve_threads("auto") >= 1 and resolve_threads(2) == 2
    with pytest.raises(ValueError):
        resolve_threads(0)
    assert derive_seed(0, 1) != derive_seed(0, 2) == derive_seed(0, 2)


def test_output_dir_error_has_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError, match="file"):
        write_outputs(None, {"summary": {}}, blocker / "sub")


# command line -------------------------------------------------------------

def test_cli_ft_check_refit_reproduces_slope(tmp_path):
    out = tmp_path / "ft"
    assert main(["ft-check", "--trajectories", "40", "--out-dir", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    header, rows = read_csv(out / "ft_points.csv")
    assert header == ["delta_u", "log_ratio", "n", "m"]
    arr = np.array(rows)
    fit = fit_line(arr[:, 0], arr[:, 1])
    assert abs(fit.slope - summary["slope"]) <= 1e-12 * abs(summary["slope"])
    assert summary["max_residual"] < 1e-9


def test_cli_tpm(tmp_path):
    assert main(["tpm", "--out-dir", str(tmp_path)]) == 0
    header, rows = read_csv(tmp_path / "tpm.csv")
    assert header == ["n", "m", "prob", "work", "crooks_residual"] and len(rows) == 4
    assert max(abs(r[4]) for r in rows) < 1e-12


def test_cli_histogram(tmp_path):
    cfg = write_cfg(tmp_path, {"record_stride": 100})
    assert main(["histogram", "--nbar", "0.4", "--time", "2.4", "--trajectories", "20",
                 "--config", str(cfg), "--bins", "10", "--out-dir", str(tmp_path / "h")]) == 0
    header, rows = read_csv(tmp_path / "h" / "histogram.csv")
    assert header == ["bin_lo", "bin_hi", "count"] and sum(r[2] for r in rows) == 20


def test_cli_efficacy_sweep(tmp_path):
    out = tmp_path / "sweep"
    args = ["efficacy-sweep", "--gamma1-over-kappa", "0,0.05,0.1", "--trajectories", "20",
            "--out-dir", str(out), "--threads", "2"]
    assert main(args) == 0
    header, rows = read_csv(out / "efficacy_sweep.csv")
    assert header == ["gamma1_over_kappa", "efficacy", "stderr"]
    assert [r[0] for r in rows] == [0, 0.05, 0.1]
    assert "slope" in json.loads((out / "summary.json").read_text())


def test_cli_simulate_and_errors(tmp_path, capsys):
    assert main(["simulate", "--trajectories", "3", "--seed", "9",
                 "--out-dir", str(tmp_path / "s")]) == 0
    assert json.loads((tmp_path / "s" / "manifest.json").read_text())["config"]["master_seed"] == 9
    bad = write_cfg(tmp_path, {"bogus": 1})
    assert main(["simulate", "--config", str(bad)]) == 2
    assert "bogus" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        main(["simulate", "--threads", "zero"])
