import csv
import math

import numpy as np
import pytest

from lisrate import cli
from lisrate.experiments import (
    ConfigError,
    ScenarioConfig,
    config_from_sources,
    los_probability,
    make_drop,
    optimal_l_search,
    parse_config_file,
    rician_factor,
    run_scenario,
    write_csv,
)

FAST = dict(kind="uniform-room", num_devices=4, m_grid=(16,), drops=2,
            realizations=64, seed=1)


class TestConfig:
    def test_wavelength(self):
        cfg = ScenarioConfig(frequency=3.0e9)
        assert cfg.wavelength == pytest.approx(0.09993, rel=1e-3)

    @pytest.mark.parametrize("field,value", [
        ("kind", "hexagon"), ("mode", "sometimes"), ("tau", 1.0),
        ("tau", -0.1), ("drops", 0), ("realizations", 1),
        ("half_length", 0.0), ("d_m", -1.0), ("m_grid", (10,)),
    ])
    def test_validation(self, field, value):
        cfg = ScenarioConfig(**{**FAST, field: value})
        with pytest.raises(ConfigError):
            cfg.validate()

    def test_mimo_allows_non_square_m(self):
        ScenarioConfig(**{**FAST, "kind": "mimo-baseline",
                          "m_grid": (8,)}).validate()

    def test_config_file_round_trip(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text(
            "# comment line\n"
            "kind = grid-plane\n"
            "mode = los-only\n"
            "m_grid = 16, 64\n"
            "num_devices = 5\n"
            "tau = 0.3   # trailing comment\n"
            "d_m = 2.5\n")
        values = parse_config_file(path)
        assert values == {"kind": "grid-plane", "mode": "los-only",
                          "m_grid": (16, 64), "num_devices": 5,
                          "tau": 0.3, "d_m": 2.5}
        cfg = config_from_sources(path, seed=9, drops=1)
        assert cfg.kind == "grid-plane" and cfg.seed == 9 and cfg.tau == 0.3

    def test_config_file_rejects_unknown_key(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("antennas = 4\n")
        with pytest.raises(ConfigError, match="unknown key"):
            parse_config_file(path)

    def test_config_file_rejects_malformed_line(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("just words\n")
        with pytest.raises(ConfigError):
            parse_config_file(path)


class TestLinkStatistics:
    def test_los_probability(self):
        assert los_probability(2.0, 10.0) == pytest.approx(0.8)
        assert los_probability(10.0, 10.0) == 0.0
        assert los_probability(15.0, 10.0) == 0.0
        with pytest.raises(ValueError):
            los_probability(-1.0, 10.0)

    def test_rician_factor(self):
        assert rician_factor(1.0) == pytest.approx(10 ** (12.97 / 10))
        assert rician_factor(100.0) == pytest.approx(10.0)
        with pytest.raises(ValueError):
            rician_factor(0.0)


class TestMakeDrop:
    def test_geometry_frozen_across_m(self):
        cfg = ScenarioConfig(**FAST)
        a = make_drop(cfg, 0, num_antennas=16)
        b = make_drop(cfg, 0, num_antennas=64)
        assert len(a.links) == len(b.links) == 3
        # same kappas (same positions and LOS flags) despite different M
        assert [l.kappa for l in a.links] == [l.kappa for l in b.links]

    def test_distinct_drops_differ(self):
        cfg = ScenarioConfig(**FAST)
        a = make_drop(cfg, 0)
        b = make_drop(cfg, 1)
        assert [l.kappa for l in a.links] != [l.kappa for l in b.links] or \
            not np.allclose(a.links[0].h_los, b.links[0].h_los)

    def test_modes(self):
        base = {**FAST, "kind": "grid-plane", "num_devices": 5}
        los = make_drop(ScenarioConfig(**{**base, "mode": "los-only"}), 0)
        assert all(l.kappa > 0 and l.num_paths == 0 for l in los.links)
        nlos = make_drop(ScenarioConfig(**{**base, "mode": "nlos-only"}), 0)
        assert all(l.kappa == 0.0 and l.num_paths == 8 for l in nlos.links)

    def test_grid_plane_interferers_are_nearest(self):
        cfg = ScenarioConfig(**{**FAST, "kind": "grid-plane",
                                "num_devices": 5, "d_m": 5.0})
        drop = make_drop(cfg, 0)
        # nearest lattice neighbours sit 5 m away laterally at height 1
        for link in drop.links:
            d = np.linalg.norm(link.h_los)  # closer device => larger gain
        assert len(drop.links) == 4

    def test_power_control_target(self):
        cfg = ScenarioConfig(**{**FAST, "kind": "grid-plane",
                                "num_devices": 2})
        drop = make_drop(cfg, 0)
        assert drop.desired.rho == pytest.approx(10 ** 0.3 * 4 * math.pi)

    def test_grid_plane_too_sparse(self):
        cfg = ScenarioConfig(**{**FAST, "kind": "grid-plane",
                                "num_devices": 100, "d_m": 9.0})
        with pytest.raises(ConfigError, match="decrease d_m"):
            make_drop(cfg, 0)


class TestRunScenario:
    def test_report_shape_and_csv(self, tmp_path):
        cfg = ScenarioConfig(**{**FAST, "m_grid": (16, 25)})
        reports = run_scenario(cfg)
        assert [r.num_antennas for r in reports] == [16, 25]
        out = tmp_path / "rates.csv"
        write_csv(reports, out)
        with open(out) as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 2
        assert rows[0]["scenario"] == "uniform-room"
        assert rows[0]["log_base"] == "e"
        assert float(rows[0]["mc_mean"]) == pytest.approx(reports[0].mc_mean)

    def test_unbounded_serializes_as_inf(self, tmp_path):
        cfg = ScenarioConfig(**{**FAST, "kind": "grid-plane",
                                "num_devices": 3, "mode": "nlos-only"})
        reports = run_scenario(cfg)
        assert math.isinf(reports[0].bound)
        out = tmp_path / "rates.csv"
        write_csv(reports, out)
        with open(out) as fh:
            row = list(csv.DictReader(fh))[0]
        assert row["bound"] == "inf"

    def test_mimo_reports_nan_asymptotics(self):
        cfg = ScenarioConfig(**{**FAST, "kind": "mimo-baseline",
                                "mode": "nlos-only", "m_grid": (8,)})
        r = run_scenario(cfg)[0]
        assert math.isnan(r.asym_mean) and math.isnan(r.asym_var)
        assert math.isfinite(r.mc_mean)

    def test_workers_do_not_change_results(self):
        cfg = ScenarioConfig(**{**FAST, "m_grid": (16, 25), "drops": 3})
        seq = run_scenario(cfg, workers=1)
        par = run_scenario(cfg, workers=3)
        assert seq == par


class TestOptimalL:
    def test_tie_break_prefers_smaller(self):
        cfg = ScenarioConfig(**FAST)
        best, curve = optimal_l_search(cfg, [0.25, 0.25])
        assert best == 0.25
        assert curve[0][1] == pytest.approx(curve[1][1])

    def test_rejects_empty_grid(self):
        with pytest.raises(ConfigError):
            optimal_l_search(ScenarioConfig(**FAST), [])

    def test_curve_length(self):
        cfg = ScenarioConfig(**FAST)
        best, curve = optimal_l_search(cfg, [0.2, 0.3, 0.4])
        assert len(curve) == 3
        assert best in {0.2, 0.3, 0.4}


class TestCli:
    def test_run_writes_csv(self, tmp_path, capsys):
        out = tmp_path / "o.csv"
        rc = cli.main(["run", "--scenario", "uniform-room", "--devices", "4",
                       "--m-grid", "16", "--drops", "2", "--realizations",
                       "64", "--seed", "1", "--out", str(out)])
        assert rc == 0
        assert out.exists()
        assert "mc_mean" in capsys.readouterr().out

    def test_config_error_exit_code(self):
        rc = cli.main(["run", "--m-grid", "10", "--devices", "4",
                       "--drops", "1", "--realizations", "64"])
        assert rc == cli.EXIT_CONFIG

    def test_io_error_exit_code(self, tmp_path):
        rc = cli.main(["run", "--scenario", "uniform-room", "--devices", "4",
                       "--m-grid", "16", "--drops", "1", "--realizations",
                       "64", "--out", str(tmp_path / "no" / "dir" / "o.csv")])
        assert rc == cli.EXIT_IO

    def test_sweep_l(self, capsys):
        rc = cli.main(["sweep-L", "--scenario", "uniform-room", "--devices",
                       "4", "--m-grid", "16", "--drops", "1",
                       "--realizations", "64", "--seed", "2",
                       "--l-grid", "0.2,0.3"])
        assert rc == 0
        assert "optimal L" in capsys.readouterr().out

    def test_validate_passes(self, capsys):
        rc = cli.main(["validate", "--scenario", "uniform-room", "--devices",
                       "4", "--m-grid", "64", "--drops", "1",
                       "--realizations", "4000", "--seed", "3"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "PASS" in out and "FAIL" not in out

    def test_selftest_passes(self, capsys):
        rc = cli.main(["selftest", "--seed", "0"])
        assert rc == 0
        assert "OK" in capsys.readouterr().out

    def test_config_file_flow(self, tmp_path, capsys):
        path = tmp_path / "c.cfg"
        path.write_text("kind = uniform-room\nnum_devices = 4\n"
                        "m_grid = 16\ndrops = 1\nrealizations = 64\n")
        rc = cli.main(["run", "--config", str(path), "--seed", "4"])
        assert rc == 0
