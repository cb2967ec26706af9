"""Config ingestion, report assembly, sweeps, feasibility checks and the CLI."""

import json
import math
from dataclasses import replace

import pytest

from qkdsim.cli import main
from qkdsim.harness import (
    CSV_COLUMNS,
    ConfigurationError,
    ExperimentConfig,
    InfeasibleStrategyError,
    no_signaling_demo,
    report_csv_rows,
    run_experiment,
    sweep,
    usd_check,
)
from qkdsim.rng import derive_seed
from qkdsim.session import STAGE_SWEEP

HALF_PI = math.pi / 2
BASE = {"protocol": "b92", "n_pulses": 2_000, "master_seed": 9}


class TestConfig:
    def test_defaults_filled(self):
        config = ExperimentConfig.from_dict(dict(BASE))
        assert config.eve_strategy == "none"
        assert config.alpha == 0.001
        assert config.reveal_fraction == 0.2

    def test_unknown_field_rejected(self):
        with pytest.raises(ConfigurationError, match="unknown config fields"):
            ExperimentConfig.from_dict({**BASE, "typo_field": 1})

    def test_missing_required_rejected(self):
        with pytest.raises(ConfigurationError, match="missing required"):
            ExperimentConfig.from_dict({"protocol": "b92"})

    @pytest.mark.parametrize(
        "patch",
        [
            {"protocol": "b93"},
            {"n_pulses": 0},
            {"n_pulses": True},
            {"master_seed": True},
            {"absorption": 1.2},
            {"absorption": 1.0},
            {"eve_strategy": "clone"},
            {"usd_scheme": "best"},
            {"delta": HALF_PI},
            {"reveal_fraction": 0.0},
            {"alpha": 0.0},
            {"qber_threshold": 1.5},
        ],
    )
    def test_invalid_values_rejected(self, patch):
        with pytest.raises(ConfigurationError):
            ExperimentConfig.from_dict({**BASE, **patch})

    def test_round_trip(self):
        config = ExperimentConfig.from_dict({**BASE, "eve_strategy": "basis_mismatch", "delta": 0.2})
        assert ExperimentConfig.from_dict(config.to_dict()) == config


class TestRunExperiment:
    def test_counts_consistent(self):
        report = run_experiment(ExperimentConfig.from_dict({**BASE, "absorption": 0.2}))
        assert report.arrived + report.null == report.sent
        assert report.sifted <= report.arrived
        assert report.key_length == report.sifted - report.revealed

    def test_report_reproducible_from_config_echo(self):
        report = run_experiment(ExperimentConfig.from_dict(BASE))
        echoed = ExperimentConfig.from_dict(report.to_dict()["config"])
        assert run_experiment(echoed).to_json() == report.to_json()

    def test_json_byte_identical(self):
        config = ExperimentConfig.from_dict({**BASE, "eve_strategy": "usd_suppress"})
        assert run_experiment(config).to_json() == run_experiment(config).to_json()

    def test_bb84_usd_suppress_infeasible(self):
        config = ExperimentConfig.from_dict(
            {"protocol": "bb84", "n_pulses": 10, "eve_strategy": "usd_suppress"}
        )
        with pytest.raises(InfeasibleStrategyError, match="Gram matrix rank 2 < 4"):
            run_experiment(config)

    def test_bb84_basis_mismatch_infeasible(self):
        config = ExperimentConfig.from_dict(
            {"protocol": "bb84", "n_pulses": 10, "eve_strategy": "basis_mismatch", "delta": 0.1}
        )
        with pytest.raises(InfeasibleStrategyError):
            run_experiment(config)

    def test_rng_identifier_recorded(self):
        assert run_experiment(ExperimentConfig.from_dict(BASE)).rng == "splitmix64"

    def test_scheme_diagnostics_present_only_for_usd(self):
        honest = run_experiment(ExperimentConfig.from_dict(BASE))
        assert honest.scheme_efficiency is None
        attack = run_experiment(
            ExperimentConfig.from_dict({**BASE, "eve_strategy": "usd_suppress"})
        )
        assert attack.scheme_efficiency == 0.25


class TestSweep:
    def test_delta_sweep_qber_column(self):
        config = ExperimentConfig.from_dict(
            {
                "protocol": "b92",
                "n_pulses": 40_000,
                "eve_strategy": "basis_mismatch",
                "reveal_fraction": 1.0,
                "master_seed": 5,
            }
        )
        reports = sweep(config, "delta", [0.0, math.pi / 16, math.pi / 8])
        assert reports[0].qber == 0.0
        assert reports[1].qber > 0.0
        assert reports[2].qber > reports[1].qber

    def test_n_pulses_sweep_sharpens_detection(self):
        config = ExperimentConfig.from_dict(
            {"protocol": "b92", "n_pulses": 1, "eve_strategy": "usd_suppress", "master_seed": 3}
        )
        reports = sweep(config, "n_pulses", [1_000, 10_000, 100_000])
        p_values = [r.null_ratio_test.p_value for r in reports]
        assert all(a >= b for a, b in zip(p_values, p_values[1:]))

    def test_empty_values(self):
        assert sweep(ExperimentConfig.from_dict(BASE), "alpha", []) == []

    def test_unknown_parameter(self):
        with pytest.raises(ConfigurationError, match="unknown sweep parameter"):
            sweep(ExperimentConfig.from_dict(BASE), "protocol", ["bb84"])

    def test_points_independent_of_each_other(self):
        """Each point equals a standalone run with the derived seed."""
        config = ExperimentConfig.from_dict({**BASE, "absorption": 0.1})
        values = [0.05, 0.1, 0.2]
        reports = sweep(config, "absorption", values)
        for index, value in enumerate(values):
            standalone = run_experiment(
                replace(
                    config,
                    absorption=value,
                    master_seed=derive_seed(config.master_seed, index, STAGE_SWEEP),
                )
            )
            assert standalone.to_json() == reports[index].to_json()


class TestUsdCheck:
    def test_b92_pair(self):
        report = usd_check([(0.0, 0.0), (HALF_PI, 0.0)])
        assert report["feasible"]
        assert report["gram_rank"] == 2
        assert report["optimal_conclusive_rate"] == pytest.approx(1 - 1 / math.sqrt(2))

    def test_bb84_quadruple(self):
        report = usd_check([(0.0, 0.0), (math.pi, 0.0), (HALF_PI, 0.0), (HALF_PI, math.pi)])
        assert not report["feasible"]
        assert report["gram_rank"] == 2
        assert report["optimal_conclusive_rate"] is None

    def test_single_state(self):
        assert usd_check([(0.7, 0.1)])["feasible"]

    def test_malformed_angles(self):
        with pytest.raises(ConfigurationError):
            usd_check([(5.0, 0.0)])
        with pytest.raises(ConfigurationError):
            usd_check([])


class TestNoSignalingDemo:
    @pytest.mark.parametrize("povm", ["sz", "sx", "idp", "random"])
    def test_equal_densities_and_distributions(self, povm):
        demo = no_signaling_demo(povm_name=povm, seed=4)
        assert demo["densities_equal"]
        assert demo["max_abs_difference"] <= 1e-10

    def test_unknown_povm(self):
        with pytest.raises(ConfigurationError):
            no_signaling_demo(povm_name="magic")


class TestCsv:
    def test_header_and_row_shape(self):
        report = run_experiment(ExperimentConfig.from_dict(BASE))
        lines = report_csv_rows([report, report])
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert len(lines) == 3
        assert len(lines[1].split(",")) == len(CSV_COLUMNS)

    def test_booleans_and_nones_rendered(self):
        report = run_experiment(
            ExperimentConfig.from_dict({**BASE, "eve_strategy": "usd_suppress"})
        )
        row = dict(zip(CSV_COLUMNS, report_csv_rows([report])[1].split(",")))
        assert row["null_ratio_test_flagged"] == "true"
        assert row["qber_test_flagged"] == "false"
        assert row["protocol"] == "b92"


class TestCli:
    def _write_config(self, tmp_path, payload):
        path = tmp_path / "config.json"
        path.write_text(json.dumps(payload))
        return str(path)

    def test_run_json(self, tmp_path, capsys):
        path = self._write_config(tmp_path, BASE)
        assert main(["run", "--config", path]) == 0
        document = json.loads(capsys.readouterr().out)
        assert document["config"]["protocol"] == "b92"
        assert document["rng"] == "splitmix64"

    def test_run_csv(self, tmp_path, capsys):
        path = self._write_config(tmp_path, BASE)
        assert main(["--output", "csv", "run", "--config", path]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0].startswith("protocol,")
        assert len(lines) == 2

    def test_run_byte_identical(self, tmp_path, capsys):
        path = self._write_config(tmp_path, {**BASE, "eve_strategy": "usd_suppress"})
        assert main(["run", "--config", path]) == 0
        first = capsys.readouterr().out
        assert main(["run", "--config", path]) == 0
        assert capsys.readouterr().out == first

    def test_seed_override_changes_report(self, tmp_path, capsys):
        path = self._write_config(tmp_path, BASE)
        main(["run", "--config", path])
        base_out = capsys.readouterr().out
        main(["--seed", "123", "run", "--config", path])
        seeded_out = capsys.readouterr().out
        assert base_out != seeded_out
        assert json.loads(seeded_out)["config"]["master_seed"] == 123

    def test_global_flags_accepted_after_subcommand(self, tmp_path, capsys):
        path = self._write_config(tmp_path, BASE)
        main(["run", "--config", path, "--seed", "123"])
        trailing = capsys.readouterr().out
        main(["--seed", "123", "run", "--config", path])
        leading = capsys.readouterr().out
        assert trailing == leading
        assert main(["no-signaling-demo", "--povm", "random", "--seed", "7"]) == 0
        assert json.loads(capsys.readouterr().out)["densities_equal"]

    def test_sweep_csv(self, tmp_path, capsys):
        path = self._write_config(tmp_path, {**BASE, "eve_strategy": "basis_mismatch"})
        code = main(
            ["--output", "csv", "sweep", "--config", path, "--param", "delta",
             "--values", "0,0.196,0.392"]
        )
        assert code == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 4

    def test_usd_check_cli(self, capsys):
        assert main(["usd-check", "--states", "0,0,1.5707963267948966,0"]) == 0
        document = json.loads(capsys.readouterr().out)
        assert document["feasible"]

    def test_no_signaling_demo_cli(self, capsys):
        assert main(["no-signaling-demo", "--povm", "sz"]) == 0
        document = json.loads(capsys.readouterr().out)
        assert document["densities_equal"]

    def test_missing_config_file_exits_2(self, capsys):
        assert main(["run", "--config", "/nonexistent.json"]) == 2

    def test_malformed_json_exits_2(self, tmp_path, capsys):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        assert main(["run", "--config", str(path)]) == 2

    def test_unknown_field_exits_2(self, tmp_path, capsys):
        path = self._write_config(tmp_path, {**BASE, "bogus": True})
        assert main(["run", "--config", path]) == 2

    def test_unknown_sweep_param_exits_2(self, tmp_path, capsys):
        path = self._write_config(tmp_path, BASE)
        assert main(["sweep", "--config", path, "--param", "protocol", "--values", "1"]) == 2

    def test_infeasible_combination_exits_3(self, tmp_path, capsys):
        path = self._write_config(
            tmp_path, {"protocol": "bb84", "n_pulses": 10, "eve_strategy": "usd_suppress"}
        )
        assert main(["run", "--config", path]) == 3
        assert "Gram" in capsys.readouterr().err

    def test_csv_unsupported_for_usd_check(self, capsys):
        assert main(["--output", "csv", "usd-check", "--states", "0,0"]) == 2
