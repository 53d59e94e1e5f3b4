"""Command-line front end: config round trips, output contract, exit codes,
sweeps, and the verification report."""

import json
import math
import os

import numpy as np
import pytest

import ringbath.reduced
from ringbath import cli, verification
from ringbath.bath import FixedCouplings, GaussianEnsemble
from ringbath.cli import (
    EXIT_CONFIG,
    EXIT_NUMERIC,
    EXIT_OK,
    EXIT_VERIFY,
    CliError,
    RunConfig,
    SweepSpec,
    config_to_flat,
    parse_flat_text,
    run_config_from_flat,
)
from ringbath.ring import DensityMatrix, RingConfig, SumForm, TimeGrid
from ringbath.wavepacket import WavepacketSpec


def make_config(**overrides) -> RunConfig:
    base = dict(
        ring=RingConfig(n_sites=3, hop=1.0, flux=0.9),
        grid=TimeGrid([0.0, 0.5, 1.0]),
        observables=("prob",),
        initial_site=0,
    )
    base.update(overrides)
    return RunConfig(**base)


def read_rows(text: str) -> tuple[list[str], list[list[str]]]:
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    header = lines[0].split(",")
    return header, [ln.split(",") for ln in lines[1:]]


class TestRunConfig:
    def test_requires_exactly_one_initial_variant(self):
        with pytest.raises(ValueError, match="initial-state variant"):
            make_config(initial_site=None)
        with pytest.raises(ValueError, match="initial-state variant"):
            make_config(
                wavepacket=WavepacketSpec(n_sites=3, width=1.0, offset=0)
            )

    def test_requires_nonempty_known_observables(self):
        with pytest.raises(ValueError, match="nonempty"):
            make_config(observables=())
        with pytest.raises(ValueError, match="unknown observables"):
            make_config(observables=("prob", "heat"))

    def test_observables_canonical_order(self):
        config = make_config(observables=("momentum_occupations", "prob"))
        assert config.observables == ("prob", "momentum_occupations")

    def test_rejects_mismatched_sizes(self):
        with pytest.raises(ValueError, match="outside ring"):
            make_config(initial_site=5)
        with pytest.raises(ValueError, match="does not match"):
            make_config(
                initial_site=None,
                wavepacket=WavepacketSpec(n_sites=4, width=1.0, offset=0),
            )

    def test_sweep_spec_validation(self):
        base = make_config()
        with pytest.raises(ValueError, match="axis"):
            SweepSpec(axis="hop", values=(1.0,), base=base)
        with pytest.raises(ValueError, match="nonempty"):
            SweepSpec(axis="flux", values=(), base=base)
        with pytest.raises(ValueError, match="finite"):
            SweepSpec(axis="flux", values=(math.inf,), base=base)
        with pytest.raises(ValueError, match="wavepacket"):
            SweepSpec(axis="width", values=(1.0,), base=base)

    def test_sweep_configs_replace_axis(self):
        base = make_config(bath=GaussianEnsemble(0.3))
        spec = SweepSpec(axis="lambda", values=(0.0, 0.7), base=base)
        lams = [c.bath.lam for c in spec.configs()]
        assert lams == [0.0, 0.7]
        spec = SweepSpec(axis="flux", values=(0.1, 0.2), base=base)
        assert [c.ring.flux for c in spec.configs()] == [0.1, 0.2]


class TestFlatConfig:
    @pytest.mark.parametrize(
        "config",
        [
            make_config(),
            make_config(bath=GaussianEnsemble(0.25), seed=7, tolerance=1e-9),
            make_config(
                ring=RingConfig(n_sites=4, hop=0.8, flux=1.0 / 3.0),
                bath=FixedCouplings((0.3, 0.4), polarizations=(0.5, -0.25)),
                grid=TimeGrid([0.0, math.pi / 3.0, 2.0]),
                observables=("current", "density"),
                initial_site=2,
                sum_form=SumForm("single"),
                out_format="json",
            ),
            make_config(
                ring=RingConfig(n_sites=6),
                initial_site=None,
                wavepacket=WavepacketSpec(
                    n_sites=6, width=2.5, offset=3, k_center=1.1, include_second=False
                ),
            ),
            make_config(
                initial_site=None,
                matrix=DensityMatrix.from_pure([0.6, 0.8j, 0.1]),
            ),
        ],
    )
    def test_round_trip_identity(self, config):
        assert run_config_from_flat(config_to_flat(config)) == config

    def test_round_trip_ignores_meta_and_sweep_keys(self):
        config = make_config()
        flat = config_to_flat(config)
        flat["meta.version"] = "9.9.9"
        flat["sweep.axis"] = "flux"
        assert run_config_from_flat(flat) == config

    def test_parse_flat_text_comments_and_blanks(self):
        text = "\n# full-line comment\nring.sites = 5\nring.hop = 2.0 # energy unit\n"
        assert parse_flat_text(text) == {"ring.sites": "5", "ring.hop": "2.0"}

    def test_parse_flat_text_diagnostics_carry_line_numbers(self):
        with pytest.raises(CliError, match="cfg:2"):
            parse_flat_text("a = 1\nnonsense line\n", source="cfg")
        with pytest.raises(CliError, match="duplicate key"):
            parse_flat_text("a = 1\na = 2\n")

    def test_unknown_field_rejected(self):
        flat = config_to_flat(make_config())
        flat["ring.twist"] = "0.3"
        with pytest.raises(CliError, match="ring.twist"):
            run_config_from_flat(flat)

    def test_conflicting_groups_rejected(self):
        flat = config_to_flat(make_config())
        flat["bath.lambda"] = "0.1"
        flat["bath.alphas"] = "0.3"
        with pytest.raises(CliError, match="mutually exclusive"):
            run_config_from_flat(flat)
        flat = config_to_flat(make_config())
        flat["initial.packet.width"] = "2.0"
        with pytest.raises(CliError, match="exactly one initial-state"):
            run_config_from_flat(flat)
        flat = config_to_flat(make_config())
        flat["grid.tmax"] = "2.0"
        with pytest.raises(CliError, match="grid.times excludes"):
            run_config_from_flat(flat)

    def test_grid_from_tmax_and_steps(self):
        flat = config_to_flat(make_config())
        del flat["grid.times"]
        flat["grid.tmax"] = "2.0"
        flat["grid.steps"] = "4"
        config = run_config_from_flat(flat)
        assert config.grid.times == (0.0, 0.5, 1.0, 1.5, 2.0)


class TestRunCommands:
    def test_free_probabilities_oscillate_and_sum_to_one(self, capsys):
        code = cli.main(
            ["free", "--sites", "3", "--flux", "0", "--initial-site", "1",
             "--tmax", "6", "--steps", "24"]
        )
        assert code == EXIT_OK
        header, rows = read_rows(capsys.readouterr().out)
        assert header == list(cli.COLUMNS)
        by_time: dict[str, dict[str, float]] = {}
        for t, _, obs, idx, re_, im_ in rows:
            assert obs == "prob" and im_ == "0.0"
            by_time.setdefault(t, {})[idx] = float(re_)
        assert by_time["0.0"]["1"] == pytest.approx(1.0, abs=1e-12)
        for probs in by_time.values():
            assert sum(probs.values()) == pytest.approx(1.0, abs=1e-10)
        for site in ("0", "1", "2"):
            values = [probs[site] for probs in by_time.values()]
            assert max(values) - min(values) > 0.3

    def test_output_written_to_file_with_metadata(self, tmp_path):
        out = tmp_path / "run.csv"
        code = cli.main(
            ["evolve", "--sites", "3", "--flux", "0.9", "--lambda", "0.1",
             "--times", "0,1.5", "--out", str(out)]
        )
        assert code == EXIT_OK
        text = out.read_text()
        meta = parse_flat_text(
            "\n".join(ln[2:] for ln in text.splitlines() if ln.startswith("# "))
        )
        assert meta["meta.version"] == cli.__version__
        assert meta["meta.command"] == "evolve"
        assert int(meta["meta.truncation_p_max"]) >= 1
        assert float(meta["meta.tail_bound"]) > 0.0
        parsed = run_config_from_flat(meta)
        assert parsed.bath == GaussianEnsemble(0.1)
        assert parsed.observables == ("prob", "density", "momentum_occupations")

    def test_header_alone_suffices_to_rerun(self, tmp_path):
        out1 = tmp_path / "a.csv"
        cli.main(
            ["current", "--sites", "4", "--flux", "0.7", "--alphas", "0.3,0.2",
             "--polarizations", "0.5,-0.2", "--times", "0.4,0.8",
             "--out", str(out1)]
        )
        header_cfg = tmp_path / "replay.cfg"
        header_cfg.write_text(
            "\n".join(
                ln[2:] for ln in out1.read_text().splitlines() if ln.startswith("# ")
            )
        )
        out2 = tmp_path / "b.csv"
        code = cli.main(["current", "--config", str(header_cfg), "--out", str(out2)])
        assert code == EXIT_OK
        assert out1.read_bytes() == out2.read_bytes()

    def test_identical_config_gives_byte_identical_output(self, tmp_path):
        args = ["wavepacket", "--sites", "12", "--flux", "0.6", "--lambda", "0.1",
                "--times", "0.5,1.5", "--seed", "3"]
        spec = tmp_path / "packet.cfg"
        spec.write_text("width = 3.0\noffset = 6\n")
        args += ["--wavepacket-file", str(spec)]
        out1, out2 = tmp_path / "w1.csv", tmp_path / "w2.csv"
        assert cli.main(args + ["--out", str(out1)]) == EXIT_OK
        assert cli.main(args + ["--out", str(out2)]) == EXIT_OK
        assert out1.read_bytes() == out2.read_bytes()

    def test_json_output_shape(self, tmp_path):
        out = tmp_path / "run.json"
        code = cli.main(
            ["free", "--sites", "3", "--times", "1.0", "--format", "json",
             "--out", str(out)]
        )
        assert code == EXIT_OK
        payload = json.loads(out.read_text())
        assert payload["columns"] == list(cli.COLUMNS)
        assert payload["meta"]["output.format"] == "json"
        assert len(payload["rows"]) == 3
        t, delta0_t, obs, idx, re_, im_ = payload["rows"][0]
        assert (t, delta0_t, obs, idx, im_) == (1.0, 1.0, "prob", "0", 0.0)

    def test_density_rows_carry_imaginary_parts(self, capsys):
        code = cli.main(
            ["evolve", "--sites", "3", "--flux", "0.5", "--times", "0.7"]
        )
        assert code == EXIT_OK
        _, rows = read_rows(capsys.readouterr().out)
        density = [r for r in rows if r[2] == "density"]
        assert len(density) == 9
        assert {r[3] for r in density} == {f"{j}:{l}" for j in range(3) for l in range(3)}
        assert any(float(r[5]) != 0.0 for r in density)

    def test_flags_override_config_file(self, tmp_path):
        cfg = tmp_path / "base.cfg"
        cfg.write_text(
            "ring.sites = 3\nring.flux = 0.0\ninitial.site = 0\n"
            "grid.times = 1.0\nobservables = prob\n"
        )
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        cli.main(["free", "--config", str(cfg), "--out", str(out1)])
        cli.main(["free", "--config", str(cfg), "--flux", "0.9", "--out", str(out2)])
        assert "# ring.flux = 0.0" in out1.read_text()
        assert "# ring.flux = 0.9" in out2.read_text()
        assert out1.read_text() != out2.read_text()


class TestExitCodes:
    @pytest.mark.parametrize(
        "argv",
        [
            ["free", "--sites", "2", "--times", "1"],
            ["free", "--sites", "3"],
            ["free", "--sites", "3", "--times", "1", "--lambda", "0.1",
             "--alphas", "0.3"],
            ["free", "--sites", "3", "--times", "1", "--tol", "2.0"],
            ["free", "--sites", "3", "--times", "-1"],
            ["wavepacket", "--sites", "8", "--times", "1"],
            ["sweep", "--axis", "flux", "--values", "0,1", "--sites", "3",
             "--times", "1"],
            ["nonsense"],
            ["free", "--sites", "3", "--times", "1", "--no-such-flag"],
        ],
    )
    def test_validation_problems_exit_1(self, argv, capsys):
        assert cli.main(argv) == EXIT_CONFIG
        assert capsys.readouterr().err.strip() != ""

    def test_numerical_guard_exits_2_and_leaves_no_file(self, tmp_path, monkeypatch):
        def explode(*args, **kwargs):
            raise FloatingPointError("synthetic overflow")

        monkeypatch.setattr(cli, "density_free", explode)
        out = tmp_path / "run.csv"
        code = cli.main(["free", "--sites", "3", "--times", "1", "--out", str(out)])
        assert code == EXIT_NUMERIC
        assert not out.exists()
        assert list(tmp_path.iterdir()) == []

    def test_failed_write_leaves_no_partial_file(self, tmp_path, monkeypatch):
        def refuse(src, dst):
            raise OSError("disk full")

        monkeypatch.setattr(cli.os, "replace", refuse)
        out = tmp_path / "run.csv"
        code = cli.main(["free", "--sites", "3", "--times", "1", "--out", str(out)])
        assert code == EXIT_CONFIG
        assert list(tmp_path.iterdir()) == []


class TestSweep:
    def test_flux_sweep_files_and_combined(self, tmp_path, capsys):
        out = tmp_path / "sweep"
        code = cli.main(
            ["sweep", "--axis", "flux", "--values", "0.0,0.5", "--base", "free",
             "--sites", "3", "--initial-site", "0", "--times", "0.5,1.0",
             "--out", str(out)]
        )
        assert code == EXIT_OK
        names = sorted(p.name for p in out.iterdir())
        assert names == ["combined.csv", "flux=0.0.csv", "flux=0.5.csv"]
        header, rows = read_rows((out / "combined.csv").read_text())
        assert header == ["flux"] + list(cli.COLUMNS)
        assert {r[0] for r in rows} == {"0.0", "0.5"}
        single_header, single_rows = read_rows((out / "flux=0.5.csv").read_text())
        assert single_header == list(cli.COLUMNS)
        assert len(rows) == 2 * len(single_rows)
        assert "cross_flux_deviation" in capsys.readouterr().out

    def test_empty_bath_baseline_matches_free_run_bitwise(self, tmp_path):
        common = ["--sites", "3", "--flux", "0.9", "--initial-site", "0",
                  "--tmax", "5", "--steps", "10"]
        sweep_dir = tmp_path / "lam"
        assert cli.main(
            ["sweep", "--axis", "lambda", "--values", "0.0", "--base", "free"]
            + common + ["--out", str(sweep_dir)]
        ) == EXIT_OK
        free_out = tmp_path / "free.csv"
        assert cli.main(["free"] + common + ["--out", str(free_out)]) == EXIT_OK

        def data(path):
            return [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]

        assert data(sweep_dir / "lambda=0.0.csv") == data(free_out)

    def test_lambda_sweep_reports_monotone_sensitivity(self, tmp_path, capsys):
        out = tmp_path / "lam"
        code = cli.main(
            ["sweep", "--axis", "lambda", "--values", "0,0.02,0.1,0.5",
             "--base", "free", "--sites", "3", "--initial-site", "0",
             "--tmax", "6", "--steps", "12", "--out", str(out)]
        )
        assert code == EXIT_OK
        lines = [
            ln for ln in capsys.readouterr().out.splitlines()
            if ln.startswith("phi_sensitivity")
        ]
        assert len(lines) == 4
        metrics = [float(ln.rsplit("=", 1)[1]) for ln in lines]
        assert metrics[0] > metrics[1] > metrics[2] > metrics[3]

    def test_strong_decoherence_flux_sweep_reports_tiny_deviation(
        self, tmp_path, capsys
    ):
        out = tmp_path / "flux"
        code = cli.main(
            ["sweep", "--axis", "flux",
             "--values", "0,0.785,1.571,2.356,3.142,3.927,4.712,5.498",
             "--base", "free", "--sites", "3", "--lambda", "5",
             "--initial-site", "0", "--tmax", "5", "--steps", "10",
             "--out", str(out)]
        )
        assert code == EXIT_OK
        line = [
            ln for ln in capsys.readouterr().out.splitlines()
            if ln.startswith("cross_flux_deviation")
        ][0]
        assert float(line.rsplit("=", 1)[1]) < 1e-6

    def test_sweep_requires_out_directory(self, capsys):
        code = cli.main(
            ["sweep", "--axis", "flux", "--values", "0,1", "--sites", "3",
             "--initial-site", "0", "--times", "1"]
        )
        assert code == EXIT_CONFIG
        assert "requires --out" in capsys.readouterr().err


class TestVerify:
    def test_quick_suite_passes_with_full_report(self, tmp_path, capsys):
        report_path = tmp_path / "report.json"
        code = cli.main(["verify", "--level", "quick", "--out", str(report_path)])
        assert code == EXIT_OK
        stderr = capsys.readouterr().err
        report = json.loads(report_path.read_text())
        assert report["passed"] is True
        assert report["level"] == "quick"
        names = [c["name"] for c in report["checks"]]
        assert names == list(verification.QUICK_CHECKS)
        for check in report["checks"]:
            assert set(check) == {
                "name", "tolerance", "observed", "require", "passed", "detail"
            }
            assert check["passed"] is True
            assert f"PASS {check['name']}" in stderr

    def test_full_suite_reports_known_out_of_regime_failures(self, tmp_path):
        report_path = tmp_path / "report.json"
        code = cli.main(["verify", "--level", "full", "--out", str(report_path)])
        assert code == EXIT_VERIFY
        report = json.loads(report_path.read_text())
        failed = {c["name"] for c in report["checks"] if not c["passed"]}
        assert failed == {
            "flux_independence_moderate_decoherence",
            "asymptote_accuracy_quarter_flux",
        }
        names = {c["name"] for c in report["checks"]}
        assert set(verification.FULL_ONLY_CHECKS) <= names
        mc = [c for c in report["checks"] if c["name"] == "monte_carlo_gaussian"][0]
        assert mc["passed"] is True and mc["observed"] < 3.0

    def test_report_goes_to_stdout_without_out_flag(self, capsys, monkeypatch):
        # pare the suite down to one cheap check: this test is about plumbing
        monkeypatch.setattr(
            cli, "run_suite",
            lambda level, seed: [verification.CheckResult(
                name="stub", tolerance=1.0, observed=0.5, require="below",
                passed=True,
            )],
        )
        code = cli.main(["verify", "--level", "quick"])
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert json.loads(out)["checks"][0]["name"] == "stub"

    def test_influence_sign_mutation_trips_hermiticity_check(self, monkeypatch):
        original = ringbath.reduced.influence_phase_factor
        monkeypatch.setattr(
            ringbath.reduced,
            "influence_phase_factor",
            lambda spec, x: original(spec, abs(x)),
        )
        results = verification.run_suite("quick")
        by_name = {r.name: r for r in results}
        herm = by_name["conservation_hermiticity"]
        assert not herm.passed
        assert herm.observed > 1e-2
        assert not by_name["oracle_equivalence_polarized"].passed

    def test_globally_conjugated_influence_caught_by_polarized_oracle(
        self, monkeypatch
    ):
        original = ringbath.reduced.influence_phase_factor
        monkeypatch.setattr(
            ringbath.reduced,
            "influence_phase_factor",
            lambda spec, x: original(spec, -x),
        )
        results = verification.run_suite("quick")
        by_name = {r.name: r for r in results}
        assert not by_name["oracle_equivalence_polarized"].passed
