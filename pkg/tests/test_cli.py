from __future__ import annotations

import json

import pytest

from decentmetrics.cli import main
from decentmetrics.fixtures import gen_fixture
from decentmetrics.model import SubsystemKind


@pytest.fixture
def uniform_csv(tmp_path):
    return gen_fixture("uniform", tmp_path / "fx", seed=7, entities=4, days=2).csv_path


class TestIngestCheck:
    def test_ok(self, uniform_csv, capsys):
        assert main(["ingest-check", "--input", f"consensus:{uniform_csv}"]) == 0
        out = capsys.readouterr().out
        assert "rows_in=8" in out
        assert "ok" in out

    def test_schema_mismatch_exit_1(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("date,wrong\n2021-01-01,x\n", encoding="utf-8")
        assert main(["ingest-check", "--input", f"defi_tvl:{bad}"]) == 1
        assert "error" in capsys.readouterr().err

    def test_missing_file_exit_1(self, tmp_path):
        assert main(["ingest-check", "--input", f"consensus:{tmp_path}/no.csv"]) == 1

    def test_missing_input_flag_exit_2(self):
        assert main(["ingest-check"]) == 2


class TestCompute:
    def test_happy_path(self, uniform_csv, tmp_path, capsys):
        out_dir = tmp_path / "out"
        code = main(
            [
                "compute",
                "--input",
                f"consensus:{uniform_csv}",
                "--output",
                str(out_dir),
                "--ecosystem",
                "synthetic",
                "--metrics",
                "shannon_entropy,nakamoto",
            ]
        )
        assert code == 0
        assert (out_dir / "synthetic_consensus_shannon_entropy.csv").exists()
        assert (out_dir / "report.json").exists()

    def test_config_file_with_flag_override(self, uniform_csv, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            f"input = consensus:{uniform_csv}\n"
            f"output = {tmp_path / 'from_file'}\n"
            "ecosystem = fileeco\n"
            "metrics = hhi\n",
            encoding="utf-8",
        )
        out_dir = tmp_path / "from_flag"
        assert main(["compute", "--config", str(cfg), "--output", str(out_dir)]) == 0
        # flag output dir wins; ecosystem and metrics come from the file
        assert (out_dir / "fileeco_consensus_hhi.csv").exists()
        assert not (tmp_path / "from_file").exists()

    def test_unknown_metric_exit_2(self, uniform_csv, tmp_path):
        code = main(
            [
                "compute",
                "--input",
                f"consensus:{uniform_csv}",
                "--output",
                str(tmp_path / "o"),
                "--metrics",
                "theil",
            ]
        )
        assert code == 2

    def test_empty_dir_exit_1(self, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        code = main(
            ["compute", "--input", f"consensus:{empty}", "--output", str(tmp_path / "o")]
        )
        assert code == 1

    def test_renyi_without_alphas_exit_2(self, uniform_csv, tmp_path):
        code = main(
            [
                "compute",
                "--input",
                f"consensus:{uniform_csv}",
                "--output",
                str(tmp_path / "o"),
                "--metrics",
                "renyi_entropy",
            ]
        )
        assert code == 2


class TestKnockout:
    def test_outputs(self, tmp_path, capsys):
        fixture = gen_fixture("zipf", tmp_path / "fx", seed=3, entities=12, days=5)
        out_dir = tmp_path / "out"
        code = main(
            [
                "knockout",
                "--input",
                f"consensus:{fixture.csv_path}",
                "--output",
                str(out_dir),
                "--ecosystem",
                "synthetic",
            ]
        )
        assert code == 0
        csv_path = out_dir / "synthetic_consensus_knockout.csv"
        assert csv_path.exists()
        header = csv_path.read_text(encoding="utf-8").splitlines()[0]
        assert header.startswith("window_start,pre_shannon_entropy")
        corr = json.loads(
            (out_dir / "synthetic_consensus_knockout_correlations.json").read_text()
        )
        assert corr["threshold"] == 0.51
        assert "shannon_entropy" in corr["correlations"]

    def test_monopoly_rows_have_empty_post(self, tmp_path):
        data = tmp_path / "mono.csv"
        data.write_text(
            "timestamp,block_id,producer\n"
            "2021-01-01,b1,V1\n2021-01-02,b2,V1\n2021-01-03,b3,V1\n",
            encoding="utf-8",
        )
        out_dir = tmp_path / "out"
        assert (
            main(
                [
                    "knockout",
                    "--input",
                    f"consensus:{data}",
                    "--output",
                    str(out_dir),
                    "--ecosystem",
                    "e",
                ]
            )
            == 0
        )
        lines = (out_dir / "e_consensus_knockout.csv").read_text().splitlines()
        assert lines[1].endswith(",,,,1")
        corr = json.loads((out_dir / "e_consensus_knockout_correlations.json").read_text())
        assert "error" in corr["correlations"]


class TestCorrelate:
    def test_entropy_vs_node_count(self, tmp_path, capsys):
        fixture = gen_fixture(
            "stepwise", tmp_path / "fx", seed=5, levels=(2, 4, 8), days_per_level=3
        )
        code = main(["correlate", "--input", f"consensus:{fixture.csv_path}"])
        assert code == 0
        out = capsys.readouterr().out
        assert "consensus: r=" in out

    def test_json_output(self, tmp_path):
        fixture = gen_fixture(
            "stepwise", tmp_path / "fx", seed=5, levels=(2, 4, 8), days_per_level=3
        )
        out_dir = tmp_path / "out"
        code = main(
            [
                "correlate",
                "--input",
                f"consensus:{fixture.csv_path}",
                "--output",
                str(out_dir),
                "--ecosystem",
                "e",
                "--metric-a",
                "shannon_entropy",
                "--metric-b",
                "node_count",
            ]
        )
        assert code == 0
        payload = json.loads(
            (out_dir / "e_consensus_corr_shannon_entropy_vs_node_count.json").read_text()
        )
        assert payload["n"] == 9
        assert 0.9 < payload["r"] <= 1.0

    def test_degenerate_series(self, tmp_path, capsys):
        flat = gen_fixture("uniform", tmp_path / "fx", seed=2, entities=4, days=4)
        code = main(["correlate", "--input", f"consensus:{flat.csv_path}"])
        assert code == 0
        assert "degenerate" in capsys.readouterr().out

    def test_too_few_windows_exit_1(self, uniform_csv, capsys):
        assert main(["correlate", "--input", f"consensus:{uniform_csv}"]) == 1
        assert "3 paired samples" in capsys.readouterr().err

    def test_renyi_label(self, tmp_path, capsys):
        fixture = gen_fixture(
            "stepwise", tmp_path / "fx", seed=5, levels=(2, 4), days_per_level=2
        )
        code = main(
            [
                "correlate",
                "--input",
                f"consensus:{fixture.csv_path}",
                "--metric-a",
                "renyi_entropy_a2",
                "--metric-b",
                "hhi",
            ]
        )
        assert code == 0

    def test_bad_metric_exit_2(self, uniform_csv):
        assert (
            main(
                [
                    "correlate",
                    "--input",
                    f"consensus:{uniform_csv}",
                    "--metric-a",
                    "nope",
                ]
            )
            == 2
        )


class TestFixtureCommand:
    def test_generate(self, tmp_path, capsys):
        code = main(
            [
                "fixture",
                "--kind",
                "duopoly",
                "--output",
                str(tmp_path / "fx"),
                "--seed",
                "11",
                "--shares",
                "0.65,0.35",
                "--days",
                "3",
            ]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "wrote" in out
        truth = json.loads(
            (tmp_path / "fx" / "synthetic_consensus_duopoly_seed11_truth.json").read_text()
        )
        assert truth["params"]["shares"] == [0.65, 0.35]

    def test_bad_params_exit_2(self, tmp_path):
        code = main(
            [
                "fixture",
                "--kind",
                "uniform",
                "--output",
                str(tmp_path),
                "--seed",
                "1",
                "--entities",
                "0",
            ]
        )
        assert code == 2

    def test_round_trip_via_cli(self, tmp_path):
        fx_dir = tmp_path / "fx"
        assert (
            main(
                ["fixture", "--kind", "uniform", "--output", str(fx_dir), "--seed", "7"]
            )
            == 0
        )
        csv_path = fx_dir / "synthetic_consensus_uniform_seed7.csv"
        out_dir = tmp_path / "out"
        assert (
            main(
                [
                    "compute",
                    "--input",
                    f"consensus:{csv_path}",
                    "--output",
                    str(out_dir),
                    "--ecosystem",
                    "synthetic",
                    "--metrics",
                    "shannon_entropy",
                ]
            )
            == 0
        )
        series = (out_dir / "synthetic_consensus_shannon_entropy.csv").read_text()
        assert series == "window_start,value\n2021-01-01,2\n2021-01-02,2\n"
