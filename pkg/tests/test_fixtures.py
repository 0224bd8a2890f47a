from __future__ import annotations

import json
import math

import pytest

from decentmetrics.errors import InvalidParamsError
from decentmetrics.fixtures import TRUTH_ALPHAS, TRUTH_METRICS, gen_fixture
from decentmetrics.model import SubsystemKind
from decentmetrics.pipeline import RunConfig, run_pipeline


def pipeline_series(fixture, tmp_path, name="out"):
    """Run the real pipeline over a fixture and index series by label."""
    config = RunConfig(
        inputs=((fixture.csv_path, fixture.subsystem),),
        output_dir=tmp_path / name,
        ecosystem=fixture.ecosystem,
        metrics=TRUTH_METRICS,
        alphas=TRUTH_ALPHAS,
    )
    result = run_pipeline(config)
    panel = result.panels[fixture.subsystem]
    return {
        series.metric: [[w.start_date, v] for w, v in series.points] for series in panel
    }


class TestGeneration:
    def test_same_seed_same_bytes(self, tmp_path):
        a = gen_fixture("zipf", tmp_path / "a", seed=1, entities=100, exponent=1.0)
        b = gen_fixture("zipf", tmp_path / "b", seed=1, entities=100, exponent=1.0)
        assert a.csv_path.read_bytes() == b.csv_path.read_bytes()
        assert a.truth_path.read_bytes() == b.truth_path.read_bytes()

    def test_different_seed_different_bytes(self, tmp_path):
        a = gen_fixture("uniform", tmp_path / "a", seed=1)
        b = gen_fixture("uniform", tmp_path / "b", seed=2)
        assert a.csv_path.read_bytes() != b.csv_path.read_bytes()

    def test_truth_file_round_trips_json(self, tmp_path):
        fixture = gen_fixture("duopoly", tmp_path, seed=3)
        loaded = json.loads(fixture.truth_path.read_text(encoding="utf-8"))
        assert loaded == fixture.ground_truth

    def test_unknown_kind(self, tmp_path):
        with pytest.raises(InvalidParamsError):
            gen_fixture("pareto", tmp_path, seed=1)

    def test_unknown_param(self, tmp_path):
        with pytest.raises(InvalidParamsError):
            gen_fixture("uniform", tmp_path, seed=1, exponent=2.0)

    def test_bad_params(self, tmp_path):
        with pytest.raises(InvalidParamsError):
            gen_fixture("uniform", tmp_path, seed=1, entities=0)
        with pytest.raises(InvalidParamsError):
            gen_fixture("duopoly", tmp_path, seed=1, shares=(1.0,))
        with pytest.raises(InvalidParamsError):
            gen_fixture("uniform", tmp_path, seed=1, days=40000)


class TestDeclaredTruth:
    def test_uniform_closed_forms(self, tmp_path):
        fixture = gen_fixture("uniform", tmp_path, seed=7, entities=4, days=2)
        series = fixture.ground_truth["series"]
        assert [v for _, v in series["shannon_entropy"]] == [2.0, 2.0]
        assert [v for _, v in series["gini"]] == [0.0, 0.0]
        assert [v for _, v in series["hhi"]] == [0.25, 0.25]
        assert [v for _, v in series["nakamoto"]] == [3.0, 3.0]
        assert [v for _, v in series["node_count"]] == [4.0, 4.0]

    def test_duopoly_gini_constant(self, tmp_path):
        fixture = gen_fixture("duopoly", tmp_path, seed=5, days=3)
        for _, value in fixture.ground_truth["series"]["gini"]:
            assert value == pytest.approx(0.15, abs=1e-12)

    def test_stepwise_entropy_steps(self, tmp_path):
        fixture = gen_fixture(
            "stepwise", tmp_path, seed=9, levels=(2, 4, 8), days_per_level=2
        )
        entropies = [v for _, v in fixture.ground_truth["series"]["shannon_entropy"]]
        assert entropies == [1.0, 1.0, 2.0, 2.0, 3.0, 3.0]

    def test_zipf_truth_matches_direct_formula(self, tmp_path):
        fixture = gen_fixture("zipf", tmp_path, seed=2, entities=5, exponent=1.0)
        weights = [1.0 / r for r in range(1, 6)]
        total = math.fsum(weights)
        expected = -math.fsum(w / total * math.log2(w / total) for w in weights)
        for _, value in fixture.ground_truth["series"]["shannon_entropy"]:
            assert value == pytest.approx(expected, abs=1e-12)


class TestRoundTrip:
    @pytest.mark.parametrize("kind", ["uniform", "zipf", "duopoly", "stepwise"])
    def test_consensus_round_trip_exact(self, kind, tmp_path):
        fixture = gen_fixture(kind, tmp_path / "fx", seed=11)
        assert pipeline_series(fixture, tmp_path) == fixture.ground_truth["series"]

    @pytest.mark.parametrize(
        "subsystem",
        [
            SubsystemKind.DEFI_TVL,
            SubsystemKind.DEFI_GOVERNANCE,
            SubsystemKind.NFT_MARKETPLACES,
            SubsystemKind.DEVELOPMENT,
            SubsystemKind.EXCHANGES,
        ],
    )
    def test_non_consensus_round_trip_exact(self, subsystem, tmp_path):
        fixture = gen_fixture("zipf", tmp_path / "fx", seed=13, subsystem=subsystem)
        assert pipeline_series(fixture, tmp_path) == fixture.ground_truth["series"]

    def test_monthly_subsystem_windows(self, tmp_path):
        fixture = gen_fixture(
            "uniform", tmp_path / "fx", seed=4, subsystem=SubsystemKind.DEVELOPMENT, days=3
        )
        starts = [w for w, _ in fixture.ground_truth["series"]["node_count"]]
        assert starts == ["2021-01-01", "2021-02-01", "2021-03-01"]
        assert pipeline_series(fixture, tmp_path) == fixture.ground_truth["series"]
