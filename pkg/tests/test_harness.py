"""
Tests for BER simulation and config-driven experiment runs.
"""

import csv
import json
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from unittest.mock import patch

import pytest

from noisy_ldpc.decoder import DecoderConfig
from noisy_ldpc.degree import DegreeDistribution, regular
from noisy_ldpc.design import DesignResult, DesignStep
from noisy_ldpc.graph import construct, remove_four_cycles
from noisy_ldpc.harness import (
    BerPoint,
    ExperimentRunner,
    StopRule,
    ber_sim,
    run_config,
    wilson_interval,
)

CODE_TABLE = "[code]\nlambda = [[3, 1.0]]\nrho = [[6, 1.0]]\n"


def small_graph(n: int = 96, seed: int = 0):
    return remove_four_cycles(construct(regular(3, 6), n, seed=seed), seed=seed).graph


class TestWilsonInterval:
    def test_zero_successes(self):
        low, high = wilson_interval(0, 100)
        assert low == 0.0
        assert high == pytest.approx(3.8415 / 103.8415, abs=1e-4)

    def test_all_successes(self):
        low, high = wilson_interval(100, 100)
        assert high == 1.0
        assert low == pytest.approx(1.0 - 3.8415 / 103.8415, abs=1e-4)

    @pytest.mark.parametrize("trials", [1, 7, 1008, 10_000_000])
    def test_bounds_are_exact_at_the_ends(self, trials):
        assert wilson_interval(0, trials)[0] == 0.0
        assert wilson_interval(trials, trials)[1] == 1.0

    def test_contains_estimate(self):
        low, high = wilson_interval(5, 100)
        assert low < 0.05 < high

    def test_no_trials(self):
        assert wilson_interval(0, 0) == (0.0, 1.0)


class TestBerPoint:
    def test_stop_rule_block_cap(self):
        assert StopRule(max_bits=10_000).max_blocks(1008) == 10
        with pytest.raises(ValueError):
            StopRule(block_errors=0)

    def test_upper_bound_when_cap_hit_without_errors(self):
        point = BerPoint(2.0, 0.0, 0, 0, 100_000, 100, hit_cap=True)
        assert point.upper_bound
        assert point.ber == 0.0
        assert point.reported_ber == point.ber_interval[1] > 0.0

    def test_cap_with_some_errors_is_not_a_bound(self):
        point = BerPoint(2.0, 0.0, 12, 3, 100_000, 100, hit_cap=True)
        assert not point.upper_bound
        assert point.reported_ber == pytest.approx(12 / 100_000)
        row = point.to_row()
        assert row["hit_cap"] is True
        assert row["bler"] == pytest.approx(0.03)


class TestBerSim:
    """Monte-Carlo BER loop."""

    @pytest.mark.asyncio
    async def test_clean_channel_has_no_errors(self):
        graph = small_graph()
        stop = StopRule(block_errors=5, max_bits=96 * 20)
        (point,) = await ber_sim(graph, [12.0], 0.0, stop)
        assert point.bit_errors == 0
        assert point.blocks_simulated == 20
        assert point.bits_simulated == 96 * 20
        assert point.hit_cap
        assert point.upper_bound

    @pytest.mark.asyncio
    async def test_stops_at_target_block_errors(self):
        graph = small_graph()
        stop = StopRule(block_errors=5, max_bits=10_000_000)
        (point,) = await ber_sim(graph, [-1.0], 0.5, stop, DecoderConfig(max_iterations=20))
        assert point.block_errors == 5
        assert not point.hit_cap
        assert point.bit_errors >= 5

    @pytest.mark.asyncio
    async def test_counts_do_not_depend_on_threads(self):
        graph = small_graph()
        stop = StopRule(block_errors=4, max_bits=96 * 200)
        cfg = DecoderConfig(max_iterations=20)
        serial = await ber_sim(graph, [0.5, 1.5], 0.5, stop, cfg, seed=3, threads=1)
        pooled = await ber_sim(graph, [0.5, 1.5], 0.5, stop, cfg, seed=3, threads=3)
        assert serial == pooled

    @pytest.mark.asyncio
    async def test_one_pool_serves_every_batch(self):
        graph = small_graph()
        stop = StopRule(block_errors=1, max_bits=96 * 30)
        shared = patch("noisy_ldpc.harness.ThreadPoolExecutor", wraps=ThreadPoolExecutor)
        per_call = patch("noisy_ldpc.parallel.ThreadPoolExecutor")
        with shared as harness_pool, per_call as per_call_pool:
            (point,) = await ber_sim(graph, [12.0], 0.0, stop, threads=2)
        assert point.blocks_simulated == 30
        harness_pool.assert_called_once_with(max_workers=2)
        per_call_pool.assert_not_called()

    @pytest.mark.asyncio
    async def test_points_follow_snr_order(self):
        graph = small_graph()
        stop = StopRule(block_errors=2, max_bits=96 * 10)
        points = await ber_sim(graph, [1.0, 8.0], 0.0, stop)
        assert [p.snr_db for p in points] == [1.0, 8.0]

    @pytest.mark.asyncio
    async def test_cap_logs_warning(self):
        graph = small_graph()
        with patch("noisy_ldpc.harness.logger") as mock_logger:
            await ber_sim(graph, [12.0], 0.0, StopRule(block_errors=1, max_bits=96 * 3))
        mock_logger.warning.assert_called_once()
        assert "cap" in str(mock_logger.warning.call_args)


class TestRunConfig:
    """End-to-end runs of TOML configs."""

    def setup_method(self):
        self.temp_dir = Path(tempfile.mkdtemp())

    def write(self, text: str) -> Path:
        path = self.temp_dir / "experiment.toml"
        path.write_text(text)
        return path

    @pytest.mark.asyncio
    async def test_ber_run_writes_artifacts(self):
        text = (
            'kind = "ber"\nseed = 1\n' + CODE_TABLE
            + "[ber]\nsnr_db = [10.0]\nn = 96\nmax_bits = 960\nblock_errors = 2\n"
        )
        outcome = await run_config(self.write(text))

        assert outcome.artifacts["csv"] == self.temp_dir / "ber.csv"
        with open(outcome.artifacts["csv"], newline="") as f:
            rows = list(csv.DictReader(f))
        assert len(rows) == 1
        assert rows[0]["blocks_simulated"] == "10"

        manifest = json.loads(outcome.artifacts["manifest"].read_text())
        assert manifest["kind"] == "ber"
        assert manifest["seed"] == 1
        assert "version" in manifest
        assert manifest["wall_time_s"] >= 0
        payload = json.loads(outcome.artifacts["json"].read_text())
        assert payload["n"] == 96

    @pytest.mark.asyncio
    async def test_overrides_and_out_dir(self):
        text = 'kind = "ber"\n' + CODE_TABLE + "[ber]\nsnr_db = [10.0]\nn = 48\nmax_bits = 96\n"
        out_dir = self.temp_dir / "results"
        outcome = await run_config(self.write(text), out_dir=out_dir, seed=9, threads=2)
        manifest = json.loads(outcome.artifacts["manifest"].read_text())
        assert manifest["seed"] == 9
        assert manifest["threads"] == 2
        assert outcome.artifacts["json"].parent == out_dir

    @pytest.mark.asyncio
    async def test_threshold_table_run(self):
        text = (
            'kind = "threshold"\n' + CODE_TABLE
            + '[threshold]\nsigma2_d = [0.0, 1.0, 2.0, 3.0]\n[output]\ncsv = "table.csv"\n'
        )
        with patch("noisy_ldpc.harness.threshold", side_effect=lambda dist, s, *args: 1.0 + s):
            outcome = await run_config(self.write(text))

        with open(self.temp_dir / "table.csv", newline="") as f:
            rows = list(csv.DictReader(f))
        assert [float(r["snr_th_db"]) for r in rows] == [1.0, 2.0, 3.0, 4.0]
        assert list(rows[0]) == ["sigma2_d", "snr_th_db", "sigma_n_th"]
        assert outcome.payload["rate"] == pytest.approx(0.5)

    @pytest.mark.asyncio
    async def test_exit_run(self):
        text = (
            'kind = "exit"\n' + CODE_TABLE
            + "[exit]\nsnr_db = 3.0\nn_trials = 4000\ngrid_points = 10\n"
        )
        outcome = await run_config(self.write(text), cache_dir=self.temp_dir / "cache")
        assert len(outcome.rows) == 10
        assert isinstance(outcome.payload["tunnel_open"], bool)
        assert len(list((self.temp_dir / "cache").glob("*.json"))) == 2

    @pytest.mark.asyncio
    async def test_design_run(self):
        result = DesignResult(
            DegreeDistribution(((2, 0.45), (4, 0.55)), ((5, 0.45), (6, 0.55))),
            1.5,
            0.45,
            0.002,
            [DesignStep(1.55, True, 0.45, 0.004, 3), DesignStep(1.5, True, 0.45, 0.002, 1),
             DesignStep(1.45, False)],
        )
        text = 'kind = "design"\nthreads = 2\n[design]\nsigma2_d = 0.5\n'
        with patch("noisy_ldpc.harness.design_code", return_value=result) as mock_design:
            outcome = await run_config(self.write(text))

        spec = mock_design.call_args.args[0]
        assert spec.sigma2_d == 0.5
        assert spec.threads == 2
        assert len(outcome.rows) == 3
        assert outcome.payload["snr_th_db"] == 1.5
        saved = json.loads((self.temp_dir / "design.json").read_text())
        assert saved["distribution"]["lambda"] == [[2, 0.45], [4, 0.55]]

    def test_print_summary(self, capsys):
        point = BerPoint(2.0, 0.5, 0, 0, 9600, 100, hit_cap=True)
        runner_outcome = type("Outcome", (), {})()
        runner_outcome.kind = "ber"
        runner_outcome.rows = [point.to_row()]
        runner_outcome.payload = {}
        runner_outcome.artifacts = {"csv": self.temp_dir / "ber.csv"}
        runner_outcome.wall_time_s = 1.25

        ExperimentRunner.print_summary(runner_outcome)

        captured = capsys.readouterr().out
        assert "BER SUMMARY" in captured
        assert "(upper bound)" in captured
        assert "Wall time: 1.2 s" in captured or "Wall time: 1.3 s" in captured


@pytest.mark.slow
class TestFiniteLengthReproduction:
    """(3,6) code, N=1008, 80 iterations, 50 block errors."""

    @pytest.mark.asyncio
    @pytest.mark.parametrize(
        "snr_db, sigma2_d, expected, factor", [(2.5, 0.0, 1.8e-5, 10.0), (2.0, 3.0, 4.7e-2, 2.0)]
    )
    async def test_regular_code_ber(self, snr_db, sigma2_d, expected, factor):
        graph = small_graph(1008, seed=0)
        (point,) = await ber_sim(graph, [snr_db], sigma2_d, StopRule(), seed=0, threads=4)
        assert expected / factor <= point.reported_ber <= expected * factor
