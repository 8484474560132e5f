"""
Experiment orchestration: Monte-Carlo BER simulation and config-driven runs.
"""

import csv
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from scipy.stats import norm

from .cache import CurveCache, resolve_cache_dir
from .channel import snr_db_to_sigma_n, transmit_all_one
from .config import (
    BerSection,
    DesignSection,
    ExitSection,
    ExperimentConfig,
    ThresholdSection,
    load_config,
)
from .decoder import DecoderConfig, NoisyDecoder
from .degree import DegreeDistribution, rate
from .density import DEParams, threshold
from .design import CurveProvider, DesignSpec, design_code
from .exit_chart import effective_curve, make_grid, tunnel_open, tunnel_slack
from .formats import read_alist
from .graph import TannerGraph, construct, remove_four_cycles
from .parallel import derive_rng, run_in_threads

logger = logging.getLogger(__name__)

CONFIDENCE = 0.95


def wilson_interval(successes: int, trials: int, confidence: float = CONFIDENCE) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return 0.0, 1.0
    z = float(norm.ppf(0.5 + confidence / 2.0))
    p = successes / trials
    denominator = 1.0 + z * z / trials
    centre = (p + z * z / (2.0 * trials)) / denominator
    half = z * math.sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials * trials)) / denominator
    low = 0.0 if successes == 0 else max(0.0, centre - half)
    high = 1.0 if successes == trials else min(1.0, centre + half)
    return low, high


@dataclass
class StopRule:
    """Stop a point at ``block_errors`` block errors or after ``max_bits`` simulated bits."""

    block_errors: int = 50
    max_bits: int = 10_000_000

    def __post_init__(self) -> None:
        if self.block_errors < 1:
            raise ValueError(f"block_errors must be at least 1, got {self.block_errors}")
        if self.max_bits < 1:
            raise ValueError(f"max_bits must be at least 1, got {self.max_bits}")

    def max_blocks(self, block_length: int) -> int:
        return max(1, math.ceil(self.max_bits / block_length))


@dataclass
class BerPoint:
    """Error counts at one (SNR, decoder noise) pair."""

    snr_db: float
    sigma2_d: float
    bit_errors: int
    block_errors: int
    bits_simulated: int
    blocks_simulated: int
    hit_cap: bool = False

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits_simulated if self.bits_simulated else 0.0

    @property
    def bler(self) -> float:
        return self.block_errors / self.blocks_simulated if self.blocks_simulated else 0.0

    @property
    def upper_bound(self) -> bool:
        """No errors were seen before the cap; only an upper bound on the BER is known."""
        return self.hit_cap and self.block_errors == 0

    @property
    def ber_interval(self) -> Tuple[float, float]:
        return wilson_interval(self.bit_errors, self.bits_simulated)

    @property
    def bler_interval(self) -> Tuple[float, float]:
        return wilson_interval(self.block_errors, self.blocks_simulated)

    @property
    def reported_ber(self) -> float:
        return self.ber_interval[1] if self.upper_bound else self.ber

    def to_row(self) -> Dict[str, Any]:
        ber_low, ber_high = self.ber_interval
        bler_low, bler_high = self.bler_interval
        return {
            "snr_db": self.snr_db,
            "sigma2_d": self.sigma2_d,
            "ber": self.reported_ber,
            "bler": self.bler,
            "ber_low": ber_low,
            "ber_high": ber_high,
            "bler_low": bler_low,
            "bler_high": bler_high,
            "bit_errors": self.bit_errors,
            "block_errors": self.block_errors,
            "bits_simulated": self.bits_simulated,
            "blocks_simulated": self.blocks_simulated,
            "hit_cap": self.hit_cap,
            "upper_bound": self.upper_bound,
        }


async def ber_sim(
    graph: TannerGraph,
    snr_list: Sequence[float],
    sigma2_d: float,
    stop: Optional[StopRule] = None,
    config: Optional[DecoderConfig] = None,
    seed: int = 0,
    threads: int = 1,
) -> List[BerPoint]:
    """
    Decode independent all-zero blocks at each SNR until the stop rule fires.

    Block ``b`` of SNR index ``s`` always uses the stream derived from (seed, s, b), and
    results are folded in block order, so the counts do not depend on ``threads``. One pool
    of ``threads`` workers serves every batch of the run.
    """
    if threads < 1:
        raise ValueError(f"threads must be at least 1, got {threads}")
    stop = stop or StopRule()
    config = replace(config or DecoderConfig(), sigma2_d=sigma2_d)
    decoder = NoisyDecoder(graph, config)
    code_rate = graph.design_rate
    n = graph.n_vars
    max_blocks = stop.max_blocks(n)
    points: List[BerPoint] = []

    with ThreadPoolExecutor(max_workers=threads) as pool:
        for snr_index, snr_db in enumerate(snr_list):
            sigma_n = snr_db_to_sigma_n(snr_db, code_rate)

            def run_block(block: int, snr_index: int = snr_index, sigma_n: float = sigma_n) -> int:
                rng = derive_rng(seed, snr_index, block)
                return decoder.decode(transmit_all_one(n, sigma_n, rng), rng).bit_errors

            bit_errors = block_errors = blocks = 0
            while blocks < max_blocks and block_errors < stop.block_errors:
                batch = list(range(blocks, min(blocks + threads, max_blocks)))
                for errors in await run_in_threads(run_block, batch, threads, executor=pool):
                    blocks += 1
                    bit_errors += errors
                    block_errors += errors > 0
                    if block_errors >= stop.block_errors:
                        break

            point = BerPoint(
                snr_db, sigma2_d, bit_errors, block_errors, blocks * n, blocks,
                hit_cap=block_errors < stop.block_errors,
            )
            points.append(point)
            logger.info(
                f"SNR {snr_db:.2f} dB, sigma2_d={sigma2_d}: BER={point.reported_ber:.3e}, "
                f"BLER={point.bler:.3e} ({block_errors} block errors in {blocks} blocks)"
            )
            if point.hit_cap:
                logger.warning(
                    f"SNR {snr_db:.2f} dB, sigma2_d={sigma2_d}: block cap of {max_blocks} "
                    f"reached with {block_errors} block error(s)"
                )
    return points


@dataclass
class ExperimentOutcome:
    """Tabular rows for the CSV plus a JSON payload."""

    kind: str
    rows: List[Dict[str, Any]]
    payload: Dict[str, Any] = field(default_factory=dict)
    artifacts: Dict[str, Path] = field(default_factory=dict)
    wall_time_s: float = 0.0


def write_csv(rows: List[Dict[str, Any]], path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        if not rows:
            return
        writer = csv.DictWriter(f, fieldnames=list(rows[0]))
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


def write_json(data: Any, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, default=str) + "\n", encoding="utf-8")


def load_graph(config: ExperimentConfig, section: BerSection) -> TannerGraph:
    """The graph named by ``[code]``: read from alist, or built and cleaned from a distribution."""
    assert config.code is not None
    if config.code.alist is not None:
        return read_alist(config.code.alist)
    assert config.code.distribution is not None
    graph = construct(config.code.distribution, section.n, seed=config.seed)
    if section.remove_cycles:
        graph = remove_four_cycles(graph, seed=config.seed).graph
    return graph


class ExperimentRunner:
    """Runs one configured experiment and writes its artefacts."""

    def __init__(
        self,
        config: ExperimentConfig,
        out_dir: Optional[Union[str, Path]] = None,
        cache_dir: Optional[Union[str, Path]] = None,
    ):
        self.config = config
        if out_dir is not None:
            self.out_dir = Path(out_dir)
        elif config.source is not None:
            self.out_dir = config.source.parent
        else:
            self.out_dir = Path(".")
        self.cache = CurveCache(resolve_cache_dir(cache_dir, config.cache_dir))

        # Configure logging
        logging.basicConfig(
            level=logging.INFO,
            format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        )

    def _distribution(self) -> DegreeDistribution:
        code = self.config.code
        if code is None or code.distribution is None:
            raise ValueError(f"The {self.config.kind} experiment needs a degree distribution in [code]")
        return code.distribution

    async def run_threshold(self, section: ThresholdSection) -> ExperimentOutcome:
        dist = self._distribution()
        params = DEParams(
            mc_samples=section.mc_samples,
            max_iterations=section.max_iterations,
            convergence_mean=section.convergence_mean,
            method=section.method,
            seed=self.config.seed,
        )
        bracket = (section.bracket_low_db, section.bracket_high_db)
        code_rate = rate(dist)

        def one(sigma2_d: float) -> Dict[str, Any]:
            snr = threshold(dist, sigma2_d, section.tol_db, params, bracket)
            return {
                "sigma2_d": sigma2_d,
                "snr_th_db": round(snr, 3),
                "sigma_n_th": round(snr_db_to_sigma_n(snr, code_rate), 4),
            }

        rows = await run_in_threads(one, section.sigma2_d, self.config.threads)
        return ExperimentOutcome("threshold", rows, {"rate": code_rate, "thresholds": rows})

    async def run_exit(self, section: ExitSection) -> ExperimentOutcome:
        dist = self._distribution()
        code_rate = rate(dist)
        grid = make_grid(section.grid_points)
        seed = self.config.seed

        def variable(degree: int):
            return self.cache.variable_curve(
                degree, section.snr_db, code_rate, section.sigma2_d, grid, section.n_trials, seed
            )

        def check(degree: int):
            return self.cache.check_curve(degree, section.sigma2_d, grid, section.n_trials, seed)

        vdegrees = dist.variable_degrees
        cdegrees = dist.check_degrees
        vcurves = await run_in_threads(variable, vdegrees, self.config.threads)
        ccurves = await run_in_threads(check, cdegrees, self.config.threads)
        vcurve = effective_curve(dict(zip(vdegrees, vcurves)), dist.lambda_dict())
        ccurve = effective_curve(dict(zip(cdegrees, ccurves)), dist.rho_dict())

        is_open = tunnel_open(vcurve, ccurve, section.margin)
        slack = tunnel_slack(vcurve, ccurve)
        logger.info(
            f"Tunnel at {section.snr_db} dB, sigma2_d={section.sigma2_d}: "
            f"{'open' if is_open else 'closed'} (slack {slack:.4f})"
        )
        rows = [
            {"i_a": float(x), "i_e_variable": float(v), "i_e_check": float(c)}
            for x, v, c in zip(grid, vcurve.ie, ccurve.ie)
        ]
        payload = {"tunnel_open": is_open, "slack": slack, "rate": code_rate}
        return ExperimentOutcome("exit", rows, payload)

    async def run_design(self, section: DesignSection) -> ExperimentOutcome:
        spec = DesignSpec(
            dc=section.dc,
            dv_max=section.dv_max,
            rate=section.rate,
            sigma2_d=section.sigma2_d,
            delta_db=section.delta_db,
            alpha_grid_size=section.alpha_grid_size,
            margin=section.margin,
            initial_snr_db=section.initial_snr_db,
            snr_floor_db=section.snr_floor_db,
            n_trials=section.n_trials,
            seed=self.config.seed,
            threads=self.config.threads,
        )
        provider = CurveProvider(self.cache, spec.grid, spec.n_trials, spec.seed)
        (result,) = await run_in_threads(lambda s: design_code(s, provider), [spec], 1)
        rows = [
            {
                "snr_db": step.snr_db,
                "feasible": step.feasible,
                "alpha": step.alpha,
                "slack": step.slack,
                "feasible_alphas": step.feasible_alphas,
            }
            for step in result.trace
        ]
        return ExperimentOutcome("design", rows, result.to_dict())

    async def run_ber(self, section: BerSection) -> ExperimentOutcome:
        graph = load_graph(self.config, section)
        stop = StopRule(section.block_errors, section.max_bits)
        decoder_config = DecoderConfig(
            max_iterations=section.max_iterations, llr_clamp=section.llr_clamp
        )
        points: List[BerPoint] = []
        for sigma2_d in section.sigma2_d:
            points.extend(
                await ber_sim(
                    graph, section.snr_db, sigma2_d, stop, decoder_config,
                    self.config.seed, self.config.threads,
                )
            )
        rows = [p.to_row() for p in points]
        payload = {"n": graph.n_vars, "k": graph.n_checks, "rate": graph.design_rate, "points": rows}
        return ExperimentOutcome("ber", rows, payload)

    def _artifact_path(self, configured: Optional[str], default: str) -> Path:
        path = Path(configured or default)
        return path if path.is_absolute() else self.out_dir / path

    async def run(self) -> ExperimentOutcome:
        config = self.config
        logger.info(f"Starting {config.kind} experiment (seed={config.seed}, threads={config.threads})")
        started = time.perf_counter()
        dispatch = {
            "threshold": self.run_threshold,
            "exit": self.run_exit,
            "design": self.run_design,
            "ber": self.run_ber,
        }
        outcome = await dispatch[config.kind](config.params)
        outcome.wall_time_s = time.perf_counter() - started

        output = config.output
        outcome.artifacts = {
            "csv": self._artifact_path(output.csv, f"{config.kind}.csv"),
            "json": self._artifact_path(output.json, f"{config.kind}.json"),
            "manifest": self._artifact_path(output.manifest, f"{config.kind}_manifest.json"),
        }
        write_csv(outcome.rows, outcome.artifacts["csv"])
        write_json(outcome.payload, outcome.artifacts["json"])
        write_json(self.manifest(outcome), outcome.artifacts["manifest"])
        logger.info(f"Finished {config.kind} experiment in {outcome.wall_time_s:.1f} s")
        return outcome

    def manifest(self, outcome: ExperimentOutcome) -> Dict[str, Any]:
        from . import __version__

        return {
            **self.config.to_dict(),
            "version": __version__,
            "wall_time_s": round(outcome.wall_time_s, 3),
            "cache_dir": str(self.cache.directory) if self.cache.directory else None,
            "outputs": {name: str(path) for name, path in outcome.artifacts.items()},
        }

    @staticmethod
    def print_summary(outcome: ExperimentOutcome) -> None:
        print("\n" + "=" * 60)
        print(f"{outcome.kind.upper()} SUMMARY")
        print("=" * 60)
        if outcome.kind == "threshold":
            for row in outcome.rows:
                print(f"sigma2_d={row['sigma2_d']:<6} threshold {row['snr_th_db']:.3f} dB "
                      f"(sigma_n={row['sigma_n_th']:.4f})")
        elif outcome.kind == "exit":
            state = "open" if outcome.payload["tunnel_open"] else "closed"
            print(f"Tunnel {state}, minimum slack {outcome.payload['slack']:.4f}")
        elif outcome.kind == "design":
            print(f"Threshold: {outcome.payload['snr_th_db']:.3f} dB, alpha={outcome.payload['alpha']:.3f}")
            print(f"Distribution: {outcome.payload['distribution']}")
        else:
            for row in outcome.rows:
                flag = " (upper bound)" if row["upper_bound"] else (" (cap)" if row["hit_cap"] else "")
                print(f"SNR {row['snr_db']:.2f} dB, sigma2_d={row['sigma2_d']}: "
                      f"BER {row['ber']:.3e}, BLER {row['bler']:.3e}{flag}")
        print()
        for name, path in outcome.artifacts.items():
            print(f"{name}: {path}")
        print(f"Wall time: {outcome.wall_time_s:.1f} s")
        print("=" * 60)


async def run_config(
    path: Union[str, Path],
    out_dir: Optional[Union[str, Path]] = None,
    cache_dir: Optional[Union[str, Path]] = None,
    seed: Optional[int] = None,
    threads: Optional[int] = None,
) -> ExperimentOutcome:
    """Load a TOML config, apply command-line overrides, run it and write its artefacts."""
    config = load_config(path)
    if seed is not None:
        config.seed = seed
    if threads is not None:
        config.threads = threads
    return await ExperimentRunner(config, out_dir, cache_dir).run()
