"""
Degree-distribution design for noisy decoders by SNR descent over EXIT curves.

At each SNR the check side sweeps the two-term family rho_alpha and, for every alpha, a
linear program looks for a variable-side lambda that keeps the EXIT tunnel open at the
required rate. The SNR is lowered until no alpha admits a lambda.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Mapping, Optional, Union

import numpy as np
from scipy.optimize import linprog

from .cache import CurveCache
from .degree import DegreeDistribution, Terms, regular, two_term_check
from .density import DEParams, threshold
from .exit_chart import (
    DEFAULT_GRID,
    ExitCurve,
    effective_curve,
    required_information,
    tunnel_points,
)

logger = logging.getLogger(__name__)

FEASIBILITY_TOLERANCE = 1e-12


class DegenerateProgramError(RuntimeError):
    """The linear program is unbounded or numerically degenerate (not merely infeasible)."""


class DesignInfeasibleError(ValueError):
    """No code satisfies the constraints at the starting SNR."""


@dataclass
class DesignSpec:
    """Inputs of a design run."""

    dc: int = 5
    dv_max: int = 4
    rate: float = 0.5
    sigma2_d: float = 0.0
    delta_db: float = 0.05
    alpha_grid_size: int = 100
    margin: float = 1e-3
    initial_snr_db: Optional[float] = None
    snr_floor_db: float = -2.0
    n_trials: int = 100_000
    seed: int = 0
    # Workers for the alpha sweep at each SNR.
    threads: int = 1
    grid: np.ndarray = field(default_factory=lambda: DEFAULT_GRID.copy())

    def __post_init__(self) -> None:
        if not 0.0 < self.rate < 1.0:
            raise ValueError(f"rate must lie in (0, 1), got {self.rate}")
        if self.delta_db <= 0:
            raise ValueError(f"delta_db must be positive, got {self.delta_db}")
        if self.alpha_grid_size < 1:
            raise ValueError(f"alpha_grid_size must be at least 1, got {self.alpha_grid_size}")
        if self.dc < 3:
            raise ValueError(f"dc must be at least 3, got {self.dc}")
        if self.dv_max < 2:
            raise ValueError(f"dv_max must be at least 2, got {self.dv_max}")
        if self.sigma2_d < 0:
            raise ValueError(f"sigma2_d must be non-negative, got {self.sigma2_d}")
        if self.threads < 1:
            raise ValueError(f"threads must be at least 1, got {self.threads}")
        self.grid = np.asarray(self.grid, dtype=np.float64)

    @property
    def alphas(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.alpha_grid_size + 1)


@dataclass
class LambdaSolution:
    lambda_: Dict[int, float]
    slack: float


@dataclass
class DesignStep:
    """Outcome of one alpha sweep."""

    snr_db: float
    feasible: bool
    alpha: Optional[float] = None
    slack: Optional[float] = None
    feasible_alphas: int = 0


@dataclass
class DesignResult:
    dist: DegreeDistribution
    snr_th_db: float
    alpha: float
    slack: float
    trace: List[DesignStep] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "distribution": self.dist.to_dict(),
            "snr_th_db": self.snr_th_db,
            "alpha": self.alpha,
            "slack": self.slack,
            "trace": [step.__dict__ for step in self.trace],
        }


def feasible_lambda(
    rho: Union[Terms, Mapping[int, float]],
    vcurves: Mapping[int, ExitCurve],
    ccurve: ExitCurve,
    rate: float,
    margin: float = 1e-3,
) -> Optional[LambdaSolution]:
    """
    Variable-side fractions keeping the tunnel open at ``rate``, or None when none exist.

    Maximises the smallest excess t of sum_i lambda_i I_E,i(x) over the inverted check curve
    plus ``margin`` subject to normalisation and the rate equality; feasible iff t >= 0.
    """
    if not vcurves:
        raise ValueError("At least one variable curve is required")
    if not 0.0 < rate < 1.0:
        raise ValueError(f"rate must lie in (0, 1), got {rate}")
    rho_terms = dict(rho)
    degrees = sorted(vcurves)
    grid = vcurves[degrees[0]].grid
    if any(not np.array_equal(vcurves[d].grid, grid) for d in degrees):
        raise ValueError("Variable curves must share the same grid")

    points = tunnel_points(grid, ccurve)
    if points.size == 0:
        raise ValueError("Variable and check curves have no overlapping range")
    required = required_information(points, ccurve) + margin
    gains = np.column_stack([vcurves[d].at(points) for d in degrees])

    n = len(degrees)
    # Variables: lambda_2 .. lambda_Dv, then t. linprog minimises, so the objective is -t.
    objective = np.zeros(n + 1)
    objective[-1] = -1.0
    a_ub = np.hstack([-gains, np.ones((points.size, 1))])
    b_ub = -required
    a_eq = np.array([[1.0] * n + [0.0], [1.0 / d for d in degrees] + [0.0]])
    b_eq = np.array([1.0, sum(w / i for i, w in rho_terms.items()) / (1.0 - rate)])
    bounds = [(0.0, 1.0)] * n + [(None, None)]

    result = linprog(
        objective, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs"
    )
    if result.status == 2:
        return None
    if result.status != 0:
        raise DegenerateProgramError(f"Linear program failed (status {result.status}): {result.message}")

    slack = float(result.x[-1])
    if slack < -FEASIBILITY_TOLERANCE:
        return None
    fractions = {d: float(max(w, 0.0)) for d, w in zip(degrees, result.x[:n])}
    return LambdaSolution(fractions, slack)


class CurveProvider:
    """Supplies EXIT curves to the design loop, through a :class:`CurveCache`."""

    def __init__(
        self,
        cache: Optional[CurveCache] = None,
        grid: np.ndarray = DEFAULT_GRID,
        n_trials: int = 100_000,
        seed: int = 0,
    ):
        self.cache = cache or CurveCache()
        self.grid = np.asarray(grid, dtype=np.float64)
        self.n_trials = n_trials
        self.seed = seed

    def variable_curves(
        self, degrees: Iterable[int], snr_db: float, rate: float, sigma2_d: float
    ) -> Dict[int, ExitCurve]:
        return {
            d: self.cache.variable_curve(
                d, snr_db, rate, sigma2_d, self.grid, self.n_trials, self.seed
            )
            for d in degrees
        }

    def check_curve(self, dc: int, sigma2_d: float) -> ExitCurve:
        return self.cache.check_curve(dc, sigma2_d, self.grid, self.n_trials, self.seed)


def default_initial_snr(spec: DesignSpec) -> float:
    """Density-evolution threshold of the regular (3, dc) ensemble plus 1 dB."""
    params = DEParams(seed=spec.seed)
    return threshold(regular(3, spec.dc), spec.sigma2_d, tol_db=0.05, params=params) + 1.0


def _distribution(solution: LambdaSolution, rho: Terms) -> DegreeDistribution:
    lam = tuple((d, w) for d, w in solution.lambda_.items() if w > FEASIBILITY_TOLERANCE)
    return DegreeDistribution(lam, rho).renormalized()


def design_code(spec: DesignSpec, provider: Optional[CurveProvider] = None) -> DesignResult:
    """
    Lower the SNR in steps of ``delta_db`` while some alpha admits a feasible lambda.

    Returns the last feasible code; among feasible alphas at one SNR the largest LP slack wins.
    The alpha sweep at each SNR runs on ``spec.threads`` workers.
    """
    provider = provider or CurveProvider(grid=spec.grid, n_trials=spec.n_trials, seed=spec.seed)
    low = provider.check_curve(spec.dc, spec.sigma2_d)
    high = provider.check_curve(spec.dc + 1, spec.sigma2_d)
    check_curves = {
        float(alpha): effective_curve(
            {spec.dc: low, spec.dc + 1: high}, dict(two_term_check(spec.dc, alpha))
        )
        for alpha in spec.alphas
    }

    snr = spec.initial_snr_db if spec.initial_snr_db is not None else default_initial_snr(spec)
    logger.info(
        f"Designing rate-{spec.rate} code for sigma2_d={spec.sigma2_d} starting at {snr:.3f} dB"
    )
    best: Optional[DesignResult] = None
    trace: List[DesignStep] = []

    with ThreadPoolExecutor(max_workers=spec.threads) as pool:
        while True:
            vcurves = provider.variable_curves(
                range(2, spec.dv_max + 1), snr, spec.rate, spec.sigma2_d
            )

            def solve(
                alpha: float, vcurves: Dict[int, ExitCurve] = vcurves
            ) -> Optional[LambdaSolution]:
                rho = two_term_check(spec.dc, alpha)
                return feasible_lambda(rho, vcurves, check_curves[alpha], spec.rate, spec.margin)

            # map yields in alpha order whatever the completion order.
            solutions = list(pool.map(solve, check_curves))

            winner = None
            feasible_count = 0
            for alpha, solution in zip(check_curves, solutions):
                if solution is None:
                    continue
                feasible_count += 1
                # Ties keep the lowest alpha.
                if winner is None or solution.slack > winner[1].slack + FEASIBILITY_TOLERANCE:
                    winner = (alpha, solution, two_term_check(spec.dc, alpha))

            if winner is None:
                trace.append(DesignStep(snr, False))
                logger.info(f"No feasible code at {snr:.3f} dB")
                if best is None:
                    raise DesignInfeasibleError(
                        f"No feasible code at the initial SNR {snr:.3f} dB; start from a higher SNR"
                    )
                break

            alpha, solution, rho = winner
            trace.append(DesignStep(snr, True, alpha, solution.slack, feasible_count))
            best = DesignResult(_distribution(solution, rho), snr, alpha, solution.slack)
            logger.info(
                f"Feasible at {snr:.3f} dB: alpha={alpha:.3f}, slack={solution.slack:.2e}, "
                f"{feasible_count} feasible alpha value(s)"
            )

            next_snr = round(snr - spec.delta_db, 10)
            if next_snr < spec.snr_floor_db:
                logger.warning(
                    f"Design search reached the SNR floor of {spec.snr_floor_db} dB "
                    "while still feasible"
                )
                break
            snr = next_snr

    if best is None:
        raise DesignInfeasibleError(f"No feasible code found from {snr:.3f} dB")
    best.trace = trace
    logger.info(f"Designed code at {best.snr_th_db:.3f} dB: {best.dist.describe()}")
    return best
