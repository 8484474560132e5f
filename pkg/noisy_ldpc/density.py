"""
Two-dimensional density evolution for noisy message passing.

Messages are tracked as Gaussians through their mean and variance. Decoder noise breaks the
consistency condition var = 2 * mean, so both moments evolve independently. The check step
maps variable-side moments to check-side moments either by Monte-Carlo sampling of the tanh
rule (``semi_gaussian``) or by solving the moment equations ``f = F``, ``g = G``
(``moment_matching``).
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, optimize

from .channel import NoiseModel, q_function
from .decoder import check_update
from .degree import DegreeDistribution, rate
from .parallel import derive_rng

logger = logging.getLogger(__name__)

METHODS = ("semi_gaussian", "moment_matching")

# f or g this close to one is treated as a decoded (saturated) message.
_SATURATION = 1e-10


class MomentInversionError(RuntimeError):
    """The moment equations f = F, g = G have no numerical solution."""

    def __init__(self, message: str, targets: Tuple[float, float], last: Tuple[float, float]):
        super().__init__(f"{message} (targets F={targets[0]:.6g}, G={targets[1]:.6g}; "
                         f"last iterate m={last[0]:.6g}, var={last[1]:.6g})")
        self.targets = targets
        self.last = last


class ThresholdBracketError(ValueError):
    """Density evolution does not change outcome inside the search bracket."""


@dataclass
class GaussianState:
    """Message moments after one iteration."""

    m_u: float = 0.0
    var_u: float = 0.0
    m_v_by_degree: Dict[int, float] = field(default_factory=dict)
    var_v_by_degree: Dict[int, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.var_u < 0 or any(v < 0 for v in self.var_v_by_degree.values()):
            raise ValueError("Message variances must be non-negative")


@dataclass
class DEParams:
    """Density evolution budget and stopping rule."""

    noise: Optional[NoiseModel] = None
    mc_samples: int = 100_000
    max_iterations: int = 2000
    convergence_mean: float = 50.0
    method: str = "semi_gaussian"
    seed: int = 0
    # Opt-in: declare a fixed point when m_u gains less than stall_tolerance over stall_window
    # iterations. Off by default, so failure means max_iterations without convergence.
    stall_window: Optional[int] = None
    stall_tolerance: float = 1e-3

    def __post_init__(self) -> None:
        if self.mc_samples < 1:
            raise ValueError(f"mc_samples must be positive, got {self.mc_samples}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be positive, got {self.max_iterations}")
        if self.convergence_mean <= 0:
            raise ValueError(f"convergence_mean must be positive, got {self.convergence_mean}")
        if self.method not in METHODS:
            raise ValueError(f"Unknown method {self.method!r}; expected one of {METHODS}")
        if self.stall_window is not None and self.stall_window < 1:
            raise ValueError(f"stall_window must be at least 1, got {self.stall_window}")

    @property
    def output_cap(self) -> float:
        return 2.0 * self.convergence_mean


@dataclass
class DensityTrajectory:
    """States visited by one density evolution run."""

    states: List[GaussianState]
    converged: bool
    iterations: int
    error_probabilities: List[float]
    stalled: bool = False

    @property
    def final(self) -> GaussianState:
        return self.states[-1] if self.states else GaussianState()


@dataclass
class ThresholdRow:
    sigma2_d: float
    snr_th_db: float
    sigma_n_th: float


def _gaussian_expectation(func, m: float, var: float) -> float:
    if var == 0:
        return float(func(m))
    s = math.sqrt(var)
    value, _ = integrate.quad(
        lambda z: func(m + s * z) * math.exp(-0.5 * z * z),
        -12.0,
        12.0,
        epsabs=1e-13,
        epsrel=1e-12,
        limit=200,
    )
    return value / math.sqrt(2.0 * math.pi)


def f_mean(m: float, var: float) -> float:
    """E[tanh(X / 2)] for X ~ N(m, var)."""
    if var < 0:
        raise ValueError(f"var must be non-negative, got {var}")
    if math.isinf(m):
        return math.copysign(1.0, m)
    return _gaussian_expectation(lambda x: math.tanh(x / 2.0), m, var)


def g_mean(m: float, var: float) -> float:
    """E[tanh^2(X / 2)] for X ~ N(m, var)."""
    if var < 0:
        raise ValueError(f"var must be non-negative, got {var}")
    if math.isinf(m):
        return 1.0
    return _gaussian_expectation(lambda x: math.tanh(x / 2.0) ** 2, m, var)


def error_probability(m: float, var: float) -> float:
    """P(X < 0) for X ~ N(m, var)."""
    if var < 0:
        raise ValueError(f"var must be non-negative, got {var}")
    if var == 0:
        return 0.0 if m > 0 else (0.5 if m == 0 else 1.0)
    return float(q_function(m / math.sqrt(var)))


def variable_step(
    state: GaussianState, dist: DegreeDistribution, noise: NoiseModel
) -> Dict[int, Tuple[float, float]]:
    """Per-degree variable-node output moments given the current check-node moments."""
    m0, var0 = noise.llr_stats()
    return {
        i: (
            m0 + (i - 1) * state.m_u,
            var0 + (i - 1) * state.var_u + (i - 1) * noise.sigma2_d,
        )
        for i in dist.variable_degrees
    }


def _mixture_moments(weights: Sequence[float], means: Sequence[float], variances: Sequence[float]
                     ) -> Tuple[float, float]:
    w = np.asarray(weights)
    m = np.asarray(means)
    mean = float(np.dot(w, m))
    second = float(np.dot(w, np.asarray(variances) + m**2))
    return mean, max(second - mean**2, 0.0)


def _sample_check_inputs(
    state: GaussianState,
    dist: DegreeDistribution,
    noise: NoiseModel,
    shape: Tuple[int, int],
    rng: np.random.Generator,
) -> np.ndarray:
    degrees = dist.variable_degrees
    lam = dist.lambda_dict()
    means = np.array([state.m_v_by_degree[i] for i in degrees])
    stds = np.sqrt(np.array([state.var_v_by_degree[i] for i in degrees]) + noise.sigma2_d)
    if len(degrees) == 1:
        return means[0] + stds[0] * rng.standard_normal(shape)
    weights = np.array([lam[i] for i in degrees])
    picks = rng.choice(len(degrees), size=shape, p=weights / weights.sum())
    return means[picks] + stds[picks] * rng.standard_normal(shape)


def _invert_moments(F: float, G: float, cap: float) -> Tuple[float, float]:
    """Solve f(m, var) = F and g(m, var) = G for (m, var)."""
    if 1.0 - F < _SATURATION:
        return cap, 2.0 * cap
    if F <= 0:
        raise MomentInversionError("non-positive target mean", (F, G), (0.0, 0.0))

    # Start from the consistent density with the right f.
    m_start = optimize.brentq(lambda m: f_mean(m, 2.0 * m) - F, 1e-12, 2.0 * cap, xtol=1e-12)

    def residual(params: np.ndarray) -> List[float]:
        m, log_var = params
        var = math.exp(log_var)
        return [f_mean(m, var) - F, g_mean(m, var) - G]

    solution = optimize.root(residual, x0=[m_start, math.log(2.0 * m_start)], method="hybr")
    m, var = float(solution.x[0]), math.exp(float(solution.x[1]))
    if not solution.success or max(abs(r) for r in residual(solution.x)) > 1e-8:
        raise MomentInversionError(
            f"moment equations did not converge: {solution.message}", (F, G), (m, var)
        )
    return min(m, cap), var


def check_step(
    state: GaussianState,
    dist: DegreeDistribution,
    noise: NoiseModel,
    params: Optional[DEParams] = None,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[float, float]:
    """
    Check-node output moments (m_u, var_u) from the per-degree variable moments in ``state``.

    Every check input is corrupted by decoder noise before the tanh rule. Per-degree outputs
    are merged as a Gaussian mixture weighted by rho.
    """
    params = params or DEParams()
    rho = dist.rho_dict()
    degrees = dist.check_degrees
    means: List[float] = []
    variances: List[float] = []

    if params.method == "semi_gaussian":
        rng = rng or np.random.default_rng(params.seed)
        for i in degrees:
            inputs = _sample_check_inputs(state, dist, noise, (params.mc_samples, i - 1), rng)
            # One extra column stands in for the output edge; its own value is excluded.
            padded = np.concatenate([inputs, np.full((params.mc_samples, 1), np.inf)], axis=1)
            outputs = check_update(padded, cap=params.output_cap)[:, -1]
            means.append(float(outputs.mean()))
            variances.append(float(outputs.var()))
    else:
        lam = dist.lambda_dict()
        f_mix = sum(
            lam[j] * f_mean(state.m_v_by_degree[j], state.var_v_by_degree[j] + noise.sigma2_d)
            for j in dist.variable_degrees
        )
        g_mix = sum(
            lam[j] * g_mean(state.m_v_by_degree[j], state.var_v_by_degree[j] + noise.sigma2_d)
            for j in dist.variable_degrees
        )
        for i in degrees:
            m, var = _invert_moments(f_mix ** (i - 1), g_mix ** (i - 1), params.output_cap)
            means.append(m)
            variances.append(var)

    return _mixture_moments([rho[i] for i in degrees], means, variances)


def evolve(
    dist: DegreeDistribution,
    noise: Optional[NoiseModel] = None,
    params: Optional[DEParams] = None,
) -> DensityTrajectory:
    """Iterate from m_u = var_u = 0 until convergence, a fixed point, or the iteration cap."""
    params = params or DEParams()
    noise = noise or params.noise
    if noise is None:
        raise ValueError("A noise model is required (argument or DEParams.noise)")

    lam = dist.lambda_dict()
    state = GaussianState()
    states: List[GaussianState] = []
    errors: List[float] = []
    history: List[float] = []

    for iteration in range(1, params.max_iterations + 1):
        moments = variable_step(state, dist, noise)
        state = replace(
            state,
            m_v_by_degree={i: m for i, (m, _) in moments.items()},
            var_v_by_degree={i: v for i, (_, v) in moments.items()},
        )
        # Same stream per iteration at every SNR (common random numbers across a bisection).
        rng = derive_rng(params.seed, "density", iteration)
        m_u, var_u = check_step(state, dist, noise, params, rng)
        state = GaussianState(m_u, var_u, state.m_v_by_degree, state.var_v_by_degree)
        states.append(state)
        errors.append(sum(lam[i] * error_probability(*moments[i]) for i in moments))
        history.append(m_u)
        logger.debug(f"DE iteration {iteration}: m_u={m_u:.5g}, var_u={var_u:.5g}")

        if m_u >= params.convergence_mean:
            return DensityTrajectory(states, True, iteration, errors)
        window = params.stall_window
        if window is not None and iteration > window:
            gain = history[-1] - history[-1 - window]
            if gain < params.stall_tolerance * max(1.0, abs(history[-1])):
                return DensityTrajectory(states, False, iteration, errors, stalled=True)

    return DensityTrajectory(states, False, params.max_iterations, errors)


def threshold(
    dist: DegreeDistribution,
    sigma2_d: float,
    tol_db: float = 0.01,
    params: Optional[DEParams] = None,
    bracket: Tuple[float, float] = (-2.0, 10.0),
) -> float:
    """
    Smallest SNR (Eb/N0, dB) at which density evolution converges, to within ``tol_db``.

    Bisection keeps a failing lower end and a converging upper end, and returns the upper.
    """
    if tol_db <= 0:
        raise ValueError(f"tol_db must be positive, got {tol_db}")
    params = params or DEParams()
    code_rate = rate(dist)

    def converges(snr_db: float) -> bool:
        noise = NoiseModel.from_snr(snr_db, code_rate, sigma2_d)
        outcome = evolve(dist, noise, params).converged
        logger.debug(f"DE at {snr_db:.4f} dB (sigma2_d={sigma2_d}): converged={outcome}")
        return outcome

    low, high = bracket
    if not converges(high):
        raise ThresholdBracketError(
            f"Density evolution does not converge at {high} dB (sigma2_d={sigma2_d})"
        )
    if converges(low):
        raise ThresholdBracketError(
            f"Density evolution already converges at {low} dB (sigma2_d={sigma2_d})"
        )
    while high - low > tol_db:
        middle = 0.5 * (low + high)
        if converges(middle):
            high = middle
        else:
            low = middle

    logger.info(f"Threshold at sigma2_d={sigma2_d}: {high:.3f} dB")
    return high


def threshold_table(
    dist: DegreeDistribution,
    sigma2_d_values: Sequence[float],
    tol_db: float = 0.01,
    params: Optional[DEParams] = None,
) -> List[ThresholdRow]:
    """Threshold for each decoder noise variance, with the matching channel sigma_n."""
    code_rate = rate(dist)
    rows = []
    for sigma2_d in sigma2_d_values:
        snr = threshold(dist, sigma2_d, tol_db, params)
        rows.append(ThresholdRow(sigma2_d, snr, NoiseModel.from_snr(snr, code_rate).sigma_n))
    return rows
