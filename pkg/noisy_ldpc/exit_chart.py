"""
EXIT curves of noisy variable-node and check-node decoders.

Curves are measured by Monte-Carlo: consistent Gaussian a-priori LLRs with the mutual
information of each grid point are fed through a node update whose inputs carry decoder
noise, and the extrinsic information of the outputs is estimated from a histogram.
"""

import hashlib
import logging
import math
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Any, Dict, Mapping, Optional, Tuple

import numpy as np
from scipy import integrate, optimize

from .channel import llr_stats, snr_db_to_sigma_n, transmit_all_one
from .decoder import check_update, inject_noise, variable_update

logger = logging.getLogger(__name__)


def make_grid(points: int = 100) -> np.ndarray:
    """Uniform a-priori grid 0, 1/points, ..., (points - 1)/points."""
    if points < 2:
        raise ValueError(f"A grid needs at least 2 points, got {points}")
    return np.round(np.arange(points) / points, 12)


DEFAULT_GRID = make_grid(100)
HISTOGRAM_BINS = 2000
TAIL_WIDTH = 8.0
# LLR samples confined to a narrower band carry no information.
MIN_SUPPORT = 1e-9
# Curves saturate here; points above are left out of tunnel tests.
SATURATION_POINT = 0.999


@dataclass(frozen=True)
class CurveMeta:
    kind: str
    degree: int
    snr_db: Optional[float]
    sigma2_d: float
    n_trials: int


@dataclass(frozen=True, eq=False)
class ExitCurve:
    """Extrinsic information ``ie`` measured at a-priori information ``grid``."""

    grid: np.ndarray
    ie: np.ndarray
    meta: CurveMeta

    def __post_init__(self) -> None:
        grid = np.asarray(self.grid, dtype=np.float64)
        ie = np.asarray(self.ie, dtype=np.float64)
        if grid.shape != ie.shape or grid.ndim != 1 or grid.size == 0:
            raise ValueError("grid and ie must be non-empty 1-D arrays of equal length")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if grid[0] < 0 or grid[-1] >= 1:
            raise ValueError("grid must lie in [0, 1)")
        if np.any(ie < 0) or np.any(ie > 1):
            raise ValueError("ie values must lie in [0, 1]")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "ie", ie)

    def at(self, points: np.ndarray) -> np.ndarray:
        return np.interp(points, self.grid, self.ie)

    def to_dict(self) -> Dict[str, Any]:
        return {"grid": self.grid.tolist(), "ie": self.ie.tolist(), "meta": asdict(self.meta)}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ExitCurve":
        return cls(np.array(data["grid"]), np.array(data["ie"]), CurveMeta(**data["meta"]))


def grid_digest(grid: np.ndarray) -> str:
    return hashlib.sha256(np.asarray(grid, dtype=np.float64).tobytes()).hexdigest()[:16]


def j_fun(sigma: float) -> float:
    """Mutual information between a bit and a consistent Gaussian LLR N(sigma^2/2, sigma^2)."""
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    if sigma == 0:
        return 0.0
    mean = sigma * sigma / 2.0

    def integrand(z: float) -> float:
        x = mean + sigma * z
        return float(np.logaddexp(0.0, -x)) * math.exp(-0.5 * z * z)

    value, _ = integrate.quad(integrand, -12.0, 12.0, epsabs=1e-14, epsrel=1e-12, limit=200)
    information = 1.0 - value / (math.sqrt(2.0 * math.pi) * math.log(2.0))
    return min(max(information, 0.0), 1.0)


@lru_cache(maxsize=4096)
def j_inv(information: float) -> float:
    """Inverse of :func:`j_fun`."""
    if not 0.0 <= information < 1.0:
        raise ValueError(f"Mutual information must lie in [0, 1), got {information}")
    if information == 0.0:
        return 0.0
    high = 10.0
    while j_fun(high) < information:
        high *= 2.0
        if high > 1e4:
            raise ValueError(f"Mutual information {information} is numerically indistinguishable from 1")
    return float(optimize.brentq(lambda s: j_fun(s) - information, 0.0, high, xtol=1e-12))


def mutual_information(samples: np.ndarray, bins: int = HISTOGRAM_BINS) -> float:
    """
    Mutual information between the transmitted bit and LLR samples observed for bit 0.

    The density for the other bit is the mirror image of the sampled one; the histogram
    support is truncated at the sample mean plus eight standard deviations.
    """
    samples = np.asarray(samples, dtype=np.float64).ravel()
    if samples.size == 0:
        raise ValueError("Cannot estimate mutual information from an empty sample set")
    half_width = abs(float(samples.mean())) + TAIL_WIDTH * float(samples.std())
    if half_width < MIN_SUPPORT:
        return 0.0

    counts, _ = np.histogram(samples, bins=bins, range=(-half_width, half_width))
    p = counts / samples.size
    q = p[::-1]
    support = p > 0
    information = float(np.sum(p[support] * np.log2(2.0 * p[support] / (p[support] + q[support]))))
    return min(max(information, 0.0), 1.0)


def _a_priori(sigma_a: float, shape: Tuple[int, int], rng: np.random.Generator) -> np.ndarray:
    return sigma_a * sigma_a / 2.0 + sigma_a * rng.standard_normal(shape)


def nvnd_curve(
    dv: int,
    snr_db: float,
    rate: float,
    sigma2_d: float,
    grid: np.ndarray = DEFAULT_GRID,
    n_trials: int = 100_000,
    rng: Optional[np.random.Generator] = None,
) -> ExitCurve:
    """EXIT curve of a degree-``dv`` variable node whose a-priori inputs carry decoder noise."""
    if dv < 1:
        raise ValueError(f"dv must be at least 1, got {dv}")
    rng = rng or np.random.default_rng()
    grid = np.asarray(grid, dtype=np.float64)
    u0 = transmit_all_one(n_trials, snr_db_to_sigma_n(snr_db, rate), rng)

    ie = np.empty_like(grid)
    for k, i_a in enumerate(grid):
        apriori = inject_noise(_a_priori(j_inv(float(i_a)), (n_trials, dv), rng), sigma2_d, rng)
        outputs = variable_update(u0, apriori, llr_clamp=math.inf)
        ie[k] = mutual_information(outputs)

    logger.debug(f"NVND curve dv={dv}, snr={snr_db} dB, sigma2_d={sigma2_d}: ie(0)={ie[0]:.4f}")
    return ExitCurve(grid, ie, CurveMeta("variable", dv, snr_db, sigma2_d, n_trials))


def ncnd_curve(
    dc: int,
    sigma2_d: float,
    grid: np.ndarray = DEFAULT_GRID,
    n_trials: int = 100_000,
    rng: Optional[np.random.Generator] = None,
) -> ExitCurve:
    """EXIT curve of a degree-``dc`` check node whose a-priori inputs carry decoder noise."""
    if dc < 2:
        raise ValueError(f"dc must be at least 2, got {dc}")
    rng = rng or np.random.default_rng()
    grid = np.asarray(grid, dtype=np.float64)

    ie = np.empty_like(grid)
    for k, i_a in enumerate(grid):
        apriori = inject_noise(_a_priori(j_inv(float(i_a)), (n_trials, dc), rng), sigma2_d, rng)
        ie[k] = mutual_information(check_update(apriori, llr_clamp=math.inf))

    logger.debug(f"NCND curve dc={dc}, sigma2_d={sigma2_d}: ie(0.5)={np.interp(0.5, grid, ie):.4f}")
    return ExitCurve(grid, ie, CurveMeta("check", dc, None, sigma2_d, n_trials))


def vnd_curve_closed_form(
    dv: int, snr_db: float, rate: float, grid: np.ndarray = DEFAULT_GRID
) -> ExitCurve:
    """Noiseless variable-node curve J(sqrt((dv - 1) J^-1(I_A)^2 + sigma_0^2))."""
    _, var0 = llr_stats(snr_db_to_sigma_n(snr_db, rate))
    grid = np.asarray(grid, dtype=np.float64)
    ie = np.array([j_fun(math.sqrt((dv - 1) * j_inv(float(x)) ** 2 + var0)) for x in grid])
    return ExitCurve(grid, ie, CurveMeta("variable", dv, snr_db, 0.0, 0))


def cnd_curve_closed_form(dc: int, grid: np.ndarray = DEFAULT_GRID) -> ExitCurve:
    """Noiseless check-node curve by the duality approximation 1 - J(sqrt(dc - 1) J^-1(1 - I_A))."""
    grid = np.asarray(grid, dtype=np.float64)
    ie = np.array(
        [0.0 if x == 0 else 1.0 - j_fun(math.sqrt(dc - 1) * j_inv(1.0 - float(x))) for x in grid]
    )
    return ExitCurve(grid, ie, CurveMeta("check", dc, None, 0.0, 0))


def effective_curve(curves: Mapping[int, ExitCurve], weights: Mapping[int, float]) -> ExitCurve:
    """Edge-weighted average of per-degree curves sharing one grid."""
    if not weights:
        raise ValueError("At least one weight is required")
    missing = [d for d in weights if d not in curves]
    if missing:
        raise ValueError(f"No curve for degree(s) {missing}")
    first = curves[next(iter(weights))]
    ie = np.zeros_like(first.grid)
    for degree, weight in weights.items():
        curve = curves[degree]
        if not np.array_equal(curve.grid, first.grid):
            raise ValueError("Curves must share the same grid")
        ie += weight * curve.ie
    meta = CurveMeta(
        f"effective-{first.meta.kind}", 0, first.meta.snr_db, first.meta.sigma2_d,
        first.meta.n_trials,
    )
    return ExitCurve(first.grid, np.clip(ie, 0.0, 1.0), meta)


def invert_check_curve(ccurve: ExitCurve) -> Tuple[np.ndarray, np.ndarray]:
    """
    Knots of the inverse check curve as (I_E,C, I_A,C), increasing in I_E,C.

    Monte-Carlo wiggles are removed by isotonic regression first; flat runs map to their
    smallest a-priori value.
    """
    smoothed = optimize.isotonic_regression(ccurve.ie, increasing=True).x
    outputs, first = np.unique(smoothed, return_index=True)
    return outputs, ccurve.grid[first]


def tunnel_points(vgrid: np.ndarray, ccurve: ExitCurve) -> np.ndarray:
    """Points where the tunnel condition is enforced: below saturation and inside the check range."""
    outputs, _ = invert_check_curve(ccurve)
    vgrid = np.asarray(vgrid, dtype=np.float64)
    return vgrid[(vgrid < SATURATION_POINT) & (vgrid <= outputs[-1])]


def required_information(points: np.ndarray, ccurve: ExitCurve) -> np.ndarray:
    """Check-node a-priori information needed to emit ``points`` of extrinsic information."""
    outputs, inputs = invert_check_curve(ccurve)
    return np.interp(points, outputs, inputs)


def tunnel_slack(vcurve: ExitCurve, ccurve: ExitCurve) -> float:
    """Smallest gap between the variable curve and the inverted check curve."""
    points = tunnel_points(vcurve.grid, ccurve)
    if points.size == 0:
        raise ValueError("Variable and check curves have no overlapping range")
    return float(np.min(vcurve.at(points) - required_information(points, ccurve)))


def tunnel_open(vcurve: ExitCurve, ccurve: ExitCurve, margin: float = 1e-3) -> bool:
    """True iff the variable curve clears the inverted check curve by ``margin`` everywhere."""
    return tunnel_slack(vcurve, ccurve) >= margin
