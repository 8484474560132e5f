"""
BPSK over AWGN: noise model, SNR conversions and channel LLRs.

The transmitted word is the all-zero codeword, i.e. the all-(+1) BPSK sequence, so a
positive LLR favours the transmitted bit.
"""

import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from scipy.stats import norm

ArrayOrFloat = Union[float, np.ndarray]


@dataclass(frozen=True)
class NoiseModel:
    """Channel noise variance and internal decoder noise variance."""

    sigma2_n: float
    sigma2_d: float = 0.0

    def __post_init__(self) -> None:
        if self.sigma2_n < 0:
            raise ValueError(f"sigma2_n must be non-negative, got {self.sigma2_n}")
        if self.sigma2_d < 0:
            raise ValueError(f"sigma2_d must be non-negative, got {self.sigma2_d}")

    @property
    def sigma_n(self) -> float:
        return math.sqrt(self.sigma2_n)

    @classmethod
    def from_snr(cls, snr_db: float, rate: float, sigma2_d: float = 0.0) -> "NoiseModel":
        return cls(snr_db_to_sigma_n(snr_db, rate) ** 2, sigma2_d)

    def llr_stats(self) -> Tuple[float, float]:
        return llr_stats(self.sigma_n)


def _check_rate(rate: float) -> None:
    if not 0.0 < rate < 1.0:
        raise ValueError(f"rate must lie in (0, 1), got {rate}")


def snr_db_to_sigma_n(snr_db: float, rate: float) -> float:
    """Channel noise standard deviation for Eb/N0 = ``snr_db`` at code rate ``rate``."""
    _check_rate(rate)
    snr = 10.0 ** (snr_db / 10.0)
    return float((2.0 * rate * snr) ** -0.5)


def sigma_n_to_snr_db(sigma_n: float, rate: float) -> float:
    """Inverse of :func:`snr_db_to_sigma_n`."""
    _check_rate(rate)
    if sigma_n <= 0:
        raise ValueError(f"sigma_n must be positive, got {sigma_n}")
    return float(10.0 * math.log10(1.0 / (2.0 * rate * sigma_n**2)))


def llr_stats(sigma_n: float) -> Tuple[float, float]:
    """Mean and variance (m0, sigma0^2) of the received LLR; always sigma0^2 = 2 m0."""
    if sigma_n <= 0:
        raise ValueError(f"sigma_n must be positive, got {sigma_n}")
    m0 = 2.0 / sigma_n**2
    return m0, 2.0 * m0


def transmit_all_one(n: int, sigma_n: float, rng: np.random.Generator) -> np.ndarray:
    """Channel LLRs (2 / sigma_n^2)(1 + n_c), n_c ~ N(0, sigma_n^2), for ``n`` +1 symbols."""
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    if sigma_n <= 0:
        raise ValueError(f"sigma_n must be positive, got {sigma_n}")
    noise = rng.normal(0.0, sigma_n, size=n)
    return (2.0 / sigma_n**2) * (1.0 + noise)


def q_function(x: ArrayOrFloat) -> ArrayOrFloat:
    """Gaussian tail probability P(Z > x)."""
    return norm.sf(x)  # type: ignore[no-any-return]
