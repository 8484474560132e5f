"""
Sum-product decoding with Gaussian noise injected into every exchanged message.

Messages travel on the edges of a :class:`~noisy_ldpc.graph.TannerGraph` in a flooding
schedule: all variable nodes update, the variable-to-check messages are corrupted, all check
nodes update, the check-to-variable messages are corrupted.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .graph import TannerGraph, syndrome_ok

logger = logging.getLogger(__name__)

# Smallest magnitude handed to phi; phi(_PHI_FLOOR) is about 690.
_PHI_FLOOR = 1e-300
# phi underflows to zero beyond this.
_PHI_CEILING = 700.0


@dataclass
class DecoderConfig:
    """Decoder settings."""

    max_iterations: int = 80
    sigma2_d: float = 0.0
    llr_clamp: float = 30.0
    early_stop: bool = True

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be at least 1, got {self.max_iterations}")
        if self.llr_clamp <= 0:
            raise ValueError(f"llr_clamp must be positive, got {self.llr_clamp}")
        if self.sigma2_d < 0:
            raise ValueError(f"sigma2_d must be non-negative, got {self.sigma2_d}")


@dataclass
class DecodeResult:
    """Outcome of decoding one block."""

    hard_bits: np.ndarray
    success: bool
    iterations_used: int
    final_llrs: np.ndarray

    @property
    def bit_errors(self) -> int:
        """Errors against the all-zero codeword."""
        return int(np.count_nonzero(self.hard_bits))


def phi(x: np.ndarray) -> np.ndarray:
    """phi(x) = -ln tanh(x / 2) for x >= 0; an involution on (0, inf)."""
    x = np.maximum(np.asarray(x, dtype=np.float64), _PHI_FLOOR)
    values = np.log1p(2.0 / np.expm1(np.minimum(x, _PHI_CEILING)))
    return np.where(x >= _PHI_CEILING, 0.0, values)


def _check_outputs(
    magnitudes: np.ndarray, magnitude_totals: np.ndarray, negative: np.ndarray, odd: np.ndarray
) -> np.ndarray:
    """Extrinsic check outputs from per-edge phi magnitudes and the per-node totals."""
    extrinsic = phi(np.maximum(magnitude_totals - magnitudes, _PHI_FLOOR))
    return np.where(negative ^ odd, -extrinsic, extrinsic)


def variable_update(
    u0: np.ndarray, incoming: np.ndarray, llr_clamp: float = 30.0
) -> np.ndarray:
    """
    Extrinsic variable-node outputs ``u0 + sum of the other incoming messages``.

    ``incoming`` has the node's edges on its last axis; ``u0`` broadcasts against the
    remaining axes.
    """
    incoming = np.asarray(incoming, dtype=np.float64)
    total = np.asarray(u0, dtype=np.float64) + incoming.sum(axis=-1)
    return np.clip(total[..., None] - incoming, -llr_clamp, llr_clamp)


def check_update(
    incoming: np.ndarray, llr_clamp: float = 30.0, cap: Optional[float] = None
) -> np.ndarray:
    """
    Extrinsic check-node outputs ``2 atanh(prod of the other tanh(gamma / 2))``.

    Evaluated as sign times phi(sum of phi(|gamma|)) over the last axis. ``cap`` overrides
    ``llr_clamp`` as the output magnitude limit.
    """
    incoming = np.asarray(incoming, dtype=np.float64)
    magnitudes = phi(np.abs(incoming))
    negative = incoming < 0
    odd = (np.count_nonzero(negative, axis=-1) % 2 == 1)[..., None]
    outputs = _check_outputs(magnitudes, magnitudes.sum(axis=-1, keepdims=True), negative, odd)
    limit = llr_clamp if cap is None else cap
    return np.clip(outputs, -limit, limit)


def inject_noise(messages: np.ndarray, sigma2_d: float, rng: np.random.Generator) -> np.ndarray:
    """Add fresh i.i.d. N(0, sigma2_d) noise to every message."""
    if sigma2_d < 0:
        raise ValueError(f"sigma2_d must be non-negative, got {sigma2_d}")
    if sigma2_d == 0:
        return messages
    messages = np.asarray(messages, dtype=np.float64)
    return messages + rng.normal(0.0, math.sqrt(sigma2_d), size=messages.shape)


class NoisyDecoder:
    """Flooding-schedule noisy sum-product decoder bound to one graph."""

    def __init__(self, graph: TannerGraph, config: Optional[DecoderConfig] = None):
        self.graph = graph
        self.config = config or DecoderConfig()
        self._edge_var = graph.edge_var
        self._edge_check = graph.edge_check

    def _to_checks(self, messages: np.ndarray) -> np.ndarray:
        n = self.graph.n_checks
        magnitudes = phi(np.abs(messages))
        negative = messages < 0
        totals = np.bincount(self._edge_check, weights=magnitudes, minlength=n)
        odd = np.bincount(self._edge_check, weights=negative, minlength=n).astype(np.int64) % 2
        return _check_outputs(
            magnitudes, totals[self._edge_check], negative, odd[self._edge_check] == 1
        )

    def _posterior(self, llrs: np.ndarray, c2v: np.ndarray) -> np.ndarray:
        return llrs + np.bincount(self._edge_var, weights=c2v, minlength=self.graph.n_vars)

    def decode(self, llrs: np.ndarray, rng: np.random.Generator) -> DecodeResult:
        llrs = np.asarray(llrs, dtype=np.float64)
        if llrs.shape != (self.graph.n_vars,):
            raise ValueError(
                f"Expected {self.graph.n_vars} channel LLRs, got array of shape {llrs.shape}"
            )
        cfg = self.config
        clamp = cfg.llr_clamp

        hard_bits = (llrs < 0).astype(np.int8)
        if cfg.early_stop and syndrome_ok(self.graph, hard_bits):
            return DecodeResult(hard_bits, True, 0, llrs.copy())

        c2v = np.zeros(self.graph.n_edges)
        posterior = llrs
        iterations = 0
        success = False
        for iterations in range(1, cfg.max_iterations + 1):
            v2c = np.clip(self._posterior(llrs, c2v)[self._edge_var] - c2v, -clamp, clamp)
            v2c = np.clip(inject_noise(v2c, cfg.sigma2_d, rng), -clamp, clamp)

            c2v = np.clip(self._to_checks(v2c), -clamp, clamp)
            c2v = np.clip(inject_noise(c2v, cfg.sigma2_d, rng), -clamp, clamp)

            posterior = self._posterior(llrs, c2v)
            hard_bits = (posterior < 0).astype(np.int8)
            success = syndrome_ok(self.graph, hard_bits)
            if success and cfg.early_stop:
                break

        logger.debug(f"Decoding finished after {iterations} iteration(s), success={success}")
        return DecodeResult(hard_bits, success, iterations, posterior)


def decode(
    graph: TannerGraph,
    llrs: np.ndarray,
    config: Optional[DecoderConfig] = None,
    rng: Optional[np.random.Generator] = None,
) -> DecodeResult:
    """Functional form of :meth:`NoisyDecoder.decode`."""
    return NoisyDecoder(graph, config).decode(llrs, rng or np.random.default_rng())
