"""
noisy-ldpc - Analysis and design of LDPC codes decoded by noisy message-passing hardware.
"""

try:
    from ._version import version as __version__  # type: ignore
except ImportError:
    # Fallback for development without installed package
    __version__ = "unknown"

from .cache import CurveCache
from .channel import NoiseModel, snr_db_to_sigma_n, transmit_all_one
from .config import ConfigError, ExperimentConfig, load_config
from .decoder import DecodeResult, DecoderConfig, NoisyDecoder, decode
from .degree import DegreeDistribution, rate, regular, two_term_check, validate
from .density import DEParams, GaussianState, evolve, threshold, threshold_table
from .design import DesignResult, DesignSpec, design_code, feasible_lambda
from .exit_chart import ExitCurve, j_fun, j_inv, ncnd_curve, nvnd_curve, tunnel_open
from .formats import AlistParseError, from_alist, load_code, to_alist
from .graph import TannerGraph, construct, remove_four_cycles, syndrome_ok
from .harness import BerPoint, ExperimentRunner, ber_sim, run_config

__all__ = [
    "__version__",
    "DegreeDistribution",
    "regular",
    "rate",
    "two_term_check",
    "validate",
    "TannerGraph",
    "construct",
    "remove_four_cycles",
    "syndrome_ok",
    "to_alist",
    "from_alist",
    "load_code",
    "AlistParseError",
    "NoiseModel",
    "snr_db_to_sigma_n",
    "transmit_all_one",
    "DecoderConfig",
    "DecodeResult",
    "NoisyDecoder",
    "decode",
    "DEParams",
    "GaussianState",
    "evolve",
    "threshold",
    "threshold_table",
    "ExitCurve",
    "j_fun",
    "j_inv",
    "nvnd_curve",
    "ncnd_curve",
    "tunnel_open",
    "CurveCache",
    "DesignSpec",
    "DesignResult",
    "design_code",
    "feasible_lambda",
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "BerPoint",
    "ExperimentRunner",
    "ber_sim",
    "run_config",
]
