"""
Basic smoke tests for the noisy-ldpc package.
"""

import numpy as np
import pytest

from noisy_ldpc import (
    DecoderConfig,
    NoiseModel,
    __version__,
    construct,
    decode,
    regular,
    remove_four_cycles,
    transmit_all_one,
)


def test_imports():
    """Test that all main components can be imported."""
    import noisy_ldpc

    for name in noisy_ldpc.__all__:
        assert hasattr(noisy_ldpc, name), name
    assert isinstance(__version__, str)


def test_construct_and_decode():
    """Basic test that a constructed code decodes a clean block."""
    graph = remove_four_cycles(construct(regular(3, 6), 204, seed=0), seed=0).graph
    noise = NoiseModel.from_snr(5.0, graph.design_rate, sigma2_d=0.1)
    llrs = transmit_all_one(graph.n_vars, noise.sigma_n, np.random.default_rng(0))

    result = decode(graph, llrs, DecoderConfig(sigma2_d=noise.sigma2_d), np.random.default_rng(1))
    assert result.success
    assert result.bit_errors == 0


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
