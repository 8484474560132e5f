"""
Tests for the noisy sum-product decoder.
"""

import itertools
import math

import numpy as np
import pytest

from noisy_ldpc.channel import snr_db_to_sigma_n, transmit_all_one
from noisy_ldpc.decoder import (
    DecoderConfig,
    NoisyDecoder,
    check_update,
    decode,
    inject_noise,
    phi,
    variable_update,
)
from noisy_ldpc.degree import regular
from noisy_ldpc.graph import TannerGraph, construct, remove_four_cycles, syndrome_ok


def chain_code() -> TannerGraph:
    """Cycle-free code with checks {0,1,2}, {2,3,4}, {4,5,6}."""
    checks = [(0, 1, 2), (2, 3, 4), (4, 5, 6)]
    edges = sorted((v, c) for c, members in enumerate(checks) for v in members)
    edge_var, edge_check = zip(*edges)
    return TannerGraph(7, 3, np.array(edge_var), np.array(edge_check))


def brute_force_llrs(graph: TannerGraph, llrs: np.ndarray) -> np.ndarray:
    """Exact bitwise posterior LLRs by enumerating every codeword."""
    codewords = [
        np.array(bits)
        for bits in itertools.product((0, 1), repeat=graph.n_vars)
        if syndrome_ok(graph, np.array(bits))
    ]
    # log P(x | y) up to a constant: sum over bits of (1 - 2 x_j) L_j / 2
    scores = np.array([np.dot(1 - 2 * c, llrs) / 2.0 for c in codewords])
    words = np.array(codewords)
    posterior = np.empty(graph.n_vars)
    for j in range(graph.n_vars):
        zero = np.logaddexp.reduce(scores[words[:, j] == 0])
        one = np.logaddexp.reduce(scores[words[:, j] == 1])
        posterior[j] = zero - one
    return posterior


class TestDecoderConfig:
    def test_defaults(self):
        cfg = DecoderConfig()
        assert cfg.max_iterations == 80
        assert cfg.llr_clamp == 30.0
        assert cfg.early_stop

    @pytest.mark.parametrize(
        "kwargs", [{"max_iterations": 0}, {"llr_clamp": 0.0}, {"sigma2_d": -1.0}]
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            DecoderConfig(**kwargs)


class TestVariableUpdate:
    def test_extrinsic_exclusion(self):
        np.testing.assert_allclose(variable_update(1.0, np.array([2.0, 3.0])), [4.0, 3.0])

    def test_degree_one_passes_channel(self):
        np.testing.assert_allclose(variable_update(1.5, np.array([7.0])), [1.5])

    def test_zero_inputs(self):
        np.testing.assert_allclose(variable_update(0.7, np.zeros(3)), [0.7, 0.7, 0.7])

    def test_clamp(self):
        out = variable_update(25.0, np.array([20.0, 20.0, -5.0]))
        assert np.all(np.abs(out) <= 30.0)

    def test_batch(self):
        u0 = np.array([[1.0], [0.0]])
        incoming = np.array([[2.0, 3.0], [1.0, -1.0]])
        np.testing.assert_allclose(variable_update(u0[:, 0], incoming), [[4.0, 3.0], [-1.0, 1.0]])

    def test_batch_shape_follows_incoming(self):
        u0 = np.linspace(-1.0, 1.0, 500)
        out = variable_update(u0, np.zeros((500, 3)), llr_clamp=math.inf)
        assert out.shape == (500, 3)
        np.testing.assert_allclose(out[:, 2], u0)


class TestCheckUpdate:
    def test_degree_two_is_identity(self):
        np.testing.assert_allclose(check_update(np.array([1.7, -0.4])), [-0.4, 1.7], rtol=1e-9)

    def test_tanh_rule(self):
        out = check_update(np.array([2.0, 2.0, 5.0]))
        expected = 2.0 * math.atanh(math.tanh(1.0) ** 2)
        assert out[2] == pytest.approx(expected, rel=1e-9)
        assert out[2] == pytest.approx(1.3250, abs=1e-4)

    def test_zero_annihilates_others(self):
        out = check_update(np.array([0.0, 3.0, -2.0, 4.0]))
        np.testing.assert_allclose(out[1:], 0.0, atol=1e-9)
        assert out[0] != 0.0

    def test_sign_symmetry(self):
        incoming = np.array([1.2, -0.7, 2.5, 0.9])
        base = check_update(incoming)
        flipped_input = incoming.copy()
        flipped_input[1] *= -1
        flipped = check_update(flipped_input)
        others = [0, 2, 3]
        np.testing.assert_allclose(flipped[others], -base[others], rtol=1e-12)
        assert flipped[1] == pytest.approx(base[1])

    def test_clamp(self):
        out = check_update(np.array([80.0, 90.0, 100.0]))
        assert np.all(np.abs(out) <= 30.0)
        assert np.all(out > 29.0)

    def test_phi_is_involution(self):
        x = np.array([0.05, 0.5, 1.0, 4.0, 12.0])
        np.testing.assert_allclose(phi(phi(x)), x, rtol=1e-9)


class TestInjectNoise:
    def test_zero_variance_identity(self):
        messages = np.array([1.0, -2.0])
        assert inject_noise(messages, 0.0, np.random.default_rng()) is messages

    def test_variance(self):
        out = inject_noise(np.zeros(1_000_000), 1.0, np.random.default_rng(3))
        assert out.var() == pytest.approx(1.0, abs=0.01)

    def test_fresh_draws(self):
        rng = np.random.default_rng(4)
        a = inject_noise(np.zeros(100_000), 1.0, rng)
        b = inject_noise(np.zeros(100_000), 1.0, rng)
        assert abs(np.corrcoef(a, b)[0, 1]) < 0.02

    def test_negative_variance(self):
        with pytest.raises(ValueError):
            inject_noise(np.zeros(2), -1.0, np.random.default_rng())


class TestDecode:
    """Graph-level decoding."""

    def test_tree_code_matches_brute_force(self):
        graph = chain_code()
        llrs = np.array([1.3, -0.4, 0.8, 2.1, -1.1, 0.6, 0.9])
        cfg = DecoderConfig(max_iterations=10, early_stop=False)
        result = NoisyDecoder(graph, cfg).decode(llrs, np.random.default_rng(0))
        np.testing.assert_allclose(result.final_llrs, brute_force_llrs(graph, llrs), atol=1e-9)

    def test_noiseless_channel_decodes_immediately(self):
        graph = construct(regular(3, 6), 96, seed=1)
        llrs = np.full(96, 20.0)
        result = decode(graph, llrs, DecoderConfig(), np.random.default_rng(0))
        assert result.success
        assert result.iterations_used <= 1
        assert result.bit_errors == 0

    def test_success_implies_syndrome(self):
        graph = remove_four_cycles(construct(regular(3, 6), 504, seed=2), seed=2).graph
        rng = np.random.default_rng(8)
        decoder = NoisyDecoder(graph, DecoderConfig(sigma2_d=0.5))
        for _ in range(5):
            llrs = transmit_all_one(504, snr_db_to_sigma_n(2.0, 0.5), rng)
            result = decoder.decode(llrs, rng)
            if result.success:
                assert syndrome_ok(graph, result.hard_bits)

    def test_moderate_snr_corrects_errors(self):
        graph = remove_four_cycles(construct(regular(3, 6), 1008, seed=3), seed=3).graph
        rng = np.random.default_rng(9)
        llrs = transmit_all_one(1008, snr_db_to_sigma_n(4.0, 0.5), rng)
        assert np.count_nonzero(llrs < 0) > 0
        result = decode(graph, llrs, DecoderConfig(), rng)
        assert result.success
        assert result.bit_errors == 0

    def test_messages_respect_clamp(self):
        graph = chain_code()
        llrs = np.array([40.0, -50.0, 35.0, 45.0, -60.0, 38.0, 41.0])
        result = decode(graph, llrs, DecoderConfig(max_iterations=3, early_stop=False))
        # Posterior is the channel LLR plus at most (degree) clamped messages.
        assert np.all(np.abs(result.final_llrs - llrs) <= 2 * 30.0 + 1e-9)

    def test_length_mismatch(self):
        graph = chain_code()
        with pytest.raises(ValueError, match="channel LLRs"):
            decode(graph, np.zeros(6))

    def test_same_seed_same_result(self):
        graph = construct(regular(3, 6), 96, seed=1)
        llrs = transmit_all_one(96, 0.9, np.random.default_rng(1))
        cfg = DecoderConfig(sigma2_d=1.0, max_iterations=20)
        a = decode(graph, llrs, cfg, np.random.default_rng(5))
        b = decode(graph, llrs, cfg, np.random.default_rng(5))
        np.testing.assert_array_equal(a.final_llrs, b.final_llrs)
        assert a.iterations_used == b.iterations_used
