"""Binary trust/frequency encoding and embedding initialization."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from trustpath import ConfigError
from trustpath.collab import DirectTrustGraph, TrustEdge
from trustpath.gnn import (
    bin_center,
    decode_bits,
    encode_frequency,
    encode_trust,
    init_embeddings,
    quantize_trust,
)


class TestEncodeTrust:
    def test_zero_all_zeros(self):
        assert encode_trust(0.0, 4).tolist() == [0, 0, 0, 0]

    def test_one_all_ones(self):
        assert encode_trust(1.0, 4).tolist() == [1, 1, 1, 1]

    def test_three_quarters_is_eleven(self):
        # round(0.75 * 15) = 11 = 0b1011, big-endian
        assert encode_trust(0.75, 4).tolist() == [1, 0, 1, 1]

    def test_out_of_range_rejected(self):
        with pytest.raises(ConfigError):
            encode_trust(1.5, 4)
        with pytest.raises(ConfigError):
            encode_trust(-0.1, 4)

    @given(value=st.floats(0, 1), bits=st.integers(1, 8))
    def test_decode_within_one_quantization_step(self, value, bits):
        cls = decode_bits(encode_trust(value, bits))
        assert cls == quantize_trust(value, bits)
        assert abs(bin_center(cls, bits) - value) <= 1.0 / ((1 << bits) - 1) + 1e-12

    def test_bin_center_examples(self):
        assert bin_center(0, 4) == pytest.approx(0.03125)
        assert bin_center(0, 2) == pytest.approx(0.125)
        assert bin_center(15, 4) == pytest.approx(0.96875)


class TestEncodeFrequency:
    def test_max_frequency_all_ones(self):
        assert encode_frequency(7, 7, 4).tolist() == [1, 1, 1, 1]

    def test_composition_with_trust_encoding(self):
        assert encode_frequency(3, 4, 4).tolist() == encode_trust(0.75, 4).tolist()

    def test_zero_rejected(self):
        with pytest.raises(ConfigError):
            encode_frequency(0, 4, 4)
        with pytest.raises(ConfigError):
            encode_frequency(1, 0, 4)


def toy_graph():
    edges = {
        ("a", "b"): TrustEdge(0.9, 3),
        ("b", "a"): TrustEdge(0.4, 1),
        ("a", "x"): TrustEdge(0.7, 2),
    }
    return DirectTrustGraph(["a", "b", "c"], ["x"], edges)


class TestInitEmbeddings:
    def test_deterministic(self):
        g = toy_graph()
        e1 = init_embeddings(g, 16, 5)
        e2 = init_embeddings(g, 16, 5)
        for n in g.nodes:
            assert np.array_equal(e1[n], e2[n])

    def test_seed_changes_vectors(self):
        g = toy_graph()
        e1 = init_embeddings(g, 16, 5)
        e2 = init_embeddings(g, 16, 6)
        assert not np.allclose(e1["a"], e2["a"])

    def test_unit_norm(self):
        g = toy_graph()
        for vec in init_embeddings(g, 128, 0).values():
            assert np.linalg.norm(vec) == pytest.approx(1.0, abs=1e-9)

    def test_isolated_node_still_embedded(self):
        g = toy_graph()  # "c" has no edges
        emb = init_embeddings(g, 8, 1)
        assert np.linalg.norm(emb["c"]) == pytest.approx(1.0, abs=1e-9)

    def test_empty_graph_rejected(self):
        from trustpath.errors import ModelError

        g = DirectTrustGraph([], [], {})
        with pytest.raises(ModelError):
            init_embeddings(g, 8, 0)
