"""Binary trust/frequency encodings and seeded embedding initialization.

Trust values in [0, 1] are quantized to 2^bits levels and emitted as
big-endian bit vectors; the same quantizer defines the class labels used
by the prediction head, and class c decodes to the bin center
(c + 0.5) / 2^bits. Collaboration frequencies are normalized by the
graph-wide maximum and encoded through the same quantizer.
"""

from __future__ import annotations

import math

import numpy as np

from ..collab import DirectTrustGraph
from ..errors import ConfigError, ModelError


def quantize_trust(value: float, bits: int) -> int:
    """Map a trust value in [0, 1] to a class index in [0, 2^bits - 1].

    Uses round-half-up so the rule is platform independent.
    """
    if bits < 1:
        raise ConfigError("trust encoding needs at least 1 bit")
    if not (0.0 <= value <= 1.0):
        raise ConfigError(f"trust value {value!r} outside [0, 1]")
    levels = (1 << bits) - 1
    return int(math.floor(value * levels + 0.5))


def bin_center(cls: int, bits: int) -> float:
    """Trust value represented by class ``cls``: (cls + 0.5) / 2^bits."""
    count = 1 << bits
    if not (0 <= cls < count):
        raise ConfigError(f"class {cls} outside [0, {count})")
    return (cls + 0.5) / count


def encode_trust(value: float, bits: int) -> np.ndarray:
    """Big-endian bit vector of the quantized trust value."""
    q = quantize_trust(value, bits)
    return np.array([(q >> (bits - 1 - k)) & 1 for k in range(bits)], dtype=np.float64)


def decode_bits(encoded: np.ndarray) -> int:
    bits = len(encoded)
    q = 0
    for k, b in enumerate(encoded):
        q |= int(round(float(b))) << (bits - 1 - k)
    return q


def encode_frequency(n: int, n_max: int, bits: int) -> np.ndarray:
    """Encode a collaboration count normalized by the graph maximum."""
    if n_max < 1:
        raise ConfigError("n_max must be >= 1")
    if not (1 <= n <= n_max):
        raise ConfigError(f"frequency {n} outside [1, {n_max}]")
    return encode_trust(n / n_max, bits)


def init_embeddings(graph: DirectTrustGraph, dim: int, seed) -> dict[str, np.ndarray]:
    """Deterministic graph-aware initial embeddings, one unit vector per node.

    Seeded Gaussian vectors are smoothed by two rounds of undirected
    neighbor averaging and then L2-normalized, so connected devices start
    nearby without any stochastic walk machinery.
    """
    if dim < 1:
        raise ConfigError("embedding dimension must be >= 1")
    nodes = sorted(graph.nodes)
    if not nodes:
        raise ModelError("cannot embed an empty graph")
    rng = np.random.default_rng(seed)
    vecs = rng.standard_normal((len(nodes), dim))
    index = {n: i for i, n in enumerate(nodes)}
    neigh = [
        [index[m] for m in graph.undirected_neighbors(n)] for n in nodes
    ]
    for _ in range(2):
        smoothed = np.empty_like(vecs)
        for i, ns in enumerate(neigh):
            acc = vecs[i] + vecs[ns].sum(axis=0) if ns else vecs[i]
            smoothed[i] = acc / (1 + len(ns))
        vecs = smoothed
    norms = np.maximum(np.linalg.norm(vecs, axis=1, keepdims=True), 1e-12)
    vecs = vecs / norms
    return {n: vecs[i] for i, n in enumerate(nodes)}
