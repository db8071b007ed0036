"""Role-aware attention message passing over the direct trust graph.

Terminals aggregate two views per layer: messages from in-neighbors
(devices that trusted them) and messages from out-neighbors (devices
they trusted), fused through a fully connected layer. Edge-compute
devices aggregate the in-neighbor view only. Each message concatenates
the neighbor embedding with learned projections of the edge's binary
trust and frequency encodings; per-receiver attention weights come from
a bilinear score between message and receiver embedding, normalized by
softmax, with multi-head outer concatenation. A small MLP on
concatenated pair embeddings predicts a trust class distribution.

Everything is dense float64 numpy and the backward pass is written out
explicitly, so gradients can be validated against finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from ..collab import DirectTrustGraph
from ..errors import ConfigError, ModelError
from .encoding import bin_center, encode_frequency, encode_trust, quantize_trust

ROLES = ("te", "tr", "ec")


@dataclass(frozen=True)
class GNNConfig:
    """Hyperparameters of the trust propagation model."""

    embed_dim: int = 128
    trust_bits: int = 4
    layer_dims: tuple[int, ...] = (32, 64, 32)
    heads: int = 2
    mlp_hidden: int = 32
    leaky_slope: float = 0.01
    learning_rate: float = 1e-2
    l2: float = 1e-5
    dropout: float = 0.0
    epochs: int = 200
    train_frac: float = 0.8
    val_frac: float = 0.0
    patience: int | None = None
    t_his_mode: str = "bin_center"

    def __post_init__(self):
        object.__setattr__(self, "layer_dims", tuple(int(d) for d in self.layer_dims))
        if self.embed_dim < 1:
            raise ConfigError("embed_dim must be >= 1")
        if self.trust_bits < 1:
            raise ConfigError("trust_bits must be >= 1")
        if not self.layer_dims:
            raise ConfigError("need at least one propagation layer")
        if self.heads < 1:
            raise ConfigError("heads must be >= 1")
        for d in self.layer_dims:
            if d < 1 or d % self.heads:
                raise ConfigError("layer dims must be positive multiples of the head count")
        if self.mlp_hidden < 1:
            raise ConfigError("mlp_hidden must be >= 1")
        if not (0.0 <= self.dropout < 1.0):
            raise ConfigError("dropout must lie in [0, 1)")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be > 0")
        if self.l2 < 0:
            raise ConfigError("l2 must be >= 0")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if not (0.0 < self.train_frac <= 1.0):
            raise ConfigError("train_frac must lie in (0, 1]")
        if not (0.0 <= self.val_frac < self.train_frac):
            raise ConfigError("val_frac must lie in [0, train_frac)")
        if self.patience is not None and self.patience < 1:
            raise ConfigError("patience must be >= 1 when set")
        if self.t_his_mode not in ("bin_center", "max_prob"):
            raise ConfigError("t_his_mode must be 'bin_center' or 'max_prob'")

    @property
    def num_classes(self) -> int:
        return 1 << self.trust_bits

    @property
    def num_layers(self) -> int:
        return len(self.layer_dims)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["layer_dims"] = list(self.layer_dims)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GNNConfig":
        d = dict(d)
        d["layer_dims"] = tuple(d["layer_dims"])
        if d.get("patience") is not None:
            d["patience"] = int(d["patience"])
        return cls(**d)


@dataclass(frozen=True)
class RoleEdges:
    """Edge view for one aggregation role.

    ``rows`` indexes the graph's edge arrays, ``recv`` holds the node
    receiving each message, ``src`` the node whose embedding feeds it.
    """

    rows: np.ndarray
    recv: np.ndarray
    src: np.ndarray


class GraphTensors:
    """Array form of a DirectTrustGraph, ready for vectorized layers."""

    def __init__(self, graph: DirectTrustGraph, trust_bits: int):
        self.node_ids: tuple[str, ...] = tuple(sorted(graph.nodes))
        self.index = {n: i for i, n in enumerate(self.node_ids)}
        self.n = len(self.node_ids)
        self.terminal_idx = np.array(
            [i for i, n in enumerate(self.node_ids) if n in graph.terminals], dtype=np.intp
        )
        self.ec_idx = np.array(
            [i for i, n in enumerate(self.node_ids) if n in graph.ecs], dtype=np.intp
        )
        self.pairs: tuple[tuple[str, str], ...] = tuple(sorted(graph.edges))
        self.src = np.array([self.index[s] for s, _ in self.pairs], dtype=np.intp)
        self.dst = np.array([self.index[d] for _, d in self.pairs], dtype=np.intp)
        self.weights = np.array([graph.edges[p].weight for p in self.pairs])
        self.labels = np.array(
            [quantize_trust(w, trust_bits) for w in self.weights], dtype=np.intp
        )
        self.n_max = graph.max_frequency()
        n_edges = len(self.pairs)
        if n_edges:
            self.chi = np.stack([encode_trust(w, trust_bits) for w in self.weights])
            self.eta = np.stack(
                [
                    encode_frequency(graph.edges[p].frequency, self.n_max, trust_bits)
                    for p in self.pairs
                ]
            )
        else:
            self.chi = np.zeros((0, trust_bits))
            self.eta = np.zeros((0, trust_bits))

        is_terminal = np.zeros(self.n, dtype=bool)
        is_terminal[self.terminal_idx] = True
        te_rows = np.array(
            [e for e in range(n_edges) if is_terminal[self.dst[e]]], dtype=np.intp
        )
        ec_rows = np.array(
            [e for e in range(n_edges) if not is_terminal[self.dst[e]]], dtype=np.intp
        )
        tr_rows = np.arange(n_edges, dtype=np.intp)
        self.roles: dict[str, RoleEdges] = {
            "te": RoleEdges(te_rows, self.dst[te_rows], self.src[te_rows]),
            "tr": RoleEdges(tr_rows, self.src[tr_rows], self.dst[tr_rows]),
            "ec": RoleEdges(ec_rows, self.dst[ec_rows], self.src[ec_rows]),
        }

    @property
    def n_edges(self) -> int:
        return len(self.pairs)


def leaky(x: np.ndarray, slope: float) -> np.ndarray:
    return np.where(x > 0, x, slope * x)


def leaky_grad(x: np.ndarray, slope: float) -> np.ndarray:
    return np.where(x > 0, 1.0, slope)


def xavier(rng: np.random.Generator, shape: tuple[int, int]) -> np.ndarray:
    bound = np.sqrt(6.0 / (shape[0] + shape[1]))
    return rng.uniform(-bound, bound, size=shape)


def init_weights(config: GNNConfig, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """All trainable matrices except the node embeddings, Xavier-initialized."""
    params: dict[str, np.ndarray] = {}
    d_in = config.embed_dim
    for l, d_out in enumerate(config.layer_dims):
        head_dim = d_out // config.heads
        for role in ROLES:
            params[f"l{l}.{role}.w_chi"] = xavier(rng, (d_in, config.trust_bits))
            params[f"l{l}.{role}.w_eta"] = xavier(rng, (d_in, config.trust_bits))
            for q in range(config.heads):
                params[f"l{l}.{role}.h{q}.w_mu"] = xavier(rng, (3 * d_in, d_in))
                params[f"l{l}.{role}.h{q}.w_att"] = xavier(rng, (d_in, d_in))
                params[f"l{l}.{role}.h{q}.w_agg"] = xavier(rng, (3 * d_in, head_dim))
        params[f"l{l}.fuse.w"] = xavier(rng, (d_out, 2 * d_out))
        params[f"l{l}.fuse.b"] = np.zeros(d_out)
        d_in = d_out
    params["mlp.w1"] = xavier(rng, (config.mlp_hidden, 2 * d_in))
    params["mlp.b1"] = np.zeros(config.mlp_hidden)
    params["mlp.w2"] = xavier(rng, (config.num_classes, config.mlp_hidden))
    params["mlp.b2"] = np.zeros(config.num_classes)
    return params


def _grouped_softmax(logits: np.ndarray, recv: np.ndarray, n: int) -> np.ndarray:
    """Softmax of edge logits within each receiver's group."""
    gmax = np.full(n, -np.inf)
    np.maximum.at(gmax, recv, logits)
    ex = np.exp(logits - gmax[recv])
    gsum = np.zeros(n)
    np.add.at(gsum, recv, ex)
    return ex / gsum[recv]


def layer_forward(
    params: dict[str, np.ndarray],
    config: GNNConfig,
    gt: GraphTensors,
    layer: int,
    h_prev: np.ndarray,
    dropout_mask: np.ndarray | None = None,
) -> tuple[np.ndarray, dict]:
    """One propagation/aggregation layer; returns (embeddings, cache).

    Receivers with no edges in a role keep a zero aggregate for that
    role. The cache holds every intermediate the backward pass needs,
    including the per-role, per-head attention weights ``psi``.
    """
    slope = config.leaky_slope
    if not (0 <= layer < config.num_layers):
        raise ModelError(f"layer index {layer} out of range")
    d_in = config.embed_dim if layer == 0 else config.layer_dims[layer - 1]
    if h_prev.shape != (gt.n, d_in):
        raise ModelError(
            f"layer {layer} expects embeddings of shape {(gt.n, d_in)}, got {h_prev.shape}"
        )
    d_out = config.layer_dims[layer]
    head_dim = d_out // config.heads
    cache: dict = {"h_prev": h_prev, "roles": {}}
    agg: dict[str, np.ndarray] = {}
    for role in ROLES:
        re = gt.roles[role]
        a_role = np.zeros((gt.n, d_out))
        rcache: dict = {}
        if re.rows.size:
            chi = gt.chi[re.rows]
            eta = gt.eta[re.rows]
            omega = chi @ params[f"l{layer}.{role}.w_chi"].T
            eps = eta @ params[f"l{layer}.{role}.w_eta"].T
            msg = np.concatenate([h_prev[re.src], omega, eps], axis=1)
            heads = []
            for q in range(config.heads):
                proj = msg @ params[f"l{layer}.{role}.h{q}.w_mu"]
                gall = h_prev @ params[f"l{layer}.{role}.h{q}.w_att"]
                logits = np.einsum("ed,ed->e", proj, gall[re.recv])
                psi = _grouped_softmax(logits, re.recv, gt.n)
                zsum = np.zeros((gt.n, msg.shape[1]))
                np.add.at(zsum, re.recv, psi[:, None] * msg)
                pre_u = zsum @ params[f"l{layer}.{role}.h{q}.w_agg"]
                a_role[:, q * head_dim : (q + 1) * head_dim] = leaky(pre_u, slope)
                heads.append({"proj": proj, "gall": gall, "psi": psi, "zsum": zsum, "pre_u": pre_u})
            rcache = {"msg": msg, "chi": chi, "eta": eta, "heads": heads}
        cache["roles"][role] = rcache
        agg[role] = a_role
    cat = np.concatenate([agg["te"], agg["tr"]], axis=1)
    pre_f = cat @ params[f"l{layer}.fuse.w"].T + params[f"l{layer}.fuse.b"]
    h_new = agg["ec"].copy()
    t = gt.terminal_idx
    if t.size:
        h_new[t] = leaky(pre_f[t], slope)
    cache.update(agg=agg, cat=cat, pre_f=pre_f)
    if dropout_mask is not None:
        h_new = h_new * dropout_mask
        cache["dropout_mask"] = dropout_mask
    return h_new, cache


def forward_embeddings(
    params: dict[str, np.ndarray],
    config: GNNConfig,
    gt: GraphTensors,
    dropout_masks: list[np.ndarray] | None = None,
) -> tuple[np.ndarray, list[dict]]:
    h = params["embed"]
    caches: list[dict] = []
    for layer in range(config.num_layers):
        mask = dropout_masks[layer] if dropout_masks is not None else None
        h, cache = layer_forward(params, config, gt, layer, h, mask)
        caches.append(cache)
    return h, caches


def head_forward(
    params: dict[str, np.ndarray],
    config: GNNConfig,
    h_final: np.ndarray,
    pair_i: np.ndarray,
    pair_j: np.ndarray,
) -> tuple[np.ndarray, dict]:
    """Class logits for ordered device pairs from their final embeddings."""
    x = np.concatenate([h_final[pair_i], h_final[pair_j]], axis=1)
    pre1 = x @ params["mlp.w1"].T + params["mlp.b1"]
    hid = leaky(pre1, config.leaky_slope)
    logits = hid @ params["mlp.w2"].T + params["mlp.b2"]
    return logits, {"x": x, "pre1": pre1, "hid": hid, "pair_i": pair_i, "pair_j": pair_j}


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def t_his_from_distribution(dist: np.ndarray, bits: int, mode: str) -> float:
    """Scalar trust from a class distribution.

    Default is the bin center of the most likely class; ``max_prob``
    returns the winning probability itself instead. Argmax ties break
    toward the lowest class index.
    """
    cls = int(np.argmax(dist))
    if mode == "max_prob":
        return float(dist[cls])
    return bin_center(cls, bits)


def regularization(params: dict[str, np.ndarray], l2: float) -> float:
    if l2 == 0.0:
        return 0.0
    return l2 * float(sum((p * p).sum() for p in params.values()))


def loss_value(
    params: dict[str, np.ndarray],
    config: GNNConfig,
    gt: GraphTensors,
    rows: np.ndarray,
    dropout_masks: list[np.ndarray] | None = None,
) -> float:
    """Cross-entropy over labeled edges plus L2 over all parameters."""
    if rows.size == 0:
        raise ModelError("loss over an empty edge set")
    h_final, _ = forward_embeddings(params, config, gt, dropout_masks)
    logits, _ = head_forward(params, config, h_final, gt.src[rows], gt.dst[rows])
    logp = log_softmax(logits)
    ce = -logp[np.arange(rows.size), gt.labels[rows]].mean()
    return ce + regularization(params, config.l2)


def _layer_backward(
    params: dict[str, np.ndarray],
    config: GNNConfig,
    gt: GraphTensors,
    layer: int,
    cache: dict,
    dh_new: np.ndarray,
    grads: dict[str, np.ndarray],
) -> np.ndarray:
    slope = config.leaky_slope
    if "dropout_mask" in cache:
        dh_new = dh_new * cache["dropout_mask"]
    h_prev = cache["h_prev"]
    d_in = h_prev.shape[1]
    d_out = config.layer_dims[layer]
    head_dim = d_out // config.heads
    t = gt.terminal_idx
    e = gt.ec_idx

    d_agg = {role: np.zeros((gt.n, d_out)) for role in ROLES}
    if t.size:
        w_fuse = params[f"l{layer}.fuse.w"]
        dpre_f = dh_new[t] * leaky_grad(cache["pre_f"][t], slope)
        grads[f"l{layer}.fuse.w"] += dpre_f.T @ cache["cat"][t]
        grads[f"l{layer}.fuse.b"] += dpre_f.sum(axis=0)
        dcat = dpre_f @ w_fuse
        d_agg["te"][t] = dcat[:, :d_out]
        d_agg["tr"][t] = dcat[:, d_out:]
    if e.size:
        d_agg["ec"][e] = dh_new[e]

    dh_prev = np.zeros_like(h_prev)
    for role in ROLES:
        rcache = cache["roles"][role]
        if not rcache:
            continue
        re = gt.roles[role]
        msg = rcache["msg"]
        dmsg = np.zeros_like(msg)
        for q in range(config.heads):
            hc = rcache["heads"][q]
            w_mu = params[f"l{layer}.{role}.h{q}.w_mu"]
            w_att = params[f"l{layer}.{role}.h{q}.w_att"]
            w_agg = params[f"l{layer}.{role}.h{q}.w_agg"]
            du = d_agg[role][:, q * head_dim : (q + 1) * head_dim]
            dpre_u = du * leaky_grad(hc["pre_u"], slope)
            grads[f"l{layer}.{role}.h{q}.w_agg"] += hc["zsum"].T @ dpre_u
            dz = dpre_u @ w_agg.T
            dz_edges = dz[re.recv]
            psi = hc["psi"]
            dpsi = np.einsum("ed,ed->e", msg, dz_edges)
            dmsg_q = psi[:, None] * dz_edges
            gdot = np.zeros(gt.n)
            np.add.at(gdot, re.recv, psi * dpsi)
            dlogit = psi * (dpsi - gdot[re.recv])
            dproj = dlogit[:, None] * hc["gall"][re.recv]
            dgall = np.zeros((gt.n, d_in))
            np.add.at(dgall, re.recv, dlogit[:, None] * hc["proj"])
            grads[f"l{layer}.{role}.h{q}.w_mu"] += msg.T @ dproj
            dmsg_q += dproj @ w_mu.T
            grads[f"l{layer}.{role}.h{q}.w_att"] += h_prev.T @ dgall
            dh_prev += dgall @ w_att.T
            dmsg += dmsg_q
        np.add.at(dh_prev, re.src, dmsg[:, :d_in])
        domega = dmsg[:, d_in : 2 * d_in]
        deps = dmsg[:, 2 * d_in :]
        grads[f"l{layer}.{role}.w_chi"] += domega.T @ rcache["chi"]
        grads[f"l{layer}.{role}.w_eta"] += deps.T @ rcache["eta"]
    return dh_prev


def loss_and_grads(
    params: dict[str, np.ndarray],
    config: GNNConfig,
    gt: GraphTensors,
    rows: np.ndarray,
    dropout_masks: list[np.ndarray] | None = None,
) -> tuple[float, dict[str, np.ndarray]]:
    """Loss plus analytic gradients for every parameter, embeddings included."""
    if rows.size == 0:
        raise ModelError("loss over an empty edge set")
    h_final, caches = forward_embeddings(params, config, gt, dropout_masks)
    pair_i = gt.src[rows]
    pair_j = gt.dst[rows]
    logits, hc = head_forward(params, config, h_final, pair_i, pair_j)
    logp = log_softmax(logits)
    batch = rows.size
    labels = gt.labels[rows]
    ce = -logp[np.arange(batch), labels].mean()
    loss = ce + regularization(params, config.l2)

    grads = {k: np.zeros_like(v) for k, v in params.items()}
    dlogits = np.exp(logp)
    dlogits[np.arange(batch), labels] -= 1.0
    dlogits /= batch
    grads["mlp.w2"] += dlogits.T @ hc["hid"]
    grads["mlp.b2"] += dlogits.sum(axis=0)
    dhid = dlogits @ params["mlp.w2"]
    dpre1 = dhid * leaky_grad(hc["pre1"], config.leaky_slope)
    grads["mlp.w1"] += dpre1.T @ hc["x"]
    grads["mlp.b1"] += dpre1.sum(axis=0)
    dx = dpre1 @ params["mlp.w1"]
    d_final = h_final.shape[1]
    dh = np.zeros_like(h_final)
    np.add.at(dh, pair_i, dx[:, :d_final])
    np.add.at(dh, pair_j, dx[:, d_final:])

    for layer in reversed(range(config.num_layers)):
        dh = _layer_backward(params, config, gt, layer, caches[layer], dh, grads)
    grads["embed"] += dh

    if config.l2:
        for name, value in params.items():
            grads[name] += 2.0 * config.l2 * value
    return loss, grads


def make_dropout_masks(
    config: GNNConfig, n: int, rng: np.random.Generator
) -> list[np.ndarray] | None:
    """Inverted-dropout masks for each layer's output embeddings."""
    if config.dropout == 0.0:
        return None
    keep = 1.0 - config.dropout
    return [
        (rng.random((n, d)) < keep).astype(np.float64) / keep for d in config.layer_dims
    ]


def finite_difference_grads(
    params: dict[str, np.ndarray],
    loss_fn,
    names: list[str] | None = None,
    step: float = 1e-6,
) -> dict[str, np.ndarray]:
    """Central-difference gradients of ``loss_fn(params)``.

    Intended for validating the analytic backward pass on small models;
    cost is two full forwards per scalar parameter.
    """
    out: dict[str, np.ndarray] = {}
    for name in names if names is not None else sorted(params):
        value = params[name]
        grad = np.zeros_like(value)
        flat = value.reshape(-1)
        gflat = grad.reshape(-1)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + step
            up = loss_fn(params)
            flat[k] = orig - step
            down = loss_fn(params)
            flat[k] = orig
            gflat[k] = (up - down) / (2.0 * step)
        out[name] = grad
    return out
