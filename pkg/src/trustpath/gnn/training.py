"""Training loop, evaluation, trust prediction, and threshold filtering.

Training is full-batch gradient descent on the cross-entropy objective
with explicit backpropagation, deterministic for a given (graph,
config, seed) triple. The labeled edge set is split into train and
held-out parts; an optional validation slice carved from the training
part drives early stopping when a patience is configured.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..collab import DirectTrustGraph
from ..errors import ModelError, PlanningError, TrainingDivergedError
from ..network import Task, Topology
from .encoding import init_embeddings
from .model import (
    GNNConfig,
    GraphTensors,
    forward_embeddings,
    head_forward,
    init_weights,
    log_softmax,
    loss_and_grads,
    make_dropout_masks,
    regularization,
    t_his_from_distribution,
)


@dataclass(frozen=True)
class TrustPrediction:
    """Class distribution and the scalar trust derived from it."""

    class_probs: tuple[float, ...]
    t_his: float

    def __post_init__(self):
        if abs(sum(self.class_probs) - 1.0) > 1e-9:
            raise ModelError("class distribution does not sum to 1")
        if not (0.0 <= self.t_his <= 1.0):
            raise ModelError("t_his outside [0, 1]")


@dataclass(frozen=True)
class EdgeSplit:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray


def split_edges(n_edges: int, config: GNNConfig, rng: np.random.Generator) -> EdgeSplit:
    """Shuffle edge rows into train / validation / held-out slices."""
    perm = rng.permutation(n_edges)
    n_test = n_edges - int(round(config.train_frac * n_edges))
    if config.train_frac < 1.0:
        n_test = min(max(n_test, 1), n_edges - 1)
    n_val = int(round(config.val_frac * n_edges))
    n_train = n_edges - n_test - n_val
    if n_train < 1:
        raise ModelError("split leaves no training edges")
    train = np.sort(perm[:n_train])
    val = np.sort(perm[n_train : n_train + n_val])
    test = np.sort(perm[n_train + n_val :])
    return EdgeSplit(train=train, val=val, test=test)


class TrainedTrustModel:
    """Immutable trained model: parameters plus final node embeddings."""

    def __init__(
        self,
        config: GNNConfig,
        params: dict[str, np.ndarray],
        node_ids: tuple[str, ...],
        n_max: int,
        embeddings: np.ndarray,
    ):
        self.config = config
        self.params = params
        self.node_ids = node_ids
        self.index = {n: i for i, n in enumerate(node_ids)}
        self.n_max = n_max
        self.embeddings = embeddings
        self.history: list[dict] = []
        self.metrics: dict = {}
        self.edge_split: dict[str, list] = {}

    def _pair_index(self, i: str, j: str) -> tuple[int, int]:
        try:
            return self.index[i], self.index[j]
        except KeyError as exc:
            raise ModelError(f"device {exc.args[0]!r} is not embedded in this model") from exc

    def distribution(self, i: str, j: str) -> np.ndarray:
        ii, jj = self._pair_index(i, j)
        logits, _ = head_forward(
            self.params, self.config, self.embeddings, np.array([ii]), np.array([jj])
        )
        return np.exp(log_softmax(logits))[0]

    def predict_pair(self, i: str, j: str) -> TrustPrediction:
        dist = self.distribution(i, j)
        t_his = t_his_from_distribution(dist, self.config.trust_bits, self.config.t_his_mode)
        return TrustPrediction(class_probs=tuple(float(p) for p in dist), t_his=t_his)

    def t_his(self, i: str, j: str) -> float:
        return self.predict_pair(i, j).t_his

    def t_his_many(self, pairs: list[tuple[str, str]]) -> np.ndarray:
        if not pairs:
            return np.zeros(0)
        ii = np.array([self._pair_index(a, b)[0] for a, b in pairs])
        jj = np.array([self.index[b] for _, b in pairs])
        logits, _ = head_forward(self.params, self.config, self.embeddings, ii, jj)
        dists = np.exp(log_softmax(logits))
        return np.array(
            [
                t_his_from_distribution(d, self.config.trust_bits, self.config.t_his_mode)
                for d in dists
            ]
        )


def predict_pair(model: TrainedTrustModel, i: str, j: str) -> TrustPrediction:
    return model.predict_pair(i, j)


def train(
    graph: DirectTrustGraph, config: GNNConfig, seed: int
) -> TrainedTrustModel:
    """Fit the trust model on a direct trust graph.

    Returns the trained model carrying the loss curve (``history``,
    one row per epoch plus a final post-update row) and held-out
    metrics (``metrics``).
    """
    gt = GraphTensors(graph, config.trust_bits)
    if gt.n_edges == 0:
        raise ModelError("cannot train on a graph with no edges")

    embed_map = init_embeddings(graph, config.embed_dim, [int(seed), 0])
    embed = np.stack([embed_map[n] for n in gt.node_ids])
    params = {"embed": embed}
    params.update(init_weights(config, np.random.default_rng([int(seed), 1])))

    split = split_edges(gt.n_edges, config, np.random.default_rng([int(seed), 2]))
    drop_rng = np.random.default_rng([int(seed), 3])

    def eval_metrics() -> tuple[float, float | None, float | None, float | None]:
        """(train_loss, val_loss, rmse, mae) in evaluation mode."""
        h_final, _ = forward_embeddings(params, config, gt)
        reg = regularization(params, config.l2)

        def ce_of(rows: np.ndarray) -> float:
            logits, _ = head_forward(params, config, h_final, gt.src[rows], gt.dst[rows])
            logp = log_softmax(logits)
            return float(-logp[np.arange(rows.size), gt.labels[rows]].mean())

        train_loss = ce_of(split.train) + reg
        val_loss = ce_of(split.val) + reg if split.val.size else None
        rmse = mae = None
        if split.test.size:
            logits, _ = head_forward(
                params, config, h_final, gt.src[split.test], gt.dst[split.test]
            )
            dists = np.exp(log_softmax(logits))
            preds = np.array(
                [
                    t_his_from_distribution(d, config.trust_bits, config.t_his_mode)
                    for d in dists
                ]
            )
            err = preds - gt.weights[split.test]
            rmse = float(np.sqrt((err * err).mean()))
            mae = float(np.abs(err).mean())
        return train_loss, val_loss, rmse, mae

    history: list[dict] = []
    best_monitor = math.inf
    stale = 0
    for epoch in range(config.epochs):
        masks = make_dropout_masks(config, gt.n, drop_rng)
        loss, grads = loss_and_grads(params, config, gt, split.train, masks)
        if not math.isfinite(loss):
            raise TrainingDivergedError(f"non-finite loss at epoch {epoch}")
        _, val_loss, rmse, mae = eval_metrics() if (split.val.size or split.test.size) else (
            loss,
            None,
            None,
            None,
        )
        history.append(
            {"epoch": epoch, "train_loss": float(loss), "val_loss": val_loss, "rmse": rmse, "mae": mae}
        )
        for name in params:
            params[name] -= config.learning_rate * grads[name]
        if not all(np.isfinite(p).all() for p in params.values()):
            raise TrainingDivergedError(f"parameters became non-finite at epoch {epoch}")
        if config.patience is not None:
            monitor = val_loss if val_loss is not None else float(loss)
            if monitor < best_monitor - 1e-9:
                best_monitor = monitor
                stale = 0
            else:
                stale += 1
                if stale > config.patience:
                    break

    final_train, final_val, final_rmse, final_mae = eval_metrics()
    history.append(
        {
            "epoch": len(history),
            "train_loss": final_train,
            "val_loss": final_val,
            "rmse": final_rmse,
            "mae": final_mae,
        }
    )

    h_final, _ = forward_embeddings(params, config, gt)
    model = TrainedTrustModel(config, params, gt.node_ids, gt.n_max, h_final)
    model.history = history
    model.metrics = {"rmse": final_rmse, "mae": final_mae, "final_train_loss": final_train}
    model.edge_split = {
        name: [
            (gt.pairs[r][0], gt.pairs[r][1], float(gt.weights[r]))
            for r in getattr(split, name)
        ]
        for name in ("train", "val", "test")
    }
    return model


def rmse_mae(predictions, labels) -> tuple[float, float]:
    preds = np.asarray(list(predictions), dtype=float)
    labs = np.asarray(list(labels), dtype=float)
    if preds.size == 0:
        raise ModelError("cannot evaluate an empty set")
    err = preds - labs
    return float(np.sqrt((err * err).mean())), float(np.abs(err).mean())


def evaluate(model: TrainedTrustModel, labeled_edges) -> tuple[float, float]:
    """RMSE and MAE of t_his against labels for (src, dst, value) triples."""
    edges = list(labeled_edges)
    if not edges:
        raise ModelError("cannot evaluate an empty edge set")
    preds = model.t_his_many([(s, d) for s, d, _ in edges])
    return rmse_mae(preds, [v for _, _, v in edges])


def filter_topology(
    topology: Topology, model: TrainedTrustModel, task: Task, owner: str
) -> Topology:
    """Drop devices whose predicted reliability falls below the task thresholds.

    The owner is always retained; terminals are judged against ``c_tf``
    and edge-compute devices against ``c_ec``, both from the owner's
    viewpoint. Links touching removed devices disappear with them.
    """
    if owner not in topology:
        raise PlanningError(f"owner {owner!r} not in topology")
    keep: list[str] = []
    for dev_id, dev in topology.devices.items():
        if dev_id == owner:
            keep.append(dev_id)
            continue
        score = model.t_his(owner, dev_id)
        threshold = task.c_ec if dev.is_ec else task.c_tf
        if score >= threshold:
            keep.append(dev_id)
    return topology.subgraph(keep)


CHECKPOINT_FORMAT = "trustpath-model"
CHECKPOINT_VERSION = 1


def save_checkpoint(model: TrainedTrustModel, path: str | Path) -> None:
    """Serialize a trained model to versioned JSON with shape headers."""
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "config": model.config.to_dict(),
        "node_ids": list(model.node_ids),
        "n_max": model.n_max,
        "metrics": model.metrics,
        "params": {
            name: {"shape": list(value.shape), "data": value.reshape(-1).tolist()}
            for name, value in sorted(model.params.items())
        },
        "embeddings": {
            "shape": list(model.embeddings.shape),
            "data": model.embeddings.reshape(-1).tolist(),
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path: str | Path) -> TrainedTrustModel:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise ModelError(f"not a {CHECKPOINT_FORMAT} checkpoint: {path}")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ModelError(f"unsupported checkpoint version {payload.get('version')!r}")
    config = GNNConfig.from_dict(payload["config"])
    params = {
        name: np.array(entry["data"], dtype=np.float64).reshape(entry["shape"])
        for name, entry in payload["params"].items()
    }
    emb = payload["embeddings"]
    embeddings = np.array(emb["data"], dtype=np.float64).reshape(emb["shape"])
    model = TrainedTrustModel(
        config, params, tuple(payload["node_ids"]), int(payload["n_max"]), embeddings
    )
    model.metrics = payload.get("metrics", {})
    return model


def write_metrics_csv(history: list[dict], path: str | Path) -> None:
    """Loss-curve CSV: epoch, train_loss, val_loss, rmse, mae."""

    def fmt(v) -> str:
        return "" if v is None else repr(float(v))

    with open(path, "w", encoding="utf-8") as fh:
        fh.write("epoch,train_loss,val_loss,rmse,mae\n")
        for row in history:
            fh.write(
                f"{row['epoch']},{fmt(row['train_loss'])},{fmt(row['val_loss'])},"
                f"{fmt(row['rmse'])},{fmt(row['mae'])}\n"
            )
