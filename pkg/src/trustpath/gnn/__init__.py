"""Historical-reliability inference over the direct trust graph."""

from .encoding import (
    bin_center,
    decode_bits,
    encode_frequency,
    encode_trust,
    init_embeddings,
    quantize_trust,
)
from .model import (
    GNNConfig,
    GraphTensors,
    finite_difference_grads,
    forward_embeddings,
    head_forward,
    layer_forward,
    log_softmax,
    loss_and_grads,
    loss_value,
    make_dropout_masks,
    t_his_from_distribution,
)
from .training import (
    EdgeSplit,
    TrainedTrustModel,
    TrustPrediction,
    evaluate,
    filter_topology,
    load_checkpoint,
    predict_pair,
    rmse_mae,
    save_checkpoint,
    split_edges,
    train,
    write_metrics_csv,
)

__all__ = [
    "GNNConfig",
    "GraphTensors",
    "EdgeSplit",
    "TrainedTrustModel",
    "TrustPrediction",
    "bin_center",
    "decode_bits",
    "encode_frequency",
    "encode_trust",
    "evaluate",
    "filter_topology",
    "finite_difference_grads",
    "forward_embeddings",
    "head_forward",
    "init_embeddings",
    "layer_forward",
    "load_checkpoint",
    "log_softmax",
    "loss_and_grads",
    "loss_value",
    "make_dropout_masks",
    "predict_pair",
    "quantize_trust",
    "rmse_mae",
    "save_checkpoint",
    "split_edges",
    "t_his_from_distribution",
    "train",
    "write_metrics_csv",
]
