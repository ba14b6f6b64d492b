from network.checkpoint import load_checkpoint, save_checkpoint
from network.heads import (
    LogitHead,
    MaxSepFixedHead,
    MaxSepLearnableHead,
    RandomLearnableHead,
    StandardLinearHead,
    make_head,
)
from network.layers import DenseLayer, Parameter
from network.losses import softmax_cross_entropy
from network.model import ForwardResult, Network, backward, build_network, forward, predict
from network.optim import lr_at, sgd_step
from network.trainer import EpochRecord, TrainingLog, evaluate, train

__all__ = [
    "DenseLayer",
    "EpochRecord",
    "ForwardResult",
    "LogitHead",
    "MaxSepFixedHead",
    "MaxSepLearnableHead",
    "Network",
    "Parameter",
    "RandomLearnableHead",
    "StandardLinearHead",
    "TrainingLog",
    "backward",
    "build_network",
    "evaluate",
    "forward",
    "load_checkpoint",
    "lr_at",
    "make_head",
    "predict",
    "save_checkpoint",
    "sgd_step",
    "softmax_cross_entropy",
    "train",
]
